#include "mixlap/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <queue>

namespace mixlap {

namespace {

void check_finite(const Eigen::ArrayXd& v) {
  require(v.allFinite(), Errc::invalid_spec, "field values must be finite");
}

}  // namespace

Field make_field(const Grid& g, const Mask& mask) {
  require(mask.size() == g.cells(), Errc::grid_mismatch, "mask size != cell count");
  Field f;
  f.grid = g;
  f.mask = mask;
  f.values = Eigen::ArrayXd::Zero(g.cells());
  return f;
}

Field make_field(const Grid& g, const Mask& mask, Eigen::ArrayXd values) {
  require(mask.size() == g.cells(), Errc::grid_mismatch, "mask size != cell count");
  require(values.size() == g.cells(), Errc::grid_mismatch, "values size != cell count");
  check_finite(values);
  Field f;
  f.grid = g;
  f.mask = mask;
  f.values = mask.select(std::move(values), 0.0);
  return f;
}

double measure(const Grid& g, const Mask& mask) {
  require(mask.size() == g.cells(), Errc::grid_mismatch, "mask size != cell count");
  return static_cast<double>(mask.count()) * g.cell_volume();
}

double lp_norm(const Field& u, double p) {
  require(p >= 1.0, Errc::invalid_spec, "lp_norm needs p >= 1");
  const double s = u.values.abs().pow(p).sum() * u.grid.cell_volume();
  return std::pow(s, 1.0 / p);
}

Field normalize(const Field& u, double p) {
  const double nrm = lp_norm(u, p);
  require(nrm > 0.0, Errc::zero_field, "cannot normalize the zero field");
  Field out = u;
  out.values /= nrm;
  return out;
}

SignSplit split_signs(const Field& u) {
  SignSplit s;
  s.plus.grid = u.grid;
  s.minus.grid = u.grid;
  s.plus.mask = u.values > 0.0;
  s.minus.mask = u.values < 0.0;
  s.plus.values = u.values.max(0.0);
  s.minus.values = (-u.values).max(0.0);
  return s;
}

Eigen::ArrayXi component_labels(const Grid& g, const Mask& mask, int* count) {
  require(mask.size() == g.cells(), Errc::grid_mismatch, "mask size != cell count");
  Eigen::ArrayXi labels = Eigen::ArrayXi::Constant(g.cells(), -1);
  int k = 0;
  std::vector<int> stack;
  for (int start = 0; start < g.cells(); ++start) {
    if (!mask[start] || labels[start] >= 0) continue;
    stack.push_back(start);
    labels[start] = k;
    while (!stack.empty()) {
      const int id = stack.back();
      stack.pop_back();
      const int ix = g.ix(id), iy = g.iy(id);
      auto visit = [&](int jx, int jy) {
        if (jx < 0 || jx >= g.n || jy < 0 || (g.dim == 2 && jy >= g.n)) return;
        const int j = g.index(jx, jy);
        if (mask[j] && labels[j] < 0) {
          labels[j] = k;
          stack.push_back(j);
        }
      };
      visit(ix - 1, iy);
      visit(ix + 1, iy);
      if (g.dim == 2) {
        visit(ix, iy - 1);
        visit(ix, iy + 1);
      }
    }
    ++k;
  }
  if (count) *count = k;
  return labels;
}

int component_count(const Grid& g, const Mask& mask) {
  int k = 0;
  component_labels(g, mask, &k);
  return k;
}

bool connected(const Grid& g, const Mask& mask) {
  return component_count(g, mask) == 1;
}

std::string DomainSpec::name() const {
  switch (shape) {
    case Shape::interval: return "interval";
    case Shape::box: return "box";
    case Shape::ball: return "ball";
    case Shape::balls: return "balls";
    case Shape::intervals: return "intervals";
    case Shape::annulus: return "annulus";
    case Shape::custom: return "custom";
  }
  return "?";
}

DomainSpec DomainSpec::interval_spec(double a, double b) {
  DomainSpec s;
  s.shape = Shape::interval;
  s.dim_ = 1;
  s.a = a;
  s.b = b;
  return s;
}

DomainSpec DomainSpec::box_spec(double ax, double bx, double ay, double by) {
  DomainSpec s;
  s.shape = Shape::box;
  s.dim_ = 2;
  s.lo = {ax, ay};
  s.hi = {bx, by};
  return s;
}

DomainSpec DomainSpec::ball_spec_1d(double c, double r) {
  DomainSpec s;
  s.shape = Shape::ball;
  s.dim_ = 1;
  s.ball_list.push_back({{c, 0.0}, r});
  return s;
}

DomainSpec DomainSpec::ball_spec_2d(double cx, double cy, double r) {
  DomainSpec s;
  s.shape = Shape::ball;
  s.dim_ = 2;
  s.ball_list.push_back({{cx, cy}, r});
  return s;
}

DomainSpec DomainSpec::balls_spec(std::vector<BallGeom> balls, int dim) {
  DomainSpec s;
  s.shape = Shape::balls;
  s.dim_ = dim;
  s.ball_list = std::move(balls);
  return s;
}

DomainSpec DomainSpec::intervals_spec(std::vector<std::pair<double, double>> parts) {
  DomainSpec s;
  s.shape = Shape::intervals;
  s.dim_ = 1;
  s.interval_list = std::move(parts);
  return s;
}

DomainSpec DomainSpec::annulus_spec(double cx, double cy, double r_in, double r_out) {
  DomainSpec s;
  s.shape = Shape::annulus;
  s.dim_ = 2;
  s.center = {cx, cy};
  s.r_in = r_in;
  s.r_out = r_out;
  return s;
}

DomainSpec DomainSpec::custom_spec(int cnx, int cny, double h, std::vector<bool> mask) {
  DomainSpec s;
  s.shape = Shape::custom;
  s.dim_ = cny > 1 ? 2 : 1;
  s.cnx = cnx;
  s.cny = cny;
  s.ch = h;
  s.cmask = std::move(mask);
  return s;
}

namespace {

// Strict membership with a relative guard band: grid construction puts cell
// centers exactly on domain boundaries, and whether such a center rounds to
// "just inside" must not depend on fp noise (it would break the symmetry of
// symmetric domains). Centers within ~1e-12 of a boundary count as outside.
inline bool inside_open(double lo, double x, double hi) {
  const double tol = 1e-12 * (std::abs(lo) + std::abs(hi) + 1.0);
  return lo + tol < x && x < hi - tol;
}

}  // namespace

bool contains(const DomainSpec& spec, const Eigen::Vector2d& p) {
  using Shape = DomainSpec::Shape;
  switch (spec.shape) {
    case Shape::interval:
      return inside_open(spec.a, p[0], spec.b);
    case Shape::box:
      return inside_open(spec.lo[0], p[0], spec.hi[0]) &&
             inside_open(spec.lo[1], p[1], spec.hi[1]);
    case Shape::ball:
    case Shape::balls: {
      for (const auto& b : spec.ball_list) {
        const double d = spec.dim_ == 1 ? std::abs(p[0] - b.c[0])
                                        : (p - b.c).norm();
        if (d < b.r * (1.0 - 1e-12)) return true;
      }
      return false;
    }
    case Shape::intervals: {
      for (const auto& [a, b] : spec.interval_list)
        if (inside_open(a, p[0], b)) return true;
      return false;
    }
    case Shape::annulus: {
      const double d = (p - spec.center).norm();
      return spec.r_in * (1.0 + 1e-12) < d && d < spec.r_out * (1.0 - 1e-12);
    }
    case Shape::custom:
      raise(Errc::invalid_spec, "custom masks have no analytic membership test");
  }
  return false;
}

namespace {

struct BBox {
  Eigen::Vector2d lo{0.0, 0.0}, hi{0.0, 0.0};
};

void validate(const DomainSpec& spec) {
  using Shape = DomainSpec::Shape;
  switch (spec.shape) {
    case Shape::interval:
      require(spec.a < spec.b, Errc::invalid_spec, "interval needs a < b");
      break;
    case Shape::box:
      require(spec.lo[0] < spec.hi[0] && spec.lo[1] < spec.hi[1],
              Errc::invalid_spec, "box needs lo < hi per axis");
      break;
    case Shape::ball:
    case Shape::balls:
      require(!spec.ball_list.empty(), Errc::invalid_spec, "no balls given");
      for (const auto& b : spec.ball_list)
        require(b.r > 0.0, Errc::invalid_spec, "ball needs r > 0");
      break;
    case Shape::intervals:
      require(!spec.interval_list.empty(), Errc::invalid_spec, "no intervals given");
      for (const auto& [a, b] : spec.interval_list)
        require(a < b, Errc::invalid_spec, "interval needs a < b");
      break;
    case Shape::annulus:
      require(spec.r_out > spec.r_in && spec.r_in >= 0.0, Errc::invalid_spec,
              "annulus needs 0 <= r_in < r_out");
      require(spec.r_out > 0.0, Errc::invalid_spec, "annulus needs r_out > 0");
      break;
    case Shape::custom:
      require(spec.cnx >= 1 && spec.cny >= 1, Errc::invalid_spec,
              "custom block must be nonempty");
      require(spec.ch > 0.0, Errc::invalid_spec, "custom spacing must be positive");
      require(static_cast<int>(spec.cmask.size()) == spec.cnx * spec.cny,
              Errc::invalid_spec, "custom mask size mismatch");
      break;
  }
}

BBox bounding_box(const DomainSpec& spec) {
  using Shape = DomainSpec::Shape;
  BBox bb;
  switch (spec.shape) {
    case Shape::interval:
      bb.lo = {spec.a, 0.0};
      bb.hi = {spec.b, 0.0};
      break;
    case Shape::box:
      bb.lo = spec.lo;
      bb.hi = spec.hi;
      break;
    case Shape::ball:
    case Shape::balls: {
      bb.lo = {std::numeric_limits<double>::max(), std::numeric_limits<double>::max()};
      bb.hi = {std::numeric_limits<double>::lowest(), std::numeric_limits<double>::lowest()};
      for (const auto& b : spec.ball_list) {
        for (int a = 0; a < spec.dim_; ++a) {
          bb.lo[a] = std::min(bb.lo[a], b.c[a] - b.r);
          bb.hi[a] = std::max(bb.hi[a], b.c[a] + b.r);
        }
      }
      if (spec.dim_ == 1) bb.lo[1] = bb.hi[1] = 0.0;
      break;
    }
    case Shape::intervals: {
      bb.lo[0] = std::numeric_limits<double>::max();
      bb.hi[0] = std::numeric_limits<double>::lowest();
      for (const auto& [a, b] : spec.interval_list) {
        bb.lo[0] = std::min(bb.lo[0], a);
        bb.hi[0] = std::max(bb.hi[0], b);
      }
      break;
    }
    case Shape::annulus:
      bb.lo = spec.center.array() - spec.r_out;
      bb.hi = spec.center.array() + spec.r_out;
      break;
    case Shape::custom:
      bb.lo = {0.0, 0.0};
      bb.hi = {spec.cnx * spec.ch, spec.cny * spec.ch};
      break;
  }
  return bb;
}

int collar_cells(double kernel_radius, double h) {
  if (kernel_radius <= 0.0) return 0;
  int pad = static_cast<int>(std::ceil(kernel_radius / h * (1.0 - 1e-12)));
  while (pad * h < kernel_radius * (1.0 - 1e-12)) ++pad;
  return pad;
}

}  // namespace

Domain build_domain(const DomainSpec& spec, int resolution, double kernel_radius) {
  require(resolution >= 4, Errc::invalid_spec, "resolution must be >= 4");
  require(kernel_radius >= 0.0, Errc::invalid_spec, "kernel_radius must be >= 0");
  validate(spec);

  Domain dom;
  Grid& g = dom.grid;
  g.dim = spec.dim();

  if (spec.shape == DomainSpec::Shape::custom) {
    g.h = spec.ch;
    g.pad = collar_cells(kernel_radius, g.h);
    const int inner = std::max(spec.cnx, spec.cny);
    g.n = inner + 2 * g.pad;
    g.origin = {-(g.pad + 0.5) * g.h, -(g.pad + 0.5) * g.h};
    Mask mask = Mask::Constant(g.cells(), false);
    for (int j = 0; j < spec.cny; ++j)
      for (int i = 0; i < spec.cnx; ++i)
        if (spec.cmask[static_cast<size_t>(j) * spec.cnx + i])
          mask[g.index(g.pad + i, g.dim == 2 ? g.pad + j : 0)] = true;
    require(mask.any(), Errc::empty_mask, "custom mask has no cells");
    dom.mask = std::move(mask);
    return dom;
  }

  const BBox bb = bounding_box(spec);
  double extent = bb.hi[0] - bb.lo[0];
  if (g.dim == 2) extent = std::max(extent, bb.hi[1] - bb.lo[1]);
  require(extent > 0.0, Errc::invalid_spec, "degenerate bounding box");

  g.h = extent / resolution;
  g.pad = collar_cells(kernel_radius, g.h);
  // bbox corners coincide with cell centers: resolution+1 inner centers per axis
  g.n = resolution + 1 + 2 * g.pad;
  for (int a = 0; a < g.dim; ++a) g.origin[a] = bb.lo[a] - (g.pad + 0.5) * g.h;

  Mask mask(g.cells());
  for (int id = 0; id < g.cells(); ++id) mask[id] = contains(spec, g.center(id));
  require(mask.any(), Errc::empty_mask, "no cell center falls inside the domain");
  dom.mask = std::move(mask);
  return dom;
}

Mask mask_on_grid(const DomainSpec& spec, const Grid& g) {
  validate(spec);
  require(spec.dim() == g.dim, Errc::grid_mismatch, "spec/grid dimension mismatch");
  require(spec.shape != DomainSpec::Shape::custom, Errc::invalid_spec,
          "custom specs carry their own grid");
  Mask mask(g.cells());
  for (int id = 0; id < g.cells(); ++id) mask[id] = contains(spec, g.center(id));
  require(mask.any(), Errc::empty_mask, "no cell center falls inside the domain");
  return mask;
}

void dump_field_csv(std::ostream& os, const Field& u) {
  char buf[96];
  os << "dim,n,h,pad\n";
  std::snprintf(buf, sizeof buf, "%d,%d,%.17g,%d\n", u.grid.dim, u.grid.n, u.grid.h,
                u.grid.pad);
  os << buf;
  os << (u.grid.dim == 1 ? "index,x,value,in_mask\n" : "index,x,y,value,in_mask\n");
  for (int id = 0; id < u.grid.cells(); ++id) {
    if (u.grid.dim == 1)
      std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%d\n", id, u.grid.x(id),
                    u.values[id], u.mask[id] ? 1 : 0);
    else
      std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%d\n", id, u.grid.x(id),
                    u.grid.y(id), u.values[id], u.mask[id] ? 1 : 0);
    os << buf;
  }
}

}  // namespace mixlap
