#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "mixlap/errors.hpp"

namespace mixlap {

using Mask = Eigen::Array<bool, Eigen::Dynamic, 1>;

// Uniform cell-centered Cartesian grid over a padded square box, dim 1 or 2.
// The collar of `pad` cells around the inner box carries the zero extension
// required by the nonlocal term. Cell center of index i is origin + (i+1/2)h
// per axis. Domain boundary points are aligned with cell centers, so the
// Dirichlet zeros of a masked field sit exactly on the boundary.
struct Grid {
  int dim = 1;
  int n = 0;        // cells per axis, collar included
  double h = 1.0;   // spacing
  Eigen::Vector2d origin = Eigen::Vector2d::Zero();  // low corner of cell (0,0)
  int pad = 0;      // collar width in cells

  int cells() const { return dim == 1 ? n : n * n; }
  int index(int ix, int iy = 0) const { return dim == 1 ? ix : ix + n * iy; }
  int ix(int id) const { return dim == 1 ? id : id % n; }
  int iy(int id) const { return dim == 1 ? 0 : id / n; }

  double x(int id) const { return origin[0] + (ix(id) + 0.5) * h; }
  double y(int id) const { return dim == 1 ? 0.0 : origin[1] + (iy(id) + 0.5) * h; }
  Eigen::Vector2d center(int id) const { return {x(id), y(id)}; }

  double cell_volume() const { return dim == 1 ? h : h * h; }

  bool same_layout(const Grid& o) const {
    return dim == o.dim && n == o.n && h == o.h && pad == o.pad &&
           origin == o.origin;
  }
};

// Grid function u with the zero extension "u = 0 off the mask" maintained as
// a hard invariant: values are exactly zero at every unmasked cell.
struct Field {
  Grid grid;
  Eigen::ArrayXd values;
  Mask mask;
};

Field make_field(const Grid& g, const Mask& mask);
Field make_field(const Grid& g, const Mask& mask, Eigen::ArrayXd values);

// (mask cell count) * h^dim
double measure(const Grid& g, const Mask& mask);

// (sum |u|^p h^dim)^(1/p), p >= 1
double lp_norm(const Field& u, double p);

// u / lp_norm(u, p); throws zero_field on the zero field.
Field normalize(const Field& u, double p);

struct SignSplit {
  Field plus;   // max(u, 0), mask {u > 0}
  Field minus;  // max(-u, 0), mask {u < 0}
};
SignSplit split_signs(const Field& u);

// Connected components of the mask under 2*dim-neighbor adjacency.
// Labels are 0..k-1 on mask cells, -1 elsewhere.
Eigen::ArrayXi component_labels(const Grid& g, const Mask& mask, int* count = nullptr);
int component_count(const Grid& g, const Mask& mask);
bool connected(const Grid& g, const Mask& mask);

// Geometric description of a domain; realized to a (Grid, Mask) pair by
// build_domain, or to a Mask on an existing grid by mask_on_grid.
struct DomainSpec {
  enum class Shape { interval, box, ball, balls, intervals, annulus, custom };

  struct BallGeom {
    Eigen::Vector2d c = Eigen::Vector2d::Zero();
    double r = 0.0;
  };

  Shape shape = Shape::interval;
  int dim_ = 1;

  double a = 0.0, b = 0.0;                          // interval
  Eigen::Vector2d lo{0.0, 0.0}, hi{0.0, 0.0};       // box
  std::vector<BallGeom> ball_list;                  // ball / balls
  std::vector<std::pair<double, double>> interval_list;  // intervals
  Eigen::Vector2d center{0.0, 0.0};                 // annulus
  double r_in = 0.0, r_out = 0.0;                   // annulus
  int cnx = 0, cny = 0;                             // custom block cells
  double ch = 0.0;                                  // custom spacing
  std::vector<bool> cmask;                          // custom block, row-major

  int dim() const { return dim_; }
  std::string name() const;

  static DomainSpec interval_spec(double a, double b);
  static DomainSpec box_spec(double ax, double bx, double ay, double by);
  static DomainSpec ball_spec_1d(double c, double r);
  static DomainSpec ball_spec_2d(double cx, double cy, double r);
  static DomainSpec balls_spec(std::vector<BallGeom> balls, int dim);
  static DomainSpec intervals_spec(std::vector<std::pair<double, double>> parts);
  static DomainSpec annulus_spec(double cx, double cy, double r_in, double r_out);
  static DomainSpec custom_spec(int cnx, int cny, double h, std::vector<bool> mask);
};

// Strict membership test (open sets; boundary points excluded).
bool contains(const DomainSpec& spec, const Eigen::Vector2d& point);

struct Domain {
  Grid grid;
  Mask mask;
};

// Discretize: h = (longest bbox extent)/resolution, bbox corners land on cell
// centers, collar sized so pad*h >= kernel_radius. Mask = cell centers
// strictly inside the domain.
Domain build_domain(const DomainSpec& spec, int resolution, double kernel_radius);

// Realize the spec's mask on an existing grid (nested-domain comparisons).
Mask mask_on_grid(const DomainSpec& spec, const Grid& g);

// CSV dump: "dim,n,h,pad" header pair, then index,x(,y),value,in_mask rows.
void dump_field_csv(std::ostream& os, const Field& u);

}  // namespace mixlap
