#include "mixlap/energy.hpp"

#include <cmath>
#include <functional>
#include <ostream>
#include <vector>

namespace mixlap {

namespace {

// Power kernels for the hot loops, specialized for the common exponents so
// p in {2,3,4} never touches std::pow.
struct Pow2 {
  static double abs_pow(double d) { return d * d; }              // |d|^p
  static double phi(double d) { return d; }                      // |d|^(p-2) d
  static double abs_pow_m2(double) { return 1.0; }               // |d|^(p-2)
  static double half_pow(double q) { return q; }                 // q^(p/2)
  static double half_pow_m2(double) { return 1.0; }              // q^((p-2)/2)
};
struct Pow3 {
  static double abs_pow(double d) { return std::abs(d) * d * d; }
  static double phi(double d) { return std::abs(d) * d; }
  static double abs_pow_m2(double d) { return std::abs(d); }
  static double half_pow(double q) { return q * std::sqrt(q); }
  static double half_pow_m2(double q) { return std::sqrt(q); }
};
struct Pow4 {
  static double abs_pow(double d) { return (d * d) * (d * d); }
  static double phi(double d) { return d * d * d; }
  static double abs_pow_m2(double d) { return d * d; }
  static double half_pow(double q) { return q * q; }
  static double half_pow_m2(double q) { return q; }
};
struct PowGen {
  double p;
  double abs_pow(double d) const { return std::pow(std::abs(d), p); }
  double phi(double d) const {
    if (d == 0.0) return 0.0;
    return std::copysign(std::pow(std::abs(d), p - 1.0), d);
  }
  double abs_pow_m2(double d) const {
    if (d == 0.0) return 0.0;  // subgradient convention for p < 2
    return std::pow(std::abs(d), p - 2.0);
  }
  double half_pow(double q) const { return std::pow(q, 0.5 * p); }
  double half_pow_m2(double q) const {
    if (q == 0.0) return 0.0;
    return std::pow(q, 0.5 * (p - 2.0));
  }
};

template <class F>
decltype(auto) dispatch_p(double p, F&& f) {
  if (p == 2.0) return f(Pow2{});
  if (p == 3.0) return f(Pow3{});
  if (p == 4.0) return f(Pow4{});
  return f(PowGen{p});
}

void check_grid(const EnergyContext& ctx, const Field& u) {
  require(u.grid.same_layout(ctx.grid), Errc::grid_mismatch,
          "field lives on a different grid than the context");
}

// Groups of mask components whose bounding boxes lie within the interaction
// reach of each other. Far-apart groups contribute independent terms, and
// summing them per group makes the energy of fields with separated supports
// exactly additive (one final rounded addition, identical per-group scans).
std::vector<Mask> interaction_clusters(const Grid& g, const Mask& mask,
                                       double radius) {
  int ncomp = 0;
  Eigen::ArrayXi labels = component_labels(g, mask, &ncomp);
  if (ncomp <= 1) return {};

  struct Box {
    double lo[2] = {1e300, 1e300};
    double hi[2] = {-1e300, -1e300};
  };
  std::vector<Box> boxes(ncomp);
  for (int id = 0; id < g.cells(); ++id) {
    const int lb = labels[id];
    if (lb < 0) continue;
    const Eigen::Vector2d x = g.center(id);
    for (int a = 0; a < g.dim; ++a) {
      boxes[lb].lo[a] = std::min(boxes[lb].lo[a], x[a]);
      boxes[lb].hi[a] = std::max(boxes[lb].hi[a], x[a]);
    }
  }

  const double reach = std::max(radius, 2.0 * g.h) * (1.0 + 1e-12);
  std::vector<int> group(ncomp);
  for (int i = 0; i < ncomp; ++i) group[i] = i;
  std::function<int(int)> find = [&](int a) {
    return group[a] == a ? a : group[a] = find(group[a]);
  };
  for (int a = 0; a < ncomp; ++a)
    for (int b = a + 1; b < ncomp; ++b) {
      double gap2 = 0.0;
      for (int ax = 0; ax < g.dim; ++ax) {
        const double d = std::max({0.0, boxes[a].lo[ax] - boxes[b].hi[ax],
                                   boxes[b].lo[ax] - boxes[a].hi[ax]});
        gap2 += d * d;
      }
      if (gap2 <= reach * reach) group[find(a)] = find(b);
    }

  std::vector<int> roots;
  std::vector<int> cluster_of(ncomp, -1);
  for (int i = 0; i < ncomp; ++i) {
    const int r = find(i);
    int k = -1;
    for (size_t j = 0; j < roots.size(); ++j)
      if (roots[j] == r) k = static_cast<int>(j);
    if (k < 0) {
      k = static_cast<int>(roots.size());
      roots.push_back(r);
    }
    cluster_of[i] = k;
  }
  if (roots.size() <= 1) return {};

  std::vector<Mask> clusters(roots.size(), Mask::Constant(g.cells(), false));
  for (int id = 0; id < g.cells(); ++id)
    if (labels[id] >= 0) clusters[cluster_of[labels[id]]][id] = true;
  return clusters;
}

double ctx_reach(const EnergyContext& ctx) {
  return ctx.kernel ? ctx.kernel->radius : 0.0;
}

// Sum fn over interaction clusters (fn sees the values restricted to one
// cluster at a time); falls back to a single full evaluation.
template <class Fn>
double cluster_sum(const EnergyContext& ctx, const Field& u, Fn&& fn) {
  std::vector<Mask> clusters =
      interaction_clusters(ctx.grid, u.mask, ctx_reach(ctx));
  if (clusters.empty()) return fn(u.values);
  double total = 0.0;
  for (const Mask& c : clusters) {
    Eigen::ArrayXd part = c.select(u.values, 0.0);
    total += fn(part);
  }
  return total;
}

// Iterate the valid cell range of one half-stencil offset.
// fn(i, j) with j = i + dx + n*dy.
template <class Fn>
inline void for_offset(const Grid& g, int dx, int dy, Fn&& fn) {
  const int n = g.n;
  if (g.dim == 1) {
    for (int i = 0; i < n - dx; ++i) fn(i, i + dx);
    return;
  }
  const int x0 = dx < 0 ? -dx : 0;
  const int x1 = dx > 0 ? n - dx : n;
  const int shift = dx + n * dy;
  for (int iy = 0; iy < n - dy; ++iy) {
    const int row = iy * n;
    for (int ix = x0; ix < x1; ++ix) {
      const int i = row + ix;
      fn(i, i + shift);
    }
  }
}

inline double pw_p(const Pow2&) { return 2.0; }
inline double pw_p(const Pow3&) { return 3.0; }
inline double pw_p(const Pow4&) { return 4.0; }
inline double pw_p(const PowGen& g) { return g.p; }

template <class P>
double local_energy_impl(const Grid& g, const Eigen::ArrayXd& u, P pw) {
  const int n = g.n;
  double sum = 0.0;
  if (g.dim == 1) {
    for (int i = 0; i < n; ++i) {
      const double d = (i + 1 < n ? u[i + 1] : 0.0) - u[i];
      sum += pw.abs_pow(d);
    }
  } else {
    for (int iy = 0; iy < n; ++iy) {
      const int row = iy * n;
      for (int ix = 0; ix < n; ++ix) {
        const int id = row + ix;
        const double dx = (ix + 1 < n ? u[id + 1] : 0.0) - u[id];
        const double dy = (iy + 1 < n ? u[id + n] : 0.0) - u[id];
        sum += pw.half_pow(dx * dx + dy * dy);
      }
    }
  }
  // raw differences carry a 1/h^p, the quadrature an h^dim
  return sum * std::pow(g.h, g.dim - pw_p(pw));
}

template <class P>
double nonlocal_energy_impl(const EnergyContext& ctx, const Eigen::ArrayXd& u, P pw) {
  double total = 0.0;
  for (const auto& o : ctx.half_stencil) {
    double partial = 0.0;
    for_offset(ctx.grid, o.dx, o.dy,
               [&](int i, int j) { partial += pw.abs_pow(u[i] - u[j]); });
    total += 2.0 * o.w * partial;
  }
  return total;
}

template <class P>
double pairing_impl(const EnergyContext& ctx, const Eigen::ArrayXd& u,
                    const Eigen::ArrayXd& phi, P pw) {
  const Grid& g = ctx.grid;
  const int n = g.n;
  double loc = 0.0;
  if (g.dim == 1) {
    for (int i = 0; i < n; ++i) {
      const double du = (i + 1 < n ? u[i + 1] : 0.0) - u[i];
      const double dp = (i + 1 < n ? phi[i + 1] : 0.0) - phi[i];
      loc += pw.phi(du) * dp;
    }
  } else {
    for (int iy = 0; iy < n; ++iy) {
      const int row = iy * n;
      for (int ix = 0; ix < n; ++ix) {
        const int id = row + ix;
        const double dux = (ix + 1 < n ? u[id + 1] : 0.0) - u[id];
        const double duy = (iy + 1 < n ? u[id + n] : 0.0) - u[id];
        const double dpx = (ix + 1 < n ? phi[id + 1] : 0.0) - phi[id];
        const double dpy = (iy + 1 < n ? phi[id + n] : 0.0) - phi[id];
        loc += pw.half_pow_m2(dux * dux + duy * duy) * (dux * dpx + duy * dpy);
      }
    }
  }
  double result = loc * std::pow(g.h, g.dim - pw_p(pw));

  for (const auto& o : ctx.half_stencil) {
    double partial = 0.0;
    for_offset(g, o.dx, o.dy, [&](int i, int j) {
      partial += pw.phi(u[i] - u[j]) * (phi[i] - phi[j]);
    });
    result += 2.0 * o.w * partial;
  }
  return result;
}

template <class P>
Eigen::ArrayXd apply_impl(const EnergyContext& ctx, const Eigen::ArrayXd& u, P pw) {
  const Grid& g = ctx.grid;
  const int n = g.n;
  const int cells = g.cells();
  const double hN = g.cell_volume();

  // local part: backward divergence of the p-flux
  Eigen::ArrayXd out = Eigen::ArrayXd::Zero(cells);
  const double hmp = std::pow(g.h, -pw_p(pw));
  if (g.dim == 1) {
    Eigen::ArrayXd flux(n);
    for (int i = 0; i < n; ++i) {
      const double d = (i + 1 < n ? u[i + 1] : 0.0) - u[i];
      flux[i] = pw.phi(d);
    }
    for (int i = 0; i < n; ++i)
      out[i] = -(flux[i] - (i > 0 ? flux[i - 1] : 0.0)) * hmp;
  } else {
    Eigen::ArrayXd fx(cells), fy(cells);
    for (int iy = 0; iy < n; ++iy) {
      const int row = iy * n;
      for (int ix = 0; ix < n; ++ix) {
        const int id = row + ix;
        const double dux = (ix + 1 < n ? u[id + 1] : 0.0) - u[id];
        const double duy = (iy + 1 < n ? u[id + n] : 0.0) - u[id];
        const double c = pw.half_pow_m2(dux * dux + duy * duy);
        fx[id] = c * dux;
        fy[id] = c * duy;
      }
    }
    for (int iy = 0; iy < n; ++iy) {
      const int row = iy * n;
      for (int ix = 0; ix < n; ++ix) {
        const int id = row + ix;
        const double divx = fx[id] - (ix > 0 ? fx[id - 1] : 0.0);
        const double divy = fy[id] - (iy > 0 ? fy[id - n] : 0.0);
        out[id] = -(divx + divy) * hmp;
      }
    }
  }

  // nonlocal part, the paper-side factor 2 comes from double-counted pairs
  if (!ctx.half_stencil.empty()) {
    Eigen::ArrayXd acc = Eigen::ArrayXd::Zero(cells);
    for (const auto& o : ctx.half_stencil) {
      for_offset(g, o.dx, o.dy, [&](int i, int j) {
        const double t = pw.phi(u[i] - u[j]) * o.w;
        acc[i] += t;
        acc[j] -= t;
      });
    }
    out += acc * (2.0 / hN);
  }
  return out;
}

template <class P>
Eigen::ArrayXd jacobian_impl(const EnergyContext& ctx, const Eigen::ArrayXd& u,
                             const Eigen::ArrayXd& w, P pw) {
  const Grid& g = ctx.grid;
  const int n = g.n;
  const int cells = g.cells();
  const double p = pw_p(pw);
  const double hN = g.cell_volume();
  Eigen::ArrayXd out = Eigen::ArrayXd::Zero(cells);
  const double hmp = std::pow(g.h, -p);

  if (g.dim == 1) {
    Eigen::ArrayXd flux(n);
    for (int i = 0; i < n; ++i) {
      const double du = (i + 1 < n ? u[i + 1] : 0.0) - u[i];
      const double dw = (i + 1 < n ? w[i + 1] : 0.0) - w[i];
      flux[i] = (p - 1.0) * pw.abs_pow_m2(du) * dw;
    }
    for (int i = 0; i < n; ++i)
      out[i] = -(flux[i] - (i > 0 ? flux[i - 1] : 0.0)) * hmp;
  } else {
    Eigen::ArrayXd fx(cells), fy(cells);
    for (int iy = 0; iy < n; ++iy) {
      const int row = iy * n;
      for (int ix = 0; ix < n; ++ix) {
        const int id = row + ix;
        const double dux = (ix + 1 < n ? u[id + 1] : 0.0) - u[id];
        const double duy = (iy + 1 < n ? u[id + n] : 0.0) - u[id];
        const double dwx = (ix + 1 < n ? w[id + 1] : 0.0) - w[id];
        const double dwy = (iy + 1 < n ? w[id + n] : 0.0) - w[id];
        const double q = dux * dux + duy * duy;
        double ax, ay;
        if (q == 0.0) {
          ax = p == 2.0 ? dwx : 0.0;
          ay = p == 2.0 ? dwy : 0.0;
        } else {
          const double c0 = pw.half_pow_m2(q);
          const double c1 = (p - 2.0) * pw.half_pow_m2(q) / q * (dux * dwx + duy * dwy);
          ax = c0 * dwx + c1 * dux;
          ay = c0 * dwy + c1 * duy;
        }
        fx[id] = ax;
        fy[id] = ay;
      }
    }
    for (int iy = 0; iy < n; ++iy) {
      const int row = iy * n;
      for (int ix = 0; ix < n; ++ix) {
        const int id = row + ix;
        const double divx = fx[id] - (ix > 0 ? fx[id - 1] : 0.0);
        const double divy = fy[id] - (iy > 0 ? fy[id - n] : 0.0);
        out[id] = -(divx + divy) * hmp;
      }
    }
  }

  if (!ctx.half_stencil.empty()) {
    Eigen::ArrayXd acc = Eigen::ArrayXd::Zero(cells);
    for (const auto& o : ctx.half_stencil) {
      for_offset(g, o.dx, o.dy, [&](int i, int j) {
        const double t = (p - 1.0) * pw.abs_pow_m2(u[i] - u[j]) * (w[i] - w[j]) * o.w;
        acc[i] += t;
        acc[j] -= t;
      });
    }
    out += acc * (2.0 / hN);
  }
  return out;
}

}  // namespace

EnergyContext make_context(const Grid& g, std::optional<Kernel> kernel, double p) {
  require(g.n >= 4 && (g.dim == 1 || g.dim == 2), Errc::invalid_spec, "bad grid");
  require(p > 1.0 && std::isfinite(p), Errc::invalid_spec, "need 1 < p < inf");
  EnergyContext ctx;
  ctx.grid = g;
  ctx.p = p;
  if (kernel && kernel->weight != 0.0) {
    require(kernel->dim == g.dim, Errc::grid_mismatch, "kernel/grid dimension mismatch");
    require(g.pad * g.h >= kernel->radius * (1.0 - 1e-9), Errc::padding_too_small,
            "grid collar is thinner than the kernel support radius");
    const int m = static_cast<int>(std::ceil(kernel->radius / g.h * (1.0 + 1e-12)));
    const double w_scale = std::pow(g.cell_volume(), 2);
    for (int dy = 0; dy <= (g.dim == 2 ? m : 0); ++dy) {
      for (int dx = (dy == 0 ? 1 : -m); dx <= m; ++dx) {
        const double dist = g.h * std::hypot(static_cast<double>(dx),
                                             static_cast<double>(dy));
        if (dist > kernel->radius * (1.0 + 1e-12)) continue;
        const double w = kernel->eval_radial(dist) * w_scale;
        if (w != 0.0) ctx.half_stencil.push_back({dx, dy, w});
      }
    }
    ctx.kernel = std::move(kernel);
  }
  return ctx;
}

double local_energy(const EnergyContext& ctx, const Field& u) {
  check_grid(ctx, u);
  return dispatch_p(ctx.p, [&](auto pw) {
    return cluster_sum(ctx, u, [&](const Eigen::ArrayXd& vals) {
      return local_energy_impl(ctx.grid, vals, pw);
    });
  });
}

double nonlocal_energy(const EnergyContext& ctx, const Field& u) {
  check_grid(ctx, u);
  return dispatch_p(ctx.p, [&](auto pw) {
    return cluster_sum(ctx, u, [&](const Eigen::ArrayXd& vals) {
      return nonlocal_energy_impl(ctx, vals, pw);
    });
  });
}

double total_energy(const EnergyContext& ctx, const Field& u) {
  return local_energy(ctx, u) + nonlocal_energy(ctx, u);
}

double pairing(const EnergyContext& ctx, const Field& u, const Field& phi) {
  check_grid(ctx, u);
  check_grid(ctx, phi);
  return dispatch_p(ctx.p,
                    [&](auto pw) { return pairing_impl(ctx, u.values, phi.values, pw); });
}

double p_mass(const EnergyContext& ctx, const Field& u) {
  check_grid(ctx, u);
  return dispatch_p(ctx.p, [&](auto pw) {
    return cluster_sum(ctx, u, [&](const Eigen::ArrayXd& vals) {
      double s = 0.0;
      for (int i = 0; i < vals.size(); ++i) s += pw.abs_pow(vals[i]);
      return s * ctx.grid.cell_volume();
    });
  });
}

Field apply_operator(const EnergyContext& ctx, const Field& u) {
  check_grid(ctx, u);
  Eigen::ArrayXd out =
      dispatch_p(ctx.p, [&](auto pw) { return apply_impl(ctx, u.values, pw); });
  Field f;
  f.grid = ctx.grid;
  f.mask = u.mask;
  f.values = u.mask.select(std::move(out), 0.0);
  return f;
}

Field energy_gradient(const EnergyContext& ctx, const Field& u) {
  Field g = apply_operator(ctx, u);
  g.values *= ctx.p;
  return g;
}

double rayleigh(const EnergyContext& ctx, const Field& u) {
  const double mass = p_mass(ctx, u);
  require(mass > 0.0, Errc::zero_field, "rayleigh quotient of the zero field");
  return total_energy(ctx, u) / mass;
}

double residual(const EnergyContext& ctx, const Field& u, double lambda) {
  const Field lu = apply_operator(ctx, u);
  return dispatch_p(ctx.p, [&](auto pw) {
    double s = 0.0;
    for (int i = 0; i < u.values.size(); ++i) {
      if (!u.mask[i]) continue;
      const double r = lu.values[i] - lambda * pw.phi(u.values[i]);
      s += r * r;
    }
    return std::sqrt(s * ctx.grid.cell_volume());
  });
}

Field jacobian_apply(const EnergyContext& ctx, const Field& u, const Field& w) {
  check_grid(ctx, u);
  check_grid(ctx, w);
  Eigen::ArrayXd out = dispatch_p(
      ctx.p, [&](auto pw) { return jacobian_impl(ctx, u.values, w.values, pw); });
  Field f;
  f.grid = ctx.grid;
  f.mask = u.mask;
  f.values = u.mask.select(std::move(out), 0.0);
  return f;
}

void dump_pairs_csv(std::ostream& os, const EnergyContext& ctx) {
  os << "i,j,w\n";
  char buf[80];
  for (const auto& o : ctx.half_stencil) {
    for_offset(ctx.grid, o.dx, o.dy, [&](int i, int j) {
      std::snprintf(buf, sizeof buf, "%d,%d,%.17g\n", i, j, o.w);
      os << buf;
      std::snprintf(buf, sizeof buf, "%d,%d,%.17g\n", j, i, o.w);
      os << buf;
    });
  }
}

}  // namespace mixlap
