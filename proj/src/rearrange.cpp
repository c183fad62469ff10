#include "mixlap/rearrange.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace mixlap {

namespace {

Eigen::Vector2d snapped_centroid(const Grid& g, const Mask& mask) {
  Eigen::Vector2d c = Eigen::Vector2d::Zero();
  int count = 0;
  for (int i = 0; i < g.cells(); ++i) {
    if (!mask[i]) continue;
    c += g.center(i);
    ++count;
  }
  c /= count;
  // snap to the half-cell lattice
  for (int a = 0; a < g.dim; ++a)
    c[a] = g.origin[a] + std::round((c[a] - g.origin[a]) / (0.5 * g.h)) * (0.5 * g.h);
  if (g.dim == 1) c[1] = 0.0;
  return c;
}

}  // namespace

RearrangementResult schwarz_symmetrize(const EnergyContext& ctx, const Field& u) {
  require(u.grid.same_layout(ctx.grid), Errc::grid_mismatch, "field/context mismatch");
  const Grid& g = ctx.grid;

  RearrangementResult out;
  Field work = u;
  if ((u.values < 0.0).any()) {
    out.used_abs = true;
    work.values = work.values.abs();
  }
  out.local_before = local_energy(ctx, work);
  out.nonlocal_before = nonlocal_energy(ctx, work);

  const Eigen::Vector2d c = snapped_centroid(g, work.mask);

  std::vector<int> order(g.cells());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> dist(g.cells());
  for (int i = 0; i < g.cells(); ++i) {
    const Eigen::Vector2d d = g.center(i) - c;
    dist[i] = g.dim == 1 ? std::abs(d[0]) : d.norm();
  }
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (dist[a] != dist[b]) return dist[a] < dist[b];
    return a < b;
  });

  std::vector<double> vals;
  vals.reserve(static_cast<size_t>(work.mask.count()));
  for (int i = 0; i < g.cells(); ++i)
    if (work.mask[i]) vals.push_back(work.values[i]);
  std::sort(vals.begin(), vals.end(), std::greater<double>());

  Mask star_mask = Mask::Constant(g.cells(), false);
  Eigen::ArrayXd star_vals = Eigen::ArrayXd::Zero(g.cells());
  for (size_t k = 0; k < vals.size(); ++k) {
    star_mask[order[k]] = true;
    star_vals[order[k]] = vals[k];
  }
  out.u_star = make_field(g, star_mask, std::move(star_vals));

  out.local_after = local_energy(ctx, out.u_star);
  out.nonlocal_after = nonlocal_energy(ctx, out.u_star);
  out.norm_defect = std::abs(lp_norm(out.u_star, ctx.p) - lp_norm(work, ctx.p));
  return out;
}

PolyaSzegoReport polya_szego_check(const EnergyContext& ctx, const Field& u) {
  require(ctx.kernel.has_value() && ctx.kernel->radially_decreasing(),
          Errc::kernel_not_decreasing,
          "symmetrization bounds need a radially decreasing kernel");
  RearrangementResult r = schwarz_symmetrize(ctx, u);

  PolyaSzegoReport rep;
  rep.defect_local = r.local_after - r.local_before;
  rep.defect_nonlocal = r.nonlocal_after - r.nonlocal_before;
  rep.tol_h = std::sqrt(ctx.grid.h) * (r.local_before + r.nonlocal_before);
  rep.norm_defect = r.norm_defect;
  rep.holds = rep.defect_local <= rep.tol_h && rep.defect_nonlocal <= rep.tol_h;
  return rep;
}

}  // namespace mixlap
