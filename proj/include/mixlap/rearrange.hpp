#pragma once

#include "mixlap/energy.hpp"

namespace mixlap {

struct RearrangementResult {
  Field u_star;
  double local_before = 0.0, local_after = 0.0;
  double nonlocal_before = 0.0, nonlocal_after = 0.0;
  double norm_defect = 0.0;  // |lp_norm(u*) - lp_norm(u)| at p = ctx.p
  bool used_abs = false;     // input had negative values, |u| was rearranged
};

// Discrete Schwarz symmetrization: sort the mask values descending and assign
// them to grid cells by ascending distance from the mask centroid (ties by
// cell index). The centroid is snapped to the half-cell lattice so repeated
// symmetrization is stable. Off-support cells are exactly zero.
RearrangementResult schwarz_symmetrize(const EnergyContext& ctx, const Field& u);

struct PolyaSzegoReport {
  double defect_local = 0.0;     // local_after - local_before
  double defect_nonlocal = 0.0;  // nonlocal_after - nonlocal_before
  double tol_h = 0.0;            // sqrt(h) * total energy before
  double norm_defect = 0.0;
  bool holds = false;
};

// Checks that symmetrization does not increase either energy term beyond the
// documented discretization slack tol_h = h^(1/2) * total_energy(u).
// Requires a radially decreasing kernel.
PolyaSzegoReport polya_szego_check(const EnergyContext& ctx, const Field& u);

}  // namespace mixlap
