#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <optional>
#include <vector>

#include "mixlap/grid.hpp"
#include "mixlap/kernel.hpp"

namespace mixlap {

// Precomputed discretization of the energy
//   E(u) = int |grad u|^p + iint |u(x)-u(y)|^p J(x-y)
// on one (grid, kernel, p) triple. The double integral is realized through a
// displacement stencil: on a uniform grid the pair weight
// w_ij = J(x_i - x_j) h^(2 dim) depends only on the index offset i-j, so the
// conceptual symmetric neighbor table is stored as one weight per offset
// (half of them; each unordered pair is visited once and counted twice).
//
// Immutable after construction; all evaluations are pure and run over cells
// and offsets in a fixed order, so results are bit-identical run to run.
struct EnergyContext {
  struct Offset {
    int dx = 0, dy = 0;
    double w = 0.0;  // J(h * offset) * h^(2 dim)
  };

  Grid grid;
  std::optional<Kernel> kernel;  // nullopt: local-only mode
  double p = 2.0;
  std::vector<Offset> half_stencil;  // dy > 0, or dy == 0 && dx > 0
};

EnergyContext make_context(const Grid& g, std::optional<Kernel> kernel, double p);

// sum_cells |grad_h u|^p h^dim, forward differences, zero extension.
double local_energy(const EnergyContext& ctx, const Field& u);

// sum over ordered pairs |u_i - u_j|^p w_ij (both orderings counted).
double nonlocal_energy(const EnergyContext& ctx, const Field& u);

double total_energy(const EnergyContext& ctx, const Field& u);

// Weak-form pairing; pairing(u, u) == total_energy(u) by construction.
double pairing(const EnergyContext& ctx, const Field& u, const Field& phi);

// sum |u|^p h^dim  (the constraint functional; lp_norm(u,p)^p)
double p_mass(const EnergyContext& ctx, const Field& u);

// The field L_h u with sum_i (L_h u)_i phi_i h^dim = pairing(u, phi) for all
// phi supported in u's mask; zeroed outside the mask after assembly.
Field apply_operator(const EnergyContext& ctx, const Field& u);

// Gradient g of total_energy: <g, phi>_h = p * pairing(u, phi).
Field energy_gradient(const EnergyContext& ctx, const Field& u);

// total_energy / p_mass
double rayleigh(const EnergyContext& ctx, const Field& u);

// l2(h) norm over mask cells of (L_h u)_i - lambda |u_i|^(p-2) u_i.
double residual(const EnergyContext& ctx, const Field& u, double lambda);

// Directional derivative of apply_operator at u in direction w (the energy
// Hessian action, up to the factor p). Used by the eigen-residual polisher.
Field jacobian_apply(const EnergyContext& ctx, const Field& u, const Field& w);

// Diagnostic dump of the realized neighbor table as "i,j,w" rows (both
// orderings), matching the conceptual symmetric pair list.
void dump_pairs_csv(std::ostream& os, const EnergyContext& ctx);

}  // namespace mixlap
