#pragma once

#include <vector>

#include "mixlap/first_eigen.hpp"

namespace mixlap {

// Discrete path in the unit-L^p-sphere of fields, endpoints pinned to -phi1
// and +phi1. Interior nodes are relaxed by the string method.
struct PathState {
  std::vector<Field> nodes;
  int size() const { return static_cast<int>(nodes.size()); }
};

// K samples (K odd, >= 9) of the explicit connecting path
// t -> normalize(t*phi1 + (1-|t|)*probe), t uniform in [-1,1].
PathState initial_path(const Field& phi1, const Field& probe, int K, double p);

struct MinimaxTrace {
  std::vector<double> path_max;  // after each descent half-sweep
  std::vector<int> argmax;       // lowest index attaining the max (1e-14 ties)
  int sweeps = 0;
  double final_path_max = 0.0;
  Field argmax_node;  // the node handed to the polisher
};

struct MinimaxOptions {
  int max_sweeps = 800;
  int stall_window = 50;   // sweeps over which the path max must stagnate
  double path_tol = 1e-6;  // stagnation tolerance for the path maximum; the
                           // polished eigenpair supplies the final accuracy
  int polish_max_iter = 20000;
  double polish_target_rel = 1e-10;  // residual target, relative to lambda
};

// String-method minimax between -phi1 and phi1: perpendicular node descent,
// equal-arc-length reparametrization (capped so the path maximum never
// increases), then eigen-residual polishing of the maximal node.
EigenResult minimax_lambda2(const EnergyContext& ctx, const SolverParams& params,
                            PathState path, const MinimaxOptions& opts = {},
                            MinimaxTrace* trace = nullptr);

// Newton-free descent on the squared strong-form eigen-residual, started from
// a candidate eigenfunction. The step direction reflects the Rayleigh
// gradient along the unstable direction (climbing-image style) so saddle
// points are attracting; `tangent_hint` seeds that direction (the residual
// itself is used when absent). Lambda is refreshed from the Rayleigh quotient.
EigenResult polish_eigenpair(const EnergyContext& ctx, const Field& candidate,
                             const MinimaxOptions& opts = {},
                             const Field* tangent_hint = nullptr);

struct SignPaths {
  PathState gamma1;  // u+ - (1-t) u-
  PathState gamma2;  // ((1-t)(u+)^p + t(u-)^p)^(1/p)
  PathState gamma3;  // (1-t) u+ - u-
};

// The three explicit connecting paths built from the sign components of a
// sign-changing field, sampled at `samples` uniform t in [0,1].
SignPaths sign_component_paths(const Field& u, double p, int samples);

double max_rayleigh(const EnergyContext& ctx, const PathState& path);

struct NodalReport {
  double lambda = 0.0;
  double lambda1_plus = 0.0;
  double lambda1_minus = 0.0;
  double margin_plus = 0.0;
  double margin_minus = 0.0;
  bool strict = false;  // both margins strictly positive
};

// Solves lambda1 on the positivity and negativity sets of a converged
// sign-changing eigenfunction and reports lambda - lambda1(Omega^+-).
NodalReport nodal_analysis(const EnergyContext& ctx, const SolverParams& params,
                           const Field& u, double lambda);

// Largest Rayleigh value over the two-parameter family
//   f(t1,t2) = normalize(|t1|^((2-p)/p) t1 phi_a - |t2|^((2-p)/p) t2 phi_b)
// sampled on theta_samples angles of the p-circle |t1|^p + |t2|^p = 1, where
// phi_a, phi_b are the first eigenfunctions of the two mask components.
// An upper bound for lambda2 of the two-component domain.
double two_ball_upper_bound(const EnergyContext& ctx, const Mask& mask,
                            const SolverParams& params, int theta_samples);

}  // namespace mixlap
