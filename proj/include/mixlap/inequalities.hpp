#pragma once

#include <cstdint>

#include "mixlap/energy.hpp"

namespace mixlap {

// Scalar and field-level inequality oracles; the fastest-failing regression
// layer of the repository. Each returns both sides so tests and the CLI can
// report defects, not just booleans.

struct GInequalityResult {
  double g_t = 0.0;
  double g_1 = 0.0;
  bool holds = false;  // g(t) <= g(1) + 1e-12 (1 + |g(1)|)
};

// g(t) = |U - tV|^p + |U-V|^(p-2) (U-V) V |t|^p, requires U*V <= 0.
GInequalityResult g_inequality(double U, double V, double p, double t);

struct SigmaConvexityResult {
  double lhs = 0.0;  // nonlocal energy of ((1-t) v^p + t u^p)^(1/p)
  double rhs = 0.0;  // (1-t) nonlocal(v) + t nonlocal(u)
  bool holds = false;
};

// Convexity of the nonlocal energy along p-th power interpolation of
// nonnegative fields; t in [0,1].
SigmaConvexityResult sigma_convexity(const EnergyContext& ctx, const Field& u,
                                     const Field& v, double t);

// Smallest constant on the geometric grid 2^(k/16) such that
//   |a-b|^p <= |a|^p + |b|^p + c (|a|^2+|b|^2)^((p-2)/2) |ab|
// holds for `samples` random pairs plus the adversarial ray a = -b.
// Requires p >= 2. Results are cached per p.
double calibrate_cp(double p, int samples, uint64_t seed = 12345);

struct CpResult {
  double c_p = 0.0;
  double lhs1 = 0.0, rhs1 = 0.0;  // part (i)
  double lhs2 = 0.0, rhs2 = 0.0;  // part (ii)
  bool part1_holds = false;
  bool part2_holds = false;
};

// Part (i) for p >= 2 with the calibrated c_p; part (ii) requires ab <= 0 and
// branches on p >= 2 / 1 < p < 2.
CpResult cp_inequalities(double a, double b, double p);

struct PiconeReport {
  int pairs_checked = 0;
  int gradient_cells_checked = 0;
  int violations = 0;
  double max_defect = 0.0;  // max(lhs - rhs), negative when everything holds
};

// Discrete Picone bounds: over neighbor pairs inside the mask
//   |u_i-u_j|^(p-2)(u_i-u_j)(v_i^p/u_i^(p-1) - v_j^p/u_j^(p-1)) <= |v_i-v_j|^p
// and the gradient analogue per cell. Requires u > 0 and v >= 0 on the mask.
PiconeReport picone_check(const EnergyContext& ctx, const Field& u, const Field& v);

// Randomized trial suites over the four oracles, seeded through splitmix64.
// A trial is one inequality evaluation; `worst` echoes the violating sample
// of smallest magnitude (lemma-specific layout; see the CLI check command).
struct LemmaTrialReport {
  std::string lemma;
  double p = 0.0;
  long trials = 0;
  long violations = 0;
  double max_defect = 0.0;  // max over trials of lhs - rhs
  double worst[4] = {0, 0, 0, 0};
  int worst_count = 0;
  bool pass() const { return violations == 0; }
};

LemmaTrialReport run_g_trials(double p, long samples, uint64_t seed);
LemmaTrialReport run_sigma_trials(double p, long samples, uint64_t seed);
LemmaTrialReport run_cp_trials(double p, long samples, uint64_t seed);
LemmaTrialReport run_picone_trials(double p, long samples, uint64_t seed);

}  // namespace mixlap
