#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mixlap/second_eigen.hpp"

namespace mixlap {

struct ExperimentRow {
  std::string experiment;
  std::string domain;
  double p = 0.0;
  std::string kernel;
  int n = 0;  // resolution
  double lambda1 = std::numeric_limits<double>::quiet_NaN();
  double lambda2 = std::numeric_limits<double>::quiet_NaN();
  double oracle1 = std::numeric_limits<double>::quiet_NaN();
  double oracle2 = std::numeric_limits<double>::quiet_NaN();
  double margin = std::numeric_limits<double>::quiet_NaN();
  double seconds = 0.0;
};

// Fixed schema: experiment,domain,p,kernel,n,lambda1,lambda2,oracle1,oracle2,
// margin,seconds. NaN cells are left empty. Unless `timings` is set the
// seconds column is written as 0 so identical configs produce byte-identical
// files; measured times go to results.json.
void write_results_csv(std::ostream& os, const std::vector<ExperimentRow>& rows,
                       bool timings = false);

std::string kernel_label(const std::optional<Kernel>& k);

// Equal-measure shape family for the first-eigenvalue sweep, dimensions
// outset by half a cell so every member realizes measure c at `resolution`
// (ball first: it is the reference the others are compared against).
std::vector<DomainSpec> fk_family_2d(double c, int resolution);
// 1D family on a shared grid: a compensated single interval plus a union of
// two half intervals separated by `gap`.
std::vector<DomainSpec> fk_family_1d(double gap, int resolution);

struct FaberKrahnReport {
  std::vector<ExperimentRow> rows;  // rows[0] is the ball
  double target_measure = 0.0;
  double min_margin = 0.0;          // min over non-ball shapes of lambda1 - lambda1(ball)
  double richardson = 0.0;          // max |lambda(n) - lambda(2n)| over the family
  bool measures_ok = false;
  bool ball_minimal = false;        // every margin positive
  bool margin_exceeds_error = false;
};

// shapes[0] must realize the ball/reference member. All realized measures
// must match shapes[0] within 1%. With `richardson` the family is re-solved
// at twice the resolution and margins must beat the observed shift.
FaberKrahnReport faber_krahn_sweep(const std::vector<DomainSpec>& shapes,
                                   const Kernel& kernel, double p, int resolution,
                                   const SolverParams& params, bool richardson,
                                   int workers = 1);

struct HksReport {
  ExperimentRow row;  // lambda2(domain), lambda1(half ball) and their margin
  std::vector<double> ratios;
  std::vector<double> max_pair_lambda;  // max(l1(B_r1), l1(B_r2)) per split ratio
  double lambda2 = 0.0;
  double lambda1_half_ball = 0.0;
  double margin = 0.0;
  bool strict_ok = false;
  bool split_min_at_half = false;
  bool boundary_case = false;  // disconnected domain: equality is expected
};

HksReport hks_check(const DomainSpec& spec, const Kernel& kernel, double p,
                    int resolution, const SolverParams& params,
                    std::vector<double> ratios = {0.3, 0.4, 0.5, 0.6, 0.7});

struct DriftReport {
  std::vector<ExperimentRow> rows;  // one per separation
  std::vector<double> separations;  // snapped to the grid
  std::vector<double> lambda2;
  std::vector<double> upper_bound;  // two-ball test-family bound
  double lambda1_ball = 0.0;
  double decoupled_gap = 0.0;  // max |lambda2 - lambda1_ball| in the decoupled regime
  bool monotone = false;
  bool decoupled_match = false;
};

// Two balls of radius R on one fixed grid (h = 2R/resolution), drifting
// apart through `separations` (center distances, snapped to multiples of h).
// lambda1 of the single ball is evaluated on the same grid's component mask
// so the decoupled regime is an exact identity up to solver tolerance.
DriftReport drift_experiment(double R, std::vector<double> separations,
                             const Kernel& kernel, double p, int resolution,
                             const SolverParams& params, int dim = 1,
                             int theta_samples = 720, int workers = 1);

}  // namespace mixlap
