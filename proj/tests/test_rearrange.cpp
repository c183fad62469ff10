#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "mixlap/rearrange.hpp"
#include "support/oracles.hpp"

using namespace mixlap;

namespace {

struct Setup {
  Domain dom;
  EnergyContext ctx;
};

Setup interval_setup(int res, double p = 2.0, double r = 0.15) {
  Setup s;
  s.dom = build_domain(DomainSpec::interval_spec(0.0, 1.0), res, r);
  s.ctx = make_context(s.dom.grid, make_kernel(KernelFamily::tent, 1, r), p);
  return s;
}

std::vector<double> sorted_values(const Field& f) {
  std::vector<double> v;
  for (int i = 0; i < f.values.size(); ++i)
    if (f.mask[i]) v.push_back(f.values[i]);
  std::sort(v.begin(), v.end());
  return v;
}

}  // namespace

TEST_CASE("radially decreasing input is a fixed point") {
  Setup s = interval_setup(60);
  Eigen::ArrayXd v = Eigen::ArrayXd::Zero(s.dom.grid.cells());
  for (int i = 0; i < s.dom.grid.cells(); ++i)
    if (s.dom.mask[i]) v[i] = std::max(0.0, 1.0 - std::abs(s.dom.grid.x(i) - 0.5) * 2.0);
  Field u = make_field(s.dom.grid, s.dom.mask, v);
  RearrangementResult r = schwarz_symmetrize(s.ctx, u);
  CHECK((r.u_star.values == u.values).all());
  CHECK_FALSE(r.used_abs);
  CHECK(r.local_after == doctest::Approx(r.local_before).epsilon(1e-15));
  CHECK(r.nonlocal_after == doctest::Approx(r.nonlocal_before).epsilon(1e-15));
}

TEST_CASE("value multiset is preserved and norms match") {
  Setup s = interval_setup(50);
  SplitMix64 rng(77);
  Field u = oracle::random_field(s.dom.grid, s.dom.mask, rng, 0.0, 2.0);
  RearrangementResult r = schwarz_symmetrize(s.ctx, u);
  auto a = sorted_values(u);
  auto b = sorted_values(r.u_star);
  REQUIRE(a.size() == b.size());
  for (size_t k = 0; k < a.size(); ++k) CHECK(a[k] == b[k]);
  CHECK(r.norm_defect <= 1e-12);
  for (double p : {1.0, 2.0, 3.0})
    CHECK(lp_norm(r.u_star, p) == doctest::Approx(lp_norm(u, p)).epsilon(1e-12));
}

TEST_CASE("documented tie rule on a tiny centered example") {
  // custom 5-cell interval, values 0,3,1,2,0: peak lands at the center,
  // larger values fill outward left-first
  auto spec = DomainSpec::custom_spec(5, 1, 1.0, {true, true, true, true, true});
  auto dom = build_domain(spec, 4, 0.0);
  EnergyContext ctx = make_context(dom.grid, std::nullopt, 2.0);
  Eigen::ArrayXd v = Eigen::ArrayXd::Zero(dom.grid.cells());
  std::vector<double> vals = {0.0, 3.0, 1.0, 2.0, 0.0};
  int k = 0;
  std::vector<int> cells;
  for (int i = 0; i < dom.grid.cells(); ++i)
    if (dom.mask[i]) {
      v[i] = vals[k++];
      cells.push_back(i);
    }
  Field u = make_field(dom.grid, dom.mask, v);
  RearrangementResult r = schwarz_symmetrize(ctx, u);
  CHECK(r.u_star.values[cells[0]] == 0.0);
  CHECK(r.u_star.values[cells[1]] == 2.0);
  CHECK(r.u_star.values[cells[2]] == 3.0);
  CHECK(r.u_star.values[cells[3]] == 1.0);
  CHECK(r.u_star.values[cells[4]] == 0.0);
}

TEST_CASE("negative input is rearranged as |u| and flagged") {
  Setup s = interval_setup(40);
  SplitMix64 rng(5);
  Field u = oracle::random_field(s.dom.grid, s.dom.mask, rng, -1.0, 1.0);
  RearrangementResult r = schwarz_symmetrize(s.ctx, u);
  CHECK(r.used_abs);
  CHECK((r.u_star.values >= 0.0).all());
}

TEST_CASE("idempotence: symmetrizing twice equals symmetrizing once") {
  for (int res : {41, 50}) {
    Setup s = interval_setup(res);
    SplitMix64 rng(13 + res);
    Field u = oracle::random_field(s.dom.grid, s.dom.mask, rng, 0.0, 1.0);
    RearrangementResult once = schwarz_symmetrize(s.ctx, u);
    RearrangementResult twice = schwarz_symmetrize(s.ctx, once.u_star);
    CHECK((once.u_star.values == twice.u_star.values).all());
  }
  // 2D disk
  auto dom = build_domain(DomainSpec::ball_spec_2d(0, 0, 1.0), 20, 0.3);
  EnergyContext ctx = make_context(dom.grid, make_kernel(KernelFamily::tent, 2, 0.3),
                                   2.0);
  SplitMix64 rng(29);
  Field u = oracle::random_field(dom.grid, dom.mask, rng, 0.0, 1.0);
  RearrangementResult once = schwarz_symmetrize(ctx, u);
  RearrangementResult twice = schwarz_symmetrize(ctx, once.u_star);
  CHECK((once.u_star.values == twice.u_star.values).all());
}

TEST_CASE("1D rearrangement attains the brute-force minimum over permutations") {
  SplitMix64 rng(101);
  for (int n : {5, 6, 7, 8}) {
    std::vector<bool> all(n, true);
    auto dom = build_domain(DomainSpec::custom_spec(n, 1, 1.0, all), 4, 0.0);
    EnergyContext ctx = make_context(dom.grid, std::nullopt, 2.0);
    for (int trial = 0; trial < 6; ++trial) {
      Eigen::ArrayXd v = Eigen::ArrayXd::Zero(dom.grid.cells());
      std::vector<double> vals;
      for (int i = 0; i < dom.grid.cells(); ++i)
        if (dom.mask[i]) {
          v[i] = rng.uniform(0.0, 1.0);
          vals.push_back(v[i]);
        }
      Field u = make_field(dom.grid, dom.mask, v);
      for (double p : {2.0, 3.0}) {
        EnergyContext pctx = make_context(dom.grid, std::nullopt, p);
        RearrangementResult r = schwarz_symmetrize(pctx, u);
        const double star = local_energy(pctx, r.u_star);
        const double best = oracle::min_path_energy_over_permutations(vals, p);
        CHECK(star <= best * (1.0 + 1e-12) + 1e-15);
      }
    }
  }
}

TEST_CASE("symmetrization bound: random 1D trials and refinement trend") {
  int positive_defects = 0, trials = 0;
  double max_defect_coarse = 0.0, max_defect_fine = 0.0;
  for (int res : {100, 400}) {
    Setup s = interval_setup(res);
    SplitMix64 rng(7);
    double worst = 0.0;
    for (int t = 0; t < 40; ++t) {
      Field u = oracle::random_field(s.dom.grid, s.dom.mask, rng, 0.0, 1.0);
      PolyaSzegoReport rep = polya_szego_check(s.ctx, u);
      CHECK(rep.holds);
      ++trials;
      const double defect = std::max(rep.defect_local, rep.defect_nonlocal);
      if (defect > 0.0) ++positive_defects;
      worst = std::max(worst, defect);
    }
    if (res == 100) max_defect_coarse = worst;
    if (res == 400) max_defect_fine = worst;
  }
  // the inequality holds outright in the overwhelming majority of draws
  CHECK(positive_defects <= trials / 100);
  CHECK(max_defect_fine <= std::max(max_defect_coarse, 1e-12));
}

TEST_CASE("non-decreasing kernels are rejected") {
  auto dom = build_domain(DomainSpec::interval_spec(0.0, 1.0), 50, 0.2);
  Kernel frac = fractional_kernel(1, 0.45, 2.0, 0.02, 0.2);
  EnergyContext ctx = make_context(dom.grid, frac, 2.0);
  SplitMix64 rng(3);
  Field u = oracle::random_field(dom.grid, dom.mask, rng, 0.0, 1.0);
  CHECK_THROWS_AS(polya_szego_check(ctx, u), Error);
}
