#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "mixlap/inequalities.hpp"
#include "support/oracles.hpp"

using namespace mixlap;

TEST_CASE("g inequality: hand-checked cases") {
  // U=1, V=-1, p=2: g(t) = 1 + 2t - t^2
  auto r0 = g_inequality(1.0, -1.0, 2.0, 0.0);
  CHECK(r0.g_t == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(r0.g_1 == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(r0.holds);

  auto r1 = g_inequality(1.0, -1.0, 2.0, 1.0);
  CHECK(r1.g_t == r1.g_1);  // equality at t = 1, bit-exact

  auto rt = g_inequality(1.0, -1.0, 2.0, 0.5);
  CHECK(rt.g_t == doctest::Approx(1.0 + 2 * 0.5 - 0.25).epsilon(1e-15));

  CHECK_THROWS_AS(g_inequality(1.0, 2.0, 2.0, 0.5), Error);  // U V > 0
}

TEST_CASE("g inequality: U = 0 and randomized sweeps hold") {
  SplitMix64 rng(11);
  for (double p : {2.0, 2.5, 3.0, 4.0}) {
    for (int k = 0; k < 20000; ++k) {
      double U = rng.uniform(-2, 2);
      if (k % 10 == 0) U = 0.0;
      const double V = -std::copysign(rng.uniform(0.0, 2.0), U == 0.0 ? 1.0 : U);
      const double t = rng.uniform(-3, 3);
      CHECK(g_inequality(U, V, p, t).holds);
    }
  }
}

TEST_CASE("sigma convexity: equality at the ends and random interior t") {
  auto dom = build_domain(DomainSpec::interval_spec(0, 1), 30, 0.15);
  SplitMix64 rng(17);
  for (double p : {2.0, 3.0}) {
    EnergyContext ctx = make_context(dom.grid, make_kernel(KernelFamily::tent, 1, 0.15),
                                     p);
    Field u = oracle::random_field(dom.grid, dom.mask, rng, 0.0, 1.0);
    Field v = oracle::random_field(dom.grid, dom.mask, rng, 0.0, 1.0);
    auto r0 = sigma_convexity(ctx, u, v, 0.0);
    CHECK(r0.lhs == r0.rhs);  // sigma_0 = v exactly
    auto r1 = sigma_convexity(ctx, u, v, 1.0);
    CHECK(r1.lhs == r1.rhs);
    for (int k = 1; k < 10; ++k) {
      auto rk = sigma_convexity(ctx, u, v, k / 10.0);
      CHECK(rk.holds);
    }
  }
  // negative input rejected
  EnergyContext ctx = make_context(dom.grid, make_kernel(KernelFamily::tent, 1, 0.15),
                                   2.0);
  Field w = oracle::random_field(dom.grid, dom.mask, rng, -1.0, 1.0);
  Field pos = oracle::random_field(dom.grid, dom.mask, rng, 0.0, 1.0);
  CHECK_THROWS_AS(sigma_convexity(ctx, w, pos, 0.5), Error);
}

TEST_CASE("c_p calibration: p=2 needs exactly 2, p=3 at least the adversarial ray") {
  const double c2 = calibrate_cp(2.0, 20000);
  CHECK(c2 >= 2.0);
  CHECK(c2 <= 2.0 * std::pow(2.0, 1.0 / 16.0));  // one grid step of slack

  const double c3 = calibrate_cp(3.0, 20000);
  CHECK(c3 >= 6.0 / std::sqrt(2.0));  // direct evaluation at a=1, b=-1

  // larger sample sets can only push the constant up
  CHECK(calibrate_cp(2.5, 50000) >= calibrate_cp(2.5, 500));
  CHECK_THROWS_AS(calibrate_cp(1.5, 100), Error);
}

TEST_CASE("c_p inequalities: hand cases and equality at b=0") {
  // p=4, a=1, b=-1: lhs = 8, rhs = 1 + 3 = 4
  auto r = cp_inequalities(1.0, -1.0, 4.0);
  CHECK(r.lhs2 == doctest::Approx(8.0).epsilon(1e-15));
  CHECK(r.rhs2 == doctest::Approx(4.0).epsilon(1e-15));
  CHECK(r.part1_holds);
  CHECK(r.part2_holds);

  auto rb = cp_inequalities(1.7, 0.0, 3.0);
  CHECK(rb.lhs1 == rb.rhs1);  // part (i) reduces to |a|^p <= |a|^p exactly
  CHECK(rb.part2_holds);

  CHECK_THROWS_AS(cp_inequalities(1.0, 2.0, 3.0), Error);  // ab > 0

  // the 1 < p < 2 branch of part (ii)
  auto rlo = cp_inequalities(1.0, -0.5, 1.5);
  CHECK(rlo.part2_holds);
}

TEST_CASE("picone bounds: equality cases and positivity guards") {
  auto dom = build_domain(DomainSpec::interval_spec(0, 1), 30, 0.15);
  SplitMix64 rng(19);
  for (double p : {2.0, 3.0}) {
    EnergyContext ctx = make_context(dom.grid, make_kernel(KernelFamily::tent, 1, 0.15),
                                     p);
    Field u = oracle::random_field(dom.grid, dom.mask, rng, 0.3, 1.3);
    PiconeReport eq = picone_check(ctx, u, u);
    CHECK(eq.violations == 0);
    CHECK(std::abs(eq.max_defect) <= 1e-14);

    Field cu = u;
    cu.values *= 2.37;
    PiconeReport eq2 = picone_check(ctx, u, cu);
    CHECK(eq2.violations == 0);
    CHECK(std::abs(eq2.max_defect) <= 1e-12);

    Field v = oracle::random_field(dom.grid, dom.mask, rng, 0.0, 1.0);
    PiconeReport rnd = picone_check(ctx, u, v);
    CHECK(rnd.violations == 0);
    CHECK(rnd.pairs_checked > 0);
    CHECK(rnd.gradient_cells_checked > 0);
  }

  EnergyContext ctx = make_context(dom.grid, make_kernel(KernelFamily::tent, 1, 0.15),
                                   2.0);
  Field zero_u = make_field(dom.grid, dom.mask);
  Field v = oracle::random_field(dom.grid, dom.mask, rng, 0.0, 1.0);
  CHECK_THROWS_AS(picone_check(ctx, zero_u, v), Error);  // u must be positive
}

TEST_CASE("trial suites: small runs pass for every p") {
  for (double p : {2.0, 2.5, 3.0, 4.0}) {
    auto g = run_g_trials(p, 5000, 7);
    CHECK(g.pass());
    CHECK(g.trials == 5000);
    auto s = run_sigma_trials(p, 1500, 7);
    CHECK(s.pass());
    auto c = run_cp_trials(p, 5000, 7);
    CHECK(c.pass());
    auto pi = run_picone_trials(p, 4000, 7);
    CHECK(pi.pass());
    CHECK(pi.trials >= 4000);
  }
}
