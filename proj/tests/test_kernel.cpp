#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "mixlap/energy.hpp"
#include "mixlap/kernel.hpp"
#include "mixlap/rng.hpp"

using namespace mixlap;

TEST_CASE("tent kernel: closed-form normalization, eval(0) = 1/r") {
  // 1D: integral of (1/r)(1 - |x|/r) over [-r, r] is 1, so eval(0) = 1/r
  Kernel k1 = make_kernel(KernelFamily::tent, 1, 1.0);
  CHECK(k1.eval_radial(0.0) == doctest::Approx(1.0).epsilon(1e-15));
  Kernel k2 = make_kernel(KernelFamily::tent, 1, 0.2);
  CHECK(k2.eval_radial(0.0) == doctest::Approx(5.0).epsilon(1e-14));
  // 2D closed form: mass of (1 - rho/r) is pi r^2 / 3
  Kernel k3 = make_kernel(KernelFamily::tent, 2, 0.5);
  CHECK(k3.eval_radial(0.0) == doctest::Approx(3.0 / (M_PI * 0.25)).epsilon(1e-12));
}

TEST_CASE("compact support and radial symmetry") {
  SplitMix64 rng(5);
  for (KernelFamily f : {KernelFamily::tent, KernelFamily::truncated_gaussian,
                         KernelFamily::bump}) {
    Kernel k = make_kernel(f, 2, 0.7);
    CHECK(k.eval_radial(1.4) == 0.0);      // |x| = 2r
    CHECK(k.eval_radial(0.700001) == 0.0);
    CHECK(k.eval_radial(0.0) > 0.0);
    for (int t = 0; t < 50; ++t) {
      Eigen::Vector2d x(rng.uniform(-1, 1), rng.uniform(-1, 1));
      CHECK(k.eval(x) == k.eval(-x));
    }
    // radially non-increasing
    double prev = k.eval_radial(0.0);
    for (int i = 1; i <= 100; ++i) {
      const double cur = k.eval_radial(0.7 * i / 100.0);
      CHECK(cur <= prev + 1e-15);
      prev = cur;
    }
    CHECK(k.radially_decreasing());
  }
}

TEST_CASE("normalization check: Riemann mass close to 1") {
  for (int dim : {1, 2}) {
    for (KernelFamily f : {KernelFamily::tent, KernelFamily::truncated_gaussian,
                           KernelFamily::bump}) {
      Kernel k = make_kernel(f, dim, 0.4);
      auto rep = normalization_check(k, 0.4 / 100.0);
      CHECK(rep.normalizable);
      CHECK(rep.value == doctest::Approx(1.0).epsilon(2e-4));
      CHECK(rep.within_tol);
    }
  }
}

TEST_CASE("scaled kernel: mass scales and the unit-mass property is flagged") {
  Kernel k = make_kernel(KernelFamily::bump, 1, 0.3, 2.0);
  auto rep = normalization_check(k, 0.3 / 100.0);
  CHECK(rep.value == doctest::Approx(2.0).epsilon(1e-3));
  CHECK_FALSE(rep.within_tol);
}

TEST_CASE("quadrature precondition") {
  Kernel k = make_kernel(KernelFamily::tent, 1, 0.2);
  CHECK_THROWS_AS(normalization_check(k, 0.2), Error);  // h > r/8
}

TEST_CASE("fractional kernel: window, truncation, flags") {
  Kernel k = fractional_kernel(1, 0.45, 2.0, 0.01, 0.2);
  // inside the window: |x|^-(1 + 2*0.45) ; at |x| = 1 the raw power is 1 but
  // 1 > r_cut so the evaluation point must be inside the window to see it
  CHECK(k.eval_radial(0.1) == doctest::Approx(std::pow(0.1, -1.9)).epsilon(1e-14));
  CHECK(k.eval_radial(0.005) == 0.0);  // below epsilon
  CHECK(k.eval_radial(0.25) == 0.0);   // beyond the outer cutoff
  CHECK_FALSE(k.radially_decreasing());

  auto rep = normalization_check(k, 0.2 / 16.0);
  CHECK_FALSE(rep.normalizable);
  CHECK(std::isfinite(rep.value));

  CHECK_THROWS_AS(fractional_kernel(1, 1.5, 2.0, 0.01, 0.2), Error);
  CHECK_THROWS_AS(fractional_kernel(1, 0.5, 2.0, 0.01, 0.2), Error);  // dim <= p*s
  CHECK_THROWS_AS(fractional_kernel(1, 0.3, 2.0, 0.3, 0.2), Error);   // eps >= cut
}

TEST_CASE("halving the inner truncation adds energy on a spike field") {
  // single-cell spike: every added near-diagonal shell contributes
  auto dom = build_domain(DomainSpec::interval_spec(0.0, 1.0), 50, 0.2);
  Eigen::ArrayXd v = Eigen::ArrayXd::Zero(dom.grid.cells());
  for (int i = 0; i < dom.grid.cells(); ++i)
    if (dom.mask[i]) {
      v[i] = 1.0;
      break;
    }
  Field spike = make_field(dom.grid, dom.mask, v);

  const double h = dom.grid.h;
  double prev = -1.0;
  for (double eps : {6.5 * h, 3.5 * h, 1.75 * h, 0.9 * h}) {
    Kernel k = fractional_kernel(1, 0.45, 2.0, eps, 0.2);
    EnergyContext ctx = make_context(dom.grid, k, 2.0);
    const double e = nonlocal_energy(ctx, spike);
    CHECK(e > prev);
    prev = e;
  }
}
