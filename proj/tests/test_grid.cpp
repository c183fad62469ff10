#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <sstream>

#include "mixlap/grid.hpp"
#include "mixlap/rng.hpp"
#include "support/oracles.hpp"

using namespace mixlap;

namespace {

// Direct count of inner cell centers strictly inside (a,b) for the realized grid.
int count_centers_inside(const Grid& g, double a, double b) {
  int c = 0;
  for (int i = 0; i < g.cells(); ++i)
    if (a < g.x(i) && g.x(i) < b) ++c;
  return c;
}

}  // namespace

TEST_CASE("unit interval discretization: spacing, collar, mask count") {
  auto dom = build_domain(DomainSpec::interval_spec(0.0, 1.0), 10, 0.2);
  CHECK(dom.grid.h == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(dom.grid.pad == 2);
  // boundary points sit on cell centers, mask strictly inside: 9 cells
  CHECK(dom.mask.count() == 9);
  CHECK(dom.mask.count() == count_centers_inside(dom.grid, 0.0, 1.0));
  CHECK(measure(dom.grid, dom.mask) == doctest::Approx(0.9).epsilon(1e-12));
  // collar wide enough for the kernel
  CHECK(dom.grid.pad * dom.grid.h >= 0.2 - 1e-12);
}

TEST_CASE("unit interval at fine resolution: measure within one cell of 1") {
  auto dom = build_domain(DomainSpec::interval_spec(0.0, 1.0), 100, 0.0);
  CHECK(std::abs(measure(dom.grid, dom.mask) - 1.0) <= dom.grid.h + 1e-12);
}

TEST_CASE("disk measure approximates pi") {
  auto dom = build_domain(DomainSpec::ball_spec_2d(0.0, 0.0, 1.0), 50, 0.0);
  const double area = measure(dom.grid, dom.mask);
  CHECK(std::abs(area - M_PI) < 6.0 * dom.grid.h);  // O(h) boundary quantization
}

TEST_CASE("degenerate shapes rejected") {
  CHECK_THROWS_AS(build_domain(DomainSpec::ball_spec_1d(0.0, 0.0), 10, 0.1), Error);
  CHECK_THROWS_AS(build_domain(DomainSpec::interval_spec(1.0, 0.0), 10, 0.1), Error);
  CHECK_THROWS_AS(build_domain(DomainSpec::interval_spec(0.0, 1.0), 3, 0.1), Error);
}

TEST_CASE("two intervals: gap cells unmasked, measures add") {
  auto spec = DomainSpec::intervals_spec({{0.0, 1.0}, {3.0, 4.0}});
  auto dom = build_domain(spec, 40, 0.5);  // h = 0.1
  CHECK(dom.grid.h == doctest::Approx(0.1).epsilon(1e-14));
  // each interval contributes 9 strictly-interior centers
  CHECK(dom.mask.count() == 18);
  CHECK(count_centers_inside(dom.grid, 1.0, 3.0) + 0 ==
        count_centers_inside(dom.grid, 1.0, 3.0));
  for (int i = 0; i < dom.grid.cells(); ++i)
    if (1.0 <= dom.grid.x(i) && dom.grid.x(i) <= 3.0) CHECK_FALSE(dom.mask[i]);
  CHECK(component_count(dom.grid, dom.mask) == 2);
}

TEST_CASE("measure is additive over disjoint masks") {
  auto dom = build_domain(DomainSpec::interval_spec(0.0, 1.0), 50, 0.0);
  Mask left = dom.mask, right = dom.mask;
  for (int i = 0; i < dom.grid.cells(); ++i) {
    if (dom.grid.x(i) >= 0.37) left[i] = false;
    if (dom.grid.x(i) < 0.37) right[i] = false;
  }
  CHECK(measure(dom.grid, left) + measure(dom.grid, right) ==
        doctest::Approx(measure(dom.grid, dom.mask)).epsilon(1e-15));
  CHECK(measure(dom.grid, Mask::Constant(dom.grid.cells(), false)) == 0.0);
}

TEST_CASE("lp_norm basics") {
  // single cell of value 2 at h=1, p=3 -> norm 2
  auto spec = DomainSpec::custom_spec(3, 1, 1.0, {false, true, false});
  auto dom = build_domain(spec, 4, 0.0);
  Eigen::ArrayXd v = Eigen::ArrayXd::Zero(dom.grid.cells());
  for (int i = 0; i < dom.grid.cells(); ++i)
    if (dom.mask[i]) v[i] = 2.0;
  Field u = make_field(dom.grid, dom.mask, v);
  CHECK(lp_norm(u, 3.0) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(lp_norm(make_field(dom.grid, dom.mask), 2.0) == 0.0);

  Field neg = u;
  neg.values = -neg.values;
  CHECK(lp_norm(neg, 2.5) == lp_norm(u, 2.5));
}

TEST_CASE("normalize: idempotent, scale invariant, rejects zero field") {
  auto dom = build_domain(DomainSpec::interval_spec(0.0, 1.0), 30, 0.1);
  SplitMix64 rng(7);
  Field u = oracle::random_field(dom.grid, dom.mask, rng);
  const double p = 2.5;

  Field n1 = normalize(u, p);
  CHECK(lp_norm(n1, p) == doctest::Approx(1.0).epsilon(1e-14));

  Field n2 = normalize(n1, p);
  CHECK(((n2.values - n1.values).abs().maxCoeff()) < 1e-15);

  Field scaled = u;
  scaled.values *= 7.0;
  Field n3 = normalize(scaled, p);
  CHECK(((n3.values - n1.values).abs().maxCoeff()) < 1e-13);

  CHECK_THROWS_AS(normalize(make_field(dom.grid, dom.mask), p), Error);
}

TEST_CASE("split_signs: definition and exact reconstruction") {
  auto spec = DomainSpec::custom_spec(2, 1, 1.0, {true, true});
  auto dom = build_domain(spec, 4, 0.0);
  Eigen::ArrayXd v = Eigen::ArrayXd::Zero(dom.grid.cells());
  int k = 0;
  for (int i = 0; i < dom.grid.cells(); ++i)
    if (dom.mask[i]) v[i] = (k++ == 0) ? 1.0 : -2.0;
  Field u = make_field(dom.grid, dom.mask, v);

  auto s = split_signs(u);
  CHECK(s.plus.values.maxCoeff() == 1.0);
  CHECK(s.minus.values.maxCoeff() == 2.0);
  CHECK(s.plus.mask.count() == 1);
  CHECK(s.minus.mask.count() == 1);
  CHECK(((s.plus.values - s.minus.values) == u.values).all());

  // nonnegative input: minus part vanishes
  Field pos = u;
  pos.values = pos.values.abs();
  auto sp = split_signs(pos);
  CHECK(sp.minus.values.abs().maxCoeff() == 0.0);

  // random fields reconstruct bit-exactly
  auto idom = build_domain(DomainSpec::interval_spec(0.0, 1.0), 64, 0.0);
  SplitMix64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    Field r = oracle::random_field(idom.grid, idom.mask, rng);
    auto sr = split_signs(r);
    CHECK(((sr.plus.values - sr.minus.values) == r.values).all());
  }
}

TEST_CASE("fields constructed through the module vanish off their mask") {
  auto dom = build_domain(DomainSpec::ball_spec_2d(0.0, 0.0, 0.8), 24, 0.2);
  SplitMix64 rng(11);
  Eigen::ArrayXd noisy(dom.grid.cells());
  for (int i = 0; i < dom.grid.cells(); ++i) noisy[i] = rng.uniform(-1, 1);
  Field u = make_field(dom.grid, dom.mask, noisy);
  for (int i = 0; i < dom.grid.cells(); ++i)
    if (!dom.mask[i]) CHECK(u.values[i] == 0.0);

  Field nu = normalize(u, 2.0);
  for (int i = 0; i < dom.grid.cells(); ++i)
    if (!nu.mask[i]) CHECK(nu.values[i] == 0.0);

  auto ss = split_signs(nu);
  for (int i = 0; i < dom.grid.cells(); ++i) {
    if (!ss.plus.mask[i]) CHECK(ss.plus.values[i] == 0.0);
    if (!ss.minus.mask[i]) CHECK(ss.minus.values[i] == 0.0);
  }
}

TEST_CASE("connectivity labels: annulus is connected, far balls are not") {
  auto ann = build_domain(DomainSpec::annulus_spec(0, 0, 0.3, 1.0), 40, 0.1);
  CHECK(connected(ann.grid, ann.mask));

  auto two = build_domain(
      DomainSpec::balls_spec({{{0.0, 0.0}, 0.5}, {{3.0, 0.0}, 0.5}}, 2), 40, 0.2);
  CHECK(component_count(two.grid, two.mask) == 2);
}

TEST_CASE("custom masks are honored as given") {
  std::vector<bool> m = {true, false, true, false, true, false, true, false, true};
  auto dom = build_domain(DomainSpec::custom_spec(3, 3, 0.5, m), 4, 1.0);
  CHECK(dom.grid.dim == 2);
  CHECK(dom.mask.count() == 5);
  CHECK(measure(dom.grid, dom.mask) == doctest::Approx(5 * 0.25).epsilon(1e-15));
  CHECK(component_count(dom.grid, dom.mask) == 5);
}

TEST_CASE("field csv dump carries grid header and one row per cell") {
  auto dom = build_domain(DomainSpec::interval_spec(0.0, 1.0), 10, 0.0);
  Field u = make_field(dom.grid, dom.mask);
  std::ostringstream os;
  dump_field_csv(os, u);
  const std::string text = os.str();
  CHECK(text.rfind("dim,n,h,pad\n", 0) == 0);
  CHECK(text.find("index,x,value,in_mask") != std::string::npos);
  int lines = 0;
  for (char c : text)
    if (c == '\n') ++lines;
  CHECK(lines == 3 + dom.grid.cells());
}
