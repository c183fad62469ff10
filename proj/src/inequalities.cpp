#include "mixlap/inequalities.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <mutex>

#include "mixlap/rng.hpp"

namespace mixlap {

namespace {

double pow_abs(double d, double p) { return std::pow(std::abs(d), p); }

double phi_scalar(double d, double p) {
  return d == 0.0 ? 0.0 : std::copysign(std::pow(std::abs(d), p - 1.0), d);
}

}  // namespace

GInequalityResult g_inequality(double U, double V, double p, double t) {
  require(p >= 1.0 && std::isfinite(p), Errc::invalid_spec, "need finite p >= 1");
  require(U * V <= 0.0, Errc::constraint_violated, "requires U*V <= 0");
  const double cross = phi_scalar(U - V, p) * V;  // |U-V|^(p-2) (U-V) V
  GInequalityResult r;
  r.g_t = pow_abs(U - t * V, p) + cross * pow_abs(t, p);
  r.g_1 = pow_abs(U - V, p) + cross;
  r.holds = r.g_t <= r.g_1 + 1e-12 * (1.0 + std::abs(r.g_1));
  return r;
}

SigmaConvexityResult sigma_convexity(const EnergyContext& ctx, const Field& u,
                                     const Field& v, double t) {
  require(t >= 0.0 && t <= 1.0, Errc::invalid_spec, "t must lie in [0,1]");
  require((u.values >= 0.0).all() && (v.values >= 0.0).all(), Errc::negative_input,
          "sigma interpolation needs nonnegative fields");
  require(u.grid.same_layout(v.grid), Errc::grid_mismatch, "field grids differ");

  const double p = ctx.p;
  Mask mix_mask = u.mask || v.mask;
  Eigen::ArrayXd mix(u.values.size());
  if (t == 0.0) {
    mix = v.values;
  } else if (t == 1.0) {
    mix = u.values;
  } else {
    for (int i = 0; i < u.values.size(); ++i)
      mix[i] = std::pow((1.0 - t) * std::pow(v.values[i], p) +
                            t * std::pow(u.values[i], p),
                        1.0 / p);
  }
  Field sigma = make_field(ctx.grid, mix_mask, std::move(mix));

  SigmaConvexityResult r;
  r.lhs = nonlocal_energy(ctx, sigma);
  r.rhs = (1.0 - t) * nonlocal_energy(ctx, v) + t * nonlocal_energy(ctx, u);
  r.holds = r.lhs <= r.rhs + 1e-12 * (1.0 + std::abs(r.rhs));
  return r;
}

double calibrate_cp(double p, int samples, uint64_t seed) {
  require(p >= 2.0, Errc::constraint_violated, "calibration needs p >= 2");
  require(samples >= 1, Errc::invalid_spec, "need at least one sample");

  static std::mutex mu;
  static std::map<std::pair<double, int>, double> cache;
  {
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find({p, samples});
    if (it != cache.end()) return it->second;
  }

  auto needed = [&](double a, double b) {
    const double den = std::pow(a * a + b * b, 0.5 * (p - 2.0)) * std::abs(a * b);
    if (den == 0.0) return 0.0;
    return (pow_abs(a - b, p) - pow_abs(a, p) - pow_abs(b, p)) / den;
  };

  double cmax = needed(1.0, -1.0);  // the adversarial ray a = -b
  SplitMix64 rng(seed);
  for (int k = 0; k < samples; ++k) {
    const double a = rng.uniform(-3.0, 3.0);
    const double b = rng.uniform(-3.0, 3.0);
    cmax = std::max(cmax, needed(a, b));
  }
  cmax = std::max(cmax, 0.0);

  // round up to the geometric grid 2^(k/16)
  const double k = std::ceil(16.0 * std::log2(std::max(cmax, 1e-8)));
  const double c = std::pow(2.0, k / 16.0);

  std::lock_guard<std::mutex> lock(mu);
  cache[{p, samples}] = c;
  return c;
}

CpResult cp_inequalities(double a, double b, double p) {
  require(p > 1.0 && std::isfinite(p), Errc::invalid_spec, "need finite p > 1");
  CpResult r;

  if (p >= 2.0) {
    r.c_p = calibrate_cp(p, 100000);
    r.lhs1 = pow_abs(a - b, p);
    r.rhs1 = pow_abs(a, p) + pow_abs(b, p) +
             r.c_p * std::pow(a * a + b * b, 0.5 * (p - 2.0)) * std::abs(a * b);
    r.part1_holds = r.lhs1 <= r.rhs1 + 1e-12 * (1.0 + std::abs(r.rhs1));
  } else {
    r.part1_holds = true;  // part (i) is only calibrated for p >= 2
  }

  require(a * b <= 0.0, Errc::constraint_violated, "part (ii) requires ab <= 0");
  if (a == b) {
    // only possible at a = b = 0; both sides vanish
    r.part2_holds = true;
    return r;
  }
  r.lhs2 = phi_scalar(a - b, p) * a;
  if (p >= 2.0) {
    r.rhs2 = pow_abs(a, p) - (p - 1.0) * (a == 0.0 ? 0.0 : pow_abs(a, p - 2.0)) * b * a;
  } else {
    r.rhs2 = pow_abs(a, p) - (p - 1.0) * pow_abs(a - b, p - 2.0) * b * a;
  }
  r.part2_holds = r.lhs2 >= r.rhs2 - 1e-12 * (1.0 + std::abs(r.rhs2));
  return r;
}

PiconeReport picone_check(const EnergyContext& ctx, const Field& u, const Field& v) {
  require(u.grid.same_layout(ctx.grid) && v.grid.same_layout(ctx.grid),
          Errc::grid_mismatch, "field/context mismatch");
  const double p = ctx.p;
  const Grid& g = ctx.grid;
  for (int i = 0; i < g.cells(); ++i) {
    if (u.mask[i])
      require(u.values[i] > 0.0, Errc::non_positive_u, "u must be positive on its mask");
    if (v.mask[i])
      require(v.values[i] >= 0.0, Errc::negative_input, "v must be nonnegative");
  }

  // w = v^p / u^(p-1) on the mask
  Eigen::ArrayXd w = Eigen::ArrayXd::Zero(g.cells());
  for (int i = 0; i < g.cells(); ++i)
    if (u.mask[i]) w[i] = std::pow(v.values[i], p) / std::pow(u.values[i], p - 1.0);

  PiconeReport rep;
  rep.max_defect = -std::numeric_limits<double>::infinity();
  auto record = [&](double lhs, double rhs) {
    rep.max_defect = std::max(rep.max_defect, lhs - rhs);
    if (lhs > rhs + 1e-12 * (1.0 + std::abs(rhs))) ++rep.violations;
  };

  for (const auto& o : ctx.half_stencil) {
    for (int id = 0; id < g.cells(); ++id) {
      const int ix = g.ix(id), iy = g.iy(id);
      const int jx = ix + o.dx, jy = iy + o.dy;
      if (jx < 0 || jx >= g.n || jy < 0 || (g.dim == 2 && jy >= g.n)) continue;
      const int j = g.index(jx, jy);
      if (!u.mask[id] || !u.mask[j]) continue;
      const double du = u.values[id] - u.values[j];
      const double lhs = phi_scalar(du, p) * (w[id] - w[j]);
      const double rhs = pow_abs(v.values[id] - v.values[j], p);
      record(lhs, rhs);
      ++rep.pairs_checked;
    }
  }

  // gradient analogue at cells whose forward neighbors stay inside the mask
  for (int id = 0; id < g.cells(); ++id) {
    if (!u.mask[id]) continue;
    const int ix = g.ix(id), iy = g.iy(id);
    bool interior = ix + 1 < g.n && u.mask[g.index(ix + 1, iy)];
    if (g.dim == 2) interior = interior && iy + 1 < g.n && u.mask[g.index(ix, iy + 1)];
    if (!interior) continue;

    const double h = g.h;
    const double dux = (u.values[g.index(ix + 1, iy)] - u.values[id]) / h;
    const double dwx = (w[g.index(ix + 1, iy)] - w[id]) / h;
    const double dvx = (v.values[g.index(ix + 1, iy)] - v.values[id]) / h;
    double gsq = dux * dux, dot = dux * dwx, vsq = dvx * dvx;
    if (g.dim == 2) {
      const double duy = (u.values[g.index(ix, iy + 1)] - u.values[id]) / h;
      const double dwy = (w[g.index(ix, iy + 1)] - w[id]) / h;
      const double dvy = (v.values[g.index(ix, iy + 1)] - v.values[id]) / h;
      gsq += duy * duy;
      dot += duy * dwy;
      vsq += dvy * dvy;
    }
    const double lhs = gsq == 0.0 ? 0.0 : std::pow(gsq, 0.5 * (p - 2.0)) * dot;
    const double rhs = std::pow(vsq, 0.5 * p);
    record(lhs, rhs);
    ++rep.gradient_cells_checked;
  }
  return rep;
}

namespace {

struct TrialGrid {
  Domain dom;
  EnergyContext ctx;
};

TrialGrid make_trial_grid(double p) {
  TrialGrid t;
  t.dom = build_domain(DomainSpec::interval_spec(0.0, 1.0), 24, 0.15);
  t.ctx = make_context(t.dom.grid, make_kernel(KernelFamily::tent, 1, 0.15), p);
  return t;
}

Field random_nonneg(const Grid& g, const Mask& mask, SplitMix64& rng, double lo,
                    double hi) {
  Eigen::ArrayXd v = Eigen::ArrayXd::Zero(g.cells());
  for (int i = 0; i < g.cells(); ++i)
    if (mask[i]) v[i] = rng.uniform(lo, hi);
  return make_field(g, mask, std::move(v));
}

}  // namespace

LemmaTrialReport run_g_trials(double p, long samples, uint64_t seed) {
  LemmaTrialReport rep;
  rep.lemma = "g";
  rep.p = p;
  rep.max_defect = -std::numeric_limits<double>::infinity();
  SplitMix64 rng(seed);
  double worst_size = std::numeric_limits<double>::infinity();
  for (long k = 0; k < samples; ++k) {
    double U = rng.uniform(-2.0, 2.0);
    if (k % 97 == 0) U = 0.0;
    double V = -std::copysign(rng.uniform(0.0, 2.0), U == 0.0 ? 1.0 : U);
    double t = rng.uniform(-3.0, 3.0);
    if (k % 11 == 0) t = 1.0;
    if (k % 13 == 0) t = 0.0;
    GInequalityResult r = g_inequality(U, V, p, t);
    ++rep.trials;
    rep.max_defect = std::max(rep.max_defect, r.g_t - r.g_1);
    if (!r.holds) {
      ++rep.violations;
      const double size = std::abs(U) + std::abs(V) + std::abs(t);
      if (size < worst_size) {
        worst_size = size;
        rep.worst[0] = U;
        rep.worst[1] = V;
        rep.worst[2] = t;
        rep.worst_count = 3;
      }
    }
  }
  return rep;
}

LemmaTrialReport run_sigma_trials(double p, long samples, uint64_t seed) {
  LemmaTrialReport rep;
  rep.lemma = "sigma";
  rep.p = p;
  rep.max_defect = -std::numeric_limits<double>::infinity();
  SplitMix64 rng(seed);
  TrialGrid tg = make_trial_grid(p);
  double worst_size = std::numeric_limits<double>::infinity();

  Field u = random_nonneg(tg.dom.grid, tg.dom.mask, rng, 0.0, 1.0);
  Field v = random_nonneg(tg.dom.grid, tg.dom.mask, rng, 0.0, 1.0);
  for (long k = 0; k < samples; ++k) {
    if (k % 8 == 0 && k > 0) {
      u = random_nonneg(tg.dom.grid, tg.dom.mask, rng, 0.0, 1.0);
      v = random_nonneg(tg.dom.grid, tg.dom.mask, rng, 0.0, 1.0);
    }
    double t = rng.uniform();
    if (k % 8 == 1) t = 0.0;
    if (k % 8 == 2) t = 1.0;
    SigmaConvexityResult r = sigma_convexity(tg.ctx, u, v, t);
    ++rep.trials;
    rep.max_defect = std::max(rep.max_defect, r.lhs - r.rhs);
    if (!r.holds) {
      ++rep.violations;
      if (t < worst_size) {
        worst_size = t;
        rep.worst[0] = t;
        rep.worst[1] = static_cast<double>(k);
        rep.worst_count = 2;
      }
    }
  }
  return rep;
}

LemmaTrialReport run_cp_trials(double p, long samples, uint64_t seed) {
  LemmaTrialReport rep;
  rep.lemma = "cp";
  rep.p = p;
  rep.max_defect = -std::numeric_limits<double>::infinity();
  SplitMix64 rng(seed);
  double worst_size = std::numeric_limits<double>::infinity();
  for (long k = 0; k < samples; ++k) {
    double a = rng.uniform(-2.0, 2.0);
    double b = rng.uniform(-2.0, 2.0);
    if (k % 89 == 0) b = 0.0;
    if (k % 71 == 0) b = -a;  // the adversarial ray of part (i)
    if (a * b > 0.0) b = -b;  // part (ii) precondition
    CpResult r = cp_inequalities(a, b, p);
    ++rep.trials;
    rep.max_defect = std::max(rep.max_defect,
                              std::max(r.lhs1 - r.rhs1, r.rhs2 - r.lhs2));
    if (!r.part1_holds || !r.part2_holds) {
      ++rep.violations;
      const double size = std::abs(a) + std::abs(b);
      if (size < worst_size) {
        worst_size = size;
        rep.worst[0] = a;
        rep.worst[1] = b;
        rep.worst_count = 2;
      }
    }
  }
  return rep;
}

LemmaTrialReport run_picone_trials(double p, long samples, uint64_t seed) {
  LemmaTrialReport rep;
  rep.lemma = "picone";
  rep.p = p;
  rep.max_defect = -std::numeric_limits<double>::infinity();
  SplitMix64 rng(seed);
  TrialGrid tg = make_trial_grid(p);
  int round = 0;
  while (rep.trials < samples) {
    Field u = random_nonneg(tg.dom.grid, tg.dom.mask, rng, 0.2, 1.2);
    Field v;
    if (round % 5 == 3) {
      v = u;  // equality case
    } else if (round % 5 == 4) {
      v = u;
      v.values *= 2.37;  // scaled equality case
    } else {
      v = random_nonneg(tg.dom.grid, tg.dom.mask, rng, 0.0, 1.5);
    }
    PiconeReport pr = picone_check(tg.ctx, u, v);
    rep.trials += pr.pairs_checked + pr.gradient_cells_checked;
    rep.violations += pr.violations;
    rep.max_defect = std::max(rep.max_defect, pr.max_defect);
    if (pr.violations > 0 && rep.worst_count == 0) {
      rep.worst[0] = static_cast<double>(round);
      rep.worst_count = 1;
    }
    ++round;
  }
  return rep;
}

}  // namespace mixlap
