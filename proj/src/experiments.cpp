#include "mixlap/experiments.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <thread>

#include "mixlap/io.hpp"

namespace mixlap {

namespace {

double now_seconds() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

// Fixed index->result mapping; output order is independent of worker count.
template <class Fn>
void parallel_for_indexed(int count, int workers, Fn&& fn) {
  workers = std::max(1, std::min(workers, count));
  if (workers == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int t = 0; t < workers; ++t)
    pool.emplace_back([&, t]() {
      for (int i = t; i < count; i += workers) fn(i);
    });
  for (auto& th : pool) th.join();
}

Field make_split_probe(const Field& phi1) {
  // flip the sign of phi1 on the left half of its support: a cheap
  // sign-changing probe transverse to phi1
  const Grid& g = phi1.grid;
  double cx = 0.0;
  int cnt = 0;
  for (int i = 0; i < g.cells(); ++i)
    if (phi1.mask[i]) {
      cx += g.x(i);
      ++cnt;
    }
  cx /= cnt;
  Eigen::ArrayXd v = phi1.values;
  for (int i = 0; i < g.cells(); ++i)
    if (g.x(i) < cx) v[i] = -v[i];
  return make_field(g, phi1.mask, std::move(v));
}

Field component_difference_probe(const EnergyContext& ctx, const Mask& mask,
                                 const SolverParams& params) {
  int ncomp = 0;
  Eigen::ArrayXi labels = component_labels(ctx.grid, mask, &ncomp);
  Mask m1 = (labels == 0);
  Mask m2 = !m1 && mask;
  EigenResult a = solve_lambda1(ctx, m1, params);
  EigenResult b = solve_lambda1(ctx, m2, params);
  return make_field(ctx.grid, mask, a.eigenfunction.values - b.eigenfunction.values);
}

// Nearest-cell prolongation of a coarse solution onto a finer grid of the
// same domain; used to warm-start refinement solves.
Field prolong(const Field& coarse, const Grid& fine, const Mask& fine_mask) {
  Eigen::ArrayXd v = Eigen::ArrayXd::Zero(fine.cells());
  const Grid& cg = coarse.grid;
  for (int id = 0; id < fine.cells(); ++id) {
    if (!fine_mask[id]) continue;
    const Eigen::Vector2d x = fine.center(id);
    int ix = static_cast<int>(std::floor((x[0] - cg.origin[0]) / cg.h));
    int iy = cg.dim == 2
                 ? static_cast<int>(std::floor((x[1] - cg.origin[1]) / cg.h))
                 : 0;
    ix = std::clamp(ix, 0, cg.n - 1);
    iy = std::clamp(iy, 0, cg.dim == 2 ? cg.n - 1 : 0);
    v[id] = coarse.values[cg.index(ix, iy)];
  }
  return make_field(fine, fine_mask, std::move(v));
}

// lambda2 pipeline: lambda1, probe, string minimax, polish.
struct Lambda2Run {
  EigenResult first;
  EigenResult second;
};

Lambda2Run run_lambda2(const EnergyContext& ctx, const Mask& mask,
                       const SolverParams& params, int K = 17) {
  Lambda2Run out;
  out.first = solve_lambda1(ctx, mask, params);
  require(out.first.converged, Errc::not_converged, "lambda1 did not converge");
  Field probe = connected(ctx.grid, mask)
                    ? make_split_probe(out.first.eigenfunction)
                    : component_difference_probe(ctx, mask, params);
  PathState path = initial_path(out.first.eigenfunction, probe, K, ctx.p);
  out.second = minimax_lambda2(ctx, params, std::move(path));
  return out;
}

}  // namespace

std::string kernel_label(const std::optional<Kernel>& k) {
  if (!k || k->weight == 0.0) return "local";
  char buf[96];
  if (k->family == KernelFamily::truncated_fractional) {
    std::snprintf(buf, sizeof buf, "fractional(s=%g,eps=%g,r=%g)", k->s, k->epsilon,
                  k->radius);
  } else if (k->weight != 1.0) {
    std::snprintf(buf, sizeof buf, "%s(r=%g,w=%g)", kernel_family_name(k->family),
                  k->radius, k->weight);
  } else {
    std::snprintf(buf, sizeof buf, "%s(r=%g)", kernel_family_name(k->family),
                  k->radius);
  }
  return buf;
}

void write_results_csv(std::ostream& os, const std::vector<ExperimentRow>& rows,
                       bool timings) {
  os << "experiment,domain,p,kernel,n,lambda1,lambda2,oracle1,oracle2,margin,seconds\n";
  auto cell = [](double v) { return std::isnan(v) ? std::string() : format_double(v); };
  for (const auto& r : rows) {
    os << r.experiment << ',' << r.domain << ',' << format_double(r.p) << ','
       << r.kernel << ',' << r.n << ',' << cell(r.lambda1) << ',' << cell(r.lambda2)
       << ',' << cell(r.oracle1) << ',' << cell(r.oracle2) << ',' << cell(r.margin)
       << ',';
    if (timings) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.3f", r.seconds);
      os << buf;
    } else {
      os << '0';
    }
    os << '\n';
  }
}

std::vector<DomainSpec> fk_family_2d(double c, int resolution) {
  require(c > 0.0 && resolution >= 8, Errc::invalid_spec, "bad family parameters");
  const double res = resolution;
  // center sampling of a curved boundary is unbiased, so the ball needs no
  // adjustment; boxes lose exactly the half-cell ring of strictly-interior
  // centers and get outset to realize measure c
  const double R = std::sqrt(c / M_PI);
  const double s = std::sqrt(c) * res / (res - 1.0);
  const double w = std::sqrt(c / ((1.0 - 1.0 / res) * (0.5 - 1.0 / res)));
  return {DomainSpec::ball_spec_2d(0.0, 0.0, R), DomainSpec::box_spec(0.0, s, 0.0, s),
          DomainSpec::box_spec(0.0, w, 0.0, 0.5 * w)};
}

std::vector<DomainSpec> fk_family_1d(double gap, int resolution) {
  require(gap > 0.0 && resolution >= 8, Errc::invalid_spec, "bad family parameters");
  const double res = resolution;
  // piece length solving 2(l - h) = 1 with h = (2l + gap)/res, so the union
  // realizes measure 1 exactly on its own grid; the single interval likewise
  const double ell = (0.5 + gap / res) / (1.0 - 2.0 / res);
  const double L = res / (res - 1.0);
  return {DomainSpec::interval_spec(0.0, L),
          DomainSpec::intervals_spec({{0.0, ell}, {ell + gap, 2.0 * ell + gap}})};
}

FaberKrahnReport faber_krahn_sweep(const std::vector<DomainSpec>& shapes,
                                   const Kernel& kernel, double p, int resolution,
                                   const SolverParams& params, bool richardson,
                                   int workers) {
  require(shapes.size() >= 2, Errc::invalid_spec, "need the ball plus competitors");
  require(p >= 2.0, Errc::invalid_spec, "shape experiments assume p >= 2");
  require(kernel.radially_decreasing(), Errc::kernel_not_decreasing,
          "shape experiments need a radially decreasing kernel");

  FaberKrahnReport rep;
  const int m = static_cast<int>(shapes.size());
  std::vector<double> lam(m, 0.0), lam2n(m, 0.0), meas(m, 0.0), secs(m, 0.0);

  parallel_for_indexed(m, workers, [&](int i) {
    const double t0 = now_seconds();
    Domain dom = build_domain(shapes[i], resolution, kernel.radius);
    meas[i] = measure(dom.grid, dom.mask);
    EnergyContext ctx = make_context(dom.grid, kernel, p);
    EigenResult r = solve_lambda1(ctx, dom.mask, params);
    require(r.converged, Errc::not_converged, "lambda1 did not converge");
    lam[i] = r.lambda;
    if (richardson) {
      Domain fine = build_domain(shapes[i], 2 * resolution, kernel.radius);
      EnergyContext fctx = make_context(fine.grid, kernel, p);
      Field warm = prolong(r.eigenfunction, fine.grid, fine.mask);
      EigenResult rf = solve_lambda1(fctx, fine.mask, params, warm);
      require(rf.converged, Errc::not_converged, "refined lambda1 did not converge");
      lam2n[i] = rf.lambda;
    }
    secs[i] = now_seconds() - t0;
  });

  rep.target_measure = meas[0];
  rep.measures_ok = true;
  for (int i = 0; i < m; ++i)
    if (std::abs(meas[i] - rep.target_measure) > 0.01 * rep.target_measure)
      rep.measures_ok = false;
  require(rep.measures_ok, Errc::measure_mismatch,
          "realized measures differ by more than 1%");

  rep.min_margin = std::numeric_limits<double>::infinity();
  rep.richardson = 0.0;
  for (int i = 0; i < m; ++i) {
    if (richardson) rep.richardson = std::max(rep.richardson, std::abs(lam[i] - lam2n[i]));
    ExperimentRow row;
    row.experiment = "faber-krahn";
    row.domain = shapes[i].name() + (i == 0 ? "(ref)" : "");
    row.p = p;
    row.kernel = kernel_label(kernel);
    row.n = resolution;
    row.lambda1 = lam[i];
    if (richardson) row.oracle1 = lam2n[i];
    if (i > 0) {
      row.margin = lam[i] - lam[0];
      rep.min_margin = std::min(rep.min_margin, row.margin);
    }
    row.seconds = secs[i];
    rep.rows.push_back(std::move(row));
  }
  rep.ball_minimal = rep.min_margin > 0.0;
  rep.margin_exceeds_error = !richardson || rep.min_margin > rep.richardson;
  return rep;
}

HksReport hks_check(const DomainSpec& spec, const Kernel& kernel, double p,
                    int resolution, const SolverParams& params,
                    std::vector<double> ratios) {
  require(p >= 2.0, Errc::invalid_spec, "shape experiments assume p >= 2");
  require(kernel.radially_decreasing(), Errc::kernel_not_decreasing,
          "shape experiments need a radially decreasing kernel");

  HksReport rep;
  const double t0 = now_seconds();
  Domain dom = build_domain(spec, resolution, kernel.radius);
  EnergyContext ctx = make_context(dom.grid, kernel, p);
  rep.boundary_case = !connected(dom.grid, dom.mask);

  Lambda2Run run = run_lambda2(ctx, dom.mask, params);
  rep.lambda2 = run.second.lambda;
  const double c = measure(dom.grid, dom.mask);
  const double h = dom.grid.h;
  const int dim = dom.grid.dim;

  // Reference ball of a fraction of the domain's measure, h matched to the
  // domain grid. In 1D the realized measure of an aligned interval trails its
  // spectral length by one cell, so the ball is sized by cell count: a ball
  // spanning k+1 centers realizes measure k*h exactly.
  auto fraction_ball = [&](double frac) {
    if (dim == 1) {
      const long k = std::lround(frac * static_cast<double>(dom.mask.count()));
      return DomainSpec::ball_spec_1d(0.0, 0.5 * (k + 1) * h);
    }
    return DomainSpec::ball_spec_2d(0.0, 0.0, std::sqrt(frac * c / M_PI));
  };
  auto ball_resolution = [&](const DomainSpec& ball) {
    const double extent = 2.0 * ball.ball_list.front().r;
    return std::max(8, static_cast<int>(std::lround(extent / h)));
  };

  DomainSpec half_ball = fraction_ball(0.5);
  Domain bdom = build_domain(half_ball, ball_resolution(half_ball), kernel.radius);
  EnergyContext bctx = make_context(bdom.grid, kernel, p);
  EigenResult rb = solve_lambda1(bctx, bdom.mask, params);
  require(rb.converged, Errc::not_converged, "half-ball lambda1 did not converge");
  rep.lambda1_half_ball = rb.lambda;
  rep.margin = rep.lambda2 - rep.lambda1_half_ball;
  rep.strict_ok = rep.margin > 0.0;

  // unequal-split sweep on one shared grid: nested balls of measure ratio*c
  rep.ratios = std::move(ratios);
  if (!rep.ratios.empty()) {
    double rmax = 0.0;
    for (double q : rep.ratios) rmax = std::max(rmax, std::max(q, 1.0 - q));
    DomainSpec big_ball = fraction_ball(rmax);
    Domain big = build_domain(big_ball, ball_resolution(big_ball), kernel.radius);
    EnergyContext sctx = make_context(big.grid, kernel, p);
    auto lam_of = [&](double frac) {
      Mask mk = mask_on_grid(fraction_ball(frac), big.grid);
      EigenResult r = solve_lambda1(sctx, mk, params);
      require(r.converged, Errc::not_converged, "split lambda1 did not converge");
      return r.lambda;
    };
    std::map<double, double> cache;
    for (double q : rep.ratios)
      for (double f : {q, 1.0 - q})
        if (!cache.count(f)) cache[f] = lam_of(f);
    double at_half = 0.0;
    for (double q : rep.ratios) {
      const double v = std::max(cache[q], cache[1.0 - q]);
      rep.max_pair_lambda.push_back(v);
      if (q == 0.5) at_half = v;
    }
    rep.split_min_at_half = true;
    for (size_t i = 0; i < rep.ratios.size(); ++i) {
      if (rep.ratios[i] == 0.5) continue;
      if (!(at_half < rep.max_pair_lambda[i])) rep.split_min_at_half = false;
    }
  }

  rep.row.experiment = "hks";
  rep.row.domain = spec.name();
  rep.row.p = p;
  rep.row.kernel = kernel_label(kernel);
  rep.row.n = resolution;
  rep.row.lambda1 = rep.lambda1_half_ball;
  rep.row.lambda2 = rep.lambda2;
  rep.row.margin = rep.margin;
  rep.row.seconds = now_seconds() - t0;
  return rep;
}

DriftReport drift_experiment(double R, std::vector<double> separations,
                             const Kernel& kernel, double p, int resolution,
                             const SolverParams& params, int dim, int theta_samples,
                             int workers) {
  require(R > 0.0, Errc::invalid_spec, "ball radius must be positive");
  require(!separations.empty(), Errc::invalid_spec, "need at least one separation");
  for (size_t i = 1; i < separations.size(); ++i)
    require(separations[i] > separations[i - 1], Errc::invalid_spec,
            "separations must be increasing");

  DriftReport rep;
  const double h = 2.0 * R / resolution;
  for (double d : separations) {
    const double snapped = std::round(d / h) * h;
    require(snapped >= 2.0 * R - 1e-12, Errc::overlap, "balls intersect");
    rep.separations.push_back(snapped);
  }
  for (size_t i = 1; i < rep.separations.size(); ++i)
    require(rep.separations[i] > rep.separations[i - 1] + 0.5 * h, Errc::invalid_spec,
            "separations collide after snapping to the grid");

  const double dmax = rep.separations.back();
  auto balls_at = [&](double d) {
    std::vector<DomainSpec::BallGeom> balls = {{{R, 0.0}, R}, {{R + d, 0.0}, R}};
    return DomainSpec::balls_spec(std::move(balls), dim);
  };
  const int res_master = resolution + static_cast<int>(std::lround(dmax / h));
  Domain master = build_domain(balls_at(dmax), res_master, kernel.radius);
  EnergyContext ctx = make_context(master.grid, kernel, p);

  // single-ball reference on the same grid: the left component, polished
  {
    int ncomp = 0;
    Eigen::ArrayXi labels = component_labels(master.grid, master.mask, &ncomp);
    require(ncomp == 2, Errc::not_two_component, "expected two separated balls");
    Mask left = (labels == 0);
    EigenResult r = solve_lambda1(ctx, left, params);
    require(r.converged, Errc::not_converged, "single-ball lambda1 did not converge");
    EigenResult polished = polish_eigenpair(ctx, r.eigenfunction);
    rep.lambda1_ball = polished.lambda;
  }

  const int count = static_cast<int>(rep.separations.size());
  rep.lambda2.assign(count, 0.0);
  rep.upper_bound.assign(count, 0.0);
  std::vector<double> secs(count, 0.0);

  parallel_for_indexed(count, workers, [&](int i) {
    const double t0 = now_seconds();
    Mask mk = mask_on_grid(balls_at(rep.separations[i]), master.grid);
    Lambda2Run run = run_lambda2(ctx, mk, params);
    rep.lambda2[i] = run.second.lambda;
    rep.upper_bound[i] = two_ball_upper_bound(ctx, mk, params, theta_samples);
    secs[i] = now_seconds() - t0;
  });

  rep.monotone = true;
  for (int i = 1; i < count; ++i)
    if (rep.lambda2[i] > rep.lambda2[i - 1] * (1.0 + 1e-9)) rep.monotone = false;

  rep.decoupled_match = true;
  rep.decoupled_gap = 0.0;
  for (int i = 0; i < count; ++i) {
    const bool decoupled = rep.separations[i] - 2.0 * R > kernel.radius + 1e-12;
    if (decoupled) {
      const double gap = std::abs(rep.lambda2[i] - rep.lambda1_ball);
      rep.decoupled_gap = std::max(rep.decoupled_gap, gap);
      if (gap > params.tol * rep.lambda1_ball) rep.decoupled_match = false;
    }
    ExperimentRow row;
    row.experiment = "drift";
    char buf[64];
    std::snprintf(buf, sizeof buf, "balls(d=%.6g)", rep.separations[i]);
    row.domain = buf;
    row.p = p;
    row.kernel = kernel_label(kernel);
    row.n = resolution;
    row.lambda1 = rep.lambda1_ball;
    row.lambda2 = rep.lambda2[i];
    row.oracle2 = rep.upper_bound[i];
    row.margin = rep.lambda2[i] - rep.lambda1_ball;
    row.seconds = secs[i];
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

}  // namespace mixlap
