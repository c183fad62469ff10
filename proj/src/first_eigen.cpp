#include "mixlap/first_eigen.hpp"

#include <algorithm>
#include <cmath>

#include "mixlap/rng.hpp"

namespace mixlap {

namespace {

Eigen::ArrayXd phi_p(const Eigen::ArrayXd& u, double p) {
  if (p == 2.0) return u;
  Eigen::ArrayXd out(u.size());
  for (int i = 0; i < u.size(); ++i) {
    const double v = u[i];
    out[i] = v == 0.0 ? 0.0 : std::copysign(std::pow(std::abs(v), p - 1.0), v);
  }
  return out;
}

double dot_h(const Eigen::ArrayXd& a, const Eigen::ArrayXd& b, double hN) {
  return (a * b).sum() * hN;
}

// Rayleigh gradient restricted to the mask: p (L u - lambda |u|^{p-2} u).
Eigen::ArrayXd rayleigh_gradient(const EnergyContext& ctx, const Field& u,
                                 double lambda, const Field& lu) {
  Eigen::ArrayXd g = ctx.p * (lu.values - lambda * phi_p(u.values, ctx.p));
  return u.mask.select(g, 0.0);
}

Field positive_random_start(const Grid& g, const Mask& mask, uint64_t seed) {
  SplitMix64 rng(seed);
  Eigen::ArrayXd v = Eigen::ArrayXd::Zero(g.cells());
  for (int i = 0; i < g.cells(); ++i)
    if (mask[i]) v[i] = 0.1 + 0.9 * rng.uniform();
  return make_field(g, mask, std::move(v));
}

void fix_sign(Field& u) {
  if (u.values.sum() < 0.0) u.values = -u.values;
}

}  // namespace

EigenResult solve_lambda1(const EnergyContext& ctx, const Mask& mask,
                          const SolverParams& params) {
  require(mask.count() > 0, Errc::empty_mask, "mask has no cells");
  return solve_lambda1(ctx, mask, params,
                       positive_random_start(ctx.grid, mask, params.seed));
}

EigenResult solve_lambda1(const EnergyContext& ctx, const Mask& mask,
                          const SolverParams& params, const Field& init) {
  require(mask.count() > 0, Errc::empty_mask, "mask has no cells");
  require(init.grid.same_layout(ctx.grid), Errc::grid_mismatch, "init grid mismatch");
  const double hN = ctx.grid.cell_volume();

  Field u = normalize(init, ctx.p);
  double lam = rayleigh(ctx, u);
  Field lu = apply_operator(ctx, u);
  Eigen::ArrayXd grad = rayleigh_gradient(ctx, u, lam, lu);

  double tau = params.step0;
  double last_rel_change = 1.0;
  Eigen::ArrayXd prev_u = u.values, prev_grad = grad;
  bool have_history = false;

  EigenResult res;
  int it = 0;
  bool converged = false;
  int stagnant = 0;
  for (; it < params.max_iter; ++it) {
    // manifold-projected gradient descent: step against the Rayleigh
    // gradient p (L u - lambda |u|^{p-2} u), retract by normalization
    const double m = dot_h(grad, grad, hN);
    if (m <= 0.0) {
      converged = true;  // exact critical point
      break;
    }

    // Barzilai-Borwein trial step, clamped; else grow the accepted step
    double trial = tau * 2.0;
    if (have_history) {
      const Eigen::ArrayXd s = u.values - prev_u;
      const Eigen::ArrayXd y = grad - prev_grad;
      const double sy = dot_h(s, y, hN);
      if (sy > 0.0) trial = std::clamp(dot_h(s, s, hN) / sy, 1e-13, 1e13);
    }

    prev_u = u.values;
    prev_grad = grad;

    bool accepted = false;
    double lam_new = lam;
    Field u_new = u;
    for (int bt = 0; bt < 80; ++bt) {
      Field cand = u;
      cand.values = mask.select(u.values - trial * grad, 0.0);
      const double nrm = lp_norm(cand, ctx.p);
      if (nrm > 0.0) {
        cand.values /= nrm;
        const double cand_lam = rayleigh(ctx, cand);
        if (cand_lam <= lam - params.armijo * trial * m) {
          accepted = true;
          lam_new = cand_lam;
          u_new = std::move(cand);
          break;
        }
      }
      trial *= params.shrink;
    }

    if (!accepted) {
      converged = last_rel_change < params.tol;
      break;
    }

    require(lam_new <= lam * (1.0 + 1e-14) + 1e-300, Errc::internal,
            "Rayleigh descent lost monotonicity");

    tau = trial;
    last_rel_change = std::abs(lam - lam_new) / std::max(lam_new, 1e-300);
    u = std::move(u_new);
    lam = lam_new;
    lu = apply_operator(ctx, u);
    grad = rayleigh_gradient(ctx, u, lam, lu);
    have_history = true;

    stagnant = last_rel_change < params.tol ? stagnant + 1 : 0;
    if (it >= 4 && stagnant >= 3) {
      converged = true;
      ++it;
      break;
    }
  }

  require(lam > 0.0, Errc::internal, "first eigenvalue must be positive");

  // residual refinement; descent alone stalls at the fp floor of the
  // Rayleigh value comparisons
  EigenResult refined = refine_eigenpair(ctx, u);
  if (refined.residual <= residual(ctx, u, lam)) {
    u = refined.eigenfunction;
    lam = refined.lambda;
  }

  fix_sign(u);
  res.lambda = lam;
  res.eigenfunction = u;
  res.residual = residual(ctx, u, lam);
  res.iterations = it;
  res.converged = converged;
  return res;
}

EigenResult refine_eigenpair(const EnergyContext& ctx, const Field& candidate,
                             double target_rel, int max_rounds,
                             const Field* extra_dir) {
  const double hN = ctx.grid.cell_volume();
  const double p = ctx.p;

  Field v = normalize(candidate, p);
  double lam = rayleigh(ctx, v);

  auto residual_field = [&](const Field& w, double l) {
    Field lw = apply_operator(ctx, w);
    Eigen::ArrayXd r = lw.values - l * phi_p(w.values, p);
    return Eigen::ArrayXd(w.mask.select(r, 0.0));
  };
  auto retract = [&](const Eigen::ArrayXd& vals) {
    Field f = v;
    f.values = v.mask.select(vals, 0.0);
    const double nrm = lp_norm(f, p);
    if (nrm > 0.0) f.values /= nrm;
    return f;
  };
  auto phi_at = [&](const Field& w, double* lam_out, Eigen::ArrayXd* r_out) {
    const double l = rayleigh(ctx, w);
    Eigen::ArrayXd rr = residual_field(w, l);
    const double f = 0.5 * dot_h(rr, rr, hN);
    *lam_out = l;
    *r_out = std::move(rr);
    return f;
  };
  // derivative of w -> L w - R(w) |w|^{p-2} w at v
  auto dr_apply = [&](const Eigen::ArrayXd& w, const Eigen::ArrayXd& r) {
    Field wf = v;
    wf.values = w;
    Eigen::ArrayXd out = jacobian_apply(ctx, v, wf).values;
    if (p == 2.0) {
      out -= lam * w;
      out -= (2.0 * dot_h(r, w, hN)) * v.values;
    } else {
      Eigen::ArrayXd pv = v.mask.select(phi_p(v.values, p), 0.0);
      for (int i = 0; i < v.values.size(); ++i) {
        const double a = std::abs(v.values[i]);
        out[i] -= lam * (p - 1.0) * (a == 0.0 ? 0.0 : std::pow(a, p - 2.0)) * w[i];
      }
      out -= (p * dot_h(r, w, hN)) * pv;
    }
    return Eigen::ArrayXd(v.mask.select(out, 0.0));
  };

  Eigen::ArrayXd r = residual_field(v, lam);
  double phi_val = 0.5 * dot_h(r, r, hN);
  int rounds = 0;
  for (; rounds < max_rounds; ++rounds) {
    if (std::sqrt(2.0 * phi_val) <= target_rel * std::max(lam, 1.0)) break;

    // parabolic line minimization of the merit along the extra ray first;
    // the least-squares model is weakest along that near-flat direction
    if (extra_dir) {
      Eigen::ArrayXd e = v.mask.select(extra_dir->values, 0.0);
      const double en = std::sqrt(dot_h(e, e, hN));
      if (en > 0.0) {
        e /= en;
        double ldelta = 1e-3;
        for (int ls = 0; ls < 8; ++ls) {
          double la, lb, lc;
          Eigen::ArrayXd ra, rb, rc;
          const double fp_ = phi_at(retract(v.values + ldelta * e), &la, &ra);
          const double fm_ = phi_at(retract(v.values - ldelta * e), &lb, &rb);
          const double den = fp_ - 2.0 * phi_val + fm_;
          if (!(den > 0.0)) {
            ldelta *= 0.25;
            if (ldelta < 1e-9) break;
            continue;
          }
          double theta = 0.5 * ldelta * (fm_ - fp_) / den;
          theta = std::clamp(theta, -8.0 * ldelta, 8.0 * ldelta);
          Field cand = retract(v.values + theta * e);
          const double fc = phi_at(cand, &lc, &rc);
          if (fc < phi_val) {
            v = std::move(cand);
            lam = lc;
            r = std::move(rc);
            phi_val = fc;
            if (std::abs(theta) < 1e-14) break;
            ldelta = std::clamp(2.0 * std::abs(theta), 1e-7, 1e-2);
          } else {
            ldelta *= 0.25;
            if (ldelta < 1e-9) break;
          }
        }
      }
    }

    const double rn = std::sqrt(dot_h(r, r, hN));
    if (rn <= 0.0) break;

    std::vector<Eigen::ArrayXd> dirs;
    if (extra_dir) {
      Eigen::ArrayXd e = v.mask.select(extra_dir->values, 0.0);
      const double en = std::sqrt(dot_h(e, e, hN));
      if (en > 0.0) dirs.push_back(e / en);
    }
    Eigen::ArrayXd next = r / rn;
    for (int lvl = 0; lvl < 3; ++lvl) {
      Eigen::ArrayXd d = next;
      for (const auto& prev : dirs) d -= dot_h(d, prev, hN) * prev;
      const double nn = std::sqrt(dot_h(d, d, hN));
      if (nn <= 1e-10) break;
      d /= nn;
      dirs.push_back(d);
      if (lvl < 2) next = dr_apply(d, r);
    }
    if (dirs.empty()) break;

    const int k = static_cast<int>(dirs.size());
    Eigen::MatrixXd G(v.values.size(), k);
    for (int j = 0; j < k; ++j) G.col(j) = dr_apply(dirs[j], r).matrix();
    Eigen::MatrixXd A = G.transpose() * G * hN;
    Eigen::VectorXd b(k);
    for (int j = 0; j < k; ++j) b(j) = -dot_h(G.col(j).array(), r, hN);
    Eigen::VectorXd c = A.ldlt().solve(b);
    if (!c.allFinite()) break;

    Eigen::ArrayXd step = Eigen::ArrayXd::Zero(v.values.size());
    for (int j = 0; j < k; ++j) step += c(j) * dirs[j];

    bool moved = false;
    double scale = 1.0;
    for (int bt = 0; bt < 25; ++bt) {
      Field cand = retract(v.values + scale * step);
      double cl;
      Eigen::ArrayXd rc;
      const double fc = phi_at(cand, &cl, &rc);
      if (fc < phi_val) {
        v = std::move(cand);
        lam = cl;
        r = std::move(rc);
        phi_val = fc;
        moved = true;
        break;
      }
      scale *= 0.5;
    }
    if (!moved) break;
  }

  EigenResult res;
  res.eigenfunction = normalize(v, p);
  res.lambda = rayleigh(ctx, res.eigenfunction);
  res.residual = residual(ctx, res.eigenfunction, res.lambda);
  res.iterations = rounds;
  res.converged = res.residual <= target_rel * 100.0 * std::max(res.lambda, 1.0);
  return res;
}

DenseOracle dense_oracle_p2(const EnergyContext& ctx, const Mask& mask) {
  require(ctx.p == 2.0, Errc::invalid_spec, "dense oracle requires p = 2");
  const int m = static_cast<int>(mask.count());
  require(m > 0, Errc::empty_mask, "mask has no cells");
  require(m <= 4000, Errc::too_large, "mask too large for the dense oracle");

  const Grid& g = ctx.grid;
  const double hN = g.cell_volume();
  std::vector<int> cells;
  cells.reserve(m);
  Eigen::ArrayXi map = Eigen::ArrayXi::Constant(g.cells(), -1);
  for (int i = 0; i < g.cells(); ++i)
    if (mask[i]) {
      map[i] = static_cast<int>(cells.size());
      cells.push_back(i);
    }

  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, m);
  const double inv_h2 = 1.0 / (g.h * g.h);

  for (int k = 0; k < m; ++k) {
    const int id = cells[k];
    const int ix = g.ix(id), iy = g.iy(id);
    A(k, k) += 2.0 * g.dim * inv_h2;
    auto axis_neighbor = [&](int jx, int jy) {
      if (jx < 0 || jx >= g.n || jy < 0 || (g.dim == 2 && jy >= g.n)) return;
      const int j = map[g.index(jx, jy)];
      if (j >= 0) A(k, j) -= inv_h2;
    };
    axis_neighbor(ix - 1, iy);
    axis_neighbor(ix + 1, iy);
    if (g.dim == 2) {
      axis_neighbor(ix, iy - 1);
      axis_neighbor(ix, iy + 1);
    }

    for (const auto& o : ctx.half_stencil) {
      for (int sgn : {+1, -1}) {
        const int jx = ix + sgn * o.dx;
        const int jy = iy + sgn * o.dy;
        if (jx < 0 || jx >= g.n || jy < 0 || (g.dim == 2 && jy >= g.n)) continue;
        const int j = g.index(jx, jy);
        A(k, k) += 2.0 * o.w / hN;  // diagonal counts every in-grid neighbor
        if (map[j] >= 0) A(k, map[j]) -= 2.0 * o.w / hN;
      }
    }
  }

  const double defect = (A - A.transpose()).cwiseAbs().maxCoeff();
  const double scale = A.cwiseAbs().maxCoeff();
  require(defect <= 1e-12 * std::max(scale, 1.0), Errc::not_symmetric,
          "assembled pairing matrix is not symmetric");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
  require(es.info() == Eigen::Success, Errc::internal, "dense eigensolver failed");

  DenseOracle out;
  out.symmetry_defect = defect;
  out.lambda1 = es.eigenvalues()(0);
  out.lambda2 = m > 1 ? es.eigenvalues()(1) : es.eigenvalues()(0);

  auto to_field = [&](int col) {
    Eigen::ArrayXd v = Eigen::ArrayXd::Zero(g.cells());
    const Eigen::VectorXd vec = es.eigenvectors().col(col);
    const double scale_v = 1.0 / std::sqrt(hN);
    int arg = 0;
    vec.cwiseAbs().maxCoeff(&arg);
    const double sgn = vec(arg) >= 0.0 ? 1.0 : -1.0;
    for (int k = 0; k < m; ++k) v[cells[k]] = sgn * vec(k) * scale_v;
    return make_field(g, mask, std::move(v));
  };
  out.phi1 = to_field(0);
  out.phi2 = to_field(m > 1 ? 1 : 0);
  if (out.phi1.values.sum() < 0.0) out.phi1.values = -out.phi1.values;
  return out;
}

SimplicityReport check_simplicity(const EnergyContext& ctx, const Mask& mask,
                                  const SolverParams& params, int trials) {
  require(trials >= 1, Errc::invalid_spec, "need at least one trial");
  SimplicityReport rep;
  rep.connected_domain = connected(ctx.grid, mask);

  std::vector<Field> funcs;
  for (int t = 0; t < trials; ++t) {
    SolverParams pt = params;
    pt.seed = params.seed + 1000003ULL * static_cast<uint64_t>(t);
    EigenResult r = solve_lambda1(ctx, mask, pt);
    require(r.converged, Errc::not_converged, "lambda1 solve did not converge");
    rep.lambdas.push_back(r.lambda);
    funcs.push_back(std::move(r.eigenfunction));
  }

  const double l0 = rep.lambdas.front();
  for (double l : rep.lambdas)
    rep.lambda_spread = std::max(rep.lambda_spread, std::abs(l - l0) / l0);

  rep.min_after_sign_fix = 0.0;
  for (auto& f : funcs) {
    if (f.values.sum() < 0.0) f.values = -f.values;
    rep.min_after_sign_fix = std::min(rep.min_after_sign_fix, f.values.minCoeff());
  }
  for (size_t t = 1; t < funcs.size(); ++t) {
    Field dplus = funcs[t], dminus = funcs[t];
    dplus.values -= funcs[0].values;
    dminus.values += funcs[0].values;
    const double d = std::min(lp_norm(dplus, ctx.p), lp_norm(dminus, ctx.p));
    rep.eigenfunction_spread = std::max(rep.eigenfunction_spread, d);
  }

  rep.lambdas_agree = rep.lambda_spread <= 10.0 * params.tol;
  rep.eigenfunctions_agree = rep.eigenfunction_spread <= 1e-4;
  rep.sign_constant = rep.min_after_sign_fix >= -1e-8;
  return rep;
}

MonotonicityReport check_domain_monotonicity(const DomainSpec& inner,
                                             const DomainSpec& outer, int resolution,
                                             const Kernel& kernel, double p,
                                             const SolverParams& params) {
  Domain dom = build_domain(outer, resolution, kernel.radius);
  require(connected(dom.grid, dom.mask), Errc::invalid_spec,
          "outer domain must be connected");
  Mask inner_mask = mask_on_grid(inner, dom.grid);

  const bool subset = ((inner_mask && !dom.mask).count() == 0);
  require(subset && inner_mask.count() < dom.mask.count(), Errc::not_nested,
          "inner mask must be strictly nested in the outer mask");

  EnergyContext ctx = make_context(dom.grid, kernel, p);
  EigenResult ri = solve_lambda1(ctx, inner_mask, params);
  EigenResult ro = solve_lambda1(ctx, dom.mask, params);
  require(ri.converged && ro.converged, Errc::not_converged,
          "lambda1 solve did not converge");

  MonotonicityReport rep;
  rep.lambda_inner = ri.lambda;
  rep.lambda_outer = ro.lambda;
  rep.margin = ri.lambda - ro.lambda;
  rep.holds = rep.margin > params.tol * ro.lambda;
  return rep;
}

}  // namespace mixlap
