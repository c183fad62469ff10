#include "mixlap/second_eigen.hpp"

#include <algorithm>
#include <cmath>

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

Eigen::ArrayXd rayleigh_gradient(const EnergyContext& ctx, const Field& u,
                                 double lambda) {
  const Field lu = apply_operator(ctx, u);
  Eigen::ArrayXd g = ctx.p * (lu.values - lambda * phi_p(u.values, ctx.p));
  return u.mask.select(g, 0.0);
}

int argmax_lowest_index(const std::vector<double>& vals) {
  double best = vals[0];
  for (double v : vals) best = std::max(best, v);
  for (size_t i = 0; i < vals.size(); ++i)
    if (vals[i] >= best - 1e-14 * std::abs(best)) return static_cast<int>(i);
  return 0;
}

}  // namespace

PathState initial_path(const Field& phi1, const Field& probe, int K, double p) {
  require(K >= 9 && K % 2 == 1, Errc::invalid_spec, "K must be odd and >= 9");
  require(probe.grid.same_layout(phi1.grid), Errc::grid_mismatch,
          "probe grid mismatch");

  const Field probe_n = normalize(probe, p);
  {
    Field dp = probe_n, dm = probe_n;
    dp.values -= phi1.values;
    dm.values += phi1.values;
    const double dist = std::min(lp_norm(dp, p), lp_norm(dm, p));
    require(dist > 1e-3, Errc::degenerate_probe,
            "probe is too close to the span of phi1");
  }

  PathState path;
  path.nodes.reserve(K);
  for (int j = 0; j < K; ++j) {
    if (j == 0) {
      Field e = phi1;
      e.values = -e.values;
      path.nodes.push_back(std::move(e));
      continue;
    }
    if (j == K - 1) {
      path.nodes.push_back(phi1);
      continue;
    }
    const double t = -1.0 + 2.0 * j / (K - 1);
    Field node = phi1;
    node.values = t * phi1.values + (1.0 - std::abs(t)) * probe_n.values;
    const double nrm = lp_norm(node, p);
    require(nrm > 1e-12, Errc::degenerate_probe,
            "connecting path vanishes at a sampled t");
    node.values /= nrm;
    path.nodes.push_back(std::move(node));
  }
  return path;
}

double max_rayleigh(const EnergyContext& ctx, const PathState& path) {
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& node : path.nodes) best = std::max(best, rayleigh(ctx, node));
  return best;
}

EigenResult polish_eigenpair(const EnergyContext& ctx, const Field& candidate,
                             const MinimaxOptions& opts, const Field* tangent_hint) {
  const double hN = ctx.grid.cell_volume();
  const double p = ctx.p;

  Field v = normalize(candidate, p);
  double lam = rayleigh(ctx, v);

  auto residual_field = [&](const Field& w, double l) {
    Field lw = apply_operator(ctx, w);
    Eigen::ArrayXd r = lw.values - l * phi_p(w.values, p);
    return Eigen::ArrayXd(w.mask.select(r, 0.0));
  };

  // The saddle is a maximum along the first-eigenfunction direction and a
  // minimum transverse to it. Alternate three moves: an exact 1D line
  // maximization along that ray, projected descent on the slice orthogonal
  // to it, and a subspace least-squares refinement of the residual. The line
  // search handles the slow unstable mode, the slice descent the stiff
  // stable ones, and the refinement the near-degenerate couplings that
  // Rayleigh-value comparisons cannot resolve past fp noise.
  Eigen::ArrayXd that_raw;
  if (tangent_hint) {
    that_raw = v.mask.select(tangent_hint->values, 0.0);
  } else {
    that_raw = residual_field(v, lam);
  }
  Eigen::ArrayXd that = that_raw;
  auto refresh_tangent = [&](const Field& at) {
    Eigen::ArrayXd nu = phi_p(at.values, p);
    nu = at.mask.select(nu, 0.0);
    const double nn = dot_h(nu, nu, hN);
    that = that_raw;
    if (nn > 0.0) that -= (dot_h(that, nu, hN) / nn) * nu;
    const double tn = std::sqrt(dot_h(that, that, hN));
    if (tn > 0.0) that /= tn;
  };
  refresh_tangent(v);

  auto r_of = [&](const Field& w) { return rayleigh(ctx, w); };
  auto retract = [&](const Eigen::ArrayXd& vals) {
    Field f = v;
    f.values = v.mask.select(vals, 0.0);
    const double nrm = lp_norm(f, p);
    if (nrm > 0.0) f.values /= nrm;
    return f;
  };

  int it = 0;
  Field best = v;
  double best_resid;
  {
    const Eigen::ArrayXd r0 = residual_field(v, lam);
    best_resid = std::sqrt(dot_h(r0, r0, hN));
  }
  const double target = opts.polish_target_rel;

  for (int rep = 0; rep < 8 && it < opts.polish_max_iter; ++rep) {
    // localization pass: line-max along the ray plus slice descent
    int outer_stalls = 0;
    double prev_pass_resid = best_resid;
    for (int outer = 0; outer < 10 && it < opts.polish_max_iter; ++outer) {
      refresh_tangent(v);
      // (a) safeguarded parabolic maximization of R along the unstable ray;
      // the probe scale restarts each pass so the curvature signal clears
      // the fp noise in R
      double delta = 1e-3;
      for (int ls = 0; ls < 12; ++ls) {
        const double r0 = lam;
        const double rp = r_of(retract(v.values + delta * that));
        const double rm = r_of(retract(v.values - delta * that));
        const double denom = rp - 2.0 * r0 + rm;
        if (!(denom < 0.0)) {
          delta *= 0.25;
          if (delta < 1e-7) break;
          continue;
        }
        double theta = 0.5 * delta * (rm - rp) / denom;
        theta = std::clamp(theta, -8.0 * delta, 8.0 * delta);
        Field cand = retract(v.values + theta * that);
        const double rc = r_of(cand);
        if (rc >= r0) {
          v = std::move(cand);
          lam = rc;
          if (std::abs(theta) < 1e-13) break;
          delta = std::clamp(2.0 * std::abs(theta), 1e-5, 0.25);
        } else {
          delta *= 0.25;
          if (delta < 1e-7) break;
        }
      }

      // (b) BB/Armijo descent of R on the slice {<v, that> = const}; the hard
      // constraint keeps the iterate from sliding down the unstable
      // direction into the first eigenfunction
      const double target_res = 0.25 * target * std::max(lam, 1.0) * p;
      const double c0 = dot_h(v.values, that, hN);
      auto retract_slice = [&](const Eigen::ArrayXd& vals) {
        Field f = retract(vals);
        for (int round = 0; round < 2; ++round) {
          f.values += (c0 - dot_h(f.values, that, hN)) * that;
          f = retract(f.values);
        }
        return f;
      };
      double tau = 1.0;
      Eigen::ArrayXd prev_v, prev_g;
      bool have_history = false;
      for (int inner = 0; inner < 600 && it < opts.polish_max_iter; ++inner, ++it) {
        Eigen::ArrayXd r = residual_field(v, lam);
        Eigen::ArrayXd grad = p * r;
        grad -= dot_h(grad, that, hN) * that;
        const double m = dot_h(grad, grad, hN);
        if (m <= target_res * target_res) break;

        double trial = tau * 2.0;
        if (have_history) {
          const Eigen::ArrayXd s = v.values - prev_v;
          const Eigen::ArrayXd y = grad - prev_g;
          const double sy = dot_h(s, y, hN);
          if (sy > 0.0) trial = std::clamp(dot_h(s, s, hN) / sy, 1e-15, 1e15);
        }
        prev_v = v.values;
        prev_g = grad;

        bool accepted = false;
        for (int bt = 0; bt < 60; ++bt) {
          Field cand = retract_slice(v.values - trial * grad);
          const double rc = r_of(cand);
          if (rc <= lam - 1e-4 * trial * m) {
            v = std::move(cand);
            lam = rc;
            accepted = true;
            break;
          }
          trial *= 0.5;
        }
        if (!accepted) break;
        tau = trial;
        have_history = true;
      }

      const Eigen::ArrayXd r = residual_field(v, lam);
      const double resid = std::sqrt(dot_h(r, r, hN));
      if (resid < best_resid) {
        if (resid < best_resid * (1.0 - 1e-2)) outer_stalls = 0;
        best = v;
        best_resid = resid;
      } else {
        ++outer_stalls;
      }
      if (best_resid <= target * std::max(lam, 1.0)) break;
      if (outer_stalls >= 3) break;
    }
    if (best_resid <= target * std::max(lam, 1.0)) break;

    // refinement pass: subspace least-squares batches alternating with a
    // nonmonotone BB descent of the squared-residual merit on the slice.
    // Rayleigh-value comparisons (stage above) bottom out at the fp noise
    // of R; the merit keeps resolving decreases far below that.
    {
      refresh_tangent(v);
      Field ray = v;
      ray.values = that;
      EigenResult refined = refine_eigenpair(ctx, v, target, 8, &ray);
      it += refined.iterations;
      v = refined.eigenfunction;
      lam = refined.lambda;
      if (refined.residual < best_resid) {
        best = v;
        best_resid = refined.residual;
      }
      if (best_resid <= target * std::max(lam, 1.0)) break;

      Eigen::ArrayXd r = residual_field(v, lam);
      double phi_val = 0.5 * dot_h(r, r, hN);
      auto phi_at = [&](const Field& w, double* lam_out, Eigen::ArrayXd* r_out) {
        const double l = rayleigh(ctx, w);
        Eigen::ArrayXd rr = residual_field(w, l);
        const double f = 0.5 * dot_h(rr, rr, hN);
        *lam_out = l;
        *r_out = std::move(rr);
        return f;
      };
      const double c0 = dot_h(v.values, that, hN);
      auto retract_slice = [&](const Eigen::ArrayXd& vals) {
        Field f = retract(vals);
        for (int round = 0; round < 2; ++round) {
          f.values += (c0 - dot_h(f.values, that, hN)) * that;
          f = retract(f.values);
        }
        return f;
      };
      std::vector<double> recent = {phi_val};
      double tau = 1.0;
      Eigen::ArrayXd prev_v, prev_g;
      bool have_history = false;
      for (int inner = 0; inner < 400 && it < opts.polish_max_iter; ++inner, ++it) {
        Field rf = v;
        rf.values = r;
        Eigen::ArrayXd grad = jacobian_apply(ctx, v, rf).values;
        if (p == 2.0) {
          grad -= lam * r;
          grad -= (2.0 * dot_h(r, v.values, hN)) * v.values;
        } else {
          Eigen::ArrayXd pv_ = v.mask.select(phi_p(v.values, p), 0.0);
          for (int i = 0; i < v.values.size(); ++i) {
            const double a = std::abs(v.values[i]);
            grad[i] -= lam * (p - 1.0) *
                       (a == 0.0 ? 0.0 : std::pow(a, p - 2.0)) * r[i];
          }
          grad -= (p * dot_h(r, pv_, hN)) * r;
        }
        grad = v.mask.select(grad, 0.0);
        grad -= dot_h(grad, that, hN) * that;
        const double m = dot_h(grad, grad, hN);
        if (m <= 0.0) break;

        double trial = tau * 2.0;
        if (have_history) {
          const Eigen::ArrayXd s = v.values - prev_v;
          const Eigen::ArrayXd y = grad - prev_g;
          const double sy = dot_h(s, y, hN);
          if (sy > 0.0) trial = std::clamp(dot_h(s, s, hN) / sy, 1e-15, 1e15);
        }
        prev_v = v.values;
        prev_g = grad;

        const double phi_ref = *std::max_element(recent.begin(), recent.end());
        bool accepted = false;
        for (int bt = 0; bt < 60; ++bt) {
          Field cand = retract_slice(v.values - trial * grad);
          double cl;
          Eigen::ArrayXd rc;
          const double phic = phi_at(cand, &cl, &rc);
          if (phic <= phi_ref - 1e-4 * trial * m) {
            v = std::move(cand);
            lam = cl;
            r = std::move(rc);
            phi_val = phic;
            accepted = true;
            break;
          }
          trial *= 0.5;
        }
        if (!accepted) break;
        tau = trial;
        have_history = true;
        recent.push_back(phi_val);
        if (recent.size() > 10) recent.erase(recent.begin());
        const double resid = std::sqrt(2.0 * phi_val);
        if (resid < best_resid) {
          best = v;
          best_resid = resid;
        }
        if (best_resid <= target * std::max(lam, 1.0)) break;
      }
    }
    if (best_resid <= target * std::max(lam, 1.0)) break;
    if (best_resid >= prev_pass_resid * (1.0 - 1e-3)) break;  // no more progress
  }

  EigenResult res;
  res.eigenfunction = normalize(best, p);
  res.lambda = rayleigh(ctx, res.eigenfunction);
  res.residual = residual(ctx, res.eigenfunction, res.lambda);
  res.iterations = it;
  res.converged = res.residual <= 1e-7 * std::max(res.lambda, 1.0);
  return res;
}

EigenResult minimax_lambda2(const EnergyContext& ctx, const SolverParams& params,
                            PathState path, const MinimaxOptions& opts,
                            MinimaxTrace* trace) {
  const int K = path.size();
  require(K >= 9, Errc::invalid_spec, "path needs at least 9 nodes");
  const double hN = ctx.grid.cell_volume();
  const double p = ctx.p;

  std::vector<double> rval(K);
  for (int k = 0; k < K; ++k) rval[k] = rayleigh(ctx, path.nodes[k]);
  std::vector<double> tau(K, params.step0);

  std::vector<double> max_history;
  double path_max = rval[argmax_lowest_index(rval)];
  int sweeps = 0;
  bool stalled = false;

  for (; sweeps < opts.max_sweeps && !stalled; ++sweeps) {
    // (a) one backtracked perpendicular descent step per interior node
    for (int k = 1; k < K - 1; ++k) {
      Field& node = path.nodes[k];
      Eigen::ArrayXd grad = rayleigh_gradient(ctx, node, rval[k]);
      Eigen::ArrayXd t = path.nodes[k + 1].values - path.nodes[k - 1].values;
      const double tt = dot_h(t, t, hN);
      Eigen::ArrayXd d = -grad;
      if (tt > 0.0) d += (dot_h(grad, t, hN) / tt) * t;
      const double m = -dot_h(grad, d, hN);
      // skip nodes whose perpendicular gradient is below eigen scale;
      // backtracking could never verify a decrease against fp noise
      if (!(m > 1e-18 * rval[k] * rval[k])) continue;

      double trial = std::min(tau[k] * 2.0, 1e9);
      bool moved = false;
      for (int bt = 0; bt < 40; ++bt) {
        Field cand = node;
        cand.values = node.mask.select(node.values + trial * d, 0.0);
        const double nrm = lp_norm(cand, p);
        if (nrm > 0.0) {
          cand.values /= nrm;
          const double rc = rayleigh(ctx, cand);
          if (rc <= rval[k] - params.armijo * trial * m) {
            node = std::move(cand);
            rval[k] = rc;
            tau[k] = trial;
            moved = true;
            break;
          }
        }
        trial *= params.shrink;
      }
      if (!moved) tau[k] = std::max(tau[k] * 0.25, 1e-14);
    }

    const int arg = argmax_lowest_index(rval);
    path_max = rval[arg];
    max_history.push_back(path_max);
    if (trace) {
      trace->path_max.push_back(path_max);
      trace->argmax.push_back(arg);
    }

    if (sweeps + 1 >= opts.stall_window) {
      const double old = max_history[sweeps + 1 - opts.stall_window];
      const double stall_tol = std::max(opts.path_tol, params.tol);
      if (std::abs(old - path_max) < stall_tol * std::abs(path_max)) stalled = true;
    }

    // (b) equal-arc-length reparametrization in the L2 metric, capped so no
    // interpolated node exceeds the current path maximum
    std::vector<double> arc(K, 0.0);
    for (int k = 1; k < K; ++k) {
      Eigen::ArrayXd diff = path.nodes[k].values - path.nodes[k - 1].values;
      const double len = std::sqrt(dot_h(diff, diff, hN));
      require(len > 1e-12, Errc::collapsed_path, "adjacent path nodes coincide");
      arc[k] = arc[k - 1] + len;
    }
    const double total = arc[K - 1];
    std::vector<Field> fresh;
    fresh.reserve(K);
    std::vector<double> fresh_r(K);
    fresh.push_back(path.nodes[0]);
    fresh_r[0] = rval[0];
    for (int j = 1; j < K - 1; ++j) {
      const double target = total * j / (K - 1);
      int seg = 1;
      while (seg < K - 1 && arc[seg] < target) ++seg;
      const double w1 = (arc[seg] - target) / (arc[seg] - arc[seg - 1]);
      Field node = path.nodes[seg];
      node.values = w1 * path.nodes[seg - 1].values +
                    (1.0 - w1) * path.nodes[seg].values;
      const double nrm = lp_norm(node, p);
      int nearest = (target - arc[seg - 1] <= arc[seg] - target) ? seg - 1 : seg;
      if (nrm > 1e-14) {
        node.values /= nrm;
        const double rn = rayleigh(ctx, node);
        if (rn <= path_max * (1.0 + 1e-15)) {
          fresh.push_back(std::move(node));
          fresh_r[j] = rn;
          continue;
        }
      }
      fresh.push_back(path.nodes[nearest]);  // cap: keep the nearest original
      fresh_r[j] = rval[nearest];
    }
    fresh.push_back(path.nodes[K - 1]);
    fresh_r[K - 1] = rval[K - 1];
    path.nodes = std::move(fresh);
    rval = std::move(fresh_r);
  }

  const int arg = argmax_lowest_index(rval);
  if (trace) {
    trace->sweeps = sweeps;
    trace->final_path_max = rval[arg];
    trace->argmax_node = path.nodes[arg];
  }

  // the unstable direction at the saddle is the first-eigenfunction
  // direction, which the path endpoint carries exactly
  const Field& tangent = path.nodes[K - 1];
  EigenResult polished = polish_eigenpair(ctx, path.nodes[arg], opts, &tangent);
  // guard against the polisher drifting out of the saddle basin
  if (polished.lambda < 0.5 * rval[arg]) {
    EigenResult raw;
    raw.lambda = rval[arg];
    raw.eigenfunction = path.nodes[arg];
    raw.residual = residual(ctx, path.nodes[arg], rval[arg]);
    raw.iterations = sweeps;
    raw.converged = false;
    return raw;
  }
  polished.iterations = sweeps + polished.iterations;
  return polished;
}

SignPaths sign_component_paths(const Field& u, double p, int samples) {
  require(samples >= 2, Errc::invalid_spec, "need at least two samples");
  SignSplit s = split_signs(u);
  require(s.plus.mask.any() && s.minus.mask.any(), Errc::not_sign_changing,
          "field does not change sign");

  SignPaths out;
  const Mask& full = u.mask;
  auto push = [&](PathState& ps, Eigen::ArrayXd vals) {
    Field f = make_field(u.grid, full, std::move(vals));
    ps.nodes.push_back(normalize(f, p));
  };

  for (int j = 0; j < samples; ++j) {
    const double t = static_cast<double>(j) / (samples - 1);
    push(out.gamma1, s.plus.values - (1.0 - t) * s.minus.values);

    Eigen::ArrayXd mix(u.values.size());
    for (int i = 0; i < u.values.size(); ++i) {
      const double a = s.plus.values[i], b = s.minus.values[i];
      mix[i] = std::pow((1.0 - t) * std::pow(a, p) + t * std::pow(b, p), 1.0 / p);
    }
    push(out.gamma2, std::move(mix));

    push(out.gamma3, (1.0 - t) * s.plus.values - s.minus.values);
  }
  return out;
}

NodalReport nodal_analysis(const EnergyContext& ctx, const SolverParams& params,
                           const Field& u, double lambda) {
  const double resid = residual(ctx, u, lambda);
  require(resid < 1e-6, Errc::not_converged,
          "nodal analysis needs a converged eigenpair (residual < 1e-6)");
  SignSplit s = split_signs(u);
  require(s.plus.mask.any() && s.minus.mask.any(), Errc::not_sign_changing,
          "eigenfunction does not change sign");

  EigenResult rp = solve_lambda1(ctx, s.plus.mask, params);
  EigenResult rm = solve_lambda1(ctx, s.minus.mask, params);
  require(rp.converged && rm.converged, Errc::not_converged,
          "nodal-domain lambda1 solve did not converge");

  NodalReport rep;
  rep.lambda = lambda;
  rep.lambda1_plus = rp.lambda;
  rep.lambda1_minus = rm.lambda;
  rep.margin_plus = lambda - rp.lambda;
  rep.margin_minus = lambda - rm.lambda;
  rep.strict = rep.margin_plus > 0.0 && rep.margin_minus > 0.0;
  return rep;
}

double two_ball_upper_bound(const EnergyContext& ctx, const Mask& mask,
                            const SolverParams& params, int theta_samples) {
  require(theta_samples >= 4, Errc::invalid_spec, "need at least 4 angle samples");
  int ncomp = 0;
  Eigen::ArrayXi labels = component_labels(ctx.grid, mask, &ncomp);
  require(ncomp == 2, Errc::not_two_component, "domain must have exactly two components");

  Mask m1 = (labels == 0);
  Mask m2 = (labels == 1);
  EigenResult r1 = solve_lambda1(ctx, m1, params);
  EigenResult r2 = solve_lambda1(ctx, m2, params);
  require(r1.converged && r2.converged, Errc::not_converged,
          "component lambda1 solve did not converge");

  const double p = ctx.p;
  auto coef = [&](double t) {
    return t == 0.0 ? 0.0 : std::copysign(std::pow(std::abs(t), 2.0 / p), t);
  };

  double best = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < theta_samples; ++k) {
    const double ang = 2.0 * M_PI * k / theta_samples;
    double t1 = std::cos(ang), t2 = std::sin(ang);
    const double q = std::pow(std::pow(std::abs(t1), p) + std::pow(std::abs(t2), p),
                              1.0 / p);
    t1 /= q;
    t2 /= q;
    Field f = make_field(ctx.grid, mask,
                         coef(t1) * r1.eigenfunction.values -
                             coef(t2) * r2.eigenfunction.values);
    const double nrm = lp_norm(f, p);
    if (nrm <= 0.0) continue;
    f.values /= nrm;
    best = std::max(best, rayleigh(ctx, f));
  }
  return best;
}

}  // namespace mixlap
