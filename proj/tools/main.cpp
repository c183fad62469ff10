// mixlap command line: wires JSON configs to the solvers and experiments and
// emits machine-readable results (results.csv / results.json, field dumps,
// optional SVG charts).
//
// Exit codes: 0 success, 2 a checked inequality failed, 3 solver
// non-convergence, 4 config error. Errors are also printed as single-line
// JSON on stderr.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "mixlap/experiments.hpp"
#include "mixlap/inequalities.hpp"
#include "mixlap/io.hpp"
#include "mixlap/rearrange.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mixlap;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitAssertion = 2;
constexpr int kExitNotConverged = 3;
constexpr int kExitConfig = 4;

struct CommonOptions {
  std::string config_path;
  std::string out_dir = "out";
  std::string domain_json;
  std::string kernel_json;
  double p = -1.0;
  int resolution = -1;
  double tol = -1.0;
  int max_iter = -1;
  int64_t seed = -1;
  int workers = 1;
  int K = -1;
  bool dump_fields = false;
  bool svg = false;
  bool timings = false;
  bool dump_pairs = false;
};

struct RunSetup {
  json config;  // merged, echoed into results.json
  std::optional<DomainSpec> domain;
  std::vector<DomainSpec> domains;
  json kernel_spec = json::object({{"family", "local"}});
  double p = 2.0;
  int resolution = 100;
  SolverParams params;
  int K = 17;
  json experiment = json::object();
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config_path, "JSON config file");
  cmd->add_option("--out", o.out_dir, "output directory (default: out)");
  cmd->add_option("--domain", o.domain_json, "inline domain JSON");
  cmd->add_option("--kernel", o.kernel_json, "inline kernel JSON");
  cmd->add_option("--p", o.p, "exponent p (1 < p < inf)");
  cmd->add_option("-n,--resolution", o.resolution, "cells across the bounding box");
  cmd->add_option("--tol", o.tol, "solver tolerance");
  cmd->add_option("--max-iter", o.max_iter, "solver iteration cap");
  cmd->add_option("--seed", o.seed, "PRNG seed (splitmix64)");
  cmd->add_option("--workers", o.workers, "parallel workers for experiment rows");
  cmd->add_option("--K", o.K, "path nodes for the minimax solver (odd, >= 9)");
  cmd->add_flag("--dump-fields", o.dump_fields, "write field CSV dumps");
  cmd->add_flag("--svg", o.svg, "write an SVG chart where applicable");
  cmd->add_flag("--timings", o.timings,
                "write measured seconds into results.csv (breaks byte determinism)");
  cmd->add_flag("--dump-pairs", o.dump_pairs, "debug dump of the neighbor table");
}

json load_json_file(const std::string& path) {
  std::ifstream f(path);
  require(f.good(), Errc::config_error, "cannot open config '" + path + "'");
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    raise(Errc::config_error, std::string("malformed JSON: ") + e.what());
  }
  return j;
}

json parse_inline(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    raise(Errc::config_error, "malformed inline " + what + ": " + e.what());
  }
}

RunSetup build_setup(const CommonOptions& o) {
  RunSetup s;
  json cfg = json::object();
  if (!o.config_path.empty()) cfg = load_json_file(o.config_path);
  validate_keys(cfg,
                {"p", "kernel", "domain", "domains", "resolution", "solver",
                 "experiment", "output_dir", "dimension"},
                "config");

  if (cfg.contains("solver")) {
    validate_keys(cfg["solver"], {"tol", "max_iter", "seed", "step0"}, "solver");
    s.params.tol = cfg["solver"].value("tol", s.params.tol);
    s.params.max_iter = cfg["solver"].value("max_iter", s.params.max_iter);
    s.params.seed = cfg["solver"].value("seed", s.params.seed);
    s.params.step0 = cfg["solver"].value("step0", s.params.step0);
  }
  if (cfg.contains("experiment")) s.experiment = cfg["experiment"];
  if (cfg.contains("p")) s.p = cfg["p"].get<double>();
  if (cfg.contains("resolution")) s.resolution = cfg["resolution"].get<int>();
  if (cfg.contains("kernel")) s.kernel_spec = cfg["kernel"];
  if (cfg.contains("domain")) s.domain = domain_from_json(cfg["domain"]);
  if (cfg.contains("domains"))
    for (const auto& d : cfg["domains"]) s.domains.push_back(domain_from_json(d));

  // flags override config scalars
  if (!o.domain_json.empty()) s.domain = domain_from_json(parse_inline(o.domain_json, "domain"));
  if (!o.kernel_json.empty()) s.kernel_spec = parse_inline(o.kernel_json, "kernel");
  if (o.p > 0) s.p = o.p;
  if (o.resolution > 0) s.resolution = o.resolution;
  if (o.tol > 0) s.params.tol = o.tol;
  if (o.max_iter > 0) s.params.max_iter = o.max_iter;
  if (o.seed >= 0) s.params.seed = static_cast<uint64_t>(o.seed);
  if (o.K > 0) s.K = o.K;
  require(s.p > 1.0, Errc::config_error, "need p > 1");

  s.config = {{"p", s.p},
              {"resolution", s.resolution},
              {"kernel", s.kernel_spec},
              {"solver",
               {{"tol", s.params.tol},
                {"max_iter", s.params.max_iter},
                {"seed", s.params.seed},
                {"step0", s.params.step0}}}};
  if (s.domain) s.config["domain"] = domain_to_json(*s.domain);
  return s;
}

json row_to_json(const ExperimentRow& r) {
  json j = {{"experiment", r.experiment}, {"domain", r.domain}, {"p", r.p},
            {"kernel", r.kernel},         {"n", r.n},           {"seconds", r.seconds}};
  auto put = [&](const char* k, double v) {
    if (!std::isnan(v)) j[k] = v;
  };
  put("lambda1", r.lambda1);
  put("lambda2", r.lambda2);
  put("oracle1", r.oracle1);
  put("oracle2", r.oracle2);
  put("margin", r.margin);
  return j;
}

void write_outputs(const CommonOptions& o, const RunSetup& s,
                   const std::vector<ExperimentRow>& rows, json extra) {
  fs::create_directories(o.out_dir);
  std::ostringstream csv;
  write_results_csv(csv, rows, o.timings);
  write_text_file(o.out_dir + "/results.csv", csv.str());

  json out = {{"config", s.config}, {"rows", json::array()}};
  for (const auto& r : rows) out["rows"].push_back(row_to_json(r));
  for (auto it = extra.begin(); it != extra.end(); ++it) out[it.key()] = it.value();
  write_text_file(o.out_dir + "/results.json", out.dump(2) + "\n");
}

void dump_field(const CommonOptions& o, const std::string& name, const Field& f) {
  fs::create_directories(o.out_dir + "/fields");
  std::ostringstream os;
  dump_field_csv(os, f);
  write_text_file(o.out_dir + "/fields/" + name + ".csv", os.str());
}

struct Problem {
  Domain dom;
  EnergyContext ctx;
  std::string kernel_text;
};

Problem make_problem(const RunSetup& s, const CommonOptions& o) {
  require(s.domain.has_value(), Errc::config_error, "this command needs a domain");
  Problem pr;
  std::optional<Kernel> k = kernel_from_json(s.kernel_spec, s.domain->dim());
  const double kr = k ? k->radius : 0.0;
  pr.dom = build_domain(*s.domain, s.resolution, kr);
  pr.ctx = make_context(pr.dom.grid, k, s.p);
  pr.kernel_text = kernel_label(pr.ctx.kernel);
  if (o.dump_pairs) {
    fs::create_directories(o.out_dir);
    std::ostringstream os;
    dump_pairs_csv(os, pr.ctx);
    write_text_file(o.out_dir + "/pairs.csv", os.str());
  }
  return pr;
}

int cmd_eig1(const CommonOptions& o) {
  RunSetup s = build_setup(o);
  Problem pr = make_problem(s, o);
  EigenResult r = solve_lambda1(pr.ctx, pr.dom.mask, s.params);

  ExperimentRow row;
  row.experiment = "eig1";
  row.domain = s.domain->name();
  row.p = s.p;
  row.kernel = pr.kernel_text;
  row.n = s.resolution;
  row.lambda1 = r.lambda;
  json extra = {{"eig1", eigenresult_to_json(r)},
                {"measure", measure(pr.dom.grid, pr.dom.mask)}};
  write_outputs(o, s, {row}, extra);
  if (o.dump_fields) dump_field(o, "phi1", r.eigenfunction);
  return r.converged ? kExitOk : kExitNotConverged;
}

int cmd_eig2(const CommonOptions& o) {
  RunSetup s = build_setup(o);
  Problem pr = make_problem(s, o);

  EigenResult r1 = solve_lambda1(pr.ctx, pr.dom.mask, s.params);
  if (!r1.converged) return kExitNotConverged;

  Field probe = [&]() {
    Eigen::ArrayXd v = Eigen::ArrayXd::Zero(pr.dom.grid.cells());
    double cx = 0.0;
    int cnt = 0;
    for (int i = 0; i < pr.dom.grid.cells(); ++i)
      if (pr.dom.mask[i]) {
        cx += pr.dom.grid.x(i);
        ++cnt;
      }
    cx /= cnt;
    for (int i = 0; i < pr.dom.grid.cells(); ++i)
      if (pr.dom.mask[i])
        v[i] = r1.eigenfunction.values[i] * (pr.dom.grid.x(i) < cx ? -1.0 : 1.0);
    return make_field(pr.dom.grid, pr.dom.mask, std::move(v));
  }();

  MinimaxTrace trace;
  PathState path = initial_path(r1.eigenfunction, probe, s.K, s.p);
  EigenResult r2 = minimax_lambda2(pr.ctx, s.params, std::move(path), {}, &trace);

  ExperimentRow row;
  row.experiment = "eig2";
  row.domain = s.domain->name();
  row.p = s.p;
  row.kernel = pr.kernel_text;
  row.n = s.resolution;
  row.lambda1 = r1.lambda;
  row.lambda2 = r2.lambda;
  row.margin = r2.lambda - r1.lambda;

  json extra = {{"eig1", eigenresult_to_json(r1)},
                {"eig2", eigenresult_to_json(r2)},
                {"sweeps", trace.sweeps},
                {"path_max", trace.final_path_max}};

  const bool is_connected = connected(pr.dom.grid, pr.dom.mask);
  bool ordered = true;
  if (is_connected) {
    ordered = row.margin > 10.0 * s.params.tol * r2.lambda;
    extra["ordering_ok"] = ordered;
    auto split = split_signs(r2.eigenfunction);
    if (split.plus.mask.any() && split.minus.mask.any() && r2.residual < 1e-6) {
      NodalReport nr = nodal_analysis(pr.ctx, s.params, r2.eigenfunction, r2.lambda);
      extra["nodal"] = {{"lambda1_plus", nr.lambda1_plus},
                        {"lambda1_minus", nr.lambda1_minus},
                        {"margin_plus", nr.margin_plus},
                        {"margin_minus", nr.margin_minus},
                        {"strict", nr.strict}};
    }
  }

  write_outputs(o, s, {row}, extra);
  if (o.dump_fields) {
    dump_field(o, "phi1", r1.eigenfunction);
    dump_field(o, "phi2", r2.eigenfunction);
  }
  if (!r2.converged) return kExitNotConverged;
  return ordered ? kExitOk : kExitAssertion;
}

int cmd_oracle(const CommonOptions& o) {
  RunSetup s = build_setup(o);
  require(s.p == 2.0, Errc::config_error, "the dense oracle requires p = 2");
  Problem pr = make_problem(s, o);

  DenseOracle oracle = dense_oracle_p2(pr.ctx, pr.dom.mask);
  EigenResult r1 = solve_lambda1(pr.ctx, pr.dom.mask, s.params);
  if (!r1.converged) return kExitNotConverged;

  // deterministic sign-split probe; the path search stays independent of the
  // dense eigenvectors it is checked against
  Field probe = [&]() {
    Eigen::ArrayXd v = Eigen::ArrayXd::Zero(pr.dom.grid.cells());
    double cx = 0.0;
    int cnt = 0;
    for (int i = 0; i < pr.dom.grid.cells(); ++i)
      if (pr.dom.mask[i]) {
        cx += pr.dom.grid.x(i);
        ++cnt;
      }
    cx /= cnt;
    for (int i = 0; i < pr.dom.grid.cells(); ++i)
      if (pr.dom.mask[i])
        v[i] = r1.eigenfunction.values[i] * (pr.dom.grid.x(i) < cx ? -1.0 : 1.0);
    return make_field(pr.dom.grid, pr.dom.mask, std::move(v));
  }();
  PathState path = initial_path(r1.eigenfunction, probe, s.K, s.p);
  EigenResult r2 = minimax_lambda2(pr.ctx, s.params, std::move(path));
  if (!r2.converged) return kExitNotConverged;

  ExperimentRow row;
  row.experiment = "oracle";
  row.domain = s.domain->name();
  row.p = s.p;
  row.kernel = pr.kernel_text;
  row.n = s.resolution;
  row.lambda1 = r1.lambda;
  row.lambda2 = r2.lambda;
  row.oracle1 = oracle.lambda1;
  row.oracle2 = oracle.lambda2;
  const double rel1 = std::abs(r1.lambda - oracle.lambda1) / oracle.lambda1;
  const double rel2 = std::abs(r2.lambda - oracle.lambda2) / oracle.lambda2;
  row.margin = std::max(rel1, rel2);

  json extra = {{"rel_error_lambda1", rel1},
                {"rel_error_lambda2", rel2},
                {"symmetry_defect", oracle.symmetry_defect}};
  write_outputs(o, s, {row}, extra);
  if (o.dump_fields) {
    dump_field(o, "phi1_dense", oracle.phi1);
    dump_field(o, "phi2_dense", oracle.phi2);
  }
  return (rel1 < 1e-6 && rel2 < 1e-5) ? kExitOk : kExitAssertion;
}

int cmd_faber_krahn(const CommonOptions& o) {
  RunSetup s = build_setup(o);
  validate_keys(s.experiment, {"id", "richardson", "measure", "gap"}, "experiment");
  const bool richardson = s.experiment.value("richardson", true);

  std::vector<DomainSpec> shapes = s.domains;
  std::optional<Kernel> k;
  if (shapes.empty()) {
    // default family: 2D unless the config asked for dimension 1
    const int dim = s.config.value("dimension", 2);
    shapes = dim == 1 ? fk_family_1d(s.experiment.value("gap", 0.6), s.resolution)
                      : fk_family_2d(s.experiment.value("measure", M_PI), s.resolution);
  }
  k = kernel_from_json(s.kernel_spec, shapes.front().dim());
  require(k.has_value(), Errc::config_error,
          "the shape sweep needs a nonlocal kernel");

  FaberKrahnReport rep =
      faber_krahn_sweep(shapes, *k, s.p, s.resolution, s.params, richardson, o.workers);
  json extra = {{"target_measure", rep.target_measure},
                {"min_margin", rep.min_margin},
                {"richardson", rep.richardson},
                {"ball_minimal", rep.ball_minimal},
                {"margin_exceeds_error", rep.margin_exceeds_error}};
  write_outputs(o, s, rep.rows, extra);
  return (rep.ball_minimal && rep.margin_exceeds_error) ? kExitOk : kExitAssertion;
}

int cmd_hks(const CommonOptions& o) {
  RunSetup s = build_setup(o);
  validate_keys(s.experiment, {"id", "ratios"}, "experiment");
  require(s.domain.has_value(), Errc::config_error, "hks needs a domain");
  std::optional<Kernel> k = kernel_from_json(s.kernel_spec, s.domain->dim());
  require(k.has_value(), Errc::config_error, "hks needs a nonlocal kernel");

  std::vector<double> ratios = {0.3, 0.4, 0.5, 0.6, 0.7};
  if (s.experiment.contains("ratios"))
    ratios = s.experiment["ratios"].get<std::vector<double>>();

  HksReport rep = hks_check(*s.domain, *k, s.p, s.resolution, s.params, ratios);
  json extra = {{"lambda2", rep.lambda2},
                {"lambda1_half_ball", rep.lambda1_half_ball},
                {"margin", rep.margin},
                {"ratios", rep.ratios},
                {"max_pair_lambda", rep.max_pair_lambda},
                {"split_min_at_half", rep.split_min_at_half},
                {"boundary_case", rep.boundary_case}};
  write_outputs(o, s, {rep.row}, extra);
  const bool ok = (rep.strict_ok || rep.boundary_case) && rep.split_min_at_half;
  return ok ? kExitOk : kExitAssertion;
}

int cmd_drift(const CommonOptions& o) {
  RunSetup s = build_setup(o);
  validate_keys(s.experiment,
                {"id", "R", "separations", "dim", "theta_samples"}, "experiment");
  const double R = s.experiment.value("R", 0.3);
  const int dim = s.experiment.value("dim", 1);
  const int theta = s.experiment.value("theta_samples", 720);
  std::vector<double> seps;
  if (s.experiment.contains("separations"))
    seps = s.experiment["separations"].get<std::vector<double>>();
  else
    for (int i = 0; i <= 6; ++i) seps.push_back(2.0 * R + 0.08 * R * i * i);

  std::optional<Kernel> k = kernel_from_json(s.kernel_spec, dim);
  require(k.has_value(), Errc::config_error, "drift needs a nonlocal kernel");

  DriftReport rep = drift_experiment(R, seps, *k, s.p, s.resolution, s.params, dim,
                                     theta, o.workers);
  json extra = {{"separations", rep.separations},
                {"lambda2", rep.lambda2},
                {"upper_bound", rep.upper_bound},
                {"lambda1_ball", rep.lambda1_ball},
                {"monotone", rep.monotone},
                {"decoupled_match", rep.decoupled_match},
                {"decoupled_gap", rep.decoupled_gap}};
  write_outputs(o, s, rep.rows, extra);
  if (o.svg) {
    write_text_file(o.out_dir + "/drift.svg",
                    svg_line_chart("second eigenvalue vs separation", "separation",
                                   "lambda2", rep.separations, rep.lambda2));
  }
  return (rep.monotone && rep.decoupled_match) ? kExitOk : kExitAssertion;
}

int cmd_check(const CommonOptions& o, const std::string& lemma, long samples) {
  RunSetup s = build_setup(o);
  const double p = s.p;
  const uint64_t seed = s.params.seed;

  std::vector<LemmaTrialReport> reports;
  auto want = [&](const char* name) { return lemma == "all" || lemma == name; };
  if (want("g")) reports.push_back(run_g_trials(p, samples, seed));
  if (want("sigma")) reports.push_back(run_sigma_trials(p, samples, seed));
  if (want("cp")) reports.push_back(run_cp_trials(p, samples, seed));
  if (want("picone")) reports.push_back(run_picone_trials(p, samples, seed));
  require(!reports.empty(), Errc::config_error,
          "unknown lemma '" + lemma + "' (use g, sigma, cp, picone or all)");

  // pass/fail table as CSV on stdout
  std::ostringstream table;
  table << "lemma,p,trials,violations,max_defect,pass\n";
  bool all_pass = true;
  json jrows = json::array();
  for (const auto& r : reports) {
    table << r.lemma << ',' << format_double(r.p) << ',' << r.trials << ','
          << r.violations << ',' << format_double(r.max_defect) << ','
          << (r.pass() ? 1 : 0) << '\n';
    all_pass = all_pass && r.pass();
    json jr = {{"lemma", r.lemma},       {"p", r.p},
               {"trials", r.trials},     {"violations", r.violations},
               {"max_defect", r.max_defect}, {"pass", r.pass()}};
    if (!r.pass()) {
      json w = json::array();
      for (int i = 0; i < r.worst_count; ++i) w.push_back(r.worst[i]);
      jr["worst"] = w;
    }
    jrows.push_back(jr);
  }
  std::cout << table.str();

  fs::create_directories(o.out_dir);
  write_text_file(o.out_dir + "/results.csv", table.str());
  json out = {{"config", s.config}, {"lemmas", jrows}, {"samples", samples}};
  write_text_file(o.out_dir + "/results.json", out.dump(2) + "\n");

  if (!all_pass) {
    for (const auto& r : reports)
      if (!r.pass()) {
        json err = {{"error", "inequality_violated"}, {"lemma", r.lemma}};
        json w = json::array();
        for (int i = 0; i < r.worst_count; ++i) w.push_back(r.worst[i]);
        err["worst"] = w;
        std::cerr << err.dump() << "\n";
      }
    return kExitAssertion;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spectral toolkit for the mixed local/nonlocal p-Laplacian"};
  app.require_subcommand(1);

  CommonOptions o;
  std::string lemma = "all";
  long samples = 100000;

  CLI::App* eig1 = app.add_subcommand("eig1", "first eigenvalue");
  CLI::App* eig2 = app.add_subcommand("eig2", "second eigenvalue (path minimax)");
  CLI::App* oracle = app.add_subcommand("oracle", "p=2 dense-eigensolver cross-check");
  CLI::App* fk = app.add_subcommand("faber-krahn", "equal-measure shape sweep");
  CLI::App* hks = app.add_subcommand("hks", "second eigenvalue vs half-measure ball");
  CLI::App* drift = app.add_subcommand("drift", "two drifting balls sweep");
  CLI::App* check = app.add_subcommand("check", "randomized inequality oracles");
  for (CLI::App* c : {eig1, eig2, oracle, fk, hks, drift, check}) add_common(c, o);
  check->add_option("--lemma", lemma, "g | sigma | cp | picone | all");
  check->add_option("--samples", samples, "trial count");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (eig1->parsed()) return cmd_eig1(o);
    if (eig2->parsed()) return cmd_eig2(o);
    if (oracle->parsed()) return cmd_oracle(o);
    if (fk->parsed()) return cmd_faber_krahn(o);
    if (hks->parsed()) return cmd_hks(o);
    if (drift->parsed()) return cmd_drift(o);
    if (check->parsed()) return cmd_check(o, lemma, samples);
  } catch (const Error& e) {
    json err = {{"error", errc_name(e.code())}, {"message", e.what()}};
    std::cerr << err.dump() << "\n";
    switch (e.code()) {
      case Errc::not_converged:
        return kExitNotConverged;
      case Errc::inequality_violated:
        return kExitAssertion;
      case Errc::internal:
      case Errc::not_symmetric:
        return 1;
      default:
        return kExitConfig;
    }
  } catch (const std::exception& e) {
    json err = {{"error", "internal"}, {"message", e.what()}};
    std::cerr << err.dump() << "\n";
    return 1;
  }
  return kExitConfig;
}
