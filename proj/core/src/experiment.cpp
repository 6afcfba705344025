#include "hdp/experiment.hpp"

#include "hdp/errors.hpp"
#include "hdp/io.hpp"
#include "hdp/kl.hpp"
#include "hdp/loss.hpp"
#include "hdp/model.hpp"
#include "hdp/solvers.hpp"
#include "hdp/stationarity.hpp"
#include "hdp/version.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>

namespace hdp {

namespace {

namespace fs = std::filesystem;
using oj = nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& code, const std::string& msg,
                       int exit_code = 2) {
  throw CliError{code, msg, exit_code};
}

// ---------------------------------------------------------------------------
// JSON access helpers (all config errors carry exit code 2)
// ---------------------------------------------------------------------------

const oj& need_obj(const oj& j, const std::string& key) {
  if (!j.is_object() || !j.contains(key)) {
    fail("config.invalid", "missing required config object '" + key + "'");
  }
  const oj& v = j.at(key);
  if (!v.is_object()) {
    fail("config.invalid", "config key '" + key + "' must be an object");
  }
  return v;
}

bool has_key(const oj& j, const std::string& key) {
  return j.is_object() && j.contains(key);
}

double jnum(const oj& j, const std::string& key) {
  if (!has_key(j, key) || !j.at(key).is_number()) {
    fail("config.invalid", "missing or non-numeric config key '" + key + "'");
  }
  return j.at(key).get<double>();
}

double jnum_or(const oj& j, const std::string& key, double dflt) {
  if (!has_key(j, key)) {
    return dflt;
  }
  if (!j.at(key).is_number()) {
    fail("config.invalid", "config key '" + key + "' must be numeric");
  }
  return j.at(key).get<double>();
}

long jint_or(const oj& j, const std::string& key, long dflt) {
  if (!has_key(j, key)) {
    return dflt;
  }
  if (!j.at(key).is_number_integer()) {
    fail("config.invalid", "config key '" + key + "' must be an integer");
  }
  return j.at(key).get<long>();
}

bool jbool_or(const oj& j, const std::string& key, bool dflt) {
  if (!has_key(j, key)) {
    return dflt;
  }
  if (!j.at(key).is_boolean()) {
    fail("config.invalid", "config key '" + key + "' must be a boolean");
  }
  return j.at(key).get<bool>();
}

std::string jstr(const oj& j, const std::string& key) {
  if (!has_key(j, key) || !j.at(key).is_string()) {
    fail("config.invalid", "missing or non-string config key '" + key + "'");
  }
  return j.at(key).get<std::string>();
}

std::string jstr_or(const oj& j, const std::string& key,
                    const std::string& dflt) {
  if (!has_key(j, key)) {
    return dflt;
  }
  if (!j.at(key).is_string()) {
    fail("config.invalid", "config key '" + key + "' must be a string");
  }
  return j.at(key).get<std::string>();
}

Eigen::VectorXd json_to_vector(const oj& arr, const std::string& what) {
  if (!arr.is_array() || arr.empty()) {
    fail("config.invalid", "'" + what + "' must be a non-empty array");
  }
  Eigen::VectorXd v(static_cast<Eigen::Index>(arr.size()));
  Eigen::Index i = 0;
  for (const auto& e : arr) {
    if (!e.is_number()) {
      fail("config.invalid", "'" + what + "' must contain only numbers");
    }
    v(i++) = e.get<double>();
  }
  return v;
}

Eigen::MatrixXd json_to_matrix(const oj& arr, const std::string& what) {
  if (!arr.is_array() || arr.empty() || !arr.front().is_array()) {
    fail("config.invalid", "'" + what + "' must be an array of arrays");
  }
  const auto rows = static_cast<Eigen::Index>(arr.size());
  const auto cols = static_cast<Eigen::Index>(arr.front().size());
  Eigen::MatrixXd M(rows, cols);
  Eigen::Index i = 0;
  for (const auto& row : arr) {
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      fail("config.invalid", "'" + what + "' has ragged rows");
    }
    Eigen::Index k = 0;
    for (const auto& e : row) {
      if (!e.is_number()) {
        fail("config.invalid", "'" + what + "' must contain only numbers");
      }
      M(i, k++) = e.get<double>();
    }
    ++i;
  }
  return M;
}

oj vector_to_json(const Eigen::VectorXd& v) {
  oj arr = oj::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    arr.push_back(v(i));
  }
  return arr;
}

oj intvec_to_json(const std::vector<int>& v) {
  oj arr = oj::array();
  for (int i : v) {
    arr.push_back(i);
  }
  return arr;
}

// ---------------------------------------------------------------------------
// Execution context
// ---------------------------------------------------------------------------

struct Ctx {
  oj config;                          // effective config (echoed in report)
  fs::path base_dir;                  // for relative CSV payload paths
  fs::path out_dir;
  std::optional<std::uint64_t> cli_seed;
  oj results = oj::object();
  std::vector<std::string> files;

  std::string side_path(const std::string& name) const {
    return (out_dir / name).string();
  }
  void note_file(const std::string& name) { files.push_back(name); }

  std::uint64_t seed_from(const oj& block, const std::string& key) const {
    if (cli_seed) {
      return *cli_seed;
    }
    if (!has_key(block, key) || !block.at(key).is_number_integer()) {
      fail("config.missing-seed",
           "randomized steps need an explicit integer '" + key +
               "' in the config (or --seed)");
    }
    const long long s = block.at(key).get<long long>();
    if (s < 0) {
      fail("config.invalid", "'" + key + "' must be nonnegative");
    }
    return static_cast<std::uint64_t>(s);
  }
};

// ---------------------------------------------------------------------------
// Loading problems, points, solver settings
// ---------------------------------------------------------------------------

Eigen::MatrixXd load_matrix_payload(const Ctx& ctx, const oj& j,
                                    const std::string& key) {
  if (has_key(j, key)) {
    return json_to_matrix(j.at(key), key);
  }
  const std::string csv_key = key + "_csv";
  if (has_key(j, csv_key)) {
    const fs::path p = ctx.base_dir / jstr(j, csv_key);
    if (!fs::exists(p)) {
      fail("config.file-not-found", "no such file: " + p.string());
    }
    return read_csv_matrix(p.string());
  }
  fail("config.invalid", "loss needs '" + key + "' or '" + csv_key + "'");
}

Eigen::VectorXd load_vector_payload(const Ctx& ctx, const oj& j,
                                    const std::string& key) {
  if (has_key(j, key)) {
    return json_to_vector(j.at(key), key);
  }
  const std::string csv_key = key + "_csv";
  if (has_key(j, csv_key)) {
    const fs::path p = ctx.base_dir / jstr(j, csv_key);
    if (!fs::exists(p)) {
      fail("config.file-not-found", "no such file: " + p.string());
    }
    return read_csv_vector(p.string());
  }
  fail("config.invalid", "loss needs '" + key + "' or '" + csv_key + "'");
}

LossPtr load_loss(const Ctx& ctx, const oj& j) {
  const std::string kind = jstr(j, "kind");
  if (kind == "least_squares") {
    return make_least_squares(load_matrix_payload(ctx, j, "A"),
                              load_vector_payload(ctx, j, "y"));
  }
  if (kind == "logistic") {
    return make_logistic(load_matrix_payload(ctx, j, "Y"));
  }
  if (kind == "power_1d") {
    return make_power_1d(jnum(j, "alpha"));
  }
  if (kind == "hinge_power_2d") {
    return make_hinge_power_2d(jnum(j, "alpha"), jnum(j, "gamma"));
  }
  if (kind == "quadratic") {
    return make_quadratic(load_matrix_payload(ctx, j, "Q"),
                          load_vector_payload(ctx, j, "c"));
  }
  fail("config.invalid", "unknown loss kind '" + kind + "'");
}

L1Problem load_problem(const Ctx& ctx) {
  const oj& pj = need_obj(ctx.config, "problem");
  return L1Problem(load_loss(ctx, need_obj(pj, "loss")), jnum(pj, "mu"));
}

HdpPoint lift_canonical(const Eigen::VectorXd& x) {
  Eigen::VectorXd a = x.cwiseMax(0.0).cwiseSqrt();
  Eigen::VectorXd b = (-x).cwiseMax(0.0).cwiseSqrt();
  return HdpPoint(std::move(a), std::move(b));
}

// Point spec: {"a": [...], "b": [...]} in lifted coordinates, {"x": [...]}
// lifted canonically (a = sqrt(max(x,0)), b = sqrt(max(-x,0))), or
// {"csv": path} holding one flat row a_1..a_n, b_1..b_n.
HdpPoint parse_point(const Ctx& ctx, const oj& j, int n,
                     const std::string& what) {
  if (!j.is_object()) {
    fail("config.invalid", "'" + what + "' must be an object");
  }
  if (has_key(j, "a") && has_key(j, "b")) {
    Eigen::VectorXd a = json_to_vector(j.at("a"), what + ".a");
    Eigen::VectorXd b = json_to_vector(j.at("b"), what + ".b");
    if (a.size() != n || b.size() != n) {
      fail("config.invalid", "'" + what + "' has the wrong dimension");
    }
    return HdpPoint(std::move(a), std::move(b));
  }
  if (has_key(j, "x")) {
    Eigen::VectorXd x = json_to_vector(j.at("x"), what + ".x");
    if (x.size() != n) {
      fail("config.invalid", "'" + what + "' has the wrong dimension");
    }
    return lift_canonical(x);
  }
  if (has_key(j, "csv")) {
    const fs::path p = ctx.base_dir / jstr(j, "csv");
    if (!fs::exists(p)) {
      fail("config.file-not-found", "no such file: " + p.string());
    }
    const Eigen::VectorXd flat = read_csv_vector(p.string());
    if (flat.size() != 2 * n) {
      fail("config.invalid", "'" + what + "' CSV must hold 2n = " +
                                 std::to_string(2 * n) + " values");
    }
    return HdpPoint::from_stacked(flat);
  }
  fail("config.invalid",
       "'" + what + "' needs {a, b}, {x}, or {csv} payload");
}

HdpPoint parse_init(Ctx& ctx, int n) {
  const oj& j = need_obj(ctx.config, "init");
  if (has_key(j, "random")) {
    const oj& r = j.at("random");
    const std::uint64_t seed = ctx.seed_from(r, "seed");
    const double scale = jnum_or(r, "scale", 1.0);
    return random_init(n, seed, scale);
  }
  return parse_point(ctx, j, n, "init");
}

GdConfig parse_gd(const oj& parent) {
  GdConfig cfg;
  if (!has_key(parent, "solver")) {
    return cfg;
  }
  const oj& j = parent.at("solver");
  cfg.theta0 = jnum_or(j, "theta0", cfg.theta0);
  cfg.kappa = jnum_or(j, "kappa", cfg.kappa);
  cfg.max_iter = jint_or(j, "max_iter", cfg.max_iter);
  cfg.grad_tol = jnum_or(j, "grad_tol", cfg.grad_tol);
  cfg.record_every = jint_or(j, "record_every", cfg.record_every);
  cfg.max_backtracks =
      static_cast<int>(jint_or(j, "max_backtracks", cfg.max_backtracks));
  return cfg;
}

// ---------------------------------------------------------------------------
// Result rendering
// ---------------------------------------------------------------------------

oj trace_summary_json(const Trace& t) {
  oj j;
  j["status"] = to_string(t.status);
  j["iterations"] = t.iterations;
  j["backtracks"] = t.backtrack_count;
  j["initial_value"] = t.values.front();
  j["final_value"] = t.values.back();
  j["final_grad_norm"] = t.grad_norms.back();
  j["recorded_iterates"] = t.iterate_indices.size();
  if (!t.message.empty()) {
    j["message"] = t.message;
  }
  return j;
}

oj stationarity_json(const StationarityReport& r) {
  oj j;
  j["grad_norm_F"] = r.grad_norm_F;
  j["min_ab_product"] = r.min_ab_product;
  j["f_subdiff"] = r.f_subdiff;
  j["f_stationary"] = r.f_stationary;
  oj tags = oj::array();
  for (CaseTag t : r.case_tags) {
    tags.push_back(to_string(t));
  }
  j["case_tags"] = tags;
  j["strict_complementarity"] = r.strict_complementarity;
  j["sc_margin"] = r.sc_margin;
  j["lambda_min_F"] = r.lambda_min_F;
  j["support_lambda_min"] = r.support_lambda_min;
  j["support_hessian_psd"] = r.support_hessian_psd;
  j["second_order"] = r.second_order;
  j["tol"] = r.tol;
  return j;
}

oj isets_json(const IndexSets& s) {
  oj j;
  j["J1"] = intvec_to_json(s.J1);
  j["J2"] = intvec_to_json(s.J2);
  j["J31"] = intvec_to_json(s.J31);
  j["J32"] = intvec_to_json(s.J32);
  return j;
}

oj fit_json(const KlFit& f) {
  oj j;
  j["alpha_hat"] = f.alpha_hat;
  j["log_intercept"] = f.log_intercept;
  j["r_squared"] = f.r_squared;
  j["n_samples"] = f.n_samples;
  j["n_excluded"] = f.n_excluded;
  j["window"] = oj{{"lo", f.window.lo}, {"hi", f.window.hi}};
  return j;
}

oj pred_json(const ExponentPrediction& p) {
  oj j;
  j["exponent"] = p.exponent;
  j["source"] = to_string(p.source);
  return j;
}

oj rate_json(const RateFit& r) {
  oj j;
  j["model"] = to_string(r.model);
  j["linear_ratio"] = r.linear_ratio;
  j["sublinear_exponent"] = r.sublinear_exponent;
  j["r_squared"] = r.r_squared;
  j["r_squared_linear"] = r.r_squared_linear;
  j["r_squared_sublinear"] = r.r_squared_sublinear;
  j["n_points"] = r.n_points;
  j["k_lo"] = r.k_lo;
  j["k_hi"] = r.k_hi;
  return j;
}

oj probe_json(const ErrorBoundProbe& p) {
  oj j;
  j["worst_ratio"] = p.worst_ratio;
  oj rows = oj::array();
  for (const ErrorBoundProbeRow& r : p.rows) {
    rows.push_back(oj{{"radius", r.radius},
                      {"worst_ratio", r.worst_ratio},
                      {"n_samples", r.n_samples},
                      {"n_skipped", r.n_skipped}});
  }
  j["rows"] = rows;
  return j;
}

// ---------------------------------------------------------------------------
// Actions
// ---------------------------------------------------------------------------

void act_solve(Ctx& ctx) {
  const L1Problem prob = load_problem(ctx);
  const HdpPoint p0 = parse_init(ctx, prob.dim());
  const GdConfig cfg = parse_gd(ctx.config);
  const Trace trace = gd_backtracking(prob, p0, cfg);
  if (trace.status == SolveStatus::error) {
    fail("numerical.solver-error", trace.message, 3);
  }
  write_trace_csv(ctx.side_path("trace.csv"), trace);
  ctx.note_file("trace.csv");
  const HdpPoint limit = HdpPoint::from_stacked(trace.final_iterate());
  write_point_csv(ctx.side_path("final_point.csv"), limit);
  ctx.note_file("final_point.csv");

  const double tol = jnum_or(ctx.config, "classify_tol", 1e-8);
  const StationarityReport rep = second_order_test(prob, limit, tol);
  ctx.results["solver"] = trace_summary_json(trace);
  ctx.results["stationarity"] = stationarity_json(rep);
  ctx.results["product_point"] = vector_to_json(limit.s());
}

void act_classify(Ctx& ctx) {
  const L1Problem prob = load_problem(ctx);
  const HdpPoint p =
      parse_point(ctx, need_obj(ctx.config, "point"), prob.dim(), "point");
  const double tol = jnum_or(ctx.config, "tol", 1e-8);
  const StationarityReport rep = second_order_test(prob, p, tol);
  ctx.results["stationarity"] = stationarity_json(rep);
  ctx.results["product_point"] = vector_to_json(p.s());
  if (rep.f_stationary) {
    ctx.results["index_sets"] = isets_json(index_sets(prob, p.s(), tol));
  }
  if (rep.grad_norm_F <= tol) {
    const ReductionResult red = reduce(prob, p, tol);
    oj tags = oj::array();
    for (ReductionTag t : red.map.tags) {
      tags.push_back(static_cast<int>(t) + 1); // 1..4 block labels
    }
    ctx.results["reduction"] =
        oj{{"tags", tags},
           {"product_signs", vector_to_json(red.map.product_signs())},
           {"reduced_point", vector_to_json(red.reduced.stacked())}};
  }
}

void act_klfit(Ctx& ctx) {
  const L1Problem prob = load_problem(ctx);
  const HdpPoint pstar =
      parse_point(ctx, need_obj(ctx.config, "point"), prob.dim(), "point");
  const oj& sj = need_obj(ctx.config, "sampling");
  const std::string mode_str = jstr_or(sj, "mode", "ray");

  KlSampleConfig scfg;
  scfg.radius = jnum_or(sj, "radius", scfg.radius);
  scfg.count = static_cast<int>(jint_or(sj, "count", scfg.count));
  scfg.ratio = jnum_or(sj, "ratio", scfg.ratio);
  scfg.n_directions =
      static_cast<int>(jint_or(sj, "n_directions", scfg.n_directions));

  const double ref_value = F_value(prob, pstar);
  KlSampleSet samples;
  if (mode_str == "trajectory") {
    const HdpPoint p0 = parse_init(ctx, prob.dim());
    const Trace trace = gd_backtracking(prob, p0, parse_gd(ctx.config));
    if (trace.status == SolveStatus::error) {
      fail("numerical.solver-error", trace.message, 3);
    }
    samples = sample_kl_from_trace(trace, ref_value);
    ctx.results["solver"] = trace_summary_json(trace);
  } else {
    SampleMode mode;
    if (mode_str == "ray") {
      mode = SampleMode::ray;
    } else if (mode_str == "ball") {
      mode = SampleMode::ball;
    } else {
      fail("config.invalid", "unknown sampling mode '" + mode_str + "'");
    }
    scfg.seed = ctx.seed_from(sj, "seed");
    samples = sample_kl_F(prob, pstar, mode, scfg);
  }

  GapWindow window = default_gap_window(ref_value);
  if (has_key(ctx.config, "window")) {
    const oj& wj = ctx.config.at("window");
    window.lo = jnum_or(wj, "lo", window.lo);
    window.hi = jnum_or(wj, "hi", window.hi);
  }
  const KlFit fit = fit_kl_exponent(samples.samples, window);
  write_samples_csv(ctx.side_path("samples.csv"), samples);
  ctx.note_file("samples.csv");

  ctx.results["samples"] =
      oj{{"count", samples.samples.size()}, {"discarded", samples.n_discarded}};
  ctx.results["fit"] = fit_json(fit);

  // Exponent prediction, available when the product point is f-stationary.
  const double tol = jnum_or(ctx.config, "tol", 1e-8);
  if (f_subdiff_dist(prob, pstar.s()) <= tol) {
    const oj pj = has_key(ctx.config, "prediction") ? ctx.config.at("prediction")
                                                    : oj::object();
    const double f_alpha = jnum_or(pj, "f_alpha", 0.5);
    const double gamma = jnum_or(pj, "gamma", 1.0);
    const auto [sc, margin] = strict_complementarity(prob, pstar.s(), tol);
    ExponentPrediction pred = predict_F_exponent(f_alpha, sc, gamma);
    oj out = pred_json(pred);
    out["sc_margin"] = margin;
    ctx.results["prediction"] = out;
  } else {
    ctx.results["prediction"] = nullptr;
  }
}

void act_ratefit(Ctx& ctx) {
  const L1Problem prob = load_problem(ctx);
  const HdpPoint p0 = parse_init(ctx, prob.dim());
  const Trace trace = gd_backtracking(prob, p0, parse_gd(ctx.config));
  if (trace.status == SolveStatus::error) {
    fail("numerical.solver-error", trace.message, 3);
  }
  if (trace.status != SolveStatus::converged) {
    fail("numerical.not-converged",
         "rate fits need a converged run; got status '" +
             std::string(to_string(trace.status)) + "'",
         3);
  }
  const oj& rj = need_obj(ctx.config, "reference");
  Eigen::VectorXd ref;
  if (jbool_or(rj, "self", false)) {
    ref = trace.final_iterate();
  } else {
    ref = parse_point(ctx, rj, prob.dim(), "reference").stacked();
  }
  const RateFit fit = fit_convergence_rate(trace, ref);
  write_trace_csv(ctx.side_path("trace.csv"), trace);
  ctx.note_file("trace.csv");
  ctx.results["solver"] = trace_summary_json(trace);
  ctx.results["rate"] = rate_json(fit);
}

void act_saddle_margin(Ctx& ctx) {
  const L1Problem prob = load_problem(ctx);
  SaddleMarginConfig cfg;
  if (has_key(ctx.config, "saddle")) {
    const oj& j = ctx.config.at("saddle");
    cfg.max_iter = jint_or(j, "max_iter", cfg.max_iter);
    cfg.inner_tol = jnum_or(j, "inner_tol", cfg.inner_tol);
    cfg.step = jnum_or(j, "step", cfg.step);
    cfg.positive_tol = jnum_or(j, "positive_tol", cfg.positive_tol);
  }
  const SaddleMarginResult res = saddle_margin_bruteforce(prob, cfg);

  const int n = prob.dim();
  Eigen::MatrixXd rows(static_cast<Eigen::Index>(res.rows.size()), 4 + n);
  std::string header = "mask,converged,iterations,dist";
  for (int i = 0; i < n; ++i) {
    header += ",v" + std::to_string(i + 1);
  }
  for (std::size_t r = 0; r < res.rows.size(); ++r) {
    const SaddleMarginRow& row = res.rows[r];
    const auto ri = static_cast<Eigen::Index>(r);
    rows(ri, 0) = row.subset_mask;
    rows(ri, 1) = row.converged ? 1.0 : 0.0;
    rows(ri, 2) = static_cast<double>(row.iterations);
    rows(ri, 3) = row.dist;
    rows.row(ri).tail(n) = row.v.transpose();
  }
  write_matrix_csv(ctx.side_path("subsets.csv"), rows, header);
  ctx.note_file("subsets.csv");

  ctx.results["delta"] = res.delta;
  ctx.results["epsilon"] = res.epsilon;
  ctx.results["family_empty"] = res.family_empty;
  ctx.results["subsets"] = res.rows.size();
}

void act_check_grad(Ctx& ctx) {
  LossPtr loss;
  if (has_key(ctx.config, "loss")) {
    loss = load_loss(ctx, ctx.config.at("loss"));
  } else {
    loss = load_problem(ctx).loss;
  }
  const double step = jnum_or(ctx.config, "step", 0.0);

  std::vector<Eigen::VectorXd> points;
  const oj& pj = need_obj(ctx.config, "points");
  if (has_key(pj, "random")) {
    const oj& r = pj.at("random");
    const long count = jint_or(r, "count", 20);
    const double scale = jnum_or(r, "scale", 1.0);
    GaussianStream gs(ctx.seed_from(r, "seed"));
    for (long i = 0; i < count; ++i) {
      points.push_back(gs.vector(loss->dim(), scale));
    }
  } else if (has_key(pj, "list")) {
    for (const auto& e : pj.at("list")) {
      Eigen::VectorXd x = json_to_vector(e, "points.list entry");
      if (x.size() != loss->dim()) {
        fail("config.invalid", "check point has the wrong dimension");
      }
      points.push_back(std::move(x));
    }
  } else {
    fail("config.invalid", "'points' needs 'random' or 'list'");
  }
  if (points.empty()) {
    fail("config.invalid", "no check points given");
  }

  double max_grad = 0;
  double max_hess = 0;
  oj rows = oj::array();
  for (const Eigen::VectorXd& x : points) {
    const DerivReport rep = check_derivatives(*loss, x, step);
    max_grad = std::max(max_grad, rep.grad_rel_err);
    max_hess = std::max(max_hess, rep.hess_rel_err);
    rows.push_back(oj{{"grad_rel_err", rep.grad_rel_err},
                      {"hess_rel_err", rep.hess_rel_err},
                      {"step", rep.step},
                      {"hessian_near_singular", rep.hessian_near_singular}});
  }
  ctx.results["count"] = points.size();
  ctx.results["max_grad_rel_err"] = max_grad;
  ctx.results["max_hess_rel_err"] = max_hess;
  ctx.results["rows"] = rows;
}

// ---------------------------------------------------------------------------
// Presets
// ---------------------------------------------------------------------------

// Sharpness-exponent probe on the one-dimensional power loss: the origin is
// the minimizer with a boundary dual, the lifted objective flattens along
// the a-axis, and the fitted ray exponent should match (1 + alpha) / 2.
void preset_power_ray(Ctx& ctx, double alpha, std::uint64_t seed) {
  const L1Problem prob(make_power_1d(alpha), 1.0);
  const HdpPoint pstar(Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1));

  KlSampleConfig scfg;
  scfg.seed = seed;
  Eigen::VectorXd dir(2);
  dir << 1.0, 0.0; // the flat direction: a_1
  scfg.directions = {dir};

  const KlSampleSet samples =
      sample_kl_F(prob, pstar, SampleMode::ray, scfg);
  const GapWindow window = default_gap_window(F_value(prob, pstar));
  const KlFit fit = fit_kl_exponent(samples.samples, window);
  write_samples_csv(ctx.side_path("samples.csv"), samples);
  ctx.note_file("samples.csv");

  const auto [sc, margin] = strict_complementarity(
      prob, Eigen::VectorXd::Zero(1), 1e-8);
  const ExponentPrediction pred = predict_F_exponent(alpha, sc, 1.0);

  ctx.results["alpha"] = alpha;
  ctx.results["fit"] = fit_json(fit);
  ctx.results["prediction"] = pred_json(pred);
  ctx.results["abs_error"] = std::abs(fit.alpha_hat - pred.exponent);
}

// Sharpness-exponent probe on the two-dimensional hinge-power loss, whose
// solution set obeys a Holder error bound with exponent gamma; the ray
// exponent should match (2 - gamma (1 - alpha)) / 2. Also runs the
// empirical error-bound probe against the known solution region.
void preset_hinge_ray(Ctx& ctx, double alpha, double gamma,
                      std::uint64_t seed) {
  const L1Problem prob(make_hinge_power_2d(alpha, gamma), 1.0);
  const HdpPoint pstar(Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(2));

  KlSampleConfig scfg;
  scfg.seed = seed;
  Eigen::VectorXd dir(4);
  dir << 1.0, 0.0, 0.0, 0.0; // the flat direction: a_1
  scfg.directions = {dir};

  const KlSampleSet samples =
      sample_kl_F(prob, pstar, SampleMode::ray, scfg);
  const GapWindow window = default_gap_window(F_value(prob, pstar));
  const KlFit fit = fit_kl_exponent(samples.samples, window);
  write_samples_csv(ctx.side_path("samples.csv"), samples);
  ctx.note_file("samples.csv");

  const Eigen::VectorXd origin = Eigen::VectorXd::Zero(2);
  const auto [sc, margin] = strict_complementarity(prob, origin, 1e-8);
  const ExponentPrediction pred = predict_F_exponent(alpha, sc, gamma);

  const IndexSets isets = index_sets(prob, origin, 1e-8);
  const PowerRegionOracle omega(gamma);
  const std::vector<double> radii = {1e-3, 3.1622776601683794e-3, 1e-2,
                                     3.1622776601683794e-2, 1e-1};
  const ErrorBoundProbe probe =
      errorbound_probe(prob, omega, isets, origin, gamma, radii, 200, seed + 1);

  ctx.results["alpha"] = alpha;
  ctx.results["gamma"] = gamma;
  ctx.results["fit"] = fit_json(fit);
  ctx.results["prediction"] = pred_json(pred);
  ctx.results["abs_error"] = std::abs(fit.alpha_hat - pred.exponent);
  ctx.results["errorbound"] = probe_json(probe);
}

// Frozen random least-squares instance (m = 10, n = 6) whose minimizer
// satisfies strict complementarity with an injective support block. Checks
// the full pipeline: proximal baseline, lifted descent, linear rate, and
// both sharpness samplers agreeing with the 1/2 prediction.
void preset_lasso_sc(Ctx& ctx, std::uint64_t seed) {
  const int m = 10;
  const int n = 6;
  GaussianStream gs(seed);
  Eigen::MatrixXd A(m, n);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      A(i, j) = gs.next() / std::sqrt(static_cast<double>(m));
    }
  }
  Eigen::VectorXd planted = Eigen::VectorXd::Zero(n);
  planted(0) = 1.2;
  planted(3) = -0.8;
  const Eigen::VectorXd y = A * planted + gs.vector(m, 0.05);
  const double mu = 0.3 * (A.transpose() * y).cwiseAbs().maxCoeff();
  const L1Problem prob(make_least_squares(A, y), mu);

  // Proximal baseline down to fixed-point residual 1e-13.
  const double step = suggest_ista_step(prob);
  const Trace base = ista(prob, Eigen::VectorXd::Zero(n), step, 2000000, 1e-13);
  if (base.status != SolveStatus::converged) {
    throw NumericalError("proximal baseline did not converge");
  }
  const Eigen::VectorXd sstar = base.final_iterate();

  // Instance guards: the catalog freezes a seed for which all of these
  // hold; failing any of them means the instance is unusable.
  const IndexSets isets = index_sets(prob, sstar, 1e-8);
  const auto [sc, margin] = strict_complementarity(prob, sstar, 1e-8);
  if (!sc || margin < 1e-6) {
    throw NumericalError("instance lacks strict complementarity");
  }
  if (isets.J2.empty() || static_cast<int>(isets.J2.size()) == n) {
    throw NumericalError("instance support is trivial");
  }
  const Eigen::MatrixXd H = prob.loss->hessian(sstar);
  Eigen::MatrixXd HII(isets.J2.size(), isets.J2.size());
  for (std::size_t r = 0; r < isets.J2.size(); ++r) {
    for (std::size_t c = 0; c < isets.J2.size(); ++c) {
      HII(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          H(isets.J2[r], isets.J2[c]);
    }
  }
  const double support_lmin = lambda_min(HII);
  if (support_lmin <= 1e-8) {
    throw NumericalError("support block of the curvature is singular");
  }

  const HdpPoint pstar = lift_canonical(sstar);
  const double Fstar = F_value(prob, pstar);

  // Lifted sharpness along seeded rays.
  KlSampleConfig scfg;
  scfg.radius = 0.5;
  scfg.count = 120;
  scfg.ratio = 0.9;
  scfg.seed = seed + 1;
  scfg.n_directions = 8;
  const KlSampleSet samples =
      sample_kl_F(prob, pstar, SampleMode::ray, scfg);
  const KlFit fit_F =
      fit_kl_exponent(samples.samples, default_gap_window(Fstar));
  write_samples_csv(ctx.side_path("samples.csv"), samples);
  ctx.note_file("samples.csv");

  // Restricted sharpness of the unlifted objective over the support.
  const KlSampleSet rsamples =
      sample_kl_f_restricted(prob, sstar, isets, 0.5, 150, seed + 2);
  const KlFit fit_f =
      fit_kl_exponent(rsamples.samples, default_gap_window(0.0));
  write_samples_csv(ctx.side_path("samples_restricted.csv"), rsamples);
  ctx.note_file("samples_restricted.csv");

  const ExponentPrediction pred = predict_F_exponent(0.5, sc, 1.0);

  // Lifted descent run and its rate against the reached limit.
  GdConfig gcfg;
  gcfg.grad_tol = 1e-10;
  gcfg.max_iter = 200000;
  const Trace trace = gd_backtracking(prob, random_init(n, seed + 3), gcfg);
  if (trace.status != SolveStatus::converged) {
    throw NumericalError("lifted descent did not converge on the instance");
  }
  write_trace_csv(ctx.side_path("trace.csv"), trace);
  ctx.note_file("trace.csv");
  const RateFit rate = fit_convergence_rate(trace, trace.final_iterate());
  const StationarityReport rep = second_order_test(
      prob, HdpPoint::from_stacked(trace.final_iterate()), 1e-6);

  ctx.results["instance"] = oj{{"m", m},
                               {"n", n},
                               {"mu", mu},
                               {"support", intvec_to_json(isets.J2)},
                               {"sc_margin", margin},
                               {"support_lambda_min", support_lmin},
                               {"product_minimizer", vector_to_json(sstar)}};
  ctx.results["kl_F"] = fit_json(fit_F);
  ctx.results["kl_f_restricted"] = fit_json(fit_f);
  ctx.results["prediction"] = pred_json(pred);
  ctx.results["solver"] = trace_summary_json(trace);
  ctx.results["rate"] = rate_json(rate);
  ctx.results["stationarity"] = stationarity_json(rep);
}

// One-dimensional instance without strict complementarity: the minimizer
// sits at zero with its dual exactly on the boundary. The lifted exponent
// along the flat direction is 3/4 and plain descent slows to a sublinear
// distance decay with exponent about 1/2.
void preset_lasso_nosc(Ctx& ctx, std::uint64_t seed) {
  Eigen::MatrixXd A(1, 1);
  A << 1.0;
  Eigen::VectorXd y(1);
  y << -1.0;
  const L1Problem prob(make_least_squares(A, y), 1.0);
  const HdpPoint pstar(Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1));

  KlSampleConfig scfg;
  scfg.radius = 0.4;
  scfg.count = 120;
  scfg.ratio = 0.95;
  scfg.seed = seed;
  Eigen::VectorXd dir(2);
  dir << 0.0, 1.0; // the flat direction: b_1 (boundary dual at +mu)
  scfg.directions = {dir};
  const KlSampleSet samples =
      sample_kl_F(prob, pstar, SampleMode::ray, scfg);
  const KlFit fit =
      fit_kl_exponent(samples.samples, default_gap_window(F_value(prob, pstar)));
  write_samples_csv(ctx.side_path("samples.csv"), samples);
  ctx.note_file("samples.csv");

  const auto [sc, margin] =
      strict_complementarity(prob, Eigen::VectorXd::Zero(1), 1e-8);
  const ExponentPrediction pred = predict_F_exponent(0.5, sc, 1.0);

  // The gradient tolerance must stay above the double-precision wall: near
  // the flat minimizer the per-step decrease theta*||grad||^2 drops below
  // one ulp of F and the monotone test cannot certify progress, so the
  // stepsize would collapse. The wall sits near 1.5e-8 for this instance.
  GdConfig gcfg;
  gcfg.grad_tol = 5e-8;
  gcfg.max_iter = 2000000;
  gcfg.record_every = 100;
  const Trace trace = gd_backtracking(prob, random_init(1, seed + 1), gcfg);
  if (trace.status != SolveStatus::converged) {
    throw NumericalError("descent did not reach the gradient tolerance");
  }
  write_trace_csv(ctx.side_path("trace.csv"), trace);
  ctx.note_file("trace.csv");
  const RateFit rate =
      fit_convergence_rate(trace, Eigen::VectorXd::Zero(2));

  ctx.results["fit"] = fit_json(fit);
  ctx.results["prediction"] = pred_json(pred);
  ctx.results["abs_error"] = std::abs(fit.alpha_hat - pred.exponent);
  ctx.results["solver"] = trace_summary_json(trace);
  ctx.results["rate"] = rate_json(rate);
}

// Degenerate instance with a segment of minimizers: every proximal run,
// regardless of start, must land on the segment and report the same smooth
// gradient; the error-bound probe runs against the exact segment oracle.
void preset_lasso_degenerate(Ctx& ctx, std::uint64_t seed) {
  Eigen::MatrixXd A(1, 2);
  A << 1.0, 1.0;
  Eigen::VectorXd y(1);
  y << 1.0;
  const double mu = 0.1;
  const L1Problem prob(make_least_squares(A, y), mu);

  const int runs = 20;
  const double step = suggest_ista_step(prob);
  GaussianStream gs(seed);

  Eigen::VectorXd seg_p(2), seg_q(2);
  seg_p << 0.9, 0.0;
  seg_q << 0.0, 0.9;
  const SegmentOracle segment(seg_p, seg_q);

  Eigen::MatrixXd rows(runs, 6); // x1,x2,dist,g1,g2,converged
  std::vector<Eigen::VectorXd> grads;
  double max_dist = 0;
  for (int r = 0; r < runs; ++r) {
    const Eigen::VectorXd x0 = gs.vector(2, 1.0);
    const Trace t = ista(prob, x0, step, 200000, 1e-12);
    if (t.status != SolveStatus::converged) {
      throw NumericalError("proximal run did not converge");
    }
    const Eigen::VectorXd x = t.final_iterate();
    const Eigen::VectorXd g = prob.loss->gradient(x);
    grads.push_back(g);
    const double dist = segment.dist(x);
    max_dist = std::max(max_dist, dist);
    rows(r, 0) = x(0);
    rows(r, 1) = x(1);
    rows(r, 2) = dist;
    rows(r, 3) = g(0);
    rows(r, 4) = g(1);
    rows(r, 5) = 1.0;
  }
  write_matrix_csv(ctx.side_path("minimizers.csv"), rows,
                   "x1,x2,dist_to_segment,grad1,grad2,converged");
  ctx.note_file("minimizers.csv");

  double spread = 0;
  for (std::size_t i = 0; i < grads.size(); ++i) {
    for (std::size_t j = i + 1; j < grads.size(); ++j) {
      spread = std::max(
          spread, (grads[i] - grads[j]).cwiseAbs().maxCoeff());
    }
  }

  Eigen::VectorXd sstar(2);
  sstar << 0.9, 0.0;
  const IndexSets isets = index_sets(prob, sstar, 1e-8);
  const std::vector<double> radii = {1e-3, 3.1622776601683794e-3, 1e-2,
                                     3.1622776601683794e-2, 1e-1};
  const ErrorBoundProbe probe = errorbound_probe(
      prob, segment, isets, sstar, 1.0, radii, 200, seed + 1);

  ctx.results["runs"] = runs;
  ctx.results["grad_spread"] = spread;
  ctx.results["max_dist_to_segment"] = max_dist;
  ctx.results["shared_gradient"] = vector_to_json(grads.front());
  ctx.results["errorbound"] = probe_json(probe);
}

// Two-dimensional instance whose lifted origin is a strict saddle: many
// randomly started descent runs must all end second-order stationary, and
// the brute-force escape margin is reported alongside the origin curvature.
void preset_saddle_avoidance(Ctx& ctx, std::uint64_t seed, long runs) {
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(2, 2);
  Eigen::VectorXd y(2);
  y << 2.0, 1.5;
  const L1Problem prob(make_least_squares(A, y), 1.0);

  const HdpPoint origin(Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(2));
  const double origin_lmin = lambda_min(F_hess(prob, origin));

  GdConfig gcfg;
  gcfg.grad_tol = 1e-10;
  gcfg.max_iter = 50000;
  gcfg.record_every = 1000;

  long ok = 0;
  oj rows = oj::array();
  for (long r = 0; r < runs; ++r) {
    const std::uint64_t run_seed = seed + static_cast<std::uint64_t>(r);
    const Trace t = gd_backtracking(prob, random_init(2, run_seed), gcfg);
    bool second_order = false;
    double final_value = t.values.back();
    if (t.status == SolveStatus::converged) {
      const StationarityReport rep = second_order_test(
          prob, HdpPoint::from_stacked(t.final_iterate()), 1e-6);
      second_order = rep.second_order;
    }
    if (second_order) {
      ++ok;
    }
    rows.push_back(oj{{"seed", run_seed},
                      {"status", to_string(t.status)},
                      {"final_value", final_value},
                      {"second_order", second_order}});
  }

  const SaddleMarginResult margin = saddle_margin_bruteforce(prob);

  ctx.results["runs"] = runs;
  ctx.results["second_order_count"] = ok;
  ctx.results["origin_lambda_min"] = origin_lmin;
  ctx.results["escape_margin_delta"] = margin.delta;
  ctx.results["escape_margin_epsilon"] = margin.epsilon;
  ctx.results["rows"] = rows;
}

void act_preset(Ctx& ctx, const std::string& name) {
  const oj params = has_key(ctx.config, "params") ? ctx.config.at("params")
                                                  : oj::object();
  const auto seed_or = [&](std::uint64_t dflt) -> std::uint64_t {
    if (ctx.cli_seed) {
      return *ctx.cli_seed;
    }
    return static_cast<std::uint64_t>(jint_or(params, "seed",
                                              static_cast<long>(dflt)));
  };

  if (name == "example-3.8") {
    const double alpha = jnum_or(params, "alpha", 0.75);
    preset_power_ray(ctx, alpha, seed_or(11));
  } else if (name == "example-3.14") {
    const double alpha = jnum_or(params, "alpha", 0.75);
    const double gamma = jnum_or(params, "gamma", 0.5);
    preset_hinge_ray(ctx, alpha, gamma, seed_or(12));
  } else if (name == "lasso-sc") {
    preset_lasso_sc(ctx, seed_or(21));
  } else if (name == "lasso-nosc") {
    preset_lasso_nosc(ctx, seed_or(31));
  } else if (name == "lasso-degenerate") {
    preset_lasso_degenerate(ctx, seed_or(41));
  } else if (name == "saddle-avoidance") {
    preset_saddle_avoidance(ctx, seed_or(51), jint_or(params, "runs", 100));
  } else {
    std::string known;
    for (const PresetInfo& p : preset_catalog()) {
      known += (known.empty() ? "" : ", ") + p.name;
    }
    fail("config.invalid",
         "unknown preset '" + name + "'; available: " + known);
  }
}

} // namespace

// ---------------------------------------------------------------------------
// Public entry points
// ---------------------------------------------------------------------------

const std::vector<PresetInfo>& preset_catalog() {
  static const std::vector<PresetInfo> catalog = {
      {"example-3.8",
       "one-dimensional power loss: ray probe of the lifted sharpness "
       "exponent at the origin, prediction (1 + alpha) / 2",
       {"alpha", "seed"}},
      {"example-3.14",
       "two-dimensional hinge-power loss: ray probe plus empirical "
       "error-bound check, prediction (2 - gamma (1 - alpha)) / 2",
       {"alpha", "gamma", "seed"}},
      {"lasso-sc",
       "frozen random least-squares instance with strict complementarity: "
       "sharpness 1/2 both lifted and restricted, linear descent rate",
       {"seed"}},
      {"lasso-nosc",
       "one-dimensional boundary-dual instance: lifted sharpness 3/4 and "
       "sublinear descent with distance exponent about 1/2",
       {"seed"}},
      {"lasso-degenerate",
       "segment of minimizers: shared smooth gradient across 20 proximal "
       "runs plus the segment error-bound probe",
       {"seed"}},
      {"saddle-avoidance",
       "strict saddle at the lifted origin: randomly started descent runs "
       "end second-order stationary",
       {"seed", "runs"}},
  };
  return catalog;
}

const char* out_dir_env_var() { return "HDPOPT_OUT_DIR"; }

RunOutcome run_experiment(const CliOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();

  Ctx ctx;
  ctx.cli_seed = opts.seed;

  // Load the config file when given.
  if (!opts.config_path.empty()) {
    if (!fs::exists(opts.config_path)) {
      fail("config.file-not-found", "no such file: " + opts.config_path);
    }
    std::ifstream in(opts.config_path);
    try {
      ctx.config = oj::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      fail("config.parse", e.what());
    }
    if (!ctx.config.is_object()) {
      fail("config.parse", "config root must be a JSON object");
    }
    ctx.base_dir = fs::path(opts.config_path).parent_path();
  } else {
    ctx.config = oj::object();
    ctx.base_dir = fs::current_path();
  }

  // Resolve the action and the output directory.
  std::string action = opts.action;
  if (action.empty()) {
    action = jstr_or(ctx.config, "action", "");
  }
  if (action.empty()) {
    fail("config.invalid", "no action given");
  }
  std::string out_dir = opts.out_dir;
  if (out_dir.empty()) {
    if (const char* env = std::getenv(out_dir_env_var())) {
      out_dir = env;
    }
  }
  if (out_dir.empty() && has_key(ctx.config, "output")) {
    out_dir = jstr_or(ctx.config.at("output"), "dir", "");
  }
  if (out_dir.empty()) {
    out_dir = "out";
  }
  ctx.out_dir = out_dir;
  std::error_code ec;
  fs::create_directories(ctx.out_dir, ec);
  if (ec) {
    fail("config.invalid",
         "cannot create output directory: " + ctx.out_dir.string());
  }

  // Echo the effective settings into the config for the report.
  ctx.config["action"] = action;
  if (opts.seed) {
    ctx.config["seed_override"] = *opts.seed;
  }

  try {
    if (action == "solve") {
      act_solve(ctx);
    } else if (action == "classify") {
      act_classify(ctx);
    } else if (action == "kl-fit") {
      act_klfit(ctx);
    } else if (action == "rate-fit") {
      act_ratefit(ctx);
    } else if (action == "saddle-margin") {
      act_saddle_margin(ctx);
    } else if (action == "check-grad") {
      act_check_grad(ctx);
    } else if (action == "preset") {
      std::string name = opts.preset;
      if (name.empty()) {
        name = jstr_or(ctx.config, "preset", "");
      }
      if (name.empty()) {
        fail("config.invalid", "action 'preset' needs a preset name");
      }
      ctx.config["preset"] = name;
      act_preset(ctx, name);
    } else {
      fail("config.invalid", "unknown action '" + action + "'");
    }
  } catch (const CliError&) {
    throw;
  } catch (const InvalidInputError& e) {
    fail("config.invalid", e.what());
  } catch (const NotStationaryError& e) {
    fail("config.not-stationary", e.what());
  } catch (const UnsupportedError& e) {
    fail("unsupported.request", e.what(), 4);
  } catch (const NumericalError& e) {
    fail("numerical.failure", e.what(), 3);
  }

  // Assemble and write the report. Timing stays out of the file so that
  // identical configs produce byte-identical reports.
  oj report;
  report["tool"] = oj{{"name", kToolName}, {"version", kVersion}};
  report["action"] = action;
  report["config"] = ctx.config;
  oj files = oj::array();
  for (const std::string& f : ctx.files) {
    files.push_back(f);
  }
  files.push_back("report.json");
  report["files"] = files;
  report["results"] = ctx.results;

  RunOutcome outcome;
  outcome.report_json = report.dump(2) + "\n";
  outcome.out_dir = ctx.out_dir.string();
  {
    std::ofstream out(ctx.out_dir / "report.json", std::ios::binary);
    if (!out) {
      fail("config.invalid", "cannot write " +
                                 (ctx.out_dir / "report.json").string());
    }
    out << outcome.report_json;
  }
  outcome.files_written = ctx.files;
  outcome.files_written.push_back("report.json");

  const auto t1 = std::chrono::steady_clock::now();
  outcome.wall_seconds =
      std::chrono::duration<double>(t1 - t0).count();
  return outcome;
}

int run_cli(const CliOptions& opts, std::ostream& out, std::ostream& err) {
  try {
    const RunOutcome outcome = run_experiment(opts);
    for (const std::string& f : outcome.files_written) {
      out << "wrote " << (fs::path(outcome.out_dir) / f).string() << "\n";
    }
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3f", outcome.wall_seconds);
    out << "done in " << buf << "s\n";
    return 0;
  } catch (const CliError& e) {
    oj j;
    j["error"] = oj{{"code", e.code}, {"message", e.message}};
    err << j.dump() << "\n";
    return e.exit_code;
  } catch (const std::exception& e) {
    oj j;
    j["error"] = oj{{"code", "internal.error"}, {"message", e.what()}};
    err << j.dump() << "\n";
    return 3;
  }
}

} // namespace hdp
