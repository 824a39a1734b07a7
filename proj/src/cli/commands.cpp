#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <ostream>
#include <sstream>

#include "rwre/cli.hpp"
#include "rwre/numeric.hpp"
#include "rwre/oracle.hpp"

namespace rwre::cli {
namespace {

using numeric::shortest;

Json num(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

std::string cell(double v) { return shortest(v); }
std::string cell(std::int64_t v) { return std::to_string(v); }

const char* class_name(ErrorClass c) {
  switch (c) {
    case ErrorClass::kConfig: return "config";
    case ErrorClass::kEligibility: return "eligibility";
    case ErrorClass::kNonConvergence: return "non-convergence";
    case ErrorClass::kGuardBreach: return "guard-breach";
    case ErrorClass::kDomain: return "domain";
  }
  return "internal";
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t tt = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::int64_t analytic_margin(double lambda) {
  std::int64_t m = 256;
  if (lambda < 0.0) m = std::max<std::int64_t>(m, static_cast<std::int64_t>(std::ceil(400.0 / -lambda)));
  return m;
}

Table replica_table(const harness::ExperimentReport& r, bool with_alt) {
  Table t;
  t.header = {"replica", "raw", "z"};
  if (with_alt) t.header.emplace_back("z_alt");
  for (std::size_t i = 0; i < r.raw.size(); ++i) {
    std::vector<std::string> row{std::to_string(i), cell(r.raw[i]), cell(r.samples[i])};
    if (with_alt) row.push_back(cell(r.alt_samples[i]));
    t.rows.push_back(std::move(row));
  }
  return t;
}

CommandResult simulate(const ResolvedConfig& rc) {
  const auto hit = harness::clt_hitting(rc.experiment);
  const auto pos = harness::clt_position(rc.experiment);
  // Quenched variance identity: Var_w T(n) = sum_{k<n} sigma_k^2.
  numeric::RunningMoments m;
  for (double v : hit.raw) m.add(v);
  const double target = hit.sigma2_window * static_cast<double>(rc.experiment.n);
  const double var = m.variance();
  const double var_se = std::sqrt(std::max(0.0, m.fourth_central() - var * var) / static_cast<double>(m.count()));
  const double z = var_se > 0.0 ? (var - target) / var_se : 0.0;

  CommandResult out;
  out.report["hitting"] = to_json(hit);
  out.report["position"] = to_json(pos);
  out.report["variance_identity"] = {{"sample_variance", num(var)},
                                     {"sample_variance_se", num(var_se)},
                                     {"sum_sigma2", num(target)},
                                     {"z", num(z)},
                                     {"pass", std::abs(z) <= 5.0}};
  out.report["pass"] = hit.pass && pos.pass && std::abs(z) <= 5.0;
  out.samples.header = {"replica", "T_n", "X_t"};
  for (std::size_t i = 0; i < hit.raw.size(); ++i) {
    out.samples.rows.push_back({std::to_string(i), cell(hit.raw[i]), cell(pos.raw[i])});
  }
  out.cdf = cdf_table(hit.cdf);
  return out;
}

CommandResult analyze(const ResolvedConfig& rc) {
  const auto& model = rc.experiment.model;
  CommandResult out;
  Json& r = out.report;
  const auto cls = env::classify(model);
  const auto lam = env::lambda(model);
  r["model_id"] = model.id();
  r["warnings"] = model.warnings();
  r["lambda"] = {{"value", num(lam.value)}, {"std_error", num(lam.std_error)}, {"method", env::to_string(lam.method)}};
  r["classification"] = {{"regime", env::to_string(cls.regime)},
                         {"tolerance", num(cls.tolerance)},
                         {"within_tolerance", cls.within_tolerance}};

  Json rk = Json::array();
  std::vector<double> log_r;
  bool log_r_complete = true;
  for (int i = 0; i <= 8; ++i) {
    const double kappa = 0.25 * i;
    try {
      const auto e = env::r_kappa(model, kappa, rc.gamma);
      rk.push_back({{"kappa", kappa}, {"value", num(e.value)}, {"std_error", num(e.std_error)},
                    {"method", env::to_string(e.method)}});
      log_r.push_back(std::log(e.value));
    } catch (const MomentDivergence& ex) {
      rk.push_back({{"kappa", kappa}, {"value", nullptr}, {"error", ex.what()}});
      log_r_complete = false;
    }
  }
  r["r_kappa"] = std::move(rk);
  if (log_r_complete) {
    double min_second = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i + 1 < log_r.size(); ++i) {
      min_second = std::min(min_second, log_r[i + 1] - 2.0 * log_r[i] + log_r[i - 1]);
    }
    r["log_r_min_second_difference"] = num(min_second);
    r["log_r_convex"] = min_second >= -1e-9;
  }
  r["conditions"] = to_json(env::check_conditions(model, rc.gamma));

  std::optional<analytics::SummaryStatistics> stats;
  try {
    stats = analytics::summary(model, rc.experiment.summary_budget);
    r["summary"] = to_json(*stats);
  } catch (const NotCltEligible& ex) {
    r["summary"] = nullptr;
    r["summary_error"] = ex.what();
  }

  out.samples.header = {"k", "p", "A", "mu", "sigma2", "H"};
  const std::int64_t n = rc.experiment.n;
  if (cls.regime == env::Regime::kTransientRight) {
    const auto q = harness::quench(model, rc.experiment.env_seed, -analytic_margin(cls.lambda), n + 1, n - 1);
    const analytics::CenteringTable table(q.sites, n);
    for (std::int64_t k = 0; k < n; ++k) {
      out.samples.rows.push_back({cell(k), cell(q.window.p(k)), cell(env::odds_ratio(q.window, k)),
                                  cell(q.sites.mu(k)), cell(q.sites.sigma2(k)), cell(table.H(static_cast<double>(k + 1)))});
    }
  } else {
    const auto w = env::realize(model, 0, n - 1, rc.experiment.env_seed);
    for (std::int64_t k = 0; k < n; ++k) {
      out.samples.rows.push_back({cell(k), cell(w.p(k)), cell(env::odds_ratio(w, k)), "", "", ""});
    }
  }
  r["pass"] = true;
  return out;
}

CommandResult clt(const ResolvedConfig& rc, bool position) {
  const auto rep = position ? harness::clt_position(rc.experiment) : harness::clt_hitting(rc.experiment);
  CommandResult out;
  out.report = to_json(rep);
  out.samples = replica_table(rep, position);
  out.cdf = cdf_table(rep.cdf);
  return out;
}

CommandResult lln(const ResolvedConfig& rc) {
  const auto rep = harness::lln_check(rc.experiment, static_cast<std::size_t>(rc.trajectories));
  CommandResult out;
  out.report = to_json(rep);
  out.samples.header = {"kind", "scale", "value", "available"};
  for (const auto& row : rep.hitting) {
    out.samples.rows.push_back({"T_n_over_n", cell(row.scale), cell(row.value), row.available ? "1" : "0"});
  }
  for (const auto& row : rep.position) {
    out.samples.rows.push_back({"X_t_over_t", cell(row.scale), cell(row.value), row.available ? "1" : "0"});
  }
  for (const auto& row : rep.running_max) {
    out.samples.rows.push_back({"max_X_over_t", cell(row.scale), cell(row.value), row.available ? "1" : "0"});
  }
  return out;
}

CommandResult diagnostics(const ResolvedConfig& rc) {
  const auto& ex = rc.experiment;
  const auto diag = harness::rel_diagnostics(ex);
  const auto erg = harness::uniform_ergodicity_estimate(ex.model, rc.ergodicity_grid, ex.ergodicity_window, ex.env_seed);
  const auto ratio = harness::variance_ratio_check(ex);
  harness::ExperimentConfig coupling_cfg = ex;
  coupling_cfg.replicas = static_cast<std::size_t>(rc.coupling_trajectories);
  coupling_cfg.t = rc.coupling_t;
  const auto coupling = harness::coupling_identity_check(coupling_cfg);

  CommandResult out;
  out.report["rel"] = to_json(diag);
  out.report["ergodicity"] = to_json(erg);
  out.report["variance_ratio"] = to_json(ratio);
  out.report["coupling"] = to_json(coupling);
  out.report["pass"] = diag.pass && ratio.pass && coupling.pass;
  out.samples.header = {"t", "x", "env", "rel1", "rel2", "rel1_shifted"};
  for (const auto& row : diag.rel) {
    for (std::size_t e = 0; e < row.rel1.size(); ++e) {
      out.samples.rows.push_back({cell(row.t), cell(row.x), std::to_string(e), cell(row.rel1[e]), cell(row.rel2[e]),
                                  cell(row.rel1_shifted[e])});
    }
  }
  return out;
}

CommandResult oracle_check(const ResolvedConfig& rc) {
  const auto& ex = rc.experiment;
  const auto stats = analytics::summary(ex.model, ex.summary_budget);
  const std::int64_t a = rc.oracle_a;
  const std::int64_t n = rc.oracle_sites;
  walk::SimulationBudget budget;
  budget.left_guard = ex.left_guard ? *ex.left_guard : walk::default_left_guard(stats.lambda);
  const std::int64_t lo = std::min({a, -analytic_margin(stats.lambda), -budget.left_guard - 1});
  const auto window = env::realize(ex.model, lo, n + 1, ex.env_seed);

  const auto e = oracle::expected_hitting(window, a, n);
  const auto v = oracle::variance_hitting(window, a, n);
  const auto unswapped = oracle::variance_hitting_from_increments(window, a, n, false);
  const auto swapped = oracle::variance_hitting_from_increments(window, a, n, true);

  CommandResult out;
  out.samples.header = {"k", "p", "mu_series", "mu_oracle", "sigma2_series", "sigma2_oracle",
                        "sigma2_forcing_unswapped", "sigma2_forcing_swapped"};
  double mu_err = 0.0, s2_err = 0.0, unswapped_err = 0.0, swapped_err = 0.0;
  double site0_mu = 0.0, site0_sigma2 = 0.0;
  for (std::int64_t k = 0; k < n; ++k) {
    const auto s = analytics::sigma2_site(window, k);
    if (k == 0) {
      site0_mu = s.mu;
      site0_sigma2 = s.sigma2;
    }
    mu_err = std::max(mu_err, std::abs(s.mu - e.increment(k)));
    s2_err = std::max(s2_err, std::abs(s.sigma2 - v.increment(k)));
    unswapped_err = std::max(unswapped_err, std::abs(s.sigma2 - unswapped.increment(k)));
    swapped_err = std::max(swapped_err, std::abs(s.sigma2 - swapped.increment(k)));
    out.samples.rows.push_back({cell(k), cell(window.p(k)), cell(s.mu), cell(e.increment(k)), cell(s.sigma2),
                                cell(v.increment(k)), cell(unswapped.increment(k)), cell(swapped.increment(k))});
  }

  const auto mc = oracle::mc_moment_oracle(window, 0, rc.oracle_samples, ex.walk_seed, budget);
  const double mean_z = mc.mean_se > 0.0 ? (mc.mean - site0_mu) / mc.mean_se : 0.0;
  const double var_z = mc.variance_se > 0.0 ? (mc.variance - site0_sigma2) / mc.variance_se : 0.0;

  Json& r = out.report;
  r["model_id"] = ex.model.id();
  r["summary"] = to_json(stats);
  r["a"] = a;
  r["n"] = n;
  r["max_abs_mu_error"] = num(mu_err);
  r["max_abs_sigma2_error"] = num(s2_err);
  r["max_residual"] = num(std::max(e.solution.max_residual, v.solution.max_residual));
  r["increment_forcing"] = {{"unswapped_max_abs_error", num(unswapped_err)},
                          {"swapped_max_abs_error", num(swapped_err)},
                          {"unswapped_matches", unswapped_err <= 1e-7},
                          {"swapped_matches", swapped_err <= 1e-7}};
  r["monte_carlo_site0"] = {{"samples", mc.samples},
                            {"mean", num(mc.mean)},
                            {"mean_se", num(mc.mean_se)},
                            {"variance", num(mc.variance)},
                            {"variance_se", num(mc.variance_se)},
                            {"mu_series", num(site0_mu)},
                            {"sigma2_series", num(site0_sigma2)},
                            {"mean_z", num(mean_z)},
                            {"variance_z", num(var_z)}};
  Json row;
  row["quantity"] = "sigma2";
  row["closed_form_r1_squared"] = stats.sigma2_closed_form_r1_squared ? num(*stats.sigma2_closed_form_r1_squared) : Json(nullptr);
  row["closed_form"] =
      stats.sigma2_closed_form ? num(*stats.sigma2_closed_form) : Json(nullptr);
  row["ergodic"] = num(stats.sigma2);
  row["ergodic_se"] = num(stats.sigma2_se);
  row["ergodic_method"] = env::to_string(stats.sigma2_method);
  if (ex.model.is_constant()) {
    row["monte_carlo"] = num(mc.variance);
    row["monte_carlo_se"] = num(mc.variance_se);
  } else {
    row["monte_carlo"] = nullptr;
    row["monte_carlo_se"] = nullptr;
  }
  row["discrepancy"] = stats.closed_form_discrepancy;
  r["discrepancy_table"] = Json::array({row});

  const bool mu_ok = mu_err <= 1e-8;
  const bool s2_ok = s2_err <= 1e-7;
  const bool mc_ok = std::abs(mean_z) <= 3.0 && std::abs(var_z) <= 3.0;
  r["mu_ok"] = mu_ok;
  r["sigma2_ok"] = s2_ok;
  r["monte_carlo_ok"] = mc_ok;
  r["pass"] = mu_ok && s2_ok && mc_ok && swapped_err <= 1e-7;
  return out;
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  f << bytes;
  if (!f) throw std::runtime_error("write failed for " + path.string());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

CommandResult execute(const std::string& command, const ResolvedConfig& config) {
  CommandResult out;
  if (command == "simulate") out = simulate(config);
  else if (command == "analyze") out = analyze(config);
  else if (command == "clt-hitting") out = clt(config, false);
  else if (command == "clt-position") out = clt(config, true);
  else if (command == "lln") out = lln(config);
  else if (command == "diagnostics") out = diagnostics(config);
  else if (command == "oracle-check") out = oracle_check(config);
  else throw ConfigError("unknown command \"" + command + "\"");
  Json report;
  report["command"] = command;
  report["status"] = "ok";
  for (auto& [k, val] : out.report.items()) report[k] = std::move(val);
  out.report = std::move(report);
  return out;
}

int run(const RunOptions& options, std::ostream& out, std::ostream& err) {
  const std::string started = utc_now();
  const auto t0 = std::chrono::steady_clock::now();
  Json manifest;
  manifest["tool"] = {{"name", "rwre"}, {"version", kToolVersion}};
  manifest["command"] = options.command;
  manifest["config_path"] = options.config_path.string();

  std::optional<CommandResult> result;
  Json error_report;
  int code = kExitOk;
  try {
    const Json doc = parse_json_text(read_file(options.config_path), options.config_path.string());
    const ResolvedConfig rc = resolve_config(doc, options);
    manifest["config"] = rc.snapshot;
    manifest["seeds"] = {{"master", rc.master_seed},
                         {"source", rc.seed_source},
                         {"env", rc.experiment.env_seed},
                         {"walk", rc.experiment.walk_seed}};
    manifest["workers"] = rc.experiment.workers;
    for (const auto& w : rc.experiment.model.warnings()) err << "warning: " << w << '\n';
    result = execute(options.command, rc);
  } catch (const Error& e) {
    code = exit_code(e.error_class());
    error_report = {{"command", options.command},
                    {"status", "error"},
                    {"error", {{"name", e.name()}, {"class", class_name(e.error_class())}, {"message", e.what()}}}};
    err << "error: " << e.what() << '\n';
  } catch (const std::exception& e) {
    code = kExitInternal;
    error_report = {{"command", options.command},
                    {"status", "error"},
                    {"error", {{"name", "InternalError"}, {"class", "internal"}, {"message", e.what()}}}};
    err << "error: " << e.what() << '\n';
  }

  try {
    std::filesystem::create_directories(options.out_dir);
    std::vector<std::pair<std::string, std::string>> files;
    if (result) {
      files.emplace_back("report.json", result->report.dump(2) + "\n");
      files.emplace_back("samples.csv", result->samples.render());
      files.emplace_back("cdf.csv", result->cdf.render());
    } else {
      files.emplace_back("report.json", error_report.dump(2) + "\n");
    }
    Json inventory = Json::array();
    for (const auto& [name, bytes] : files) {
      write_file(options.out_dir / name, bytes);
      inventory.push_back({{"name", name}, {"bytes", bytes.size()}, {"sha256", sha256_hex(bytes)}});
    }
    manifest["files"] = std::move(inventory);
    manifest["exit_code"] = code;
    manifest["started_at"] = started;
    manifest["finished_at"] = utc_now();
    manifest["elapsed_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_file(options.out_dir / "manifest.json", manifest.dump(2) + "\n");
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return code == kExitOk ? kExitInternal : code;
  }

  if (result) {
    const Json& r = result->report;
    out << options.command;
    if (r.contains("ks_distance")) out << " ks_distance=" << r["ks_distance"].dump();
    if (r.contains("threshold")) out << " threshold=" << r["threshold"].dump();
    if (r.contains("pass")) out << " pass=" << r["pass"].dump();
    out << " out=" << options.out_dir.string() << '\n';
  }
  return code;
}

}  // namespace rwre::cli
