#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <unistd.h>

#include "rwre/cli.hpp"

using namespace rwre;
using namespace rwre::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("rwre_test_cli_" + std::to_string(::getpid())) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

struct Outcome {
  int code;
  fs::path out;
  std::string stdout_text;
  std::string stderr_text;
};

Outcome run_config(const std::string& command, const std::string& config_text, const std::string& name,
                   RunOptions extra = {}) {
  const fs::path dir = scratch(name);
  const fs::path cfg = dir / "config.json";
  std::ofstream(cfg) << config_text;
  extra.command = command;
  extra.config_path = cfg;
  extra.out_dir = dir / "out";
  std::ostringstream out, err;
  const int code = run(extra, out, err);
  return {code, extra.out_dir, out.str(), err.str()};
}

Json report_of(const Outcome& o) { return Json::parse(slurp(o.out / "report.json")); }

std::string first_line(const std::string& s) { return s.substr(0, s.find('\n')); }

RunOptions options(const std::string& command) {
  RunOptions o;
  o.command = command;
  return o;
}

const char* kConstant =
    R"({"model": {"type": "constant", "p": 0.75}, "experiment": {"n": 200, "t": 400, "replicas": 300}, "seeds": {"master": 7}})";

}  // namespace

TEST_CASE("exit codes are distinct per error class") {
  const int codes[] = {exit_code(ErrorClass::kConfig), exit_code(ErrorClass::kEligibility),
                       exit_code(ErrorClass::kNonConvergence), exit_code(ErrorClass::kGuardBreach),
                       exit_code(ErrorClass::kDomain)};
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(codes[i] != 0);
    CHECK(codes[i] != kExitInternal);
    for (std::size_t j = i + 1; j < 5; ++j) CHECK(codes[i] != codes[j]);
  }
  CHECK(exit_code(ErrorClass::kConfig) == 2);
  CHECK(exit_code(ErrorClass::kEligibility) == 3);
}

TEST_CASE("parse_model reads every law and rejects bad fields by path") {
  CHECK(parse_model(Json::parse(R"({"type": "constant", "p": 0.75})")).is_constant());
  CHECK(parse_model(Json::parse(R"({"type": "preset", "name": "golden_ratio"})")).is_quasi_periodic());
  const auto d = parse_model(Json::parse(R"({"type": "iid_discrete", "atoms": [{"p": 0.8, "weight": 0.5}, {"p": 0.6, "weight": 0.5}]})"));
  CHECK(d.id() == env::two_point_model().id());
  const auto u = parse_model(Json::parse(R"({"type": "iid_parametric", "family": "uniform", "p_lo": 0.6, "p_hi": 0.8})"));
  CHECK(u.is_iid());
  for (const char* m : {R"({"type": "constant", "p": 0.75})", R"({"type": "preset", "name": "two_point"})",
                        R"({"type": "quasi_periodic", "alpha": 0.25, "omega0": 0.1, "coeffs": [0.7, 0.1, 0.05]})",
                        R"({"type": "iid_parametric", "family": "beta", "params": [2, 3], "p_lo": 0.55, "p_hi": 0.9})"}) {
    const auto model = parse_model(Json::parse(m));
    CHECK(parse_model(model_to_json(model)).id() == model.id());
  }

  auto message = [](const char* text) {
    try {
      parse_model(Json::parse(text));
    } catch (const Error& e) {
      CHECK(e.error_class() == ErrorClass::kConfig);
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(message(R"({"type": "constant", "p": 1.2})").find("model.p") != std::string::npos);
  CHECK(message(R"({"type": "constant", "p": 0.7, "q": 0.3})").find("model.q") != std::string::npos);
  CHECK(message(R"({"type": "constant", "p": "x"})").find("model.p") != std::string::npos);
  CHECK(message(R"({"type": "triangle"})").find("model.type") != std::string::npos);
  CHECK(message(R"({"type": "preset", "name": "nope"})").find("model.name") != std::string::npos);
  CHECK(message(R"({"type": "iid_discrete", "atoms": [{"p": 0.8}]})").find("model.atoms[0]") != std::string::npos);
}

TEST_CASE("config errors name the field and carry line numbers for syntax errors") {
  try {
    parse_json_text("{\n  \"model\": {,\n}", "cfg.json");
    FAIL("expected a parse error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("cfg.json") != std::string::npos);
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  auto opts = options("clt-hitting");
  CHECK_THROWS_WITH_AS(resolve_config(Json::parse(R"({"model": {"type": "constant", "p": 0.75}, "experiment": {"replica": 5}})"), opts),
                       doctest::Contains("experiment.replica"), ConfigError);
  CHECK_THROWS_WITH_AS(resolve_config(Json::parse(R"({"model": {"type": "constant", "p": 0.75}, "experiment": {"n": 1.5}})"), opts),
                       doctest::Contains("experiment.n"), ConfigError);
  CHECK_THROWS_WITH_AS(resolve_config(Json::parse(R"({"experiment": {}})"), opts), doctest::Contains("model"), ConfigError);
  CHECK_THROWS_AS(resolve_config(Json::parse(R"({"model": {"type": "constant", "p": 0.75}, "seeds": {"master": -1}})"), opts),
                  ConfigError);
}

TEST_CASE("seeds") {
  CHECK(parse_seed("0xC0FFEE", "s") == kDefaultSeed);
  CHECK(parse_seed("12648430", "s") == kDefaultSeed);
  CHECK(parse_seed("18446744073709551615", "s") == 18446744073709551615ull);
  CHECK_THROWS_AS(parse_seed("-1", "s"), ConfigError);
  CHECK_THROWS_AS(parse_seed("12x", "s"), ConfigError);
  CHECK_THROWS_AS(parse_seed("18446744073709551616", "s"), ConfigError);

  const Json with = Json::parse(R"({"model": {"type": "constant", "p": 0.75}, "seeds": {"master": 11}})");
  const Json without = Json::parse(R"({"model": {"type": "constant", "p": 0.75}})");
  auto opts = options("simulate");
  CHECK(resolve_config(without, opts).master_seed == kDefaultSeed);
  CHECK(resolve_config(without, opts).seed_source == "default");
  CHECK(resolve_config(with, opts).master_seed == 11);
  CHECK(resolve_config(with, opts).seed_source == "config");
  opts.env_seed = "22";
  CHECK(resolve_config(with, opts).master_seed == 22);
  CHECK(resolve_config(with, opts).seed_source == "env");
  opts.seed = 33;
  CHECK(resolve_config(with, opts).master_seed == 33);
  CHECK(resolve_config(with, opts).seed_source == "flag");

  // Different master seeds give different derived env and walk seeds.
  const auto a = resolve_config(with, options("simulate"));
  auto o2 = options("simulate");
  o2.seed = 12;
  const auto b = resolve_config(with, o2);
  CHECK(a.experiment.env_seed != b.experiment.env_seed);
  CHECK(a.experiment.walk_seed != b.experiment.walk_seed);
}

TEST_CASE("command line overrides and per-command defaults") {
  const Json doc = Json::parse(R"({"model": {"type": "constant", "p": 0.75}, "experiment": {"centering": "explicit"}})");
  auto opts = options("clt-position");
  CHECK(resolve_config(doc, opts).experiment.centering == harness::Centering::kExplicit);
  opts.centering = harness::Centering::kImplicit;
  opts.workers = 3;
  const auto rc = resolve_config(doc, opts);
  CHECK(rc.experiment.centering == harness::Centering::kImplicit);
  CHECK(rc.experiment.workers == 3);
  CHECK(resolve_config(doc, options("diagnostics")).experiment.environments == 20);
  CHECK(resolve_config(doc, options("lln")).experiment.t_grid.back() == 100000);
}

TEST_CASE("simulate writes the four files with stable headers") {
  const auto o = run_config("simulate", kConstant, "simulate");
  REQUIRE(o.code == 0);
  for (const char* f : {"manifest.json", "report.json", "samples.csv", "cdf.csv"}) CHECK(fs::exists(o.out / f));

  const std::string samples = slurp(o.out / "samples.csv");
  CHECK(first_line(samples) == "replica,T_n,X_t");
  CHECK(std::count(samples.begin(), samples.end(), '\n') == 301);
  CHECK(samples.find('\r') == std::string::npos);
  CHECK(samples.back() == '\n');
  CHECK(first_line(slurp(o.out / "cdf.csv")) == "x,ecdf,phi,diff");

  const Json r = report_of(o);
  CHECK(r["command"] == "simulate");
  CHECK(r["status"] == "ok");
  for (const char* k : {"hitting", "position", "variance_identity", "pass"}) CHECK(r.contains(k));
  for (const char* k : {"experiment", "replicas", "ks_distance", "threshold", "pass", "mu", "sigma", "sigma_star",
                        "sigma2_window", "centering", "centering_bias_z", "cdf", "ks_by_environment", "env_seed",
                        "walk_seed", "model_summary", "notes"}) {
    CHECK_MESSAGE(r["hitting"].contains(k), k);
  }

  const Json m = Json::parse(slurp(o.out / "manifest.json"));
  for (const char* k : {"tool", "command", "config_path", "config", "seeds", "workers", "files", "exit_code",
                        "started_at", "finished_at", "elapsed_seconds"}) {
    CHECK_MESSAGE(m.contains(k), k);
  }
  CHECK(m["tool"]["version"] == kToolVersion);
  CHECK(m["seeds"]["master"] == 7);
  CHECK(m["seeds"]["source"] == "config");
  REQUIRE(m["files"].size() == 3);
  for (const auto& f : m["files"]) {
    const std::string bytes = slurp(o.out / f["name"].get<std::string>());
    CHECK(f["bytes"] == bytes.size());
    CHECK(f["sha256"] == sha256_hex(bytes));
  }
  CHECK(o.stdout_text.find("simulate") == 0);
}

TEST_CASE("rerunning a manifest reproduces the result files for any worker count") {
  const auto first = run_config("clt-hitting", kConstant, "rerun_a");
  REQUIRE(first.code == 0);
  const Json m = Json::parse(slurp(first.out / "manifest.json"));
  for (unsigned workers : {1u, 5u}) {
    RunOptions o = options("clt-hitting");
    o.config_path = first.out / "manifest.json";
    o.out_dir = scratch("rerun_b" + std::to_string(workers));
    o.workers = workers;
    std::ostringstream out, err;
    REQUIRE(run(o, out, err) == 0);
    const Json m2 = Json::parse(slurp(o.out_dir / "manifest.json"));
    for (std::size_t i = 0; i < 3; ++i) CHECK(m2["files"][i]["sha256"] == m["files"][i]["sha256"]);
    CHECK(m2["seeds"]["env"] == m["seeds"]["env"]);
    CHECK(m2["seeds"]["walk"] == m["seeds"]["walk"]);
  }
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("malformed model exits with the config code and names the field") {
  const auto o = run_config("simulate", R"({"model": {"type": "constant", "p": 1.2}})", "bad_model");
  CHECK(o.code == kExitConfig);
  const Json r = report_of(o);
  CHECK(r["status"] == "error");
  CHECK(r["error"]["name"] == "ModelError");
  CHECK(r["error"]["message"].get<std::string>().find("model.p") != std::string::npos);
  CHECK_FALSE(fs::exists(o.out / "samples.csv"));
  CHECK(Json::parse(slurp(o.out / "manifest.json"))["exit_code"] == kExitConfig);

  CHECK(run_config("simulate", "{not json", "bad_json").code == kExitConfig);
  RunOptions missing = options("simulate");
  missing.config_path = "/nonexistent/config.json";
  missing.out_dir = scratch("missing");
  std::ostringstream out, err;
  CHECK(run(missing, out, err) == kExitConfig);
}

TEST_CASE("recurrent laws give a clean eligibility error") {
  const char* half = R"({"model": {"type": "constant", "p": 0.5}, "experiment": {"replicas": 100}})";
  for (const char* cmd : {"clt-hitting", "clt-position", "oracle-check", "lln"}) {
    const auto o = run_config(cmd, half, std::string("half_") + cmd);
    CHECK_MESSAGE(o.code == kExitEligibility, cmd);
    CHECK(report_of(o)["error"]["name"] == "NotCltEligible");
  }
  // analyze reports instead of failing.
  const auto a = run_config("analyze", half, "half_analyze");
  CHECK(a.code == 0);
  const Json r = report_of(a);
  CHECK(r["classification"]["regime"] == "recurrent");
  CHECK(r["summary"].is_null());
  CHECK(r.contains("summary_error"));
}

TEST_CASE("analyze reports the law-level functionals") {
  const auto o = run_config("analyze", R"({"model": {"type": "preset", "name": "two_point"}, "experiment": {"n": 50, "summary_sites": 20000}})",
                            "analyze");
  REQUIRE(o.code == 0);
  const Json r = report_of(o);
  CHECK(r["lambda"]["value"].get<double>() == doctest::Approx(-0.895880).epsilon(1e-6));
  CHECK(r["r_kappa"].size() == 9);
  CHECK(r["log_r_convex"] == true);
  CHECK(r["conditions"]["clt_eligible"] == true);
  CHECK(r["summary"]["mu"].get<double>() == doctest::Approx(2.692308).epsilon(1e-6));
  const std::string s = slurp(o.out / "samples.csv");
  CHECK(first_line(s) == "k,p,A,mu,sigma2,H");
  CHECK(std::count(s.begin(), s.end(), '\n') == 51);
}

TEST_CASE("oracle-check on a constant environment") {
  const auto o = run_config(
      "oracle-check",
      R"({"model": {"type": "constant", "p": 0.75}, "experiment": {"oracle_sites": 20, "oracle_samples": 200000, "summary_sites": 20000}})",
      "oracle_constant");
  REQUIRE(o.code == 0);
  const Json r = report_of(o);
  const Json& row = r["discrepancy_table"][0];
  CHECK(row["closed_form_r1_squared"].get<double>() == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(row["closed_form"].get<double>() == doctest::Approx(6.0).epsilon(1e-12));
  CHECK(row["ergodic"].get<double>() == doctest::Approx(6.0).epsilon(1e-10));
  CHECK(std::abs(row["monte_carlo"].get<double>() - 6.0) < 4 * row["monte_carlo_se"].get<double>());
  CHECK(row["discrepancy"] == true);
  CHECK(r["increment_forcing"]["swapped_matches"] == true);
  CHECK(r["increment_forcing"]["unswapped_matches"] == false);
  CHECK(r["pass"] == true);
  CHECK(first_line(slurp(o.out / "samples.csv")) ==
        "k,p,mu_series,mu_oracle,sigma2_series,sigma2_oracle,sigma2_forcing_unswapped,sigma2_forcing_swapped");
}

TEST_CASE("oracle-check on a random i.i.d. window") {
  const auto o = run_config(
      "oracle-check",
      R"({"model": {"type": "preset", "name": "two_point"}, "experiment": {"oracle_sites": 100, "oracle_samples": 100000, "summary_sites": 20000}})",
      "oracle_two_point");
  REQUIRE(o.code == 0);
  const Json r = report_of(o);
  CHECK(r["max_abs_mu_error"].get<double>() <= 1e-8);
  CHECK(r["mu_ok"] == true);
  CHECK(r["sigma2_ok"] == true);
}

TEST_CASE("clt-position with implicit centering on the golden-ratio rotation") {
  RunOptions extra;
  extra.centering = harness::Centering::kImplicit;
  const auto o = run_config("clt-position",
                            R"({"model": {"type": "preset", "name": "golden_ratio"}, "experiment": {"t": 2000, "replicas": 1000}})",
                            "golden", extra);
  REQUIRE(o.code == 0);
  const Json r = report_of(o);
  CHECK(r.contains("ks_distance"));
  CHECK(r.contains("pass"));
  CHECK(r["implicit_b"].is_number_integer());
  CHECK(first_line(slurp(o.out / "samples.csv")) == "replica,raw,z,z_alt");
}

TEST_CASE("lln and diagnostics sample tables") {
  const auto l = run_config("lln",
                            R"({"model": {"type": "constant", "p": 0.75}, "experiment": {"n_grid": [100, 1000], "t_grid": [100, 1000], "lln_threshold": 0.2}})",
                            "lln");
  REQUIRE(l.code == 0);
  CHECK(first_line(slurp(l.out / "samples.csv")) == "kind,scale,value,available");
  const auto d = run_config(
      "diagnostics",
      R"({"model": {"type": "preset", "name": "two_point"}, "experiment": {"n_grid": [100, 1000], "t_grid": [100, 1000], "environments": 2, "coupling_trajectories": 50, "summary_sites": 20000, "ergodicity_grid": [10, 100], "ergodicity_window": 100}})",
      "diagnostics");
  REQUIRE(d.code == 0);
  CHECK(first_line(slurp(d.out / "samples.csv")) == "t,x,env,rel1,rel2,rel1_shifted");
  const Json r = report_of(d);
  for (const char* k : {"rel", "ergodicity", "variance_ratio", "coupling", "pass"}) CHECK(r.contains(k));
}

TEST_CASE("csv rendering") {
  Table t{{"a", "b"}, {{"1", "x,y"}, {"2", "say \"hi\""}}};
  CHECK(t.render() == "a,b\n1,\"x,y\"\n2,\"say \"\"hi\"\"\"\n");
  t.rows.push_back({"3"});
  CHECK_THROWS(t.render());
}

TEST_CASE("non-finite numbers serialize as null") {
  harness::LlnReport r;
  r.mu = std::numeric_limits<double>::infinity();
  CHECK(to_json(r)["mu"].is_null());
}
