#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <set>
#include <string>

#include "rwre/cli.hpp"
#include "rwre/rng.hpp"

namespace rwre::cli {
namespace {

constexpr std::uint64_t kEnvSeedTag = 0x454E5653ull;   // "ENVS"
constexpr std::uint64_t kWalkSeedTag = 0x57414C4Bull;  // "WALK"

std::string type_name(const Json& j) { return j.type_name(); }

[[noreturn]] void bad(const std::string& path, const std::string& what) { throw ConfigError(path + ": " + what); }

void require_object(const Json& j, const std::string& path) {
  if (!j.is_object()) bad(path, std::string("expected an object, got ") + type_name(j));
}

void reject_unknown(const Json& obj, const std::set<std::string>& known, const std::string& path) {
  for (const auto& [key, _] : obj.items()) {
    if (!known.count(key)) bad(path + "." + key, "unknown field");
  }
}

const Json& member(const Json& obj, const std::string& key, const std::string& path) {
  const auto it = obj.find(key);
  if (it == obj.end()) bad(path + "." + key, "missing required field");
  return *it;
}

double as_double(const Json& j, const std::string& path) {
  if (!j.is_number()) bad(path, std::string("expected a number, got ") + type_name(j));
  return j.get<double>();
}

std::int64_t as_int(const Json& j, const std::string& path) {
  if (j.is_number_integer()) return j.get<std::int64_t>();
  if (j.is_number_float()) {
    const double v = j.get<double>();
    if (v == std::floor(v) && std::abs(v) < 9.0e15) return static_cast<std::int64_t>(v);
  }
  bad(path, std::string("expected an integer, got ") + type_name(j));
}

std::uint64_t as_seed(const Json& j, const std::string& path) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  if (j.is_number_integer()) {
    if (j.get<std::int64_t>() < 0) bad(path, "seed must be non-negative");
    return static_cast<std::uint64_t>(j.get<std::int64_t>());
  }
  if (j.is_string()) return parse_seed(j.get<std::string>(), path);
  bad(path, std::string("expected an unsigned integer or string, got ") + type_name(j));
}

std::vector<double> as_doubles(const Json& j, const std::string& path) {
  if (!j.is_array()) bad(path, std::string("expected an array, got ") + type_name(j));
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(as_double(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

std::vector<std::int64_t> as_ints(const Json& j, const std::string& path) {
  if (!j.is_array()) bad(path, std::string("expected an array, got ") + type_name(j));
  std::vector<std::int64_t> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(as_int(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

harness::Centering parse_centering(const std::string& s, const std::string& path) {
  if (s == "explicit") return harness::Centering::kExplicit;
  if (s == "implicit") return harness::Centering::kImplicit;
  bad(path, "expected \"explicit\" or \"implicit\", got \"" + s + "\"");
}

// Experiment defaults that depend on the subcommand.
struct Defaults {
  std::vector<std::int64_t> n_grid;
  std::vector<std::int64_t> t_grid;
  std::size_t environments = 1;
};

Defaults defaults_for(const std::string& command) {
  if (command == "lln") return {{1000, 10000, 100000}, {1000, 10000, 100000}, 1};
  if (command == "diagnostics") return {{100, 1000, 10000}, {1000, 10000, 100000}, 20};
  return {{100, 1000, 10000}, {100, 1000, 10000}, 1};
}

Json ints_json(const std::vector<std::int64_t>& v) {
  Json a = Json::array();
  for (auto x : v) a.push_back(x);
  return a;
}

Json doubles_json(const std::vector<double>& v) {
  Json a = Json::array();
  for (auto x : v) a.push_back(x);
  return a;
}

}  // namespace

int exit_code(ErrorClass cls) noexcept {
  switch (cls) {
    case ErrorClass::kConfig: return kExitConfig;
    case ErrorClass::kEligibility: return kExitEligibility;
    case ErrorClass::kNonConvergence: return kExitNonConvergence;
    case ErrorClass::kGuardBreach: return kExitGuardBreach;
    case ErrorClass::kDomain: return kExitDomain;
  }
  return kExitInternal;
}

std::uint64_t parse_seed(const std::string& text, const std::string& what) {
  if (text.empty() || text.front() == '-' || text.front() == '+') bad(what, "invalid seed \"" + text + "\"");
  errno = 0;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(text.c_str(), &end, 0);
  if (errno == ERANGE || end == text.c_str() || *end != '\0') bad(what, "invalid seed \"" + text + "\"");
  return static_cast<std::uint64_t>(v);
}

Json parse_json_text(const std::string& text, const std::string& source) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError(source + ": " + e.what());
  }
}

env::EnvironmentModel parse_model(const Json& m, const std::string& path) {
  require_object(m, path);
  const Json& type_j = member(m, "type", path);
  if (!type_j.is_string()) bad(path + ".type", "expected a string");
  const auto type = type_j.get<std::string>();
  if (type == "constant") {
    reject_unknown(m, {"type", "p"}, path);
    return env::EnvironmentModel(env::Constant{as_double(member(m, "p", path), path + ".p")});
  }
  if (type == "iid_discrete") {
    reject_unknown(m, {"type", "atoms"}, path);
    const Json& atoms = member(m, "atoms", path);
    if (!atoms.is_array()) bad(path + ".atoms", "expected an array");
    env::IidDiscrete law;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      const std::string ap = path + ".atoms[" + std::to_string(i) + "]";
      require_object(atoms[i], ap);
      reject_unknown(atoms[i], {"p", "weight"}, ap);
      law.atoms.push_back({as_double(member(atoms[i], "p", ap), ap + ".p"),
                           as_double(member(atoms[i], "weight", ap), ap + ".weight")});
    }
    return env::EnvironmentModel(std::move(law));
  }
  if (type == "iid_parametric") {
    reject_unknown(m, {"type", "family", "params", "p_lo", "p_hi"}, path);
    env::IidParametric law;
    const Json& fam = member(m, "family", path);
    if (!fam.is_string()) bad(path + ".family", "expected a string");
    if (fam == "uniform") law.family = env::Family::kUniform;
    else if (fam == "beta") law.family = env::Family::kBeta;
    else bad(path + ".family", "expected \"uniform\" or \"beta\"");
    if (m.contains("params")) law.params = as_doubles(m["params"], path + ".params");
    law.p_lo = as_double(member(m, "p_lo", path), path + ".p_lo");
    law.p_hi = as_double(member(m, "p_hi", path), path + ".p_hi");
    return env::EnvironmentModel(std::move(law));
  }
  if (type == "quasi_periodic") {
    reject_unknown(m, {"type", "alpha", "omega0", "coeffs"}, path);
    env::QuasiPeriodic law;
    law.alpha = as_double(member(m, "alpha", path), path + ".alpha");
    if (m.contains("omega0")) law.omega0 = as_double(m["omega0"], path + ".omega0");
    law.coeffs = as_doubles(member(m, "coeffs", path), path + ".coeffs");
    return env::EnvironmentModel(std::move(law));
  }
  if (type == "preset") {
    reject_unknown(m, {"type", "name"}, path);
    const Json& name = member(m, "name", path);
    if (name == "golden_ratio") return env::golden_ratio_model();
    if (name == "two_point") return env::two_point_model();
    if (name == "zero_speed") return env::zero_speed_model();
    bad(path + ".name", "expected one of golden_ratio, two_point, zero_speed");
  }
  bad(path + ".type", "unknown model type \"" + type + "\"");
}

Json model_to_json(const env::EnvironmentModel& model) {
  return std::visit(
      [](const auto& law) -> Json {
        using T = std::decay_t<decltype(law)>;
        Json j;
        if constexpr (std::is_same_v<T, env::Constant>) {
          j["type"] = "constant";
          j["p"] = law.p;
        } else if constexpr (std::is_same_v<T, env::IidDiscrete>) {
          j["type"] = "iid_discrete";
          j["atoms"] = Json::array();
          for (const auto& a : law.atoms) j["atoms"].push_back({{"p", a.p}, {"weight", a.weight}});
        } else if constexpr (std::is_same_v<T, env::IidParametric>) {
          j["type"] = "iid_parametric";
          j["family"] = law.family == env::Family::kBeta ? "beta" : "uniform";
          j["params"] = doubles_json(law.params);
          j["p_lo"] = law.p_lo;
          j["p_hi"] = law.p_hi;
        } else {
          j["type"] = "quasi_periodic";
          j["alpha"] = law.alpha;
          j["omega0"] = law.omega0;
          j["coeffs"] = doubles_json(law.coeffs);
        }
        return j;
      },
      model.law());
}

ResolvedConfig resolve_config(const Json& document, const RunOptions& options) {
  const Json* doc = &document;
  // A manifest carries the resolved config of an earlier run.
  if (document.is_object() && document.contains("config") && document.contains("tool")) doc = &document["config"];
  require_object(*doc, "config");
  reject_unknown(*doc, {"model", "experiment", "seeds"}, "config");

  ResolvedConfig rc{harness::ExperimentConfig(parse_model(member(*doc, "model", "config"), "model"))};
  auto& ex = rc.experiment;
  const Defaults defaults = defaults_for(options.command);
  ex.n_grid = defaults.n_grid;
  ex.t_grid = defaults.t_grid;
  ex.environments = defaults.environments;

  const Json empty = Json::object();
  const Json& e = doc->contains("experiment") ? (*doc)["experiment"] : empty;
  require_object(e, "experiment");
  reject_unknown(e,
                 {"n", "t", "replicas", "n_grid", "t_grid", "centering", "x_grid", "c", "ks_threshold",
                  "lln_threshold", "ratio_tolerance", "zero_speed_drop", "left_guard", "environments",
                  "ergodicity_window", "ergodicity_grid", "summary_sites", "summary_seed", "trajectories",
                  "coupling_trajectories", "coupling_t", "oracle_a", "oracle_sites", "oracle_samples", "gamma"},
                 "experiment");
  const std::string p = "experiment.";
  auto positive = [&](std::int64_t v, const char* key) {
    if (v < 1) bad(p + key, "must be >= 1");
    return v;
  };
  if (e.contains("n")) ex.n = as_int(e["n"], p + "n");
  if (e.contains("t")) ex.t = as_int(e["t"], p + "t");
  if (e.contains("replicas")) ex.replicas = static_cast<std::size_t>(positive(as_int(e["replicas"], p + "replicas"), "replicas"));
  if (e.contains("n_grid")) ex.n_grid = as_ints(e["n_grid"], p + "n_grid");
  if (e.contains("t_grid")) ex.t_grid = as_ints(e["t_grid"], p + "t_grid");
  if (e.contains("centering")) {
    if (!e["centering"].is_string()) bad(p + "centering", "expected a string");
    ex.centering = parse_centering(e["centering"].get<std::string>(), p + "centering");
  }
  if (e.contains("x_grid")) ex.x_grid = as_doubles(e["x_grid"], p + "x_grid");
  if (e.contains("c")) ex.c = as_double(e["c"], p + "c");
  if (e.contains("ks_threshold") && !e["ks_threshold"].is_null()) ex.ks_threshold = as_double(e["ks_threshold"], p + "ks_threshold");
  if (e.contains("lln_threshold")) ex.lln_threshold = as_double(e["lln_threshold"], p + "lln_threshold");
  if (e.contains("ratio_tolerance")) ex.ratio_tolerance = as_double(e["ratio_tolerance"], p + "ratio_tolerance");
  if (e.contains("zero_speed_drop")) ex.zero_speed_drop = as_double(e["zero_speed_drop"], p + "zero_speed_drop");
  if (e.contains("left_guard") && !e["left_guard"].is_null()) ex.left_guard = positive(as_int(e["left_guard"], p + "left_guard"), "left_guard");
  if (e.contains("environments")) ex.environments = static_cast<std::size_t>(positive(as_int(e["environments"], p + "environments"), "environments"));
  if (e.contains("ergodicity_window")) ex.ergodicity_window = positive(as_int(e["ergodicity_window"], p + "ergodicity_window"), "ergodicity_window");
  if (e.contains("ergodicity_grid")) rc.ergodicity_grid = as_ints(e["ergodicity_grid"], p + "ergodicity_grid");
  if (e.contains("summary_sites")) ex.summary_budget.sites = positive(as_int(e["summary_sites"], p + "summary_sites"), "summary_sites");
  if (e.contains("summary_seed")) ex.summary_budget.seed = as_seed(e["summary_seed"], p + "summary_seed");
  if (e.contains("trajectories")) rc.trajectories = positive(as_int(e["trajectories"], p + "trajectories"), "trajectories");
  if (e.contains("coupling_trajectories")) rc.coupling_trajectories = positive(as_int(e["coupling_trajectories"], p + "coupling_trajectories"), "coupling_trajectories");
  if (e.contains("coupling_t")) rc.coupling_t = positive(as_int(e["coupling_t"], p + "coupling_t"), "coupling_t");
  if (e.contains("oracle_a")) rc.oracle_a = as_int(e["oracle_a"], p + "oracle_a");
  if (e.contains("oracle_sites")) rc.oracle_sites = positive(as_int(e["oracle_sites"], p + "oracle_sites"), "oracle_sites");
  if (e.contains("oracle_samples")) rc.oracle_samples = static_cast<std::uint64_t>(positive(as_int(e["oracle_samples"], p + "oracle_samples"), "oracle_samples"));
  if (e.contains("gamma")) rc.gamma = as_double(e["gamma"], p + "gamma");
  if (rc.oracle_a >= 0) bad(p + "oracle_a", "must be negative");
  if (!(rc.gamma > 2.0)) bad(p + "gamma", "must be > 2");
  if (!std::is_sorted(rc.ergodicity_grid.begin(), rc.ergodicity_grid.end()) || rc.ergodicity_grid.empty() ||
      rc.ergodicity_grid.front() < 1) {
    bad(p + "ergodicity_grid", "must be a sorted, non-empty list of positive integers");
  }
  for (auto n : ex.n_grid) if (n < 1) bad(p + "n_grid", "entries must be >= 1");
  for (auto t : ex.t_grid) if (t < 1) bad(p + "t_grid", "entries must be >= 1");
  if (options.centering) ex.centering = *options.centering;
  ex.workers = options.workers.value_or(1u);
  harness::validate(ex);

  // Seeds: flag > RWRE_SEED > config > default. Env and walk seeds given in
  // the config apply only when the master seed also comes from the config.
  const Json& s = doc->contains("seeds") ? (*doc)["seeds"] : empty;
  require_object(s, "seeds");
  reject_unknown(s, {"master", "env", "walk"}, "seeds");
  if (options.seed) {
    rc.master_seed = *options.seed;
    rc.seed_source = "flag";
  } else if (options.env_seed) {
    rc.master_seed = parse_seed(*options.env_seed, "RWRE_SEED");
    rc.seed_source = "env";
  } else if (s.contains("master")) {
    rc.master_seed = as_seed(s["master"], "seeds.master");
    rc.seed_source = "config";
  }
  const bool config_owned = rc.seed_source == "config" || rc.seed_source == "default";
  ex.env_seed = config_owned && s.contains("env") ? as_seed(s["env"], "seeds.env")
                                                  : rng::derive_key(rc.master_seed, {kEnvSeedTag});
  ex.walk_seed = config_owned && s.contains("walk") ? as_seed(s["walk"], "seeds.walk")
                                                    : rng::derive_key(rc.master_seed, {kWalkSeedTag});

  Json exj;
  exj["n"] = ex.n;
  exj["t"] = ex.t;
  exj["replicas"] = ex.replicas;
  exj["n_grid"] = ints_json(ex.n_grid);
  exj["t_grid"] = ints_json(ex.t_grid);
  exj["centering"] = harness::to_string(ex.centering);
  exj["x_grid"] = doubles_json(ex.x_grid);
  exj["c"] = ex.c;
  exj["ks_threshold"] = ex.effective_ks_threshold();
  exj["lln_threshold"] = ex.lln_threshold;
  exj["ratio_tolerance"] = ex.ratio_tolerance;
  exj["zero_speed_drop"] = ex.zero_speed_drop;
  exj["left_guard"] = ex.left_guard ? Json(*ex.left_guard) : Json(nullptr);
  exj["environments"] = ex.environments;
  exj["ergodicity_window"] = ex.ergodicity_window;
  exj["ergodicity_grid"] = ints_json(rc.ergodicity_grid);
  exj["summary_sites"] = ex.summary_budget.sites;
  exj["summary_seed"] = ex.summary_budget.seed;
  exj["trajectories"] = rc.trajectories;
  exj["coupling_trajectories"] = rc.coupling_trajectories;
  exj["coupling_t"] = rc.coupling_t;
  exj["oracle_a"] = rc.oracle_a;
  exj["oracle_sites"] = rc.oracle_sites;
  exj["oracle_samples"] = rc.oracle_samples;
  exj["gamma"] = rc.gamma;
  rc.snapshot["model"] = model_to_json(ex.model);
  rc.snapshot["experiment"] = std::move(exj);
  rc.snapshot["seeds"] = {{"master", rc.master_seed}, {"env", ex.env_seed}, {"walk", ex.walk_seed}};
  return rc;
}

}  // namespace rwre::cli
