#pragma once

// Config loading, report serialization and the subcommand runner behind the
// rwre executable.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rwre/error.hpp"
#include "rwre/harness.hpp"

namespace rwre::cli {

using Json = nlohmann::ordered_json;

inline constexpr const char* kToolVersion = "0.3.0";
inline constexpr std::uint64_t kDefaultSeed = 0xC0FFEEull;

enum ExitCode : int {
  kExitOk = 0,
  kExitInternal = 1,
  kExitConfig = 2,
  kExitEligibility = 3,
  kExitNonConvergence = 4,
  kExitGuardBreach = 5,
  kExitDomain = 6,
};

int exit_code(ErrorClass cls) noexcept;

inline const std::vector<std::string>& commands() {
  static const std::vector<std::string> names{"simulate", "analyze",     "clt-hitting", "clt-position",
                                              "lln",      "diagnostics", "oracle-check"};
  return names;
}

struct RunOptions {
  std::string command;
  std::filesystem::path config_path;
  std::filesystem::path out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
  std::optional<harness::Centering> centering;
  /// Value of RWRE_SEED, if set.
  std::optional<std::string> env_seed;
};

/// Parses a tagged model object; ConfigError messages name the field path.
env::EnvironmentModel parse_model(const Json& model, const std::string& path = "model");
Json model_to_json(const env::EnvironmentModel& model);

/// Settings of one run after defaults, seed precedence and CLI overrides.
struct ResolvedConfig {
  explicit ResolvedConfig(harness::ExperimentConfig e) : experiment(std::move(e)) {}

  harness::ExperimentConfig experiment;
  std::uint64_t master_seed = kDefaultSeed;
  std::string seed_source = "default";  // flag | env | config | default
  std::int64_t trajectories = 1;        // lln
  std::int64_t coupling_trajectories = 1000;
  std::int64_t coupling_t = 60;
  std::vector<std::int64_t> ergodicity_grid{100, 1000, 10000};
  std::int64_t oracle_a = -40;
  std::int64_t oracle_sites = 200;
  std::uint64_t oracle_samples = 1'000'000;
  double gamma = env::kDefaultGamma;
  /// Fully expanded config document, written to the manifest.
  Json snapshot;
};

/// Reads a config document (or the "config" member of a manifest).
ResolvedConfig resolve_config(const Json& document, const RunOptions& options);

/// Parses JSON text; syntax errors become ConfigError with line and column.
Json parse_json_text(const std::string& text, const std::string& source);

std::uint64_t parse_seed(const std::string& text, const std::string& what);

/// Serialization of harness results.
Json to_json(const analytics::SummaryStatistics& s);
Json to_json(const harness::ExperimentReport& r);
Json to_json(const harness::LlnReport& r);
Json to_json(const harness::VarianceRatioReport& r);
Json to_json(const harness::DiagnosticReport& r);
Json to_json(const harness::ErgodicityReport& r);
Json to_json(const harness::CouplingReport& r);
Json to_json(const env::ConditionReport& r);

/// Minimal CSV table: header plus rows of preformatted cells.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::string render() const;
};

Table cdf_table(const std::vector<harness::CdfPoint>& cdf);
inline const std::vector<std::string>& cdf_header() {
  static const std::vector<std::string> h{"x", "ecdf", "phi", "diff"};
  return h;
}

/// Output of one subcommand before it is written to disk.
struct CommandResult {
  Json report;
  Table samples;
  Table cdf{cdf_header(), {}};
};

CommandResult execute(const std::string& command, const ResolvedConfig& config);

std::string sha256_hex(const std::string& bytes);

/// Full pipeline: load config, execute, write manifest.json, report.json,
/// samples.csv and cdf.csv. Errors are reported on `err` and in report.json.
int run(const RunOptions& options, std::ostream& out, std::ostream& err);

}  // namespace rwre::cli
