#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "rwre/analytics.hpp"
#include "rwre/env.hpp"
#include "rwre/walk.hpp"

namespace rwre::harness {

enum class Centering { kExplicit, kImplicit };

const char* to_string(Centering c) noexcept;

struct ExperimentConfig {
  explicit ExperimentConfig(env::EnvironmentModel m) : model(std::move(m)) {}

  env::EnvironmentModel model;
  std::int64_t n = 1000;           // hitting target for clt_hitting
  std::int64_t t = 1000;           // observation time for clt_position
  std::size_t replicas = 1000;
  std::vector<std::int64_t> n_grid;
  std::vector<std::int64_t> t_grid;
  Centering centering = Centering::kImplicit;
  std::vector<double> x_grid{-2.0, -1.0, 0.0, 1.0, 2.0};
  double c = 0.1;
  std::uint64_t env_seed = 1;
  std::uint64_t walk_seed = 2;
  /// Defaults to max(0.03, 3 * 1.36 / sqrt(replicas)).
  std::optional<double> ks_threshold;
  double lln_threshold = 0.02;
  double ratio_tolerance = 0.05;
  double zero_speed_drop = 2.0;
  std::optional<std::int64_t> left_guard;
  unsigned workers = 1;
  /// Number of independent environments for multi-environment runs.
  std::size_t environments = 1;
  std::int64_t ergodicity_window = 10000;
  analytics::SummaryBudget summary_budget{};

  double effective_ks_threshold() const;
};

/// Throws ConfigError when an invariant of the config is violated.
void validate(const ExperimentConfig& config);

/// Seed of the e-th environment in a multi-environment run (e = 0 is env_seed).
std::uint64_t environment_seed(std::uint64_t env_seed, std::size_t e);

/// sup_x |F_m(x) - F(x)| for the empirical CDF of `samples`.
double ks_distance(std::vector<double> samples, const std::function<double(double)>& reference_cdf);

struct CdfPoint {
  double x = 0.0;
  double ecdf = 0.0;
  double phi = 0.0;
  double diff = 0.0;
};

struct ExperimentReport {
  std::string experiment;
  std::vector<double> raw;           // T(n) or X(t) per replica
  std::vector<double> samples;       // standardized, replica order
  std::vector<double> alt_samples;   // clt_position: the other centering
  double ks_distance = 0.0;
  std::vector<CdfPoint> cdf;
  double threshold = 0.0;
  bool pass = false;

  double mu = 0.0;
  double sigma = 0.0;        // scale used for T(n)
  double sigma_star = 0.0;   // scale used for X(t)
  double sigma2_window = 0.0;
  double centering = 0.0;    // H(n) or the chosen b(t)
  double explicit_b = 0.0;
  std::int64_t implicit_b = 0;
  /// mean(raw - centering) in units of its standard error.
  double centering_bias_z = 0.0;
  analytics::SummaryStatistics model_summary;

  std::uint64_t env_seed = 0;
  std::uint64_t walk_seed = 0;
  std::vector<double> ks_by_environment;
  std::vector<std::string> notes;
};

ExperimentReport clt_hitting(const ExperimentConfig& config);
ExperimentReport clt_position(const ExperimentConfig& config);

struct LlnRow {
  std::int64_t scale = 0;
  double value = 0.0;   // mean over replicas of T(n)/n or X(t)/t
  bool available = true;
};

struct LlnReport {
  double mu = 0.0;  // infinite in the zero-speed regime
  bool zero_speed = false;
  std::vector<LlnRow> hitting;   // T(n)/n on n_grid
  std::vector<LlnRow> position;  // X(t)/t on t_grid
  std::vector<LlnRow> running_max;  // max_{s<=t} X(s) / t on t_grid
  double hitting_rel_error = 0.0;
  double position_rel_error = 0.0;
  double position_drop = 0.0;  // (X/t at first t) / (X/t at last t)
  std::size_t environments = 0;
  std::size_t trajectories = 0;  // per environment
  bool pass = false;
  std::vector<std::string> notes;
};

/// Averages over `trajectories` walks in each of config.environments
/// environments; the usual quenched check is environments = trajectories = 1.
LlnReport lln_check(const ExperimentConfig& config, std::size_t trajectories = 1);

struct VarianceRatioRow {
  std::int64_t n = 0;
  double ratio = 0.0;      // sum_{k<n} sigma_k^2 / (n sigma^2)
  double max_share = 0.0;  // max_k sigma_k^2 / sum_{k<n} sigma_k^2
};

struct VarianceRatioReport {
  double sigma2 = 0.0;
  std::vector<VarianceRatioRow> rows;
  bool ratio_ok = false;
  bool share_ok = false;
  bool pass = false;
};

VarianceRatioReport variance_ratio_check(const ExperimentConfig& config);

struct RelRow {
  std::int64_t t = 0;
  double x = 0.0;
  std::vector<double> rel1;   // per environment
  std::vector<double> rel2;
  std::vector<double> rel1_shifted;  // rel1 with the upper limit shifted by -1
  std::vector<double> rel2_bound;  // m * eps_m / sqrt(t), quasi-periodic only
  double median_abs_rel1 = 0.0;
  double median_abs_rel2 = 0.0;
  double median_abs_rel1_shifted = 0.0;
};

struct FluctuationRow {
  std::int64_t n = 0;
  double median_R = 0.0;                // R(n, c)
  double median_H_star_over_sqrt = 0.0;
  double median_H_star_over_n = 0.0;
  double median_H_scaled = 0.0;         // |n^{-(1+c)/2} H(n)|
};

struct DiagnosticReport {
  double mu = 0.0;
  double sigma_star = 0.0;
  double c = 0.0;
  std::vector<std::uint64_t> env_seeds;
  std::vector<RelRow> rel;
  std::vector<FluctuationRow> fluctuation;
  bool rel1_decreasing = false;  // for every x != 0
  bool rel2_decreasing = false;
  bool H_star_over_n_decreasing = false;
  double H_star_over_sqrt_band = 0.0;  // max / min over the grid
  double H_star_over_sqrt_growth = 0.0;  // max / value at the first n
  bool H_star_band_ok = false;
  std::size_t rel2_bound_checks = 0;
  std::size_t rel2_bound_violations = 0;
  bool pass = false;
};

/// Verdict: H*(n)/n decreasing and H*(n)/sqrt(n) at most 10x its first value,
/// plus median |rel1| decreasing for i.i.d. laws or no violation of the
/// m eps_m / sqrt(t) bound on rel2 for quasi-periodic ones.
DiagnosticReport rel_diagnostics(const ExperimentConfig& config);

struct ErgodicityReport {
  std::vector<std::int64_t> n;
  std::vector<double> epsilon;
  double mu_reference = 0.0;
  bool strictly_decreasing = false;
  bool plateau = false;  // epsilon at the largest n above half its first value
  bool uniformly_ergodic = false;
};

/// eps_n = max_{0<=k<K} |n^{-1} sum_{j=k+1}^{k+n} (mu_j - mu)|, with mu the
/// model-level mean.
ErgodicityReport uniform_ergodicity_estimate(const env::EnvironmentModel& model,
                                             const std::vector<std::int64_t>& n_grid, std::int64_t K,
                                             std::uint64_t seed = 1);

struct CouplingReport {
  std::size_t trajectories = 0;
  std::uint64_t event_checks = 0;
  std::uint64_t event_violations = 0;
  std::uint64_t bound_checks = 0;
  std::uint64_t bound_violations = 0;
  std::uint64_t parity_violations = 0;
  std::uint64_t odd_tau_violations = 0;
  bool pass = false;
};

/// Checks {n_t <= y} == {T(y+1) > t} and |X(t) - n_t| <= t - T(n_t) < tau_{n_t}
/// for every t in [0, config.t] and y in [0, n_max] on config.replicas
/// joint trajectories.
CouplingReport coupling_identity_check(const ExperimentConfig& config);

/// Realized window plus site table used by a quenched experiment.
struct QuenchedEnvironment {
  env::EnvironmentWindow window;
  analytics::SiteTable sites;
};

/// Window covering [walk_lo, hi] and the analytic margin on the left; site
/// table over [0, sites_last].
QuenchedEnvironment quench(const env::EnvironmentModel& model, std::uint64_t seed, std::int64_t walk_lo,
                           std::int64_t hi, std::int64_t sites_last);

}  // namespace rwre::harness
