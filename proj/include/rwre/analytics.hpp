#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "rwre/env.hpp"

namespace rwre::analytics {

/// Series truncation: stop once the running A-product falls below
/// tol x (partial sum); exceeding max_terms raises NonSummable.
struct SeriesOptions {
  double tol = 1e-16;
  std::size_t max_terms = 100000;
};

struct SiteAnalytics {
  std::int64_t k = 0;
  double A = 0.0;

  double mu = 0.0;
  double mu_trunc_bound = 0.0;
  std::size_t mu_terms = 0;
  /// mu_k from the left-to-right recursion seeded at the truncation depth.
  double mu_recursion = 0.0;

  double sigma2 = 0.0;
  double sigma2_trunc_bound = 0.0;
  std::size_t sigma2_terms = 0;
  /// sigma_k^2 from the one-step identity applied to the series at k - 1.
  double sigma2_recursion = 0.0;
};

/// mu_k = 1 + 2 sum_{j>=0} prod_{i=k-j}^{k} A_i.
SiteAnalytics mu_site(const env::EnvironmentWindow& window, std::int64_t k,
                      const SeriesOptions& opts = {});

/// sigma_k^2 = sum_{j>=0} p_{k-j}^{-1} (mu_{k-j-1} + 1)^2 prod_{i=k-j}^{k} A_i.
/// Also fills the mu fields.
SiteAnalytics sigma2_site(const env::EnvironmentWindow& window, std::int64_t k,
                          const SeriesOptions& opts = {});

/// sigma_k^2 = A_k (sigma_{k-1}^2 + p_k^{-1} (mu_{k-1} + 1)^2).
inline double sigma2_one_step(double p_k, double sigma2_prev, double mu_prev) noexcept {
  const double a = (1.0 - p_k) / p_k;
  return a * (sigma2_prev + (mu_prev + 1.0) * (mu_prev + 1.0) / p_k);
}

/// mu_k = A_k mu_{k-1} + p_k^{-1}.
inline double mu_one_step(double p_k, double mu_prev) noexcept {
  return ((1.0 - p_k) * mu_prev + 1.0) / p_k;
}

/// mu_k and sigma_k^2 for every k in [first, last], computed by the forward
/// recursions from a seed site far enough left that its error has been
/// damped by a product of A's below `seed_tol`.
class SiteTable {
 public:
  static SiteTable build(const env::EnvironmentWindow& window, std::int64_t first,
                         std::int64_t last, double seed_tol = 1e-18);

  std::int64_t first() const noexcept { return first_; }
  std::int64_t last() const noexcept { return first_ + static_cast<std::int64_t>(mu_.size()) - 1; }
  bool contains(std::int64_t k) const noexcept { return k >= first() && k <= last(); }
  double mu(std::int64_t k) const;
  double sigma2(std::int64_t k) const;
  std::span<const double> mu_values() const noexcept { return mu_; }
  std::span<const double> sigma2_values() const noexcept { return sigma2_; }
  std::int64_t seed_site() const noexcept { return seed_site_; }
  /// Upper estimate of |mu_k(table) - mu_k| over the table.
  double trunc_bound() const noexcept { return trunc_bound_; }

 private:
  std::int64_t first_ = 0;
  std::int64_t seed_site_ = 0;
  double trunc_bound_ = 0.0;
  std::vector<double> mu_;
  std::vector<double> sigma2_;
};

struct CenteringValues {
  double t = 0.0;
  double b = 0.0;                  // explicit centering
  std::int64_t b_tilde = 0;        // implicit centering
  double H_at_b_tilde = 0.0;
  double H_at_b_tilde_plus_1 = 0.0;
};

/// Memoized H(n) = sum_{k=0}^{n-1} mu_k for 0 <= n <= max_n(), accumulated
/// with compensated summation. Immutable after construction.
class CenteringTable {
 public:
  /// The table must contain sites [0, n_max).
  CenteringTable(const SiteTable& sites, std::int64_t n_max);

  std::int64_t max_n() const noexcept { return static_cast<std::int64_t>(prefix_.size()) - 1; }
  /// H(y) = H(floor y); throws WindowTooSmall beyond max_n().
  double H(double y) const;
  /// Unique integer b with H(b) <= t < H(b + 1).
  CenteringValues implicit_centering(double t) const;
  /// b(t) = 2 t / mu - H(t / mu) / mu.
  double explicit_centering(double mu, double t) const;

 private:
  std::vector<double> prefix_;
};

/// H(n) over a window, building the site table on the fly.
double centering_H(const env::EnvironmentWindow& window, double n);

struct SummaryBudget {
  std::int64_t sites = 1'000'000;
  std::uint64_t seed = 0x5EEDull;
};

struct SummaryStatistics {
  double lambda = 0.0;
  double r1 = 0.0;
  double r2 = 0.0;
  double mu = 0.0;
  double mu_se = 0.0;
  env::Method mu_method = env::Method::kClosedForm;
  double sigma2 = 0.0;
  double sigma2_se = 0.0;
  env::Method sigma2_method = env::Method::kErgodicAverage;
  double sigma_star = 0.0;

  /// i.i.d. only: the closed form with (1 + r(1)^2), and with
  /// (1 + r(1)), which is the exact stationary second moment.
  std::optional<double> sigma2_closed_form_r1_squared;
  std::optional<double> sigma2_closed_form;
  bool closed_form_discrepancy = false;
};

/// Global functionals for a CLT-eligible law; throws NotCltEligible when
/// lambda >= 0 or r(2) >= 1.
SummaryStatistics summary(const env::EnvironmentModel& model, const SummaryBudget& budget = {});

/// sigma*^2 = mu^-3 sigma^2.
inline double sigma_star_squared(double mu, double sigma2) noexcept { return sigma2 / (mu * mu * mu); }

/// mu_0 and sigma_0^2 at rotation phase w of a quasi-periodic law.
struct PhaseMoments {
  double mu;
  double sigma2;
};
PhaseMoments phase_moments(const env::QuasiPeriodic& law, double w);

double explicit_centering(const CenteringTable& table, const SummaryStatistics& stats, double t);
CenteringValues implicit_centering(const CenteringTable& table, double t);

struct FluctuationSeries {
  std::vector<std::int64_t> n;
  std::vector<double> script_H;       // sum_{j<n} (mu_j - mu)
  std::vector<double> script_H_star;  // max_{0<=s<n} |sum_{j<=s} (mu_j - mu)|
};

/// Single left-to-right pass; n_grid must be sorted and >= 1.
FluctuationSeries fluctuation_series(const SiteTable& sites, double mu,
                                     std::span<const std::int64_t> n_grid);

/// sum_{k=floor(from)}^{floor(to)} d_k, and -sum_{floor(to)}^{floor(from)} when
/// floor(to) < floor(from). values[i] is d_{first_index + i}.
double signed_range_sum(std::span<const double> values, std::int64_t first_index, double from,
                        double to);

/// Prefix sums of (mu_k - mu) for O(1) signed range sums.
class DeviationPrefix {
 public:
  DeviationPrefix(const SiteTable& sites, double mu);
  std::int64_t first() const noexcept { return first_; }
  std::int64_t last() const noexcept { return first_ + static_cast<std::int64_t>(prefix_.size()) - 2; }
  /// Same convention as signed_range_sum.
  double signed_sum(double from, double to) const;
  /// sum over the integer range [a, b], a <= b.
  double sum(std::int64_t a, std::int64_t b) const;

 private:
  std::int64_t first_;
  std::vector<double> prefix_;
};

}  // namespace rwre::analytics
