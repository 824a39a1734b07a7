#include "rwre/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "rwre/error.hpp"
#include "rwre/numeric.hpp"

namespace rwre::analytics {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// floor(y), except that y within rounding noise of an integer maps to it.
std::int64_t floor_index(double y) {
  const double r = std::nearbyint(y);
  if (std::abs(y - r) <= 1e-12 * std::max(1.0, std::abs(y))) return static_cast<std::int64_t>(r);
  return static_cast<std::int64_t>(std::floor(y));
}

[[noreturn]] void window_exhausted(const env::EnvironmentWindow& w, std::int64_t k, double prod,
                                   std::size_t terms) {
  const double rho = terms > 0 ? std::pow(prod, 1.0 / static_cast<double>(terms)) : 1.0;
  const std::string where = "site " + std::to_string(k) + ": window [" + std::to_string(w.lo()) + ", " +
                            std::to_string(w.hi()) + "] exhausted after " + std::to_string(terms) +
                            " terms";
  if (!(rho < 1.0 - 1e-12)) throw NonSummable(where + " with no decay of the A-product");
  throw WindowTooSmall(where + " (product " + numeric::shortest(prod) + ")");
}

struct SeriesValue {
  double value = 0.0;
  double bound = 0.0;
  std::size_t terms = 0;
  std::int64_t deepest = 0;  // smallest site index used
};

double tail_bound(double last, double prod, std::size_t terms) {
  const double rho = std::pow(prod, 1.0 / static_cast<double>(terms));
  return rho < 1.0 ? last * rho / (1.0 - rho) : kInf;
}

SeriesValue mu_series(const env::EnvironmentWindow& w, std::int64_t k, const SeriesOptions& opts) {
  (void)w.p(k);
  numeric::KahanSum sum;
  sum.add(1.0);
  double prod = 1.0;
  std::size_t j = 0;
  for (;;) {
    const std::int64_t i = k - static_cast<std::int64_t>(j);
    if (i < w.lo()) window_exhausted(w, k, prod, j);
    if (j >= opts.max_terms) {
      throw NonSummable("site " + std::to_string(k) + ": mu series exceeded " +
                        std::to_string(opts.max_terms) + " terms");
    }
    const double p = w.p_unchecked(i);
    prod *= (1.0 - p) / p;
    sum.add(2.0 * prod);
    ++j;
    if (prod < opts.tol * sum.value()) {
      return {sum.value(), tail_bound(2.0 * prod, prod, j), j, i};
    }
  }
}

SeriesValue sigma2_series(const env::EnvironmentWindow& w, std::int64_t k, const SeriesOptions& opts) {
  (void)w.p(k);
  numeric::KahanSum sum;
  double prod = 1.0;
  std::size_t j = 0;
  for (;;) {
    const std::int64_t i = k - static_cast<std::int64_t>(j);
    if (i - 1 < w.lo()) window_exhausted(w, k, prod, j);
    if (j >= opts.max_terms) {
      throw NonSummable("site " + std::to_string(k) + ": sigma^2 series exceeded " +
                        std::to_string(opts.max_terms) + " terms");
    }
    const double p = w.p_unchecked(i);
    prod *= (1.0 - p) / p;
    const double mu_prev = mu_series(w, i - 1, opts).value;
    const double term = prod * (mu_prev + 1.0) * (mu_prev + 1.0) / p;
    sum.add(term);
    ++j;
    if (term < opts.tol * sum.value()) {
      return {sum.value(), tail_bound(term, prod, j), j, i};
    }
  }
}

}  // namespace

SiteAnalytics mu_site(const env::EnvironmentWindow& window, std::int64_t k, const SeriesOptions& opts) {
  const SeriesValue s = mu_series(window, k, opts);
  SiteAnalytics out;
  out.k = k;
  out.A = env::odds_ratio(window, k);
  out.mu = s.value;
  out.mu_trunc_bound = s.bound;
  out.mu_terms = s.terms;
  // Seed one site beyond the deepest term with the smallest admissible value.
  double mu = 1.0;
  for (std::int64_t i = s.deepest; i <= k; ++i) mu = mu_one_step(window.p_unchecked(i), mu);
  out.mu_recursion = mu;
  return out;
}

SiteAnalytics sigma2_site(const env::EnvironmentWindow& window, std::int64_t k,
                          const SeriesOptions& opts) {
  SiteAnalytics out = mu_site(window, k, opts);
  const SeriesValue s = sigma2_series(window, k, opts);
  out.sigma2 = s.value;
  out.sigma2_trunc_bound = s.bound;
  out.sigma2_terms = s.terms;
  try {
    const double prev = sigma2_series(window, k - 1, opts).value;
    const double mu_prev = mu_series(window, k - 1, opts).value;
    out.sigma2_recursion = sigma2_one_step(window.p(k), prev, mu_prev);
  } catch (const WindowTooSmall&) {
    out.sigma2_recursion = std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

SiteTable SiteTable::build(const env::EnvironmentWindow& window, std::int64_t first, std::int64_t last,
                           double seed_tol) {
  if (first > last) throw DomainError("site table needs first <= last");
  (void)window.p(first);
  (void)window.p(last);
  std::int64_t s = first;
  double prod = 1.0;
  std::size_t terms = 0;
  while (prod >= seed_tol) {
    if (s < window.lo()) window_exhausted(window, first, prod, terms);
    const double p = window.p_unchecked(s);
    prod *= (1.0 - p) / p;
    --s;
    ++terms;
  }
  if (s < window.lo()) window_exhausted(window, first, prod, terms);

  SiteTable t;
  t.first_ = first;
  t.seed_site_ = s;
  const std::size_t n = static_cast<std::size_t>(last - first + 1);
  t.mu_.resize(n);
  t.sigma2_.resize(n);

  const double p_seed = window.p_unchecked(s);
  double mu = 1.0 + 2.0 * (1.0 - p_seed) / p_seed;
  double sigma2 = 0.0;
  double damping = 1.0;  // prod of A over (s, k]
  double worst_damping = 0.0;
  double mu_max = 0.0;
  for (std::int64_t k = s + 1; k <= last; ++k) {
    const double p = window.p_unchecked(k);
    sigma2 = sigma2_one_step(p, sigma2, mu);
    mu = mu_one_step(p, mu);
    damping *= (1.0 - p) / p;
    if (k >= first) {
      const auto idx = static_cast<std::size_t>(k - first);
      t.mu_[idx] = mu;
      t.sigma2_[idx] = sigma2;
      worst_damping = std::max(worst_damping, damping);
      mu_max = std::max(mu_max, mu);
    }
  }
  t.trunc_bound_ = worst_damping * mu_max;
  return t;
}

double SiteTable::mu(std::int64_t k) const {
  if (!contains(k)) throw IndexOutOfWindow("site " + std::to_string(k) + " outside site table");
  return mu_[static_cast<std::size_t>(k - first_)];
}

double SiteTable::sigma2(std::int64_t k) const {
  if (!contains(k)) throw IndexOutOfWindow("site " + std::to_string(k) + " outside site table");
  return sigma2_[static_cast<std::size_t>(k - first_)];
}

CenteringTable::CenteringTable(const SiteTable& sites, std::int64_t n_max) {
  if (n_max < 0) throw DomainError("centering table needs n_max >= 0");
  if (n_max > 0 && !(sites.contains(0) && sites.contains(n_max - 1))) {
    throw WindowTooSmall("centering table needs sites [0, " + std::to_string(n_max - 1) + "]");
  }
  prefix_.resize(static_cast<std::size_t>(n_max) + 1);
  numeric::KahanSum sum;
  prefix_[0] = 0.0;
  for (std::int64_t k = 0; k < n_max; ++k) {
    sum.add(sites.mu(k));
    prefix_[static_cast<std::size_t>(k) + 1] = sum.value();
  }
}

double CenteringTable::H(double y) const {
  if (!(y >= 0.0)) throw DomainError("H(y) needs y >= 0");
  const std::int64_t n = floor_index(y);
  if (n > max_n()) {
    throw WindowTooSmall("H(" + std::to_string(n) + ") beyond table of " + std::to_string(max_n()) + " sites");
  }
  return prefix_[static_cast<std::size_t>(n)];
}

CenteringValues CenteringTable::implicit_centering(double t) const {
  if (!(t >= 0.0)) throw DomainError("implicit centering needs t >= 0");
  if (!(t < prefix_.back())) {
    throw WindowTooSmall("t = " + numeric::shortest(t) + " not bracketed by H over " +
                         std::to_string(max_n()) + " sites");
  }
  const auto it = std::upper_bound(prefix_.begin(), prefix_.end(), t);
  const auto b = static_cast<std::int64_t>(it - prefix_.begin()) - 1;
  CenteringValues v;
  v.t = t;
  v.b_tilde = b;
  v.H_at_b_tilde = prefix_[static_cast<std::size_t>(b)];
  v.H_at_b_tilde_plus_1 = prefix_[static_cast<std::size_t>(b) + 1];
  return v;
}

double CenteringTable::explicit_centering(double mu, double t) const {
  if (!(t >= 0.0)) throw DomainError("explicit centering needs t >= 0");
  return 2.0 * t / mu - H(t / mu) / mu;
}

double centering_H(const env::EnvironmentWindow& window, double n) {
  if (!(n >= 0.0)) throw DomainError("H(n) needs n >= 0");
  const std::int64_t m = floor_index(n);
  if (m == 0) return 0.0;
  const SiteTable sites = SiteTable::build(window, 0, m - 1);
  return CenteringTable(sites, m).H(static_cast<double>(m));
}

double explicit_centering(const CenteringTable& table, const SummaryStatistics& stats, double t) {
  return table.explicit_centering(stats.mu, t);
}

CenteringValues implicit_centering(const CenteringTable& table, double t) {
  return table.implicit_centering(t);
}

PhaseMoments phase_moments(const env::QuasiPeriodic& law, double w) {
  std::vector<double> p;  // p at sites 0, -1, -2, ...
  double prod = 1.0;
  while (prod >= 1e-18) {
    if (p.size() >= 100000) throw NonSummable("phase series exceeded 1e5 terms");
    double phase = std::fmod(w - static_cast<double>(p.size()) * law.alpha, 1.0);
    if (phase < 0.0) phase += 1.0;
    const double pi = env::phase_probability(law, phase);
    p.push_back(pi);
    prod *= (1.0 - pi) / pi;
  }
  double mu = 1.0 + 2.0 * (1.0 - p.back()) / p.back();
  double sigma2 = 0.0;
  for (std::size_t i = p.size() - 1; i-- > 0;) {
    sigma2 = sigma2_one_step(p[i], sigma2, mu);
    mu = mu_one_step(p[i], mu);
  }
  return {mu, sigma2};
}

namespace {

struct ErgodicAverage {
  double mean;
  double se;
};

ErgodicAverage ergodic_sigma2(const env::EnvironmentModel& model, double lambda,
                              const SummaryBudget& budget) {
  const std::int64_t last = std::max<std::int64_t>(budget.sites, 1) - 1;
  std::int64_t margin = std::max<std::int64_t>(256, static_cast<std::int64_t>(std::ceil(400.0 / -lambda)));
  for (int attempt = 0;; ++attempt) {
    try {
      const auto window = env::realize(model, -margin, last, budget.seed);
      const auto table = SiteTable::build(window, 0, last);
      const auto values = table.sigma2_values();
      numeric::KahanSum total;
      constexpr std::size_t kBatches = 50;
      const std::size_t per = std::max<std::size_t>(values.size() / kBatches, 1);
      numeric::RunningMoments batch_means;
      numeric::KahanSum batch;
      std::size_t in_batch = 0;
      for (double v : values) {
        total.add(v);
        batch.add(v);
        if (++in_batch == per) {
          batch_means.add(batch.value() / static_cast<double>(per));
          batch = {};
          in_batch = 0;
        }
      }
      const double mean = total.value() / static_cast<double>(values.size());
      const double se = batch_means.count() > 1
                            ? std::sqrt(batch_means.variance() / static_cast<double>(batch_means.count()))
                            : 0.0;
      return {mean, se};
    } catch (const WindowTooSmall&) {
      if (attempt >= 6) throw;
      margin *= 2;
    }
  }
}

}  // namespace

SummaryStatistics summary(const env::EnvironmentModel& model, const SummaryBudget& budget) {
  const env::Classification cls = env::classify(model);
  if (cls.regime != env::Regime::kTransientRight) {
    throw NotCltEligible(std::string("lambda = ") + numeric::shortest(cls.lambda) + " (" +
                         env::to_string(cls.regime) + ")");
  }
  const env::Estimate r1 = env::r_kappa(model, 1.0);
  const env::Estimate r2 = env::r_kappa(model, 2.0);
  if (!(r2.value < 1.0)) throw NotCltEligible("r(2) = " + numeric::shortest(r2.value) + " >= 1");

  SummaryStatistics s;
  s.lambda = cls.lambda;
  s.r1 = r1.value;
  s.r2 = r2.value;

  if (const auto* qp = std::get_if<env::QuasiPeriodic>(&model.law())) {
    s.mu = numeric::periodic_mean([&](double w) { return phase_moments(*qp, w).mu; }, 1e-13);
    s.mu_method = env::Method::kQuadrature;
    s.sigma2 = numeric::periodic_mean([&](double w) { return phase_moments(*qp, w).sigma2; }, 1e-13);
    s.sigma2_method = env::Method::kQuadrature;
  } else {
    if (const auto* c = std::get_if<env::Constant>(&model.law())) {
      s.mu = 1.0 / (2.0 * c->p - 1.0);
    } else {
      s.mu = (1.0 + r1.value) / (1.0 - r1.value);
      s.mu_se = 2.0 * r1.std_error / ((1.0 - r1.value) * (1.0 - r1.value));
    }
    s.mu_method = r1.method;
    const ErgodicAverage avg = ergodic_sigma2(model, cls.lambda, budget);
    s.sigma2 = avg.mean;
    s.sigma2_se = avg.se;
    s.sigma2_method = env::Method::kErgodicAverage;

    const double denom = (1.0 - r1.value) * (1.0 - r1.value) * (1.0 - r2.value);
    const double lead = 4.0 * (r1.value + r2.value);
    s.sigma2_closed_form_r1_squared = lead * (1.0 + r1.value * r1.value) / denom;
    s.sigma2_closed_form = lead * (1.0 + r1.value) / denom;
    s.closed_form_discrepancy = std::abs(*s.sigma2_closed_form_r1_squared - *s.sigma2_closed_form) >
                                1e-9 * std::abs(*s.sigma2_closed_form);
  }
  s.sigma_star = std::sqrt(sigma_star_squared(s.mu, s.sigma2));
  return s;
}

FluctuationSeries fluctuation_series(const SiteTable& sites, double mu,
                                     std::span<const std::int64_t> n_grid) {
  FluctuationSeries out;
  if (n_grid.empty()) return out;
  if (!std::is_sorted(n_grid.begin(), n_grid.end()) || n_grid.front() < 1) {
    throw DomainError("fluctuation grid must be sorted with n >= 1");
  }
  const std::int64_t n_max = n_grid.back();
  if (!(sites.contains(0) && sites.contains(n_max - 1))) {
    throw WindowTooSmall("fluctuation series needs sites [0, " + std::to_string(n_max - 1) + "]");
  }
  numeric::KahanSum running;
  double max_abs = 0.0;
  std::size_t g = 0;
  for (std::int64_t j = 0; j < n_max && g < n_grid.size(); ++j) {
    running.add(sites.mu(j) - mu);
    max_abs = std::max(max_abs, std::abs(running.value()));
    while (g < n_grid.size() && n_grid[g] == j + 1) {
      out.n.push_back(n_grid[g]);
      out.script_H.push_back(running.value());
      out.script_H_star.push_back(max_abs);
      ++g;
    }
  }
  return out;
}

double signed_range_sum(std::span<const double> values, std::int64_t first_index, double from, double to) {
  std::int64_t a = floor_index(from);
  std::int64_t b = floor_index(to);
  double sign = 1.0;
  if (b < a) {
    std::swap(a, b);
    sign = -1.0;
  }
  const std::int64_t last = first_index + static_cast<std::int64_t>(values.size()) - 1;
  if (a < first_index || b > last) {
    throw IndexOutOfWindow("range [" + std::to_string(a) + ", " + std::to_string(b) + "] outside [" +
                           std::to_string(first_index) + ", " + std::to_string(last) + "]");
  }
  numeric::KahanSum s;
  for (std::int64_t k = a; k <= b; ++k) s.add(values[static_cast<std::size_t>(k - first_index)]);
  return sign * s.value();
}

DeviationPrefix::DeviationPrefix(const SiteTable& sites, double mu) : first_(sites.first()) {
  const auto values = sites.mu_values();
  prefix_.resize(values.size() + 1);
  numeric::KahanSum s;
  for (std::size_t i = 0; i < values.size(); ++i) {
    s.add(values[i] - mu);
    prefix_[i + 1] = s.value();
  }
}

double DeviationPrefix::sum(std::int64_t a, std::int64_t b) const {
  if (a < first() || b > last() || b < a) {
    throw IndexOutOfWindow("range [" + std::to_string(a) + ", " + std::to_string(b) + "] outside [" +
                           std::to_string(first()) + ", " + std::to_string(last()) + "]");
  }
  return prefix_[static_cast<std::size_t>(b - first_ + 1)] - prefix_[static_cast<std::size_t>(a - first_)];
}

double DeviationPrefix::signed_sum(double from, double to) const {
  const std::int64_t a = floor_index(from);
  const std::int64_t b = floor_index(to);
  return b >= a ? sum(a, b) : -sum(b, a);
}

}  // namespace rwre::analytics
