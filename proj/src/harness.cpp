#include "rwre/harness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "rwre/error.hpp"
#include "rwre/numeric.hpp"
#include "rwre/parallel.hpp"
#include "rwre/rng.hpp"

namespace rwre::harness {
namespace {

constexpr std::uint64_t kEnvironmentTag = 0x454E56ull;  // "ENV"

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  const auto mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

std::vector<double> abs_values(const std::vector<double>& v) {
  std::vector<double> out(v.size());
  std::transform(v.begin(), v.end(), out.begin(), [](double x) { return std::abs(x); });
  return out;
}

// Steps smaller than 1e-9 relative are rounding noise, not a decrease.
bool strictly_decreasing(const std::vector<double>& v) {
  if (v.size() >= 2 && std::all_of(v.begin(), v.end(), [](double x) { return std::abs(x) <= 1e-12; })) return true;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (!(v[i] < v[i - 1] - 1e-9 * std::abs(v[i - 1]))) return false;
  }
  return v.size() >= 2;
}

std::int64_t left_guard(const ExperimentConfig& config, double lambda) {
  return config.left_guard ? *config.left_guard : walk::default_left_guard(lambda);
}

walk::SimulationBudget budget_for(const ExperimentConfig& config, double lambda, std::int64_t t_max,
                                  std::int64_t n_max) {
  walk::SimulationBudget b;
  b.t_max = t_max;
  b.n_max = n_max;
  b.left_guard = left_guard(config, lambda);
  return b;
}

std::vector<CdfPoint> cdf_table(const std::vector<double>& sorted, const std::vector<double>& x_grid) {
  std::vector<CdfPoint> out;
  const double m = static_cast<double>(sorted.size());
  for (double x : x_grid) {
    const auto count = std::upper_bound(sorted.begin(), sorted.end(), x) - sorted.begin();
    CdfPoint pt;
    pt.x = x;
    pt.ecdf = static_cast<double>(count) / m;
    pt.phi = numeric::normal_cdf(x);
    pt.diff = pt.ecdf - pt.phi;
    out.push_back(pt);
  }
  return out;
}

void finish_report(ExperimentReport& rep, const ExperimentConfig& config, double centering, double scale) {
  std::vector<double> sorted = rep.samples;
  std::sort(sorted.begin(), sorted.end());
  rep.ks_distance = ks_distance(rep.samples, numeric::normal_cdf);
  rep.cdf = cdf_table(sorted, config.x_grid);
  rep.threshold = config.effective_ks_threshold();
  rep.pass = rep.ks_distance <= rep.threshold;
  numeric::RunningMoments dev;
  for (double r : rep.raw) dev.add(r - centering);
  const double se = scale / std::sqrt(static_cast<double>(rep.raw.size()));
  rep.centering_bias_z = se > 0.0 ? dev.mean() / se : 0.0;
}

double model_mu(const env::EnvironmentModel& model) {
  if (const auto* c = std::get_if<env::Constant>(&model.law())) return 1.0 / (2.0 * c->p - 1.0);
  if (const auto* qp = std::get_if<env::QuasiPeriodic>(&model.law())) {
    return numeric::periodic_mean([&](double w) { return analytics::phase_moments(*qp, w).mu; }, 1e-13);
  }
  const double r1 = env::r_kappa(model, 1.0).value;
  if (r1 >= 1.0) return std::numeric_limits<double>::infinity();
  return (1.0 + r1) / (1.0 - r1);
}

ExperimentReport hitting_once(const ExperimentConfig& config, const analytics::SummaryStatistics& stats,
                              std::uint64_t env_seed) {
  const auto budget = budget_for(config, stats.lambda, 0, config.n);
  const QuenchedEnvironment q = quench(config.model, env_seed, -budget.left_guard, config.n + 1, config.n - 1);
  const analytics::CenteringTable table(q.sites, config.n);

  ExperimentReport rep;
  rep.experiment = "clt-hitting";
  rep.model_summary = stats;
  rep.mu = stats.mu;
  rep.env_seed = env_seed;
  rep.walk_seed = config.walk_seed;
  numeric::KahanSum var_sum;
  for (std::int64_t k = 0; k < config.n; ++k) var_sum.add(q.sites.sigma2(k));
  rep.sigma2_window = var_sum.value() / static_cast<double>(config.n);
  rep.sigma = std::sqrt(rep.sigma2_window);
  rep.centering = table.H(static_cast<double>(config.n));

  rep.raw.assign(config.replicas, 0.0);
  parallel_for(config.replicas, config.workers, [&](std::size_t r) {
    std::int64_t total = 0;
    for (std::int64_t k = 0; k < config.n; ++k) {
      total += walk::sample_crossing_time(q.window, k, {config.walk_seed, r}, budget);
    }
    rep.raw[r] = static_cast<double>(total);
  });
  const double scale = std::sqrt(static_cast<double>(config.n)) * rep.sigma;
  rep.samples.resize(rep.raw.size());
  for (std::size_t r = 0; r < rep.raw.size(); ++r) rep.samples[r] = (rep.raw[r] - rep.centering) / scale;
  finish_report(rep, config, rep.centering, scale);
  rep.notes.push_back("sigma from the window's own sum of sigma_k^2; model sigma^2 = " +
                      numeric::shortest(stats.sigma2));
  return rep;
}

ExperimentReport position_once(const ExperimentConfig& config, const analytics::SummaryStatistics& stats,
                               std::uint64_t env_seed) {
  const std::int64_t t = config.t;
  const auto budget = budget_for(config, stats.lambda, t, 0);
  const QuenchedEnvironment q = quench(config.model, env_seed, -budget.left_guard, t + 1, t);
  const analytics::CenteringTable table(q.sites, t + 1);

  ExperimentReport rep;
  rep.experiment = "clt-position";
  rep.model_summary = stats;
  rep.mu = stats.mu;
  rep.env_seed = env_seed;
  rep.walk_seed = config.walk_seed;

  const auto span_sites = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(t / stats.mu)));
  numeric::KahanSum var_sum;
  for (std::int64_t k = 0; k < span_sites; ++k) var_sum.add(q.sites.sigma2(k));
  rep.sigma2_window = var_sum.value() / static_cast<double>(span_sites);
  rep.sigma = std::sqrt(rep.sigma2_window);
  rep.sigma_star = std::sqrt(analytics::sigma_star_squared(stats.mu, rep.sigma2_window));

  const double td = static_cast<double>(t);
  rep.explicit_b = table.explicit_centering(stats.mu, td);
  rep.implicit_b = table.implicit_centering(td).b_tilde;
  const double chosen = config.centering == Centering::kExplicit ? rep.explicit_b : static_cast<double>(rep.implicit_b);
  const double other = config.centering == Centering::kExplicit ? static_cast<double>(rep.implicit_b) : rep.explicit_b;
  rep.centering = chosen;

  rep.raw.assign(config.replicas, 0.0);
  const std::int64_t times[] = {t};
  parallel_for(config.replicas, config.workers, [&](std::size_t r) {
    rep.raw[r] = static_cast<double>(walk::sample_position(q.window, 0, times, {config.walk_seed, r}, budget).front().second);
  });
  const double scale = std::sqrt(td) * rep.sigma_star;
  rep.samples.resize(rep.raw.size());
  rep.alt_samples.resize(rep.raw.size());
  for (std::size_t r = 0; r < rep.raw.size(); ++r) {
    rep.samples[r] = (rep.raw[r] - chosen) / scale;
    rep.alt_samples[r] = (rep.raw[r] - other) / scale;
  }
  finish_report(rep, config, chosen, scale);
  rep.notes.push_back(std::string("centering: ") + to_string(config.centering));
  return rep;
}

template <class Once>
ExperimentReport multi_environment(const ExperimentConfig& config, Once&& once) {
  validate(config);
  const analytics::SummaryStatistics stats = analytics::summary(config.model, config.summary_budget);
  ExperimentReport rep = once(config, stats, config.env_seed);
  rep.ks_by_environment.push_back(rep.ks_distance);
  for (std::size_t e = 1; e < config.environments; ++e) {
    rep.ks_by_environment.push_back(once(config, stats, environment_seed(config.env_seed, e)).ks_distance);
  }
  return rep;
}

}  // namespace

const char* to_string(Centering c) noexcept {
  return c == Centering::kExplicit ? "explicit" : "implicit";
}

double ExperimentConfig::effective_ks_threshold() const {
  if (ks_threshold) return *ks_threshold;
  return std::max(0.03, 3.0 * 1.36 / std::sqrt(static_cast<double>(replicas)));
}

void validate(const ExperimentConfig& config) {
  if (config.replicas < 100) throw ConfigError("experiment.replicas must be >= 100");
  if (!std::is_sorted(config.n_grid.begin(), config.n_grid.end())) throw ConfigError("experiment.n_grid must be sorted");
  if (!std::is_sorted(config.t_grid.begin(), config.t_grid.end())) throw ConfigError("experiment.t_grid must be sorted");
  if (!std::is_sorted(config.x_grid.begin(), config.x_grid.end())) throw ConfigError("experiment.x_grid must be sorted");
  if (!(config.c > 0.0)) throw ConfigError("experiment.c must be > 0");
  if (config.n < 1) throw ConfigError("experiment.n must be >= 1");
  if (config.t < 1) throw ConfigError("experiment.t must be >= 1");
  if (config.environments < 1) throw ConfigError("experiment.environments must be >= 1");
  if (config.left_guard && *config.left_guard < 1) throw ConfigError("experiment.left_guard must be >= 1");
}

std::uint64_t environment_seed(std::uint64_t env_seed, std::size_t e) {
  return e == 0 ? env_seed : rng::derive_key(env_seed, {kEnvironmentTag, e});
}

double ks_distance(std::vector<double> samples, const std::function<double(double)>& reference_cdf) {
  if (samples.empty()) throw DomainError("ks_distance needs at least one sample");
  std::sort(samples.begin(), samples.end());
  const double m = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = reference_cdf(samples[i]);
    d = std::max({d, std::abs(f - static_cast<double>(i + 1) / m), std::abs(f - static_cast<double>(i) / m)});
  }
  return d;
}

QuenchedEnvironment quench(const env::EnvironmentModel& model, std::uint64_t seed, std::int64_t walk_lo,
                           std::int64_t hi, std::int64_t sites_last) {
  const double lam = env::lambda(model).value;
  std::int64_t margin = 256;
  if (lam < 0.0) margin = std::max<std::int64_t>(margin, static_cast<std::int64_t>(std::ceil(400.0 / -lam)));
  for (int attempt = 0;; ++attempt) {
    const std::int64_t lo = std::min(walk_lo, -margin);
    auto window = env::realize(model, lo, std::max(hi, sites_last), seed);
    try {
      auto sites = analytics::SiteTable::build(window, 0, std::max<std::int64_t>(sites_last, 0));
      return {std::move(window), std::move(sites)};
    } catch (const WindowTooSmall&) {
      if (attempt >= 6) throw;
      margin *= 2;
    }
  }
}

ExperimentReport clt_hitting(const ExperimentConfig& config) {
  return multi_environment(config, hitting_once);
}

ExperimentReport clt_position(const ExperimentConfig& config) {
  return multi_environment(config, position_once);
}

LlnReport lln_check(const ExperimentConfig& config, std::size_t trajectories) {
  const env::Classification cls = env::classify(config.model);
  if (cls.regime != env::Regime::kTransientRight) {
    throw NotCltEligible(std::string("LLN check needs a right-transient walk, got ") + env::to_string(cls.regime));
  }
  trajectories = std::max<std::size_t>(1, trajectories);
  LlnReport rep;
  rep.environments = config.environments;
  rep.trajectories = trajectories;
  rep.mu = model_mu(config.model);
  rep.zero_speed = !std::isfinite(rep.mu);
  const std::int64_t t_max = config.t_grid.empty() ? 0 : config.t_grid.back();
  const std::int64_t n_max = config.n_grid.empty() || rep.zero_speed ? 0 : config.n_grid.back();
  const auto budget = budget_for(config, cls.lambda, t_max, n_max);

  const std::size_t total = config.environments * trajectories;
  std::vector<walk::WalkObservation> obs(total);
  for (std::size_t e = 0; e < config.environments; ++e) {
    const auto window = env::realize(config.model, -budget.left_guard, std::max(t_max, n_max) + 2,
                                     environment_seed(config.env_seed, e));
    parallel_for(trajectories, config.workers, [&](std::size_t r) {
      obs[e * trajectories + r] = walk::sample_joint(window, config.t_grid, {config.walk_seed, e * trajectories + r},
                                                     budget, n_max, false);
    });
  }

  const double m = static_cast<double>(total);
  for (std::size_t i = 0; i < config.t_grid.size(); ++i) {
    const double t = static_cast<double>(config.t_grid[i]);
    double x_sum = 0.0;
    double max_sum = 0.0;
    for (const auto& o : obs) {
      x_sum += static_cast<double>(o.snapshots[i].second) / t;
      const auto reached = std::upper_bound(o.T.begin(), o.T.end(), config.t_grid[i]) - o.T.begin() - 1;
      max_sum += static_cast<double>(reached) / t;
    }
    rep.position.push_back({config.t_grid[i], x_sum / m, true});
    rep.running_max.push_back({config.t_grid[i], max_sum / m, true});
  }
  for (std::int64_t n : config.n_grid) {
    LlnRow row{n, 0.0, true};
    for (const auto& o : obs) {
      if (n >= static_cast<std::int64_t>(o.T.size())) {
        row.available = false;
        break;
      }
      row.value += static_cast<double>(o.T[static_cast<std::size_t>(n)]) / static_cast<double>(n);
    }
    row.value = row.available ? row.value / m : 0.0;
    rep.hitting.push_back(row);
  }

  if (!rep.position.empty()) {
    const double first = rep.position.front().value;
    const double last = rep.position.back().value;
    rep.position_drop = last > 0.0 ? first / last : std::numeric_limits<double>::infinity();
  }
  if (rep.zero_speed) {
    rep.pass = rep.position.size() >= 2 && rep.position.front().value > 0.0 &&
               rep.position_drop >= config.zero_speed_drop;
    rep.notes.push_back("r(1) >= 1: zero-speed regime, checking that X(t)/t decays");
  } else {
    bool ok = true;
    if (!rep.hitting.empty() && rep.hitting.back().available) {
      rep.hitting_rel_error = std::abs(rep.hitting.back().value - rep.mu) / rep.mu;
      ok = ok && rep.hitting_rel_error <= config.lln_threshold;
    } else if (!rep.hitting.empty()) {
      ok = false;
    }
    if (!rep.position.empty()) {
      rep.position_rel_error = std::abs(rep.position.back().value - 1.0 / rep.mu) * rep.mu;
      ok = ok && rep.position_rel_error <= config.lln_threshold;
    }
    rep.pass = ok;
  }
  return rep;
}

VarianceRatioReport variance_ratio_check(const ExperimentConfig& config) {
  validate(config);
  if (config.n_grid.empty()) throw ConfigError("experiment.n_grid must not be empty");
  const auto stats = analytics::summary(config.model, config.summary_budget);
  const std::int64_t n_max = config.n_grid.back();
  const QuenchedEnvironment q = quench(config.model, config.env_seed, 0, n_max + 1, n_max - 1);
  VarianceRatioReport rep;
  rep.sigma2 = stats.sigma2;
  numeric::KahanSum sum;
  double max_site = 0.0;
  std::size_t g = 0;
  for (std::int64_t k = 0; k < n_max && g < config.n_grid.size(); ++k) {
    const double s2 = q.sites.sigma2(k);
    sum.add(s2);
    max_site = std::max(max_site, s2);
    while (g < config.n_grid.size() && config.n_grid[g] == k + 1) {
      const double n = static_cast<double>(k + 1);
      rep.rows.push_back({k + 1, sum.value() / (n * stats.sigma2), max_site / sum.value()});
      ++g;
    }
  }
  const auto& last = rep.rows.back();
  rep.ratio_ok = std::abs(last.ratio - 1.0) <= config.ratio_tolerance;
  rep.share_ok = last.max_share * static_cast<double>(last.n) <= 10.0;
  rep.pass = rep.ratio_ok && rep.share_ok;
  return rep;
}

DiagnosticReport rel_diagnostics(const ExperimentConfig& config) {
  validate(config);
  const auto stats = analytics::summary(config.model, config.summary_budget);
  DiagnosticReport rep;
  rep.mu = stats.mu;
  rep.sigma_star = stats.sigma_star;
  rep.c = config.c;
  const bool quasi_periodic = config.model.is_quasi_periodic();

  double x_abs_max = 0.0;
  for (double x : config.x_grid) x_abs_max = std::max(x_abs_max, std::abs(x));
  const std::int64_t t_max = config.t_grid.empty() ? 0 : config.t_grid.back();
  const std::int64_t n_max = config.n_grid.empty() ? 0 : config.n_grid.back();
  const double td = static_cast<double>(t_max);
  const auto reach_t =
      t_max + static_cast<std::int64_t>(std::ceil(std::sqrt(td) * stats.sigma_star * x_abs_max)) + 2;
  const auto reach_n =
      n_max + static_cast<std::int64_t>(std::ceil(std::pow(static_cast<double>(n_max), (1.0 + config.c) / 2.0))) + 2;
  const std::int64_t sites_last = std::max(reach_t, reach_n);

  const std::size_t envs = config.environments;
  for (std::size_t e = 0; e < envs; ++e) rep.env_seeds.push_back(environment_seed(config.env_seed, e));

  // rel[t][x] rows, each holding per-environment values.
  for (std::int64_t t : config.t_grid) {
    for (double x : config.x_grid) {
      RelRow row;
      row.t = t;
      row.x = x;
      row.rel1.assign(envs, 0.0);
      row.rel2.assign(envs, 0.0);
      row.rel1_shifted.assign(envs, 0.0);
      if (quasi_periodic) row.rel2_bound.assign(envs, 0.0);
      rep.rel.push_back(std::move(row));
    }
  }
  struct FluctPerEnv {
    std::vector<double> R, h_star_sqrt, h_star_n, h_scaled;
  };
  std::vector<FluctPerEnv> fluct(envs);

  parallel_for(envs, config.workers, [&](std::size_t e) {
    const QuenchedEnvironment q = quench(config.model, rep.env_seeds[e], 0, sites_last + 1, sites_last);
    const analytics::CenteringTable table(q.sites, sites_last);
    const analytics::DeviationPrefix dev(q.sites, stats.mu);
    std::size_t row_index = 0;
    for (std::int64_t t : config.t_grid) {
      const double tt = static_cast<double>(t);
      const double root = std::sqrt(tt);
      const double b = table.explicit_centering(stats.mu, tt);
      const auto bt = static_cast<double>(table.implicit_centering(tt).b_tilde);
      for (double x : config.x_grid) {
        RelRow& row = rep.rel[row_index++];
        const double shift = root * stats.sigma_star * x;
        row.rel1[e] = dev.signed_sum(tt / stats.mu, b + shift) / root;
        row.rel1_shifted[e] = dev.signed_sum(tt / stats.mu, b + shift - 1.0) / root;
        row.rel2[e] = dev.signed_sum(bt, bt + shift) / root;
        if (quasi_periodic) {
          const auto lo = static_cast<std::int64_t>(std::floor(std::min(bt, bt + shift)));
          const auto hi = static_cast<std::int64_t>(std::floor(std::max(bt, bt + shift)));
          const std::int64_t m = hi - lo + 1;
          double eps = 0.0;
          for (std::int64_t k = 0; k + 1 <= lo; ++k) {
            eps = std::max(eps, std::abs(dev.sum(k + 1, k + m)) / static_cast<double>(m));
          }
          row.rel2_bound[e] = lo >= 1 ? static_cast<double>(m) * eps / root
                                      : std::numeric_limits<double>::infinity();
        }
      }
    }
    const auto series = analytics::fluctuation_series(q.sites, stats.mu, config.n_grid);
    for (std::size_t i = 0; i < series.n.size(); ++i) {
      const std::int64_t n = series.n[i];
      const double nd = static_cast<double>(n);
      const auto s_max = static_cast<std::int64_t>(std::floor(std::pow(nd, (1.0 + config.c) / 2.0)));
      double worst = 0.0;
      for (std::int64_t s = std::max(-s_max, -n); s <= s_max; ++s) {
        worst = std::max(worst, std::abs(dev.signed_sum(nd, nd + static_cast<double>(s))));
      }
      fluct[e].R.push_back(worst / std::sqrt(nd));
      fluct[e].h_star_sqrt.push_back(series.script_H_star[i] / std::sqrt(nd));
      fluct[e].h_star_n.push_back(series.script_H_star[i] / nd);
      fluct[e].h_scaled.push_back(std::abs(series.script_H[i]) * std::pow(nd, -(1.0 + config.c) / 2.0));
    }
  });

  for (auto& row : rep.rel) {
    row.median_abs_rel1 = median(abs_values(row.rel1));
    row.median_abs_rel2 = median(abs_values(row.rel2));
    row.median_abs_rel1_shifted = median(abs_values(row.rel1_shifted));
    for (std::size_t e = 0; e < row.rel2_bound.size(); ++e) {
      ++rep.rel2_bound_checks;
      if (std::abs(row.rel2[e]) > row.rel2_bound[e] * (1.0 + 1e-9) + 1e-12) ++rep.rel2_bound_violations;
    }
  }
  for (std::size_t i = 0; i < config.n_grid.size(); ++i) {
    FluctuationRow row;
    row.n = config.n_grid[i];
    std::vector<double> R, hs, hn, hc;
    for (const auto& f : fluct) {
      R.push_back(f.R[i]);
      hs.push_back(f.h_star_sqrt[i]);
      hn.push_back(f.h_star_n[i]);
      hc.push_back(f.h_scaled[i]);
    }
    row.median_R = median(R);
    row.median_H_star_over_sqrt = median(hs);
    row.median_H_star_over_n = median(hn);
    row.median_H_scaled = median(hc);
    rep.fluctuation.push_back(row);
  }

  // Monotone decrease across the t grid for every x != 0.
  auto decreasing_in_t = [&](auto member) {
    bool all = true;
    bool any = false;
    for (std::size_t xi = 0; xi < config.x_grid.size(); ++xi) {
      if (config.x_grid[xi] == 0.0) continue;
      std::vector<double> seq;
      for (std::size_t ti = 0; ti < config.t_grid.size(); ++ti) {
        seq.push_back(rep.rel[ti * config.x_grid.size() + xi].*member);
      }
      any = true;
      all = all && strictly_decreasing(seq);
    }
    return any && all;
  };
  rep.rel1_decreasing = decreasing_in_t(&RelRow::median_abs_rel1);
  rep.rel2_decreasing = decreasing_in_t(&RelRow::median_abs_rel2);

  std::vector<double> hn, hs;
  for (const auto& row : rep.fluctuation) {
    hn.push_back(row.median_H_star_over_n);
    hs.push_back(row.median_H_star_over_sqrt);
  }
  rep.H_star_over_n_decreasing = strictly_decreasing(hn);
  if (!hs.empty()) {
    const auto [lo, hi] = std::minmax_element(hs.begin(), hs.end());
    rep.H_star_over_sqrt_band = *lo > 0.0 ? *hi / *lo : (*hi > 0.0 ? std::numeric_limits<double>::infinity() : 1.0);
    rep.H_star_over_sqrt_growth = hs.front() > 0.0 ? *hi / hs.front() : (*hi > 0.0 ? std::numeric_limits<double>::infinity() : 1.0);
  }
  rep.H_star_band_ok = rep.H_star_over_sqrt_band <= 10.0;
  // The sqrt(n) bound on H* is an upper bound; faster decay is fine.
  const bool h_ok = rep.H_star_over_n_decreasing && rep.H_star_over_sqrt_growth <= 10.0;
  if (quasi_periodic) {
    rep.pass = h_ok && rep.rel2_bound_violations == 0;
  } else {
    rep.pass = h_ok && rep.rel1_decreasing;
  }
  return rep;
}

ErgodicityReport uniform_ergodicity_estimate(const env::EnvironmentModel& model,
                                             const std::vector<std::int64_t>& n_grid, std::int64_t K,
                                             std::uint64_t seed) {
  if (n_grid.empty() || !std::is_sorted(n_grid.begin(), n_grid.end()) || n_grid.front() < 1) {
    throw DomainError("ergodicity grid must be sorted with n >= 1");
  }
  if (K < 1) throw DomainError("ergodicity window K must be >= 1");
  ErgodicityReport rep;
  rep.mu_reference = model_mu(model);
  if (!std::isfinite(rep.mu_reference)) throw NotCltEligible("r(1) >= 1: mu is infinite");
  const std::int64_t last = K + n_grid.back();
  const QuenchedEnvironment q = quench(model, seed, 0, last + 1, last);
  const analytics::DeviationPrefix dev(q.sites, rep.mu_reference);
  for (std::int64_t n : n_grid) {
    double eps = 0.0;
    for (std::int64_t k = 0; k < K; ++k) {
      eps = std::max(eps, std::abs(dev.sum(k + 1, k + n)) / static_cast<double>(n));
    }
    rep.n.push_back(n);
    rep.epsilon.push_back(eps);
  }
  rep.strictly_decreasing = strictly_decreasing(rep.epsilon);
  rep.plateau = rep.epsilon.back() > 0.5 * rep.epsilon.front();
  const bool vanishing = *std::max_element(rep.epsilon.begin(), rep.epsilon.end()) <= 1e-12;
  rep.uniformly_ergodic = vanishing || (rep.strictly_decreasing && !rep.plateau);
  return rep;
}

CouplingReport coupling_identity_check(const ExperimentConfig& config) {
  const env::Classification cls = env::classify(config.model);
  if (cls.regime != env::Regime::kTransientRight) {
    throw NotCltEligible(std::string("coupling check needs a right-transient walk, got ") +
                         env::to_string(cls.regime));
  }
  const std::int64_t t_max = config.t;
  const auto budget = budget_for(config, cls.lambda, t_max, 0);
  const auto window = env::realize(config.model, -budget.left_guard, t_max + 2, config.env_seed);
  std::vector<std::int64_t> times(static_cast<std::size_t>(t_max) + 1);
  std::iota(times.begin(), times.end(), 0);

  struct Counts {
    std::uint64_t event_checks = 0, event_violations = 0, bound_checks = 0, bound_violations = 0, parity = 0,
                  odd_tau = 0;
  };
  std::vector<Counts> counts(config.replicas);
  parallel_for(config.replicas, config.workers, [&](std::size_t r) {
    const auto obs = walk::sample_joint(window, times, {config.walk_seed, r}, budget);
    Counts& c = counts[r];
    for (auto tau : obs.tau) c.odd_tau += (tau % 2 == 1) ? 0 : 1;
    const auto y_max = static_cast<std::int64_t>(obs.T.size());
    for (const auto& [t, x] : obs.snapshots) {
      if (((x + t) % 2 + 2) % 2 != 0) ++c.parity;
      const std::int64_t n_t = walk::first_passage_index(obs.T, t);
      for (std::int64_t y = 0; y <= y_max; ++y) {
        const bool lhs = n_t <= y;
        const auto idx = static_cast<std::size_t>(y + 1);
        const bool rhs = idx < obs.T.size() ? obs.T[idx] > t : true;
        ++c.event_checks;
        if (lhs != rhs) ++c.event_violations;
      }
      const std::int64_t since = t - obs.T[static_cast<std::size_t>(n_t)];
      const std::int64_t tau = obs.tau[static_cast<std::size_t>(n_t)];
      ++c.bound_checks;
      if (!(std::abs(x - n_t) <= since && since < tau)) ++c.bound_violations;
    }
  });

  CouplingReport rep;
  rep.trajectories = config.replicas;
  for (const auto& c : counts) {
    rep.event_checks += c.event_checks;
    rep.event_violations += c.event_violations;
    rep.bound_checks += c.bound_checks;
    rep.bound_violations += c.bound_violations;
    rep.parity_violations += c.parity;
    rep.odd_tau_violations += c.odd_tau;
  }
  rep.pass = rep.event_violations == 0 && rep.bound_violations == 0 && rep.parity_violations == 0 &&
             rep.odd_tau_violations == 0;
  return rep;
}

}  // namespace rwre::harness
