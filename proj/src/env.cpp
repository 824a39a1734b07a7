#include "rwre/env.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "rwre/error.hpp"
#include "rwre/numeric.hpp"
#include "rwre/rng.hpp"

namespace rwre::env {
namespace {

constexpr std::uint64_t kSiteTag = 0x5349544553ull;  // "SITES"
constexpr std::uint64_t kLawTag = 0x4C4157ull;        // "LAW"
constexpr int kPhaseGrid = 10000;
constexpr std::size_t kMonteCarloDraws = 200000;

std::string num(double v) { return numeric::shortest(v); }

std::string field_error(const std::string& field, double v, const std::string& what) {
  return field + " = " + num(v) + ": " + what;
}

bool in_open_unit(double p) { return std::isfinite(p) && p > 0.0 && p < 1.0; }

std::string make_id(const Law& law) {
  std::ostringstream os;
  std::visit(
      [&](const auto& l) {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, Constant>) {
          os << "constant(" << num(l.p) << ")";
        } else if constexpr (std::is_same_v<T, IidDiscrete>) {
          os << "iid_discrete(";
          for (std::size_t i = 0; i < l.atoms.size(); ++i) {
            os << (i ? "," : "") << num(l.atoms[i].p) << ":" << num(l.atoms[i].weight);
          }
          os << ")";
        } else if constexpr (std::is_same_v<T, IidParametric>) {
          os << "iid_parametric(" << (l.family == Family::kBeta ? "beta" : "uniform");
          for (double v : l.params) os << "," << num(v);
          os << ";" << num(l.p_lo) << "," << num(l.p_hi) << ")";
        } else {
          os << "quasi_periodic(" << num(l.alpha) << "," << num(l.omega0) << ";";
          for (std::size_t i = 0; i < l.coeffs.size(); ++i) os << (i ? "," : "") << num(l.coeffs[i]);
          os << ")";
        }
      },
      law);
  return os.str();
}

// Smallest denominator q <= 1000 with |alpha - p/q| < 1e-9, or 0.
long small_denominator(double alpha) {
  double x = alpha;
  long h_prev = 0, h = 1, k_prev = 1, k = 0;
  for (int iter = 0; iter < 64; ++iter) {
    const double a = std::floor(x);
    const long ai = static_cast<long>(a);
    const long h_next = ai * h + h_prev;
    const long k_next = ai * k + k_prev;
    h_prev = h;
    h = h_next;
    k_prev = k;
    k = k_next;
    if (k > 1000) return 0;
    if (std::abs(alpha - static_cast<double>(h) / static_cast<double>(k)) < 1e-9) return k;
    const double frac = x - a;
    if (frac < 1e-15) return k;
    x = 1.0 / frac;
  }
  return 0;
}

double beta_log_kernel(double a, double b, double x) noexcept {
  return (a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x);
}

double beta_log_bound(const IidParametric& l) {
  const double a = l.params[0];
  const double b = l.params[1];
  double best = std::max(beta_log_kernel(a, b, l.p_lo), beta_log_kernel(a, b, l.p_hi));
  if (a + b > 2.0) {
    const double mode = std::clamp((a - 1.0) / (a + b - 2.0), l.p_lo, l.p_hi);
    best = std::max(best, beta_log_kernel(a, b, mode));
  }
  return best;
}

double draw_parametric(const IidParametric& l, rng::CounterStream& stream) {
  const double width = l.p_hi - l.p_lo;
  if (l.family == Family::kUniform) return l.p_lo + width * stream.uniform();
  const double log_bound = beta_log_bound(l);
  for (;;) {
    const double x = l.p_lo + width * stream.uniform();
    const double u = stream.uniform();
    if (std::log(u) <= beta_log_kernel(l.params[0], l.params[1], x) - log_bound) return x;
  }
}

std::uint64_t law_seed(const EnvironmentModel& model) {
  return rng::derive_key(numeric::fnv1a(model.id()), {kLawTag});
}

template <class F>
Estimate monte_carlo(const EnvironmentModel& model, F&& f) {
  const std::uint64_t seed = law_seed(model);
  numeric::RunningMoments moments;
  for (std::size_t i = 0; i < kMonteCarloDraws; ++i) {
    moments.add(f(site_probability(model, seed, static_cast<std::int64_t>(i))));
  }
  return {moments.mean(), std::sqrt(moments.variance() / static_cast<double>(moments.count())),
          Method::kMonteCarlo};
}

double log_odds(double p) { return std::log1p(-p) - std::log(p); }

}  // namespace

double phase_probability(const QuasiPeriodic& law, double w) noexcept {
  double p = law.coeffs.empty() ? 0.0 : law.coeffs[0];
  for (std::size_t m = 1; m < law.coeffs.size(); ++m) {
    p += law.coeffs[m] * std::cos(2.0 * std::numbers::pi * static_cast<double>(m) * w);
  }
  return p;
}

double beta_kernel(double a, double b, double x) noexcept {
  return std::exp(beta_log_kernel(a, b, x));
}

EnvironmentModel::EnvironmentModel(Law law) : law_(std::move(law)) {
  std::visit(
      [&](const auto& l) {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, Constant>) {
          if (!in_open_unit(l.p)) throw ModelError(field_error("model.p", l.p, "must lie in (0, 1)"));
          p_min_ = p_max_ = l.p;
        } else if constexpr (std::is_same_v<T, IidDiscrete>) {
          if (l.atoms.empty()) throw ModelError("model.atoms: at least one atom is required");
          double total = 0.0;
          p_min_ = 1.0;
          p_max_ = 0.0;
          for (std::size_t i = 0; i < l.atoms.size(); ++i) {
            const auto& a = l.atoms[i];
            const std::string field = "model.atoms[" + std::to_string(i) + "]";
            if (!in_open_unit(a.p)) throw ModelError(field_error(field + ".p", a.p, "must lie in (0, 1)"));
            if (!(std::isfinite(a.weight) && a.weight > 0.0)) {
              throw ModelError(field_error(field + ".weight", a.weight, "must be positive"));
            }
            total += a.weight;
            p_min_ = std::min(p_min_, a.p);
            p_max_ = std::max(p_max_, a.p);
          }
          if (std::abs(total - 1.0) > 1e-12) {
            throw ModelError(field_error("model.atoms[*].weight", total, "weights must sum to 1"));
          }
        } else if constexpr (std::is_same_v<T, IidParametric>) {
          if (!in_open_unit(l.p_lo)) throw ModelError(field_error("model.p_lo", l.p_lo, "must lie in (0, 1)"));
          if (!in_open_unit(l.p_hi)) throw ModelError(field_error("model.p_hi", l.p_hi, "must lie in (0, 1)"));
          if (!(l.p_lo < l.p_hi)) throw ModelError(field_error("model.p_hi", l.p_hi, "must exceed p_lo"));
          if (l.family == Family::kBeta) {
            if (l.params.size() != 2) throw ModelError("model.params: beta needs exactly two parameters (a, b)");
            for (std::size_t i = 0; i < 2; ++i) {
              if (!(std::isfinite(l.params[i]) && l.params[i] > 0.0)) {
                throw ModelError(field_error("model.params[" + std::to_string(i) + "]", l.params[i], "must be positive"));
              }
            }
          } else if (!l.params.empty()) {
            throw ModelError("model.params: uniform takes no parameters");
          }
          p_min_ = l.p_lo;
          p_max_ = l.p_hi;
        } else {
          if (!(std::isfinite(l.alpha) && l.alpha > 0.0 && l.alpha < 1.0)) {
            throw ModelError(field_error("model.alpha", l.alpha, "must lie in (0, 1)"));
          }
          if (!(std::isfinite(l.omega0) && l.omega0 >= 0.0 && l.omega0 < 1.0)) {
            throw ModelError(field_error("model.omega0", l.omega0, "must lie in [0, 1)"));
          }
          if (l.coeffs.empty()) throw ModelError("model.coeffs: at least the constant term is required");
          p_min_ = 1.0;
          p_max_ = 0.0;
          for (int i = 0; i <= kPhaseGrid; ++i) {
            const double p = phase_probability(l, static_cast<double>(i) / kPhaseGrid);
            p_min_ = std::min(p_min_, p);
            p_max_ = std::max(p_max_, p);
          }
          if (!(p_min_ > 0.0)) throw ModelError(field_error("model.coeffs", p_min_, "p(w) must stay above 0"));
          if (!(p_max_ < 1.0)) throw ModelError(field_error("model.coeffs", p_max_, "p(w) must stay below 1"));
          if (const long q = small_denominator(l.alpha); q != 0) {
            warnings_.push_back("alpha is within 1e-9 of a rational with denominator " + std::to_string(q) +
                                "; ergodic averages need not converge uniformly");
          }
        }
      },
      law_);
  id_ = make_id(law_);
}

bool EnvironmentModel::is_exact() const noexcept {
  return std::holds_alternative<Constant>(law_) || std::holds_alternative<IidDiscrete>(law_);
}

bool EnvironmentModel::is_iid() const noexcept { return !is_quasi_periodic(); }

EnvironmentWindow::EnvironmentWindow(std::int64_t lo, std::vector<double> p, std::string model_id,
                                     std::uint64_t seed)
    : lo_(lo), p_(std::move(p)), model_id_(std::move(model_id)), seed_(seed) {
  if (p_.empty()) throw DomainError("window must contain at least one site");
  for (double v : p_) {
    if (!in_open_unit(v)) throw ModelError("window value " + num(v) + " outside (0, 1)");
  }
}

double EnvironmentWindow::p(std::int64_t k) const {
  if (!contains(k)) {
    throw IndexOutOfWindow("site " + std::to_string(k) + " outside [" + std::to_string(lo()) + ", " +
                           std::to_string(hi()) + "]");
  }
  return p_unchecked(k);
}

double site_probability(const EnvironmentModel& model, std::uint64_t seed, std::int64_t k) {
  return std::visit(
      [&](const auto& l) -> double {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, Constant>) {
          return l.p;
        } else if constexpr (std::is_same_v<T, QuasiPeriodic>) {
          long double w = std::fmod(static_cast<long double>(l.omega0) +
                                        static_cast<long double>(k) * static_cast<long double>(l.alpha),
                                    1.0L);
          if (w < 0) w += 1.0L;
          return phase_probability(l, static_cast<double>(w));
        } else {
          rng::CounterStream stream(rng::derive_key(seed, {kSiteTag}), static_cast<std::uint64_t>(k));
          if constexpr (std::is_same_v<T, IidDiscrete>) {
            const double u = stream.uniform();
            double cum = 0.0;
            for (const auto& a : l.atoms) {
              cum += a.weight;
              if (u < cum) return a.p;
            }
            return l.atoms.back().p;
          } else {
            return draw_parametric(l, stream);
          }
        }
      },
      model.law());
}

EnvironmentWindow realize(const EnvironmentModel& model, std::int64_t lo, std::int64_t hi,
                          std::uint64_t seed) {
  if (lo > hi) throw DomainError("realize: lo must not exceed hi");
  std::vector<double> p(static_cast<std::size_t>(hi - lo + 1));
  for (std::int64_t k = lo; k <= hi; ++k) p[static_cast<std::size_t>(k - lo)] = site_probability(model, seed, k);
  return EnvironmentWindow(lo, std::move(p), model.id(), seed);
}

double odds_ratio(const EnvironmentWindow& window, std::int64_t k) {
  const double p = window.p(k);
  return (1.0 - p) / p;
}

const char* to_string(Method m) noexcept {
  switch (m) {
    case Method::kClosedForm: return "closed-form";
    case Method::kQuadrature: return "quadrature";
    case Method::kMonteCarlo: return "monte-carlo";
    case Method::kErgodicAverage: return "ergodic-average";
    case Method::kFiniteN: return "finite-n";
  }
  return "unknown";
}

const char* to_string(Regime r) noexcept {
  switch (r) {
    case Regime::kTransientRight: return "transient-right";
    case Regime::kTransientLeft: return "transient-left";
    case Regime::kRecurrent: return "recurrent";
  }
  return "unknown";
}

Estimate lambda(const EnvironmentModel& model) {
  return std::visit(
      [&](const auto& l) -> Estimate {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, Constant>) {
          return {log_odds(l.p), 0.0, Method::kClosedForm};
        } else if constexpr (std::is_same_v<T, IidDiscrete>) {
          double s = 0.0;
          for (const auto& a : l.atoms) s += a.weight * log_odds(a.p);
          return {s, 0.0, Method::kClosedForm};
        } else if constexpr (std::is_same_v<T, QuasiPeriodic>) {
          return {numeric::periodic_mean([&](double w) { return log_odds(phase_probability(l, w)); }), 0.0,
                  Method::kQuadrature};
        } else {
          return monte_carlo(model, [](double p) { return log_odds(p); });
        }
      },
      model.law());
}

Classification classify(const EnvironmentModel& model, std::optional<double> tol) {
  const Estimate lam = lambda(model);
  const double band = tol ? *tol : (lam.std_error > 0.0 ? 3.0 * lam.std_error : 1e-9);
  Regime regime = Regime::kRecurrent;
  if (lam.value < -band) regime = Regime::kTransientRight;
  else if (lam.value > band) regime = Regime::kTransientLeft;
  return {regime, lam.value, band, std::abs(lam.value) <= band};
}

Estimate r_kappa(const EnvironmentModel& model, double kappa, double gamma) {
  if (!(kappa >= 0.0 && kappa <= gamma)) {
    throw DomainError("kappa = " + num(kappa) + " outside [0, " + num(gamma) + "]");
  }
  if (kappa == 0.0) return {1.0, 0.0, Method::kClosedForm};
  return std::visit(
      [&](const auto& l) -> Estimate {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, Constant>) {
          return {std::pow((1.0 - l.p) / l.p, kappa), 0.0, Method::kClosedForm};
        } else if constexpr (std::is_same_v<T, IidDiscrete>) {
          double s = 0.0;
          for (const auto& a : l.atoms) s += a.weight * std::pow((1.0 - a.p) / a.p, kappa);
          return {s, 0.0, Method::kClosedForm};
        } else if constexpr (std::is_same_v<T, QuasiPeriodic>) {
          return {std::exp(kappa * lambda(model).value), 0.0, Method::kQuadrature};
        } else {
          Estimate e = monte_carlo(model, [&](double p) { return std::pow((1.0 - p) / p, kappa); });
          if (!(e.std_error <= 0.1 * e.value)) {
            throw MomentDivergence("E A^" + num(kappa) + " estimate does not stabilize (se " +
                                   num(e.std_error) + ")");
          }
          return e;
        }
      },
      model.law());
}

Estimate r_kappa_finite_n(const EnvironmentModel& model, double kappa, int n) {
  if (n < 1) throw DomainError("finite-n r estimate needs n >= 1");
  if (const auto* qp = std::get_if<QuasiPeriodic>(&model.law())) {
    // log E exp(kappa S_n(w)) via log-sum-exp over a uniform phase grid.
    constexpr int kNodes = 8192;
    std::vector<double> exponents(kNodes);
    for (int i = 0; i < kNodes; ++i) {
      const double w = static_cast<double>(i) / kNodes;
      double s = 0.0;
      for (int j = 1; j <= n; ++j) {
        const double phase = std::fmod(w + j * qp->alpha, 1.0);
        s += log_odds(phase_probability(*qp, phase));
      }
      exponents[i] = kappa * s;
    }
    const double top = *std::max_element(exponents.begin(), exponents.end());
    numeric::KahanSum acc;
    for (double e : exponents) acc.add(std::exp(e - top));
    const double log_mean = top + std::log(acc.value() / kNodes);
    return {std::exp(log_mean / n), 0.0, Method::kFiniteN};
  }
  return r_kappa(model, kappa, std::max(kappa, kDefaultGamma));
}

ConditionReport check_conditions(const EnvironmentModel& model, double gamma) {
  if (!(gamma > 2.0)) throw DomainError("gamma = " + num(gamma) + " must exceed 2");
  ConditionReport rep;
  rep.gamma = gamma;
  const bool exact = model.is_exact();
  const double p_lo = model.p_min();
  const double p_hi = model.p_max();

  rep.c1.exact = exact;
  rep.c1.holds = true;
  rep.c1.evidence = 1.0;
  if (const auto* qp = std::get_if<QuasiPeriodic>(&model.law())) {
    rep.c1.exact = false;
    if (!model.warnings().empty()) {
      rep.c1.holds = false;
      rep.c1.evidence = 0.0;
      rep.c1.note = "rotation number has a small-denominator rational approximation";
    } else {
      rep.c1.note = "irrational rotation (numerically), uniquely ergodic";
    }
    (void)qp;
  } else if (model.is_constant()) {
    rep.c1.note = "single-point environment";
  } else {
    rep.c1.note = "i.i.d. shift is ergodic";
  }

  rep.c2.exact = exact;
  rep.c2.evidence = std::max(-std::log(p_lo), -std::log1p(-p_hi));
  rep.c2.holds = std::isfinite(rep.c2.evidence);
  rep.c2.note = "bounded by max(-ln p_min, -ln(1 - p_max))";

  rep.c3.exact = exact;
  rep.c3.evidence = std::max(std::pow(p_lo, -gamma), std::pow(1.0 - p_hi, -gamma));
  rep.c3.holds = std::isfinite(rep.c3.evidence);
  rep.c3.note = "bounded by max(p_min^-gamma, (1 - p_max)^-gamma)";

  const Estimate r_gamma = r_kappa(model, gamma, gamma);
  rep.c4.exact = exact;
  rep.c4.evidence = r_gamma.value;
  rep.c4.holds = std::isfinite(r_gamma.value);
  rep.c4.note = std::string("r(gamma) via ") + to_string(r_gamma.method);

  rep.r1 = r_kappa(model, 1.0, gamma).value;
  rep.r2 = r_kappa(model, 2.0, gamma).value;
  const Classification cls = classify(model);
  rep.regime = cls.regime;
  rep.clt_eligible = cls.regime == Regime::kTransientRight && rep.r2 < 1.0;
  if (cls.regime != Regime::kTransientRight) {
    rep.notes.push_back(std::string("not CLT-eligible: walk is ") + to_string(cls.regime));
  }
  if (rep.r1 >= 1.0) rep.notes.push_back("r(1) >= 1: zero-speed regime, no finite mu");
  if (rep.r2 >= 1.0) rep.notes.push_back("r(2) >= 1: quenched variance not integrable");
  for (const auto& w : model.warnings()) rep.notes.push_back(w);
  return rep;
}

EnvironmentModel golden_ratio_model() {
  return EnvironmentModel(QuasiPeriodic{(std::sqrt(5.0) - 1.0) / 2.0, 0.0, {0.7, 0.1}});
}

EnvironmentModel two_point_model() {
  return EnvironmentModel(IidDiscrete{{{0.8, 0.5}, {0.6, 0.5}}});
}

EnvironmentModel zero_speed_model() {
  return EnvironmentModel(IidDiscrete{{{0.9, 0.5}, {0.15, 0.5}}});
}

}  // namespace rwre::env
