#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace rwre::env {

// ---------------------------------------------------------------------------
// Environment laws
// ---------------------------------------------------------------------------

struct Constant {
  double p;
};

struct Atom {
  double p;
  double weight;
};

struct IidDiscrete {
  std::vector<Atom> atoms;
};

enum class Family { kUniform, kBeta };

/// Continuous i.i.d. law restricted to [p_lo, p_hi]. Beta laws are truncated
/// to the support; `params` holds (a, b) for Beta and is empty for Uniform.
struct IidParametric {
  Family family = Family::kUniform;
  std::vector<double> params;
  double p_lo = 0.0;
  double p_hi = 0.0;
};

/// p(w) = coeffs[0] + sum_{m>=1} coeffs[m] cos(2 pi m w), sampled along the
/// rotation w_k = omega0 + k alpha (mod 1).
struct QuasiPeriodic {
  double alpha = 0.0;
  double omega0 = 0.0;
  std::vector<double> coeffs;
};

using Law = std::variant<Constant, IidDiscrete, IidParametric, QuasiPeriodic>;

/// A validated environment law. Construction throws ModelError naming the
/// offending field when the law could produce a p outside (0, 1).
class EnvironmentModel {
 public:
  explicit EnvironmentModel(Law law);

  const Law& law() const noexcept { return law_; }
  /// Canonical textual identity; two models with equal ids realize equally.
  const std::string& id() const noexcept { return id_; }
  /// True for Constant and IidDiscrete, where all functionals are closed-form.
  bool is_exact() const noexcept;
  bool is_iid() const noexcept;
  bool is_constant() const noexcept { return std::holds_alternative<Constant>(law_); }
  bool is_quasi_periodic() const noexcept { return std::holds_alternative<QuasiPeriodic>(law_); }
  const std::vector<std::string>& warnings() const noexcept { return warnings_; }

  /// Smallest and largest value p can take (grid-based for QuasiPeriodic).
  double p_min() const noexcept { return p_min_; }
  double p_max() const noexcept { return p_max_; }

 private:
  Law law_;
  std::string id_;
  std::vector<std::string> warnings_;
  double p_min_ = 0.0;
  double p_max_ = 0.0;
};

/// Evaluates the cosine series of a quasi-periodic law at phase w.
double phase_probability(const QuasiPeriodic& law, double w) noexcept;

/// Truncated Beta(a, b) density on [lo, hi], up to normalisation.
double beta_kernel(double a, double b, double x) noexcept;

// ---------------------------------------------------------------------------
// Realized environments
// ---------------------------------------------------------------------------

class EnvironmentWindow {
 public:
  EnvironmentWindow(std::int64_t lo, std::vector<double> p, std::string model_id,
                    std::uint64_t seed);

  std::int64_t lo() const noexcept { return lo_; }
  std::int64_t hi() const noexcept { return lo_ + static_cast<std::int64_t>(p_.size()) - 1; }
  std::size_t size() const noexcept { return p_.size(); }
  bool contains(std::int64_t k) const noexcept { return k >= lo() && k <= hi(); }

  /// p_k; throws IndexOutOfWindow.
  double p(std::int64_t k) const;
  double q(std::int64_t k) const { return 1.0 - p(k); }
  /// Unchecked access, k must lie in the window.
  double p_unchecked(std::int64_t k) const noexcept { return p_[static_cast<std::size_t>(k - lo_)]; }

  std::span<const double> values() const noexcept { return p_; }
  const std::string& model_id() const noexcept { return model_id_; }
  std::uint64_t seed() const noexcept { return seed_; }

 private:
  std::int64_t lo_;
  std::vector<double> p_;
  std::string model_id_;
  std::uint64_t seed_;
};

/// Realizes p_k for k in [lo, hi]. Site k depends only on (model, seed, k).
EnvironmentWindow realize(const EnvironmentModel& model, std::int64_t lo, std::int64_t hi,
                          std::uint64_t seed);

/// Draws the value of a single site; `realize` is this function mapped over
/// the index range.
double site_probability(const EnvironmentModel& model, std::uint64_t seed, std::int64_t k);

/// A_k = q_k / p_k.
double odds_ratio(const EnvironmentWindow& window, std::int64_t k);

// ---------------------------------------------------------------------------
// Law-level functionals
// ---------------------------------------------------------------------------

enum class Method { kClosedForm, kQuadrature, kMonteCarlo, kErgodicAverage, kFiniteN };

const char* to_string(Method m) noexcept;

struct Estimate {
  double value = 0.0;
  double std_error = 0.0;  // zero for closed forms
  Method method = Method::kClosedForm;
};

/// lambda = E ln A.
Estimate lambda(const EnvironmentModel& model);

enum class Regime { kTransientRight, kTransientLeft, kRecurrent };

const char* to_string(Regime r) noexcept;

struct Classification {
  Regime regime;
  double lambda;
  double tolerance;
  bool within_tolerance;  // |lambda| <= tolerance
};

/// Sign of lambda; |lambda| <= tol means recurrent. Without tol, uses 1e-9
/// for exact laws and three standard errors for estimated ones.
Classification classify(const EnvironmentModel& model, std::optional<double> tol = {});

inline constexpr double kDefaultGamma = 4.0;

/// r(kappa) = limsup (E prod_{j=1}^n A_j^kappa)^{1/n} for 0 <= kappa <= gamma.
Estimate r_kappa(const EnvironmentModel& model, double kappa, double gamma = kDefaultGamma);

/// (E prod_{j=1}^n A_j^kappa)^{1/n} at a fixed n. Exact for i.i.d. laws,
/// quadrature over the circle for quasi-periodic ones.
Estimate r_kappa_finite_n(const EnvironmentModel& model, double kappa, int n);

struct ConditionVerdict {
  bool holds = false;
  bool exact = true;      // false means "estimated"
  double evidence = 0.0;  // the quantity the verdict was read from
  std::string note;
};

struct ConditionReport {
  double gamma = 0.0;
  ConditionVerdict c1, c2, c3, c4;
  double r1 = 0.0;
  double r2 = 0.0;
  Regime regime = Regime::kRecurrent;
  bool clt_eligible = false;  // lambda < 0 and r(2) < 1
  std::vector<std::string> notes;
};

ConditionReport check_conditions(const EnvironmentModel& model, double gamma);

/// Shipped example laws used by docs, tests and the CLI.
EnvironmentModel golden_ratio_model();
EnvironmentModel two_point_model();
EnvironmentModel zero_speed_model();

}  // namespace rwre::env
