#pragma once

// Independent exact methods: finite-interval boundary-value solves for the
// mean and variance of hitting times, exact position laws, and a plain
// Monte Carlo moment estimator. None of these routes goes through the
// series in analytics.hpp.

#include <cstdint>
#include <span>
#include <vector>

#include "rwre/env.hpp"
#include "rwre/walk.hpp"

namespace rwre::oracle {

/// Solution of h_k = p_k h_{k+1} + q_k h_{k-1} + f_k for a < k < n with
/// h_a = h_n = 0. All arrays are indexed by k - a, k in [a, n].
struct FiniteChainSolution {
  std::int64_t a = 0;
  std::int64_t n = 0;
  std::vector<double> h;
  std::vector<double> phi;
  std::vector<double> d_tilde;
  double max_residual = 0.0;

  double at(std::int64_t k) const { return h.at(static_cast<std::size_t>(k - a)); }
};

/// Forward phi / d~ sweep, then h_k = phi_k h_{k+1} + d~_k backwards.
/// f_values[i] is f at site a + i; the boundary entries are ignored.
FiniteChainSolution solve_finite_chain(const env::EnvironmentWindow& window, std::int64_t a, std::int64_t n,
                                       std::span<const double> f_values);

struct HittingMoments {
  FiniteChainSolution solution;
  /// increments[i] = h(a + i) - h(a + i + 1) for i in [0, n - a).
  std::vector<double> increments;
  std::vector<double> forcing;  // the f used, indexed by k - a

  double increment(std::int64_t k) const { return increments.at(static_cast<std::size_t>(k - solution.a)); }
};

/// e(x) = expected time to leave (a, n) from x; e(k) - e(k + 1) -> mu_k as a -> -inf.
HittingMoments expected_hitting(const env::EnvironmentWindow& window, std::int64_t a, std::int64_t n);

/// Variance of the same exit time, with forcing built from the solved e:
/// f(x) = p_x (e(x+1) - e(x) + 1)^2 + q_x (e(x-1) - e(x) + 1)^2.
HittingMoments variance_hitting(const env::EnvironmentWindow& window, std::int64_t a, std::int64_t n);

/// Same solve with a forcing written in terms of increments m_k = e(k) - e(k+1):
/// `swapped = false` gives p_k (m_k + 1)^2 + q_k (1 - m_{k-1})^2,
/// `swapped = true` gives p_k (1 - m_k)^2 + q_k (m_{k-1} + 1)^2.
HittingMoments variance_hitting_from_increments(const env::EnvironmentWindow& window, std::int64_t a, std::int64_t n,
                                        bool swapped);

struct ExactPmf {
  std::int64_t t = 0;
  std::int64_t z0 = 0;
  std::vector<std::int64_t> support;
  std::vector<double> probabilities;

  double mean() const;
  double probability(std::int64_t x) const;
};

/// Exact law of X(t) from z0 by forward propagation of mass.
ExactPmf exact_position_distribution(const env::EnvironmentWindow& window, std::int64_t z0, std::int64_t t);

struct MomentEstimate {
  double mean = 0.0;
  double mean_se = 0.0;
  double variance = 0.0;
  double variance_se = 0.0;
  std::uint64_t samples = 0;
};

/// N independent tau_k samples (replica i uses ReplicaSeed{seed, i}).
MomentEstimate mc_moment_oracle(const env::EnvironmentWindow& window, std::int64_t k, std::uint64_t samples,
                                std::uint64_t seed, const walk::SimulationBudget& budget);

}  // namespace rwre::oracle
