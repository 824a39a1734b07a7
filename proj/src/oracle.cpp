#include "rwre/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rwre/error.hpp"
#include "rwre/numeric.hpp"

namespace rwre::oracle {
namespace {

void require_cover(const env::EnvironmentWindow& w, std::int64_t a, std::int64_t n) {
  if (!(a < n)) throw DomainError("finite chain needs a < n");
  if (!(w.contains(a) && w.contains(n))) {
    throw WindowTooSmall("window [" + std::to_string(w.lo()) + ", " + std::to_string(w.hi()) +
                         "] does not cover [" + std::to_string(a) + ", " + std::to_string(n) + "]");
  }
}

HittingMoments finish(const env::EnvironmentWindow& window, std::int64_t a, std::int64_t n,
                      std::vector<double> f) {
  HittingMoments out;
  out.solution = solve_finite_chain(window, a, n, f);
  out.forcing = std::move(f);
  const auto& h = out.solution.h;
  out.increments.resize(h.size() - 1);
  for (std::size_t i = 0; i + 1 < h.size(); ++i) out.increments[i] = h[i] - h[i + 1];
  return out;
}

}  // namespace

FiniteChainSolution solve_finite_chain(const env::EnvironmentWindow& window, std::int64_t a, std::int64_t n,
                                       std::span<const double> f_values) {
  require_cover(window, a, n);
  const auto size = static_cast<std::size_t>(n - a + 1);
  if (f_values.size() != size) {
    throw DomainError("forcing has " + std::to_string(f_values.size()) + " entries, expected " +
                      std::to_string(size));
  }
  FiniteChainSolution s;
  s.a = a;
  s.n = n;
  s.h.assign(size, 0.0);
  s.phi.assign(size, 0.0);
  s.d_tilde.assign(size, 0.0);
  // phi_a = d~_a = 0 encodes h_a = 0. The carry coefficient for d~ is
  // q_k / (1 - q_k phi_{k-1}) = A_k phi_k, which tends to A_k as a -> -inf.
  for (std::size_t i = 1; i + 1 < size; ++i) {
    const double p = window.p_unchecked(a + static_cast<std::int64_t>(i));
    const double q = 1.0 - p;
    const double denom = 1.0 - q * s.phi[i - 1];
    s.phi[i] = p / denom;
    s.d_tilde[i] = (q * s.d_tilde[i - 1] + f_values[i]) / denom;
  }
  for (std::size_t i = size - 1; i-- > 1;) s.h[i] = s.phi[i] * s.h[i + 1] + s.d_tilde[i];

  for (std::size_t i = 1; i + 1 < size; ++i) {
    const double p = window.p_unchecked(a + static_cast<std::int64_t>(i));
    const double rhs = p * s.h[i + 1] + (1.0 - p) * s.h[i - 1] + f_values[i];
    s.max_residual = std::max(s.max_residual, std::abs(s.h[i] - rhs));
  }
  return s;
}

HittingMoments expected_hitting(const env::EnvironmentWindow& window, std::int64_t a, std::int64_t n) {
  require_cover(window, a, n);
  std::vector<double> f(static_cast<std::size_t>(n - a + 1), 1.0);
  f.front() = f.back() = 0.0;
  return finish(window, a, n, std::move(f));
}

HittingMoments variance_hitting(const env::EnvironmentWindow& window, std::int64_t a, std::int64_t n) {
  const HittingMoments e = expected_hitting(window, a, n);
  const auto& h = e.solution.h;
  std::vector<double> f(h.size(), 0.0);
  for (std::size_t i = 1; i + 1 < h.size(); ++i) {
    const double p = window.p_unchecked(a + static_cast<std::int64_t>(i));
    const double up = h[i + 1] - h[i] + 1.0;
    const double down = h[i - 1] - h[i] + 1.0;
    f[i] = p * up * up + (1.0 - p) * down * down;
  }
  return finish(window, a, n, std::move(f));
}

HittingMoments variance_hitting_from_increments(const env::EnvironmentWindow& window, std::int64_t a, std::int64_t n,
                                        bool swapped) {
  const HittingMoments e = expected_hitting(window, a, n);
  const auto& m = e.increments;
  std::vector<double> f(e.solution.h.size(), 0.0);
  for (std::size_t i = 1; i + 1 < f.size(); ++i) {
    const double p = window.p_unchecked(a + static_cast<std::int64_t>(i));
    const double q = 1.0 - p;
    const double here = m[i];
    const double left = m[i - 1];
    f[i] = swapped ? p * (1.0 - here) * (1.0 - here) + q * (left + 1.0) * (left + 1.0)
                   : p * (here + 1.0) * (here + 1.0) + q * (1.0 - left) * (1.0 - left);
  }
  return finish(window, a, n, std::move(f));
}

double ExactPmf::mean() const {
  numeric::KahanSum s;
  for (std::size_t i = 0; i < support.size(); ++i) s.add(static_cast<double>(support[i]) * probabilities[i]);
  return s.value();
}

double ExactPmf::probability(std::int64_t x) const {
  const auto it = std::lower_bound(support.begin(), support.end(), x);
  if (it == support.end() || *it != x) return 0.0;
  return probabilities[static_cast<std::size_t>(it - support.begin())];
}

ExactPmf exact_position_distribution(const env::EnvironmentWindow& window, std::int64_t z0, std::int64_t t) {
  if (t < 0) throw DomainError("t must be >= 0");
  if (!(window.contains(z0 - t) && window.contains(z0 + t))) {
    throw WindowTooSmall("exact pmf needs sites [" + std::to_string(z0 - t) + ", " + std::to_string(z0 + t) + "]");
  }
  // mass[i] is the probability of z0 - t + i.
  const auto width = static_cast<std::size_t>(2 * t + 1);
  std::vector<double> mass(width, 0.0), next(width, 0.0);
  mass[static_cast<std::size_t>(t)] = 1.0;
  for (std::int64_t s = 0; s < t; ++s) {
    std::fill(next.begin(), next.end(), 0.0);
    // After s steps the support has parity of s and lies in [z0 - s, z0 + s].
    for (std::int64_t off = -s; off <= s; off += 2) {
      const auto i = static_cast<std::size_t>(t + off);
      const double m = mass[i];
      if (m == 0.0) continue;
      const double p = window.p_unchecked(z0 + off);
      next[i + 1] += m * p;
      next[i - 1] += m * (1.0 - p);
    }
    std::swap(mass, next);
  }
  ExactPmf pmf;
  pmf.t = t;
  pmf.z0 = z0;
  for (std::int64_t off = -t; off <= t; off += 2) {
    pmf.support.push_back(z0 + off);
    pmf.probabilities.push_back(mass[static_cast<std::size_t>(t + off)]);
  }
  return pmf;
}

MomentEstimate mc_moment_oracle(const env::EnvironmentWindow& window, std::int64_t k, std::uint64_t samples,
                                std::uint64_t seed, const walk::SimulationBudget& budget) {
  if (samples < 2) throw DomainError("moment oracle needs at least two samples");
  numeric::RunningMoments m;
  for (std::uint64_t i = 0; i < samples; ++i) {
    m.add(static_cast<double>(walk::sample_crossing_time(window, k, {seed, i}, budget)));
  }
  const double n = static_cast<double>(samples);
  MomentEstimate out;
  out.samples = samples;
  out.mean = m.mean();
  out.variance = m.variance();
  out.mean_se = std::sqrt(out.variance / n);
  out.variance_se = std::sqrt(std::max(0.0, m.fourth_central() - out.variance * out.variance) / n);
  return out;
}

}  // namespace rwre::oracle
