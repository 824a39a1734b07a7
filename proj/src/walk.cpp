#include "rwre/walk.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rwre/error.hpp"

namespace rwre::walk {
namespace {

constexpr std::uint64_t kCrossingTag = 0x43524F5353ull;  // "CROSS"
constexpr std::uint64_t kPositionTag = 0x504F53ull;      // "POS"
constexpr std::uint64_t kJointTag = 0x4A4F494E54ull;     // "JOINT"

void require_guard(const env::EnvironmentWindow& window, const SimulationBudget& budget) {
  if (budget.left_guard < 1) throw DomainError("left guard must be >= 1");
  if (window.lo() > -budget.left_guard) {
    throw WindowTooSmall("window starts at " + std::to_string(window.lo()) + " but the left guard is -" +
                         std::to_string(budget.left_guard));
  }
}

[[noreturn]] void left_breach(std::int64_t x, std::uint64_t steps) {
  throw LeftGuardBreach("walk reached " + std::to_string(x) + " after " + std::to_string(steps) +
                        " steps; enlarge the left guard");
}

[[noreturn]] void right_breach(std::int64_t x, const env::EnvironmentWindow& w) {
  throw RightGuardBreach("walk at " + std::to_string(x) + " needs sites beyond window end " +
                         std::to_string(w.hi()));
}

// Inner stepping loop shared by all samplers. `on_step(t, x)` is called after
// every step and returns false to stop.
template <class OnStep>
void run_walk(const env::EnvironmentWindow& window, std::int64_t x, rng::CounterStream& stream,
              const SimulationBudget& budget, OnStep&& on_step) {
  const std::int64_t guard = -budget.left_guard;
  const std::int64_t hi = window.hi();
  const std::int64_t lo = window.lo();
  const double* p = window.values().data();
  for (std::uint64_t t = 1;; ++t) {
    if (t > budget.max_steps) {
      throw StepBudgetExceeded("walk exceeded " + std::to_string(budget.max_steps) + " steps");
    }
    if (x >= hi) right_breach(x, window);
    x += stream.uniform() < p[x - lo] ? 1 : -1;
    if (x <= guard) left_breach(x, t);
    if (!on_step(static_cast<std::int64_t>(t), x)) return;
  }
}

}  // namespace

std::int64_t default_left_guard(double lambda) {
  if (!(lambda < 0.0)) throw DomainError("left guard needs lambda < 0");
  return 50 + 10 * static_cast<std::int64_t>(std::ceil(1.0 / std::abs(lambda)));
}

std::int64_t step(const env::EnvironmentWindow& window, std::int64_t x, rng::CounterStream& stream) {
  if (x <= window.lo()) left_breach(x, 0);
  if (x >= window.hi()) right_breach(x, window);
  return stream.uniform() < window.p_unchecked(x) ? x + 1 : x - 1;
}

std::int64_t sample_crossing_time(const env::EnvironmentWindow& window, std::int64_t k, ReplicaSeed seed,
                                  const SimulationBudget& budget) {
  require_guard(window, budget);
  if (!window.contains(k + 1)) right_breach(k, window);
  if (k <= -budget.left_guard) left_breach(k, 0);
  rng::CounterStream stream(rng::derive_key(seed.master, {kCrossingTag, seed.replica}),
                            static_cast<std::uint64_t>(k));
  std::int64_t tau = 0;
  run_walk(window, k, stream, budget, [&](std::int64_t t, std::int64_t x) {
    tau = t;
    return x != k + 1;
  });
  return tau;
}

HittingSample sample_hitting_times(const env::EnvironmentWindow& window, std::int64_t n, ReplicaSeed seed,
                                   const SimulationBudget& budget) {
  if (n < 0) throw DomainError("hitting target must be >= 0");
  require_guard(window, budget);
  if (n > 0 && !window.contains(n)) {
    throw WindowTooSmall("window must cover [-W, " + std::to_string(n) + "]");
  }
  HittingSample out;
  out.tau.reserve(static_cast<std::size_t>(n));
  out.T.reserve(static_cast<std::size_t>(n) + 1);
  out.T.push_back(0);
  for (std::int64_t k = 0; k < n; ++k) {
    out.tau.push_back(sample_crossing_time(window, k, seed, budget));
    out.T.push_back(out.T.back() + out.tau.back());
  }
  return out;
}

std::vector<std::pair<std::int64_t, std::int64_t>> sample_position(const env::EnvironmentWindow& window,
                                                                    std::int64_t z0,
                                                                    std::span<const std::int64_t> t_list,
                                                                    ReplicaSeed seed,
                                                                    const SimulationBudget& budget) {
  require_guard(window, budget);
  if (!std::is_sorted(t_list.begin(), t_list.end())) throw DomainError("t_list must be sorted");
  std::vector<std::pair<std::int64_t, std::int64_t>> out;
  out.reserve(t_list.size());
  std::size_t next = 0;
  while (next < t_list.size() && t_list[next] <= 0) {
    if (t_list[next] < 0) throw DomainError("snapshot times must be >= 0");
    out.emplace_back(0, z0);
    ++next;
  }
  if (next == t_list.size()) return out;
  if (z0 <= -budget.left_guard) left_breach(z0, 0);
  rng::CounterStream stream(rng::derive_key(seed.master, {kPositionTag, seed.replica}), 0);
  run_walk(window, z0, stream, budget, [&](std::int64_t t, std::int64_t x) {
    while (next < t_list.size() && t_list[next] == t) {
      out.emplace_back(t, x);
      ++next;
    }
    return next < t_list.size();
  });
  return out;
}

WalkObservation sample_joint(const env::EnvironmentWindow& window, std::span<const std::int64_t> t_list,
                             ReplicaSeed seed, const SimulationBudget& budget, std::int64_t n_target,
                             bool bracket_last) {
  require_guard(window, budget);
  if (!std::is_sorted(t_list.begin(), t_list.end())) throw DomainError("t_list must be sorted");
  if (!t_list.empty() && t_list.front() < 0) throw DomainError("snapshot times must be >= 0");
  WalkObservation obs;
  obs.seed = seed;
  obs.start = 0;
  obs.T.push_back(0);
  const std::int64_t t_end = t_list.empty() ? 0 : t_list.back();
  std::size_t next = 0;
  while (next < t_list.size() && t_list[next] == 0) {
    obs.snapshots.emplace_back(0, 0);
    ++next;
  }
  std::int64_t max_reached = 0;
  rng::CounterStream stream(rng::derive_key(seed.master, {kJointTag, seed.replica}), 0);
  run_walk(window, 0, stream, budget, [&](std::int64_t t, std::int64_t x) {
    while (next < t_list.size() && t_list[next] == t) {
      obs.snapshots.emplace_back(t, x);
      ++next;
    }
    bool new_max = false;
    if (x > max_reached) {
      max_reached = x;
      obs.T.push_back(t);
      new_max = true;
    }
    if (max_reached < n_target) return true;
    return bracket_last ? !(t > t_end && new_max) : t < t_end;
  });
  obs.tau.resize(obs.T.size() - 1);
  for (std::size_t k = 0; k + 1 < obs.T.size(); ++k) obs.tau[k] = obs.T[k + 1] - obs.T[k];
  return obs;
}

std::int64_t first_passage_index(std::span<const std::int64_t> T, std::int64_t t) {
  if (T.empty() || T.front() != 0) throw DomainError("T must start with T(0) = 0");
  if (t < 0) throw DomainError("t must be >= 0");
  const auto it = std::upper_bound(T.begin(), T.end(), t);
  if (it == T.end()) {
    throw DomainError("T array too short: T(" + std::to_string(T.size() - 1) + ") = " +
                      std::to_string(T.back()) + " <= t = " + std::to_string(t));
  }
  return static_cast<std::int64_t>(it - T.begin()) - 1;
}

}  // namespace rwre::walk
