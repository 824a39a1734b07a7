#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "rwre/env.hpp"
#include "rwre/rng.hpp"

namespace rwre::walk {

struct SimulationBudget {
  std::int64_t t_max = 0;
  std::int64_t n_max = 0;
  /// The walk must never reach -left_guard.
  std::int64_t left_guard = 100;
  std::uint64_t max_steps = 1ull << 40;
};

/// Default left guard 50 + 10 ceil(1 / |lambda|).
std::int64_t default_left_guard(double lambda);

/// Identifies the randomness of one replica; substreams are derived from it.
struct ReplicaSeed {
  std::uint64_t master = 0;
  std::uint64_t replica = 0;
};

struct WalkObservation {
  ReplicaSeed seed;
  std::int64_t start = 0;
  /// tau[k] = T(k + 1) - T(k).
  std::vector<std::int64_t> tau;
  /// T[m] = first time the walk is at m; T[0] = 0.
  std::vector<std::int64_t> T;
  std::vector<std::pair<std::int64_t, std::int64_t>> snapshots;  // (t, X(t))
};

/// One step from x: +1 with probability p_x. Consumes exactly one draw.
/// Throws Left/RightGuardBreach unless lo < x < hi.
std::int64_t step(const env::EnvironmentWindow& window, std::int64_t x, rng::CounterStream& stream);

/// Crossing time of edge k -> k + 1 from its own (replica, k) substream.
std::int64_t sample_crossing_time(const env::EnvironmentWindow& window, std::int64_t k, ReplicaSeed seed,
                                  const SimulationBudget& budget);

struct HittingSample {
  std::vector<std::int64_t> tau;  // tau_0 .. tau_{n-1}
  std::vector<std::int64_t> T;    // T(0) .. T(n)
};

/// tau_k for k < n and T(m) = sum_{j<m} tau_j.
HittingSample sample_hitting_times(const env::EnvironmentWindow& window, std::int64_t n, ReplicaSeed seed,
                                   const SimulationBudget& budget);

/// X(t) at each t in t_list (sorted) along one trajectory from z0.
std::vector<std::pair<std::int64_t, std::int64_t>> sample_position(const env::EnvironmentWindow& window,
                                                                    std::int64_t z0,
                                                                    std::span<const std::int64_t> t_list,
                                                                    ReplicaSeed seed,
                                                                    const SimulationBudget& budget);

/// One trajectory from 0 recording both snapshots and hitting times. Runs
/// until max(t_list) and beyond, until the first new maximum after it, so
/// that T(n_t + 1) is known for every recorded t; then keeps going until
/// site n_target has been hit. With `bracket_last = false` the walk stops
/// at max(t_list) once n_target is reached, without waiting for a new maximum.
WalkObservation sample_joint(const env::EnvironmentWindow& window, std::span<const std::int64_t> t_list,
                             ReplicaSeed seed, const SimulationBudget& budget, std::int64_t n_target = 0,
                             bool bracket_last = true);

/// The unique n with T(n) <= t < T(n + 1); T[0] must be 0.
std::int64_t first_passage_index(std::span<const std::int64_t> T, std::int64_t t);

}  // namespace rwre::walk
