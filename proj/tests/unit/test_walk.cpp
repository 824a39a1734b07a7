#include <doctest.h>

#include <cmath>
#include <vector>

#include "rwre/analytics.hpp"
#include "rwre/error.hpp"
#include "rwre/numeric.hpp"
#include "rwre/walk.hpp"

using namespace rwre;
using namespace rwre::walk;

namespace {

env::EnvironmentWindow constant_window(double p, std::int64_t lo, std::int64_t hi) {
  return env::realize(env::EnvironmentModel(env::Constant{p}), lo, hi, 0);
}

SimulationBudget budget(std::int64_t guard = 100) {
  SimulationBudget b;
  b.left_guard = guard;
  return b;
}

}  // namespace

TEST_CASE("step: near-deterministic site always moves right") {
  const double p = std::nextafter(1.0, 0.0);
  const env::EnvironmentWindow w(-1, {p, p, p}, "t", 0);
  rng::CounterStream s(1, 0);
  for (int i = 0; i < 10000; ++i) REQUIRE(step(w, 0, s) == 1);
}

TEST_CASE("step: up-fraction matches p") {
  const auto w = constant_window(0.75, -2, 2);
  rng::CounterStream s(rng::derive_key(9, {1}), 0);
  int up = 0;
  for (int i = 0; i < 100000; ++i) up += step(w, 0, s) == 1;
  CHECK(std::abs(up / 1e5 - 0.75) < 0.005);
}

TEST_CASE("step: replaying a stream replays the steps") {
  const auto w = env::realize(env::two_point_model(), -10, 10, 3);
  rng::CounterStream a(42, 7), b(42, 7);
  for (int i = 0; i < 1000; ++i) REQUIRE(step(w, static_cast<std::int64_t>(i % 9) - 4, a) ==
                                         step(w, static_cast<std::int64_t>(i % 9) - 4, b));
}

TEST_CASE("step: edges of the window are guarded") {
  const auto w = constant_window(0.75, -2, 2);
  rng::CounterStream s(1, 0);
  CHECK_THROWS_AS(step(w, -2, s), LeftGuardBreach);
  CHECK_THROWS_AS(step(w, 2, s), RightGuardBreach);
}

TEST_CASE("crossing times in a constant environment") {
  const auto w = constant_window(0.75, -200, 2);
  int one = 0, three = 0;
  numeric::RunningMoments m;
  const int reps = 100000;
  for (int r = 0; r < reps; ++r) {
    const auto tau = sample_crossing_time(w, 0, {5, static_cast<std::uint64_t>(r)}, budget(150));
    REQUIRE(tau % 2 == 1);
    one += tau == 1;
    three += tau == 3;
    m.add(static_cast<double>(tau));
  }
  CHECK(std::abs(one / double(reps) - 0.75) < 0.005);
  CHECK(std::abs(three / double(reps) - 0.140625) < 0.004);
  CHECK(std::abs(m.mean() - 2.0) < 3 * std::sqrt(6.0 / reps));
}

TEST_CASE("hitting times: T is the prefix sum of odd crossing times") {
  const auto w = constant_window(0.75, -200, 101);
  numeric::RunningMoments m;
  const int reps = 2000;
  for (int r = 0; r < reps; ++r) {
    const auto h = sample_hitting_times(w, 100, {11, static_cast<std::uint64_t>(r)}, budget(150));
    REQUIRE(h.T.size() == 101);
    REQUIRE(h.T[0] == 0);
    for (std::size_t k = 0; k < h.tau.size(); ++k) {
      REQUIRE(h.tau[k] % 2 == 1);
      REQUIRE(h.T[k + 1] == h.T[k] + h.tau[k]);
    }
    m.add(static_cast<double>(h.T[100]) / 100.0);
  }
  CHECK(std::abs(m.mean() - 2.0) < 3 * std::sqrt(6.0 / (100.0 * reps)));
}

TEST_CASE("hitting times: crossing times do not depend on the target") {
  const auto w = env::realize(env::two_point_model(), -300, 60, 4);
  const auto a = sample_hitting_times(w, 20, {3, 9}, budget(200));
  const auto b = sample_hitting_times(w, 50, {3, 9}, budget(200));
  for (std::size_t k = 0; k < a.tau.size(); ++k) CHECK(a.tau[k] == b.tau[k]);
  CHECK(sample_crossing_time(w, 17, {3, 9}, budget(200)) == b.tau[17]);
}

TEST_CASE("hitting times: guard and window errors") {
  const auto w = constant_window(0.75, -50, 30);
  CHECK_THROWS_AS(sample_hitting_times(w, 10, {1, 0}, budget(100)), WindowTooSmall);
  CHECK_THROWS_AS(sample_hitting_times(w, 40, {1, 0}, budget(40)), WindowTooSmall);
  // A left-drifting environment breaches a tight guard.
  const auto left = constant_window(0.3, -5, 30);
  CHECK_THROWS_AS(sample_hitting_times(left, 10, {1, 0}, budget(3)), LeftGuardBreach);
  SimulationBudget tight = budget(40);
  tight.max_steps = 3;
  const auto slow = constant_window(0.55, -50, 300);
  CHECK_THROWS_AS(sample_hitting_times(slow, 200, {1, 0}, tight), StepBudgetExceeded);
}

TEST_CASE("quenched variance of T(n) matches the sum of site variances") {
  const auto w = env::realize(env::two_point_model(), -600, 60, 12);
  const auto table = analytics::SiteTable::build(w, 0, 49);
  double target = 0;
  for (double v : table.sigma2_values()) target += v;
  numeric::RunningMoments m;
  const int reps = 20000;
  for (int r = 0; r < reps; ++r) {
    m.add(static_cast<double>(sample_hitting_times(w, 50, {21, static_cast<std::uint64_t>(r)}, budget(300)).T[50]));
  }
  // Standard error of the sample variance from the fourth central moment.
  const double var = m.variance();
  const double se = std::sqrt((m.fourth_central() - var * var) / reps);
  CHECK(std::abs(var - target) < 5 * se);
}

TEST_CASE("positions: first step, parity and drift") {
  const auto w = constant_window(0.75, -200, 20000);
  const std::vector<std::int64_t> one{1};
  int up = 0;
  for (int r = 0; r < 100000; ++r) {
    const auto s = sample_position(w, 0, one, {2, static_cast<std::uint64_t>(r)}, budget(150));
    up += s[0].second == 1;
  }
  CHECK(std::abs(up / 1e5 - 0.75) < 0.005);

  const std::vector<std::int64_t> times{0, 1, 2, 7, 50, 10000};
  numeric::RunningMoments drift;
  for (int r = 0; r < 200; ++r) {
    const auto s = sample_position(w, 0, times, {3, static_cast<std::uint64_t>(r)}, budget(150));
    REQUIRE(s.size() == times.size());
    for (const auto& [t, x] : s) REQUIRE((x + t) % 2 == 0);
    drift.add(static_cast<double>(s.back().second) / 1e4);
  }
  CHECK(std::abs(drift.mean() - 0.5) < 0.01);
  CHECK_THROWS_AS(sample_position(w, 0, std::vector<std::int64_t>{5, 3}, {3, 0}, budget(150)), DomainError);
}

TEST_CASE("first passage index") {
  const std::vector<std::int64_t> T{0, 1, 4, 5};
  CHECK(first_passage_index(T, 3) == 1);
  CHECK(first_passage_index(T, 4) == 2);
  CHECK(first_passage_index(T, 1) == 1);
  CHECK(first_passage_index(T, 0) == 0);
  CHECK_THROWS_AS(first_passage_index(T, 5), DomainError);
  CHECK_THROWS_AS(first_passage_index(std::vector<std::int64_t>{1, 2}, 1), DomainError);
}

TEST_CASE("joint observations: event identity and approximation bound") {
  const auto w = env::realize(env::two_point_model(), -400, 3000, 6);
  const std::vector<std::int64_t> times{10, 55, 200, 600};
  std::size_t checks = 0;
  for (int r = 0; r < 1000; ++r) {
    const auto obs = sample_joint(w, times, {8, static_cast<std::uint64_t>(r)}, budget(300));
    REQUIRE(obs.snapshots.size() == times.size());
    for (std::size_t k = 0; k < obs.tau.size(); ++k) REQUIRE(obs.tau[k] % 2 == 1);
    for (const auto& [t, x] : obs.snapshots) {
      REQUIRE((x + t) % 2 == 0);
      const auto n_t = first_passage_index(obs.T, t);
      REQUIRE(obs.T[static_cast<std::size_t>(n_t)] <= t);
      REQUIRE(t < obs.T[static_cast<std::size_t>(n_t) + 1]);
      REQUIRE(std::abs(x - n_t) <= t - obs.T[static_cast<std::size_t>(n_t)]);
      REQUIRE(t - obs.T[static_cast<std::size_t>(n_t)] < obs.tau[static_cast<std::size_t>(n_t)]);
      for (std::int64_t y = 0; y + 1 < static_cast<std::int64_t>(obs.T.size()); ++y) {
        REQUIRE((n_t <= y) == (obs.T[static_cast<std::size_t>(y) + 1] > t));
        ++checks;
      }
    }
  }
  CHECK(checks > 100000);
}

TEST_CASE("joint observations reach the hitting target") {
  const auto w = constant_window(0.75, -200, 400);
  const auto obs = sample_joint(w, std::vector<std::int64_t>{5}, {1, 1}, budget(150), 300, false);
  CHECK(static_cast<std::int64_t>(obs.T.size()) - 1 >= 300);
}

TEST_CASE("identical inputs give identical observations") {
  const auto w = env::realize(env::two_point_model(), -300, 2000, 2);
  const std::vector<std::int64_t> times{100, 1000};
  const auto a = sample_joint(w, times, {77, 5}, budget(250), 200);
  const auto b = sample_joint(w, times, {77, 5}, budget(250), 200);
  CHECK(a.T == b.T);
  CHECK(a.snapshots == b.snapshots);
  const auto c = sample_joint(w, times, {77, 6}, budget(250), 200);
  CHECK(a.T != c.T);
}

TEST_CASE("default left guard") {
  CHECK(default_left_guard(-1.0) == 60);
  CHECK(default_left_guard(-0.3) == 90);
  CHECK_THROWS_AS(default_left_guard(0.0), DomainError);
}
