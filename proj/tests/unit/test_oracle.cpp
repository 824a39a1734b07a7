#include <doctest.h>

#include <cmath>
#include <map>
#include <vector>

#include "rwre/analytics.hpp"
#include "rwre/error.hpp"
#include "rwre/oracle.hpp"

using namespace rwre;
using namespace rwre::oracle;

namespace {

env::EnvironmentWindow constant_window(double p, std::int64_t lo, std::int64_t hi) {
  return env::realize(env::EnvironmentModel(env::Constant{p}), lo, hi, 0);
}

walk::SimulationBudget budget(std::int64_t guard) {
  walk::SimulationBudget b;
  b.left_guard = guard;
  return b;
}

}  // namespace

TEST_CASE("finite chain: zero forcing") {
  const auto w = env::realize(env::two_point_model(), -20, 20, 1);
  const std::vector<double> f(41, 0.0);
  const auto s = solve_finite_chain(w, -20, 20, f);
  for (double h : s.h) CHECK(h == 0.0);
}

TEST_CASE("finite chain: unit forcing in a constant environment") {
  const auto w = constant_window(0.75, -40, 1);
  const std::vector<double> f(42, 1.0);
  const auto s = solve_finite_chain(w, -40, 1, f);
  CHECK(std::abs(s.at(0) - 2.0) < 1e-8);
  CHECK(s.at(-40) == 0.0);
  CHECK(s.at(1) == 0.0);
  CHECK(s.max_residual <= 1e-10);
}

TEST_CASE("finite chain: two interior points by hand") {
  const auto w = constant_window(0.5, -1, 2);
  const std::vector<double> f(4, 1.0);
  const auto s = solve_finite_chain(w, -1, 2, f);
  CHECK(s.at(0) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(s.at(1) == doctest::Approx(2.0).epsilon(1e-15));
  for (double phi : s.phi) {
    CHECK(phi >= 0.0);
    CHECK(phi < 1.0);
  }
}

TEST_CASE("finite chain: residuals on random environments") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto w = env::realize(env::two_point_model(), -80, 30, seed);
    std::vector<double> f(111);
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = 1.0 + std::sin(static_cast<double>(i));
    const auto s = solve_finite_chain(w, -80, 30, f);
    for (std::int64_t k = -79; k < 30; ++k) {
      const double rhs = w.p(k) * s.at(k + 1) + w.q(k) * s.at(k - 1) + f[static_cast<std::size_t>(k + 80)];
      REQUIRE(std::abs(s.at(k) - rhs) <= 1e-10 * std::max(1.0, std::abs(s.at(k))));
    }
    CHECK(s.max_residual <= 1e-10 * std::max(1.0, *std::max_element(s.h.begin(), s.h.end())));
  }
  const auto w = constant_window(0.75, -5, 5);
  CHECK_THROWS(solve_finite_chain(w, -6, 5, std::vector<double>(12, 1.0)));
  CHECK_THROWS(solve_finite_chain(w, 2, 2, std::vector<double>(1, 1.0)));
}

TEST_CASE("expected hitting: constant environments") {
  const auto w = constant_window(0.75, -40, 10);
  const auto e = expected_hitting(w, -40, 10);
  for (std::int64_t k = -10; k <= 9; ++k) CHECK(std::abs(e.increment(k) - 2.0) < 1e-8);
  for (std::int64_t k = -10; k < 10; ++k) CHECK(e.solution.at(k) > e.solution.at(k + 1));
  CHECK(e.solution.at(10) == 0.0);

  const auto w9 = constant_window(0.9, -40, 10);
  const auto e9 = expected_hitting(w9, -40, 10);
  for (std::int64_t k = -10; k <= 9; ++k) CHECK(std::abs(e9.increment(k) - 1.25) < 1e-8);
}

TEST_CASE("variance hitting: constant environments") {
  const auto w = constant_window(0.75, -40, 10);
  const auto v = variance_hitting(w, -40, 10);
  for (std::int64_t k = -10; k <= 9; ++k) CHECK(std::abs(v.increment(k) - 6.0) < 1e-7);
  for (double f : v.forcing) CHECK(f >= 0.0);
  for (std::int64_t k = -39; k < 10; ++k) CHECK(v.solution.at(k) >= 0.0);

  const auto w9 = constant_window(0.9, -40, 10);
  const auto v9 = variance_hitting(w9, -40, 10);
  for (std::int64_t k = -10; k <= 9; ++k) CHECK(std::abs(v9.increment(k) - 0.703125) < 1e-7);
}

TEST_CASE("variance forcing written with increments: only the swapped form is consistent") {
  const auto w = constant_window(0.75, -60, 10);
  const auto unswapped = variance_hitting_from_increments(w, -60, 10, false);
  const auto swapped = variance_hitting_from_increments(w, -60, 10, true);
  CHECK(std::abs(swapped.increment(0) - 6.0) < 1e-7);
  CHECK(std::abs(unswapped.increment(0) - 6.0) > 1.0);

  const auto r = env::realize(env::two_point_model(), -200, 20, 4);
  const auto direct = variance_hitting(r, -200, 20);
  const auto sw = variance_hitting_from_increments(r, -200, 20, true);
  for (std::int64_t k = -100; k < 20; ++k) {
    CHECK(sw.increment(k) == doctest::Approx(direct.increment(k)).epsilon(1e-10));
  }
}

TEST_CASE("increments stabilize as the left boundary moves out") {
  const auto w = env::realize(env::two_point_model(), -40, 10, 3);
  std::vector<double> e, v;
  for (std::int64_t a : {-10, -20, -40}) {
    e.push_back(expected_hitting(w, a, 10).increment(0));
    v.push_back(variance_hitting(w, a, 10).increment(0));
  }
  CHECK(std::abs(e[2] - e[1]) < std::abs(e[1] - e[0]));
  CHECK(std::abs(v[2] - v[1]) < std::abs(v[1] - v[0]));

  // The gap shrinks at least by the product of A over the extension.
  double prod = 1;
  for (std::int64_t k = -20; k < -10; ++k) prod *= env::odds_ratio(w, k);
  CHECK(std::abs(e[2] - e[1]) <= 10 * prod * std::abs(e[1] - e[0]) + 1e-15);
}

TEST_CASE("series and finite-interval solves agree on random windows") {
  const std::vector<env::EnvironmentModel> models{
      env::two_point_model(), env::EnvironmentModel(env::IidParametric{env::Family::kUniform, {}, 0.6, 0.9})};
  for (const auto& m : models) {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      const auto w = env::realize(m, -400, 60, seed);
      const auto e = expected_hitting(w, -400, 60);
      const auto v = variance_hitting(w, -400, 60);
      for (std::int64_t k = 0; k < 50; ++k) {
        const auto s = analytics::sigma2_site(w, k);
        REQUIRE(std::abs(s.mu - e.increment(k)) <= 1e-8);
        REQUIRE(std::abs(s.sigma2 - v.increment(k)) <= 1e-8 * std::max(1.0, s.sigma2));
      }
    }
  }
}

TEST_CASE("exact position law") {
  const auto w = constant_window(0.75, -20, 20);
  const auto two = exact_position_distribution(w, 0, 2);
  CHECK(two.probability(2) == doctest::Approx(0.5625).epsilon(1e-15));
  CHECK(two.probability(0) == doctest::Approx(0.375).epsilon(1e-15));
  CHECK(two.probability(-2) == doctest::Approx(0.0625).epsilon(1e-15));
  CHECK(two.probability(1) == 0.0);

  const auto three = exact_position_distribution(w, 0, 3);
  CHECK(three.probability(3) == doctest::Approx(0.421875).epsilon(1e-15));
  CHECK(three.probability(1) == doctest::Approx(0.421875).epsilon(1e-15));
  CHECK(three.probability(-1) == doctest::Approx(0.140625).epsilon(1e-15));
  CHECK(three.probability(-3) == doctest::Approx(0.015625).epsilon(1e-15));

  CHECK(exact_position_distribution(w, 0, 10).mean() == doctest::Approx(5.0).epsilon(1e-14));
  CHECK_THROWS(exact_position_distribution(w, 0, 25));
}

TEST_CASE("exact position law is a parity-correct probability vector") {
  const auto w = env::realize(env::two_point_model(), -60, 60, 5);
  const auto pmf = exact_position_distribution(w, 3, 50);
  double total = 0;
  for (std::size_t i = 0; i < pmf.support.size(); ++i) {
    CHECK(pmf.probabilities[i] >= 0.0);
    CHECK((pmf.support[i] - 3 + 50) % 2 == 0);
    CHECK(std::abs(pmf.support[i] - 3) <= 50);
    total += pmf.probabilities[i];
  }
  CHECK(std::abs(total - 1.0) <= 1e-12);
}

TEST_CASE("exact position law matches simulation in total variation") {
  const auto w = env::realize(env::two_point_model(), -100, 100, 5);
  const auto pmf = exact_position_distribution(w, 0, 50);
  std::map<std::int64_t, double> counts;
  const std::vector<std::int64_t> t{50};
  const int reps = 100000;
  for (int r = 0; r < reps; ++r) {
    counts[walk::sample_position(w, 0, t, {31, static_cast<std::uint64_t>(r)}, budget(90))[0].second] += 1.0 / reps;
  }
  double tv = 0;
  for (std::size_t i = 0; i < pmf.support.size(); ++i) {
    tv += std::abs(pmf.probabilities[i] - counts[pmf.support[i]]);
  }
  for (const auto& [x, c] : counts) {
    if (pmf.probability(x) == 0.0) tv += c;
  }
  CHECK(tv / 2 <= 0.02);
}

TEST_CASE("Monte Carlo moments of a crossing time") {
  const auto w = constant_window(0.75, -200, 2);
  const auto m = mc_moment_oracle(w, 0, 1000000, 17, budget(150));
  CHECK(m.samples == 1000000);
  CHECK(std::abs(m.mean - 2.0) < 0.008);
  CHECK(std::abs(m.variance - 6.0) < 0.1);
  CHECK(m.mean_se == doctest::Approx(std::sqrt(6.0 / 1e6)).epsilon(0.05));

  const auto w9 = constant_window(0.9, -200, 2);
  const auto m9 = mc_moment_oracle(w9, 0, 1000000, 18, budget(150));
  CHECK(std::abs(m9.mean - 1.25) < 4 * m9.mean_se);
  CHECK(std::abs(m9.variance - 0.703125) < 4 * m9.variance_se);
}

TEST_CASE("Monte Carlo and finite-interval variance agree next to a modified site") {
  std::vector<double> p(300, 0.75);
  p[199] = 0.6;  // site -1
  const env::EnvironmentWindow w(-200, p, "modified", 0);
  const auto v = variance_hitting(w, -200, 99);
  const auto m = mc_moment_oracle(w, 0, 400000, 23, budget(190));
  CHECK(std::abs(m.variance - v.increment(0)) < 3 * m.variance_se);
  CHECK(std::abs(m.mean - expected_hitting(w, -200, 99).increment(0)) < 3 * m.mean_se);
}
