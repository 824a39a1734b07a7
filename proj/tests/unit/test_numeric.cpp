#include <doctest.h>

#include <charconv>
#include <cmath>
#include <numbers>
#include <vector>

#include "rwre/numeric.hpp"

namespace nm = rwre::numeric;

TEST_CASE("compensated sum recovers cancelled low-order terms") {
  nm::KahanSum s;
  s.add(1e16);
  for (int i = 0; i < 1000; ++i) s.add(1.0);
  s.add(-1e16);
  CHECK(s.value() == 1000.0);
}

TEST_CASE("running moments match two-pass formulas") {
  const std::vector<double> x{1.5, -2.0, 3.25, 0.0, 7.0, 2.5, -1.0};
  nm::RunningMoments m;
  for (double v : x) m.add(v);
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  double m2 = 0.0, m4 = 0.0;
  for (double v : x) {
    m2 += (v - mean) * (v - mean);
    m4 += std::pow(v - mean, 4);
  }
  CHECK(m.mean() == doctest::Approx(mean).epsilon(1e-14));
  CHECK(m.variance() == doctest::Approx(m2 / (x.size() - 1)).epsilon(1e-13));
  CHECK(m.fourth_central() == doctest::Approx(m4 / x.size()).epsilon(1e-13));
}

TEST_CASE("periodic trapezoid mean") {
  CHECK(nm::periodic_mean([](double w) { return std::cos(2 * std::numbers::pi * w) * std::cos(2 * std::numbers::pi * w); }) ==
        doctest::Approx(0.5).epsilon(1e-14));
  // Mean of 1 / (2 + cos 2 pi w) is 1 / sqrt(3).
  CHECK(nm::periodic_mean([](double w) { return 1.0 / (2.0 + std::cos(2 * std::numbers::pi * w)); }) ==
        doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-13));
}

TEST_CASE("shortest decimal round-trips") {
  CHECK(nm::shortest(0.1) == "0.1");
  CHECK(nm::shortest(2.0) == "2");
  CHECK(nm::shortest(1e-300) == "1e-300");
  for (double v : {1.0 / 3.0, std::numbers::pi, -123456.789e-7, 5e-324}) {
    const std::string text = nm::shortest(v);
    double back = 0;
    std::from_chars(text.data(), text.data() + text.size(), back);
    CHECK(back == v);
  }
}

TEST_CASE("normal cdf reference values") {
  CHECK(nm::normal_cdf(0.0) == 0.5);
  CHECK(nm::normal_cdf(-1.0) == doctest::Approx(0.15865525393145707).epsilon(1e-15));
  CHECK(nm::normal_cdf(1.0) == doctest::Approx(0.8413447460685429).epsilon(1e-15));
  CHECK(nm::normal_cdf(-8.0) == doctest::Approx(6.22096057427178e-16).epsilon(1e-10));
}
