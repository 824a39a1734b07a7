#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <system_error>
#include <algorithm>

#include "rwre/error.hpp"

namespace rwre::numeric {

/// Shortest decimal that round-trips to the same double.
inline std::string shortest(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::uint64_t fnv1a(std::string_view s) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return h;
}

/// Neumaier's compensated summation.
class KahanSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) comp_ += (sum_ - t) + x;
    else comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// Streaming mean and central moments up to order four.
class RunningMoments {
 public:
  void add(double x) noexcept {
    const double n1 = static_cast<double>(n_);
    ++n_;
    const double n = static_cast<double>(n_);
    const double delta = x - mean_;
    const double delta_n = delta / n;
    const double delta_n2 = delta_n * delta_n;
    const double term1 = delta * delta_n * n1;
    mean_ += delta_n;
    m4_ += term1 * delta_n2 * (n * n - 3 * n + 3) + 6 * delta_n2 * m2_ - 4 * delta_n * m3_;
    m3_ += term1 * delta_n * (n - 2) - 3 * delta_n * m2_;
    m2_ += term1;
  }

  std::uint64_t count() const noexcept { return n_; }
  double mean() const noexcept { return mean_; }
  /// Unbiased sample variance.
  double variance() const noexcept { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
  /// Fourth central sample moment.
  double fourth_central() const noexcept { return n_ > 0 ? m4_ / static_cast<double>(n_) : 0.0; }

 private:
  std::uint64_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
  double m3_ = 0.0;
  double m4_ = 0.0;
};

/// Mean of a 1-periodic function over one period by the trapezoid rule,
/// doubling the node count until two consecutive rules agree to `rel_tol`.
/// Throws QuadratureError after 2^21 nodes.
template <class F>
double periodic_mean(F&& f, double rel_tol = 1e-14) {
  auto rule = [&](int nodes) {
    KahanSum s;
    for (int i = 0; i < nodes; ++i) s.add(f(static_cast<double>(i) / nodes));
    return s.value() / nodes;
  };
  int nodes = 256;
  double prev = rule(nodes);
  for (; nodes <= (1 << 20); nodes *= 2) {
    const double next = rule(2 * nodes);
    if (std::abs(next - prev) <= rel_tol * std::max(1.0, std::abs(next))) return next;
    prev = next;
  }
  throw QuadratureError("periodic trapezoid rule did not settle within 2^21 nodes");
}

/// Standard normal CDF.
inline double normal_cdf(double x) noexcept { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace rwre::numeric
