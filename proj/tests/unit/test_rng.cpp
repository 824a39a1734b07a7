#include <doctest.h>

#include <set>

#include "rwre/numeric.hpp"
#include "rwre/rng.hpp"

using rwre::rng::CounterStream;
using rwre::rng::Philox4x32;

TEST_CASE("philox4x32-10 known answers") {
  using C = Philox4x32::Counter;
  using K = Philox4x32::Key;
  CHECK(Philox4x32::block(C{0, 0, 0, 0}, K{0, 0}) == C{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  CHECK(Philox4x32::block(C{0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, K{0xffffffffu, 0xffffffffu}) ==
        C{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  CHECK(Philox4x32::block(C{0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, K{0xa4093822u, 0x299f31d0u}) ==
        C{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("counter streams are pure functions of key, stream and index") {
  CounterStream a(42, 7), b(42, 7), c(42, 8), d(43, 7);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 1000; ++i) {
    const auto x = a();
    CHECK(x == b());
    seen.insert(x);
    seen.insert(c());
    seen.insert(d());
  }
  CHECK(seen.size() == 3000);
  CHECK(a.blocks_consumed() == 500);
}

TEST_CASE("uniform draws lie in [0, 1) with the right first two moments") {
  CounterStream s(rwre::rng::derive_key(1, {2, 3}), 0);
  rwre::numeric::RunningMoments m;
  for (int i = 0; i < 200000; ++i) {
    const double u = s.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    m.add(u);
  }
  CHECK(std::abs(m.mean() - 0.5) < 4.0 * std::sqrt(1.0 / 12.0 / 200000));
  CHECK(m.variance() == doctest::Approx(1.0 / 12.0).epsilon(0.01));
}

TEST_CASE("derived keys depend on every tag and on tag order") {
  using rwre::rng::derive_key;
  CHECK(derive_key(1, {2, 3}) != derive_key(1, {3, 2}));
  CHECK(derive_key(1, {2}) != derive_key(1, {2, 0}));
  CHECK(derive_key(1, {}) != derive_key(2, {}));
  static_assert(derive_key(5, {6}) == derive_key(5, {6}));
}
