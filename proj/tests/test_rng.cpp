#include <doctest.h>

#include <set>

#include "penal/rng.hpp"

using namespace penal;

TEST_SUITE("rng") {
  // Known-answer vectors published with the Random123 reference code.
  TEST_CASE("philox4x32-10 known answers") {
    CHECK(philox4x32({0, 0, 0, 0}, {0, 0}) ==
          std::array<std::uint32_t, 4>{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
    CHECK(philox4x32({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}) ==
          std::array<std::uint32_t, 4>{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
    CHECK(philox4x32({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}) ==
          std::array<std::uint32_t, 4>{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
  }

  TEST_CASE("draws are pure functions of the key") {
    const CounterRng a(42, 7), b(42, 7), c(43, 7), d(42, 8);
    CHECK(a.uniform(5, Lane::kIncrement) == b.uniform(5, Lane::kIncrement));
    CHECK(a.uniform(5, Lane::kIncrement) != c.uniform(5, Lane::kIncrement));
    CHECK(a.uniform(5, Lane::kIncrement) != d.uniform(5, Lane::kIncrement));
    CHECK(a.uniform(5, Lane::kIncrement) != a.uniform(5, Lane::kBridge));
    CHECK(a.uniform(5, Lane::kIncrement) != a.uniform(6, Lane::kIncrement));
  }

  TEST_CASE("uniforms lie in the open unit interval and have the right moments") {
    const CounterRng r(1, 2);
    double s = 0.0, s2 = 0.0;
    const int n = 200000;
    for (int k = 0; k < n; ++k) {
      const double u = r.uniform(static_cast<std::uint64_t>(k), Lane::kIncrement);
      REQUIRE(u > 0.0);
      REQUIRE(u < 1.0);
      s += u;
      s2 += u * u;
    }
    CHECK(std::abs(s / n - 0.5) < 4.0 * std::sqrt(1.0 / 12.0 / n));
    CHECK(std::abs(s2 / n - 1.0 / 3.0) < 0.005);
  }

  TEST_CASE("normal pairs are standard and uncorrelated") {
    const CounterRng r(9, 9);
    double m = 0.0, v = 0.0, c = 0.0;
    const int n = 200000;
    for (int k = 0; k < n; ++k) {
      const auto [z1, z2] = r.normal_pair(static_cast<std::uint64_t>(k), Lane::kIncrement);
      m += z1;
      v += z1 * z1;
      c += z1 * z2;
    }
    CHECK(std::abs(m / n) < 4.0 / std::sqrt(n));
    CHECK(std::abs(v / n - 1.0) < 4.0 * std::sqrt(2.0 / n));
    CHECK(std::abs(c / n) < 4.0 / std::sqrt(n));
  }

  TEST_CASE("derived streams do not collide") {
    std::set<std::uint64_t> seen;
    for (std::uint64_t a = 0; a < 16; ++a) {
      for (std::uint64_t b = 0; b < 4096; ++b) seen.insert(derive_stream(0, a, b));
    }
    CHECK(seen.size() == 16u * 4096u);
    CHECK(derive_stream(1, 0, 0) != derive_stream(0, 0, 0));
  }
}
