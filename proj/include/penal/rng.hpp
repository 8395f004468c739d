#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <utility>

namespace penal {

/// Philox4x32-10 block cipher (Salmon et al., "Parallel random numbers: as
/// easy as 1, 2, 3"). Pure function of (counter, key).
inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                               std::array<std::uint32_t, 2> key) {
  constexpr std::uint32_t kM0 = 0xD2511F53u;
  constexpr std::uint32_t kM1 = 0xCD9E8D57u;
  constexpr std::uint32_t kW0 = 0x9E3779B9u;
  constexpr std::uint32_t kW1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = std::uint64_t{kM0} * ctr[0];
    const std::uint64_t p1 = std::uint64_t{kM1} * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kW0;
    key[1] += kW1;
  }
  return ctr;
}

/// SplitMix64 finaliser; used to derive child stream ids.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

/// Stream id for a child of `parent`, tagged by two 64-bit coordinates
/// (e.g. resampling stage and particle index).
constexpr std::uint64_t derive_stream(std::uint64_t parent, std::uint64_t a, std::uint64_t b) {
  return mix64(mix64(parent ^ 0x5851f42d4c957f2dull) ^ mix64(a + 0x14057b7ef767814full) ^
               (b * 0xda942042e4dd58b5ull));
}

/// Independent sub-sequences drawn at the same step index.
enum class Lane : std::uint32_t {
  kIncrement = 0,
  kIncrementExtra = 1,
  kBridge = 2,
  kBridgeCoarse = 3,
  kClock = 4,
  kResample = 5,
  kBootstrap = 6,
  kStartState = 7,
};

/// Counter-based generator keyed by (seed, stream). Every draw is a pure
/// function of (seed, stream, step, lane), so paths can be generated in any
/// order or in parallel and still reproduce bit-for-bit.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  /// Two 64-bit words for (step, lane).
  std::array<std::uint64_t, 2> block(std::uint64_t step, Lane lane) const {
    const std::array<std::uint32_t, 4> ctr = {
        static_cast<std::uint32_t>(step),
        static_cast<std::uint32_t>((step >> 32) & 0xFFFFu) |
            (static_cast<std::uint32_t>(lane) << 16),
        static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)};
    const std::array<std::uint32_t, 2> key = {static_cast<std::uint32_t>(seed_),
                                              static_cast<std::uint32_t>(seed_ >> 32)};
    const auto r = philox4x32(ctr, key);
    return {(std::uint64_t{r[1]} << 32) | r[0], (std::uint64_t{r[3]} << 32) | r[2]};
  }

  /// Uniforms on the open interval (0, 1).
  std::pair<double, double> uniform_pair(std::uint64_t step, Lane lane) const {
    const auto w = block(step, lane);
    return {to_open_unit(w[0]), to_open_unit(w[1])};
  }

  double uniform(std::uint64_t step, Lane lane) const { return uniform_pair(step, lane).first; }

  /// Two independent standard normals (Box-Muller).
  std::pair<double, double> normal_pair(std::uint64_t step, Lane lane) const {
    const auto [u1, u2] = uniform_pair(step, lane);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    return {r * std::cos(theta), r * std::sin(theta)};
  }

  double exponential(std::uint64_t step, Lane lane) const {
    return -std::log(uniform(step, lane));
  }

  static double to_open_unit(std::uint64_t w) {
    return (static_cast<double>(w >> 11) + 0.5) * 0x1.0p-53;
  }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
};

}  // namespace penal
