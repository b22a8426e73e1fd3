#pragma once

// Counter-based random numbers. Every draw is a pure function of a 64-bit
// key and a 64-bit counter, so trajectories can be evaluated in any order
// and on any number of threads with identical results.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace noisysde {

using Philox4x32Counter = std::array<std::uint32_t, 4>;
using Philox4x32Key = std::array<std::uint32_t, 2>;

namespace detail {

inline constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
inline constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
inline constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
inline constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

constexpr void philox_round(Philox4x32Counter& ctr, const Philox4x32Key& key) {
  const std::uint64_t p0 = static_cast<std::uint64_t>(kPhiloxM0) * ctr[0];
  const std::uint64_t p1 = static_cast<std::uint64_t>(kPhiloxM1) * ctr[2];
  const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
  const auto lo0 = static_cast<std::uint32_t>(p0);
  const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
  const auto lo1 = static_cast<std::uint32_t>(p1);
  ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
}

}  // namespace detail

/// Philox4x32 with 10 rounds (Salmon et al., SC'11). Matches the Random123
/// known-answer vectors.
constexpr Philox4x32Counter philox4x32(Philox4x32Counter ctr, Philox4x32Key key) {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += detail::kPhiloxW0;
      key[1] += detail::kPhiloxW1;
    }
    detail::philox_round(ctr, key);
  }
  return ctr;
}

/// splitmix64 finalizer, used to derive independent stream keys.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Combines a parent stream with a child tag into a new stream id.
constexpr std::uint64_t derive_stream(std::uint64_t parent, std::uint64_t tag) {
  return mix64(parent ^ mix64(tag + 0x632BE59BD9B4E019ull));
}

template <class... Tags>
constexpr std::uint64_t derive_stream(std::uint64_t parent, std::uint64_t tag, Tags... rest) {
  return derive_stream(derive_stream(parent, tag), static_cast<std::uint64_t>(rest)...);
}

/// Stateless generator: block(i) is the Philox output for counter i under
/// this stream's key.
class CounterRng {
 public:
  constexpr explicit CounterRng(std::uint64_t stream) noexcept
      : key_{static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)} {}

  constexpr Philox4x32Counter block(std::uint64_t index, std::uint32_t lane = 0) const noexcept {
    return philox4x32({static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                       lane, 0u},
                      key_);
  }

  /// Uniform on the open interval (0, 1) with 52 random bits.
  double uniform(std::uint64_t index, std::uint32_t lane = 0) const noexcept {
    const auto b = block(index, lane);
    return to_open_unit(b[0], b[1]);
  }

  /// Two independent standard normals from one block (Box-Muller).
  std::array<double, 2> normal_pair(std::uint64_t index, std::uint32_t lane = 0) const noexcept {
    const auto b = block(index, lane);
    const double u1 = to_open_unit(b[0], b[1]);
    const double u2 = to_open_unit(b[2], b[3]);
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    return {radius * std::cos(angle), radius * std::sin(angle)};
  }

  /// The index-th standard normal of the stream.
  double normal(std::uint64_t index) const noexcept { return normal_pair(index / 2)[index % 2]; }

  static constexpr double to_open_unit(std::uint32_t hi, std::uint32_t lo) noexcept {
    // 52 bits plus a half-ulp offset: both ends stay strictly inside (0, 1).
    const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 12;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-52;
  }

 private:
  Philox4x32Key key_;
};

}  // namespace noisysde
