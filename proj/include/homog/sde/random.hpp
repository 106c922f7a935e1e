#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace homog {

/// Philox4x32-10 counter-based generator: a pure function of (key, counter),
/// so every path owns an independent, schedule-free stream.
struct Philox4x32 {
  using Block = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Block generate(Block ctr, Key key) noexcept {
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = std::uint64_t{0xD2511F53u} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * ctr[2];
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
      key[0] += 0x9E3779B9u;
      key[1] += 0xBB67AE85u;
    }
    return ctr;
  }

  static Key key_of(std::uint64_t seed) noexcept {
    return {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  }
};

/// Uniform in (0, 1].
inline double uniform_open0(std::uint32_t w) noexcept { return (static_cast<double>(w) + 1.0) * 0x1.0p-32; }
/// Uniform in [0, 1).
inline double uniform_closed0(std::uint32_t w) noexcept { return static_cast<double>(w) * 0x1.0p-32; }

/// Box-Muller pair from two 32-bit words.
inline std::array<double, 2> normal_pair(std::uint32_t a, std::uint32_t b) noexcept {
  const double rad = std::sqrt(-2.0 * std::log(uniform_open0(a)));
  const double ang = 6.283185307179586 * uniform_closed0(b);
  return {rad * std::cos(ang), rad * std::sin(ang)};
}

/// Per-stream counters. Word layout: c0 = index low, c1 = index high (24 bits)
/// | sub-call (7 bits) | domain tag (top bit), c2/c3 = stream id.
struct StreamCounter {
  static Philox4x32::Block make(std::uint64_t stream, std::uint64_t index, unsigned sub, bool tag) noexcept {
    const auto hi = static_cast<std::uint32_t>(index >> 32) & 0xFFFFFFu;
    return {static_cast<std::uint32_t>(index), hi | ((sub & 0x7Fu) << 24) | (tag ? 0x80000000u : 0u),
            static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  }
};

}  // namespace homog
