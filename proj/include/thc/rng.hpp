#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace thc {

/// Philox4x32-10 counter-based generator (Salmon et al. 2011 constants).
/// Output is a pure function of (counter, key).
inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                               std::array<std::uint32_t, 2> key) {
  constexpr std::uint32_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
  constexpr std::uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
  for (int r = 0; r < 10; ++r) {
    const std::uint64_t p0 = std::uint64_t{M0} * ctr[0];
    const std::uint64_t p1 = std::uint64_t{M1} * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += W0;
    key[1] += W1;
  }
  return ctr;
}

/// Independent draw streams sharing one seed.
enum class Stream : std::uint32_t { Wiener = 0, Stationary = 1, Initial = 2, Perturbation = 3 };

/// Uniform on (0,1) from 64 random bits, never 0 or 1.
inline double uniform_open(std::uint64_t bits) {
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

/// Standard normal keyed by (seed, step, index, stream). Box-Muller on one
/// Philox block; the cosine branch is used.
inline double keyed_normal(std::uint64_t seed, std::int64_t step, std::uint32_t index, Stream stream) {
  const auto s = static_cast<std::uint64_t>(step);
  const auto r = philox4x32({static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(s >> 32), index,
                             static_cast<std::uint32_t>(stream)},
                            {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)});
  const double u1 = uniform_open((std::uint64_t{r[0]} << 32) | r[1]);
  const double u2 = uniform_open((std::uint64_t{r[2]} << 32) | r[3]);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925 * u2);
}

}  // namespace thc
