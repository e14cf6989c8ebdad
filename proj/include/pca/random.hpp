#pragma once

#include <array>
#include <cstdint>

namespace pca {

/// Philox4x32-10 counter-based generator (Salmon et al., Random123). Every
/// draw is a pure function of (key, counter), so any parallel schedule
/// reproduces the same numbers.
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter generate(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
      if (round) {
        key[0] += 0x9E3779B9u;
        key[1] += 0xBB67AE85u;
      }
      const std::uint64_t p0 = std::uint64_t{0xD2511F53u} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * ctr[2];
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
    }
    return ctr;
  }
};

/// Purpose tag occupying the last counter word, so streams used for
/// different things never collide.
enum class Stream : std::uint32_t { dynamics = 0, initial = 1, bootstrap = 2, synthetic = 3 };

/// 64 random bits for the labelled draw (replica, step, index) of `stream`.
inline std::uint64_t draw_bits(std::uint64_t seed, Stream stream, std::uint32_t replica,
                               std::uint32_t step, std::uint32_t index) {
  const auto out = Philox4x32::generate(
      {index, step, replica, static_cast<std::uint32_t>(stream)},
      {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)});
  return (std::uint64_t{out[0]} << 32) | out[1];
}

/// Uniform on [0, 1) with 53 random bits.
inline double draw_unit(std::uint64_t seed, Stream stream, std::uint32_t replica,
                        std::uint32_t step, std::uint32_t index) {
  return static_cast<double>(draw_bits(seed, stream, replica, step, index) >> 11) * 0x1.0p-53;
}

}  // namespace pca
