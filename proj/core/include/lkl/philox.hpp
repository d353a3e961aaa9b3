#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace lkl {

// Philox4x64-10 counter-based generator from the Random123 family. A
// (key, counter) pair maps to four
// independent 64-bit words with no internal state, so each particle and step
// can address its own block of randomness directly.
class Philox4x64 {
 public:
  using Counter = std::array<std::uint64_t, 4>;
  using Key = std::array<std::uint64_t, 2>;

  static constexpr Counter generate(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      ctr = single_round(ctr, key);
    }
    return ctr;
  }

 private:
  static constexpr std::uint64_t kMul0 = 0xD2E7470EE14C6C93ULL;
  static constexpr std::uint64_t kMul1 = 0xCA5A826395121157ULL;
  static constexpr std::uint64_t kWeyl0 = 0x9E3779B97F4A7C15ULL;
  static constexpr std::uint64_t kWeyl1 = 0xBB67AE8584CAA73BULL;

  static constexpr void mulhilo(std::uint64_t a, std::uint64_t b,
                                std::uint64_t& hi, std::uint64_t& lo) {
    __extension__ using u128 = unsigned __int128;
    const u128 p = static_cast<u128>(a) * b;
    hi = static_cast<std::uint64_t>(p >> 64);
    lo = static_cast<std::uint64_t>(p);
  }

  static constexpr Counter single_round(const Counter& c, const Key& k) {
    std::uint64_t hi0 = 0, lo0 = 0, hi1 = 0, lo1 = 0;
    mulhilo(kMul0, c[0], hi0, lo0);
    mulhilo(kMul1, c[2], hi1, lo1);
    return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
  }
};

// Uniform in (0, 1] from the top 53 bits.
inline double open_unit(std::uint64_t bits) {
  return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53;
}

// Two standard normals from two raw words (Box-Muller).
inline std::array<double, 2> box_muller(std::uint64_t w0, std::uint64_t w1) {
  const double r = std::sqrt(-2.0 * std::log(open_unit(w0)));
  const double angle = 2.0 * std::numbers::pi * open_unit(w1);
  return {r * std::cos(angle), r * std::sin(angle)};
}

// Four standard normals from one Philox block (two Box-Muller pairs).
inline std::array<double, 4> standard_normals(const Philox4x64::Counter& ctr,
                                              const Philox4x64::Key& key) {
  const auto w = Philox4x64::generate(ctr, key);
  const auto a = box_muller(w[0], w[1]);
  const auto b = box_muller(w[2], w[3]);
  return {a[0], a[1], b[0], b[1]};
}

}  // namespace lkl
