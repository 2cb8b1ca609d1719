#pragma once

#include <cmath>
#include <cstdint>

namespace cvdenoise {

// Counter-based generator: output i is a SplitMix64-style avalanche of
// (key, counter). There is no hidden state beyond the counter, so any draw
// can be reproduced from (key, i) alone and streams can be split by key
// derivation. Stream-splitting convention used across the library:
//   replication k of a run with master seed s draws its noise from
//   derive(s, 2k) and its fold randomization from derive(s, 2k + 1).
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key, std::uint64_t counter = 0)
      : key_(key), counter_(counter) {}

  static std::uint64_t avalanche(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Derives an independent stream key from (key, stream index).
  static std::uint64_t derive(std::uint64_t key, std::uint64_t stream) {
    return avalanche(key ^ avalanche(stream ^ 0xa0761d6478bd642full));
  }

  std::uint64_t next_u64() { return avalanche(key_ ^ avalanche(counter_++)); }

  // Uniform on [0, 1) with 53 random bits.
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  bool next_bernoulli() { return (next_u64() >> 63) != 0; }

  // Box-Muller; the second variate of each pair is cached. Avoids
  // std::normal_distribution, whose output is implementation-defined.
  double next_normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    // Offset keeps u1 strictly inside (0, 1).
    const double u1 = (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    const double u2 = next_unit();
    const double mag = std::sqrt(-2.0 * std::log(u1));
    constexpr double two_pi = 6.283185307179586476925286766559;
    spare_ = mag * std::sin(two_pi * u2);
    has_spare_ = true;
    return mag * std::cos(two_pi * u2);
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace cvdenoise
