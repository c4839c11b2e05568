#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace ubgrad {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Combine a stream key with a child identifier into a new key.
inline std::uint64_t mix_keys(std::uint64_t key, std::uint64_t id) {
  std::uint64_t s = key ^ (id * 0xd6e8feb86659fd93ULL + 0x9e3779b97f4a7c15ULL);
  std::uint64_t a = splitmix64(s);
  std::uint64_t b = splitmix64(s);
  return a ^ (b >> 17);
}

/// Seeded random stream with hierarchical substream derivation. Substreams
/// are keyed by (key, id) only, never by engine state, so the stream tree is
/// independent of evaluation order and of how many draws a sibling consumed.
class RngStream {
 public:
  explicit RngStream(std::uint64_t key) : key_(key), engine_(expand(key)) {}

  RngStream substream(std::uint64_t id) const {
    return RngStream(mix_keys(key_, id));
  }

  std::uint64_t key() const { return key_; }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1).
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; stateless (the sine partner is unused).
  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
  }

 private:
  static std::uint64_t expand(std::uint64_t key) {
    std::uint64_t s = key;
    return splitmix64(s);
  }

  std::uint64_t key_;
  std::mt19937_64 engine_;
};

}  // namespace ubgrad
