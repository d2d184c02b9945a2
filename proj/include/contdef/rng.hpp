#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>
#include <utility>

namespace contdef {

/// Deterministic 64-bit generator (splitmix64). Chosen over std::mt19937
/// so that streams are byte-identical across platforms and standard
/// library versions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  bool bernoulli(double p) { return uniform01() < p; }

  /// Two independent standard normal draws (Box-Muller).
  std::pair<double, double> gaussian2() {
    double u1 = uniform01();
    double u2 = uniform01();
    // Guard the log; uniform01 can return exactly 0.
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    return {r * std::cos(a), r * std::sin(a)};
  }

 private:
  std::uint64_t state_;
};

/// Stable sub-seed from a master seed, a stream tag and an integer id.
/// FNV-1a over the tag, then mixed with the id so per-agent and per-link
/// streams never collide.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view tag, int id) {
  std::uint64_t h = 1469598103934665603ULL;
  for (char c : tag) {
    h ^= static_cast<std::uint64_t>(static_cast<unsigned char>(c));
    h *= 1099511628211ULL;
  }
  h ^= static_cast<std::uint64_t>(static_cast<std::int64_t>(id)) + 0x9e3779b97f4a7c15ULL;
  h *= 1099511628211ULL;
  return h ^ master;
}

}  // namespace contdef
