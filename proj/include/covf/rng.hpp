#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace covf {

// Deterministic generator. mt19937_64 keeps sequences identical across
// platforms, which the reproducibility contracts depend on.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  // uniform in [0, 1)
  double unit() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

  // Fisher-Yates index for shuffles: uniform integer in [0, n)
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(eng_() % n); }

 private:
  std::mt19937_64 eng_;
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Stable per-run seed from grid coordinates; independent of execution order.
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view tag, std::uint64_t a = 0,
                                 std::uint64_t b = 0) {
  std::uint64_t h = fnv1a64(tag);
  h = splitmix64(h ^ splitmix64(base));
  h = splitmix64(h ^ splitmix64(a + 0x51ed270b));
  h = splitmix64(h ^ splitmix64(b + 0x2c9277b5));
  return h;
}

}  // namespace covf
