#pragma once

#include <cstdint>
#include <initializer_list>

namespace snqs {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Stream tags for deriving independent RNG keys from one master seed.
enum class RngStream : std::uint64_t {
  coeff_init = 1,
  sampler = 2,
  mc_epoch = 3,
  baseline = 4,
  chain_init = 5,
};

// Hash a master seed and a path of indices into one stream key. Keys are
// position sensitive, so (a, b) and (b, a) differ.
inline std::uint64_t derive_key(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = splitmix64(seed ^ 0x6a09e667f3bcc909ull);
  std::uint64_t i = 1;
  for (std::uint64_t v : path) {
    h = splitmix64(h ^ splitmix64(v + i * 0x9e3779b97f4a7c15ull));
    ++i;
  }
  return h;
}

// Counter-based generator: output n is a pure function of (key, n), so
// independently keyed streams never share state.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key) : key_(key) {}

  std::uint64_t next_u64() {
    std::uint64_t v = splitmix64(key_ ^ splitmix64(counter_ + 0x243f6a8885a308d3ull));
    ++counter_;
    return v;
  }

  // Uniform in [0, 1).
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in {0, ..., n-1} (multiply-shift; n is tiny here, so the
  // modulo bias of simpler schemes would be negligible anyway).
  std::uint32_t next_below(std::uint32_t n) {
    return static_cast<std::uint32_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  // Standard normal via Box-Muller.
  double next_normal() {
    double u1 = next_double();
    double u2 = next_double();
    while (u1 <= 0.0) u1 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace snqs
