#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "snqs/errors.hpp"

namespace snqs {

// A spin configuration x = (x_0, ..., x_{L-1}) with x_i in {-1,+1},
// packed into an integer: bit i holds site i (LSB = site 0), bit value 1
// meaning spin +1. The code doubles as the index into dense state vectors.
class SpinConfig {
 public:
  SpinConfig() = default;
  SpinConfig(std::uint64_t code, int n_sites) : code_(code), n_(n_sites) {}

  static std::uint64_t mask(int n_sites) {
    return n_sites >= 64 ? ~0ull : (1ull << n_sites) - 1ull;
  }

  static SpinConfig all_up(int n_sites) {
    return SpinConfig(mask(n_sites), n_sites);
  }

  static SpinConfig from_spins(std::span<const int> spins) {
    std::uint64_t code = 0;
    for (std::size_t i = 0; i < spins.size(); ++i) {
      if (spins[i] != 1 && spins[i] != -1) {
        throw NumericError("SpinConfig: entries must be exactly -1 or +1");
      }
      if (spins[i] == 1) code |= 1ull << i;
    }
    return SpinConfig(code, static_cast<int>(spins.size()));
  }

  int size() const { return n_; }
  std::uint64_t code() const { return code_; }

  // +1 or -1; no bounds check (hot path).
  int spin(int site) const { return (code_ >> site) & 1ull ? +1 : -1; }

  void flip(int site) { code_ ^= 1ull << site; }

  SpinConfig flipped(int site) const {
    SpinConfig c(*this);
    c.flip(site);
    return c;
  }

  std::vector<int> spins() const {
    std::vector<int> out(static_cast<std::size_t>(n_));
    for (int i = 0; i < n_; ++i) out[static_cast<std::size_t>(i)] = spin(i);
    return out;
  }

  friend bool operator==(const SpinConfig& a, const SpinConfig& b) = default;

 private:
  std::uint64_t code_ = 0;
  int n_ = 0;
};

}  // namespace snqs
