#pragma once

#include <complex>
#include <utility>
#include <vector>

#include "snqs/errors.hpp"
#include "snqs/spin.hpp"

namespace snqs {

// Tilted Ising chain with open boundary conditions,
//   H = J sum_i sz_i sz_{i+1} - sum_i (h_x sx_i + h_z sz_i),
// so the chain has exactly L-1 coupling bonds.
struct HamiltonianSpec {
  int L = 0;
  double J = 1.0;
  double h_x = 0.0;
  double h_z = 0.0;

  void validate() const {
    if (L < 2) throw ConfigError("HamiltonianSpec: L must be >= 2");
  }

  friend bool operator==(const HamiltonianSpec&, const HamiltonianSpec&) = default;
};

inline void check_length(const SpinConfig& x, const HamiltonianSpec& h) {
  if (x.size() != h.L) {
    throw DimensionError("spin configuration length " + std::to_string(x.size()) +
                         " does not match Hamiltonian L=" + std::to_string(h.L));
  }
}

// <x|H|x>: the sz-sz and sz parts; sx is purely off-diagonal.
inline double diagonal_element(const SpinConfig& x, const HamiltonianSpec& h) {
  check_length(x, h);
  double zz = 0.0;
  double z = 0.0;
  for (int i = 0; i < h.L; ++i) {
    z += x.spin(i);
    if (i + 1 < h.L) zz += static_cast<double>(x.spin(i)) * x.spin(i + 1);
  }
  return h.J * zz - h.h_z * z;
}

struct ConnectedElement {
  SpinConfig config;
  double amplitude;
};

// The full row {x' : H_{xx'} != 0}: diagonal entry first, then one
// single-spin-flip entry per site in ascending site order, each with
// amplitude -h_x. The fixed ordering keeps reductions reproducible.
inline std::vector<ConnectedElement> connected_elements(const SpinConfig& x,
                                                        const HamiltonianSpec& h) {
  check_length(x, h);
  std::vector<ConnectedElement> row;
  row.reserve(static_cast<std::size_t>(h.L) + 1);
  row.push_back({x, diagonal_element(x, h)});
  if (h.h_x != 0.0) {
    for (int i = 0; i < h.L; ++i) row.push_back({x.flipped(i), -h.h_x});
  }
  return row;
}

// Local estimator of sx_site: psi(x with site flipped) / psi(x).
// Averaging it over samples from |psi|^2 gives <sx_site>.
template <class RatioFn>
std::complex<double> sigma_x_local(const SpinConfig& x, int site, RatioFn&& psi_ratio) {
  if (site < 0 || site >= x.size()) {
    throw IndexError("sigma_x_local: site " + std::to_string(site) + " out of range");
  }
  return std::forward<RatioFn>(psi_ratio)(x.flipped(site), x);
}

// Observed middle site, ceil(L/2) in 1-based site counting.
inline int middle_site(int L) { return (L - 1) / 2; }

}  // namespace snqs
