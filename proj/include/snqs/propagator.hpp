#pragma once

#include <Eigen/Dense>
#include <complex>
#include <map>
#include <vector>

#include "snqs/errors.hpp"
#include "snqs/hamiltonian.hpp"

namespace snqs {

// Taylor-expanded evolution operator
//   U(dt) ~= I - i dt H - (dt H)^2 / 2 (- i (dt H)^3 / 6 at order 3);
// dagger selects the conjugated scalar coefficients of U^dagger.
struct PropagatorSpec {
  double dt = 0.0;
  int order = 2;
  HamiltonianSpec hamiltonian;
  bool dagger = false;

  void validate() const {
    if (dt < 0.0) throw ConfigError("PropagatorSpec: dt must be >= 0");
    if (order < 1 || order > 3) {
      throw UnsupportedOrderError("PropagatorSpec: order must be in {1, 2, 3}, got " +
                                  std::to_string(order));
    }
    hamiltonian.validate();
  }

  PropagatorSpec adjoint() const {
    PropagatorSpec p(*this);
    p.dagger = !p.dagger;
    return p;
  }

  // (-i dt)^n / n!, conjugated for the dagger operator.
  std::complex<double> taylor_coefficient(int n) const {
    std::complex<double> c = 1.0;
    for (int m = 1; m <= n; ++m) c *= std::complex<double>(0.0, -dt) / double(m);
    return dagger ? std::conj(c) : c;
  }
};

struct RowEntry {
  SpinConfig config;
  std::complex<double> amplitude;
};

// The full row {x' : <x|U|x'> != 0} under the truncated expansion. H^n
// rows come from n nested connected_elements expansions; duplicates are
// merged through the integer encoding, and entries come out in ascending
// code order.
inline std::vector<RowEntry> taylor_row(const SpinConfig& x, const PropagatorSpec& p) {
  p.validate();
  check_length(x, p.hamiltonian);
  std::map<std::uint64_t, std::complex<double>> acc;
  acc[x.code()] = p.taylor_coefficient(0);
  // H^n row amplitudes are real (H is real symmetric).
  std::map<std::uint64_t, double> level;
  level[x.code()] = 1.0;
  for (int n = 1; n <= p.order; ++n) {
    const std::complex<double> coeff = p.taylor_coefficient(n);
    if (coeff == 0.0) break;  // dt == 0
    std::map<std::uint64_t, double> next;
    for (const auto& [code, amp] : level) {
      for (const ConnectedElement& e :
           connected_elements(SpinConfig(code, x.size()), p.hamiltonian)) {
        next[e.config.code()] += amp * e.amplitude;
      }
    }
    level = std::move(next);
    for (const auto& [code, amp] : level) acc[code] += coeff * amp;
  }
  std::vector<RowEntry> row;
  row.reserve(acc.size());
  for (const auto& [code, amp] : acc) row.push_back({SpinConfig(code, x.size()), amp});
  return row;
}

// Upper bound on the row length: configurations within Hamming distance
// <= order of x (1 when the Hamiltonian is diagonal).
inline long row_support_bound(const PropagatorSpec& p) {
  p.validate();
  if (p.hamiltonian.h_x == 0.0) return 1;
  long total = 0;
  long choose = 1;
  for (int d = 0; d <= p.order; ++d) {
    total += choose;
    choose = choose * (p.hamiltonian.L - d) / (d + 1);
  }
  return total;
}

// Matrix-free H v over the full basis; row structure matches
// connected_elements (tested entrywise against it and the dense matrix).
inline Eigen::VectorXcd apply_hamiltonian(const Eigen::VectorXcd& v,
                                          const HamiltonianSpec& h) {
  const auto dim = Eigen::Index(1) << h.L;
  if (v.size() != dim) throw DimensionError("apply_hamiltonian: dimension mismatch");
  Eigen::VectorXcd out(dim);
  for (Eigen::Index x = 0; x < dim; ++x) {
    SpinConfig config(static_cast<std::uint64_t>(x), h.L);
    std::complex<double> acc = diagonal_element(config, h) * v[x];
    if (h.h_x != 0.0) {
      for (int i = 0; i < h.L; ++i) {
        acc -= h.h_x * v[static_cast<Eigen::Index>(x ^ (1ull << i))];
      }
    }
    out[x] = acc;
  }
  return out;
}

// U v (or U^dagger v) on a dense vector via repeated H applications.
inline Eigen::VectorXcd apply_taylor(const Eigen::VectorXcd& v, const PropagatorSpec& p) {
  p.validate();
  Eigen::VectorXcd acc = v;
  Eigen::VectorXcd power = v;
  for (int n = 1; n <= p.order; ++n) {
    power = apply_hamiltonian(power, p.hamiltonian);
    acc += p.taylor_coefficient(n) * power;
  }
  return acc;
}

}  // namespace snqs
