#pragma once

#include <Eigen/Dense>
#include <map>
#include <memory>
#include <mutex>
#include <tuple>

#include "snqs/errors.hpp"
#include "snqs/hamiltonian.hpp"
#include "snqs/rbm.hpp"

namespace snqs {

using StateVector = Eigen::VectorXcd;

// Dense vectors are capped to keep validation runs in seconds.
inline constexpr int kDenseMaxSites = 14;

inline void check_dense_capacity(int L) {
  if (L < 1 || L > kDenseMaxSites) {
    throw CapacityError("dense basis limited to 1 <= L <= " +
                        std::to_string(kDenseMaxSites) + ", got L=" + std::to_string(L));
  }
}

inline Eigen::Index dense_dim(int L) {
  check_dense_capacity(L);
  return Eigen::Index(1) << L;
}

// Paramagnetic product state (|0> + |1>)/sqrt(2) on every site: all 2^L
// amplitudes equal 2^{-L/2}.
inline StateVector build_initial_state(int L) {
  const Eigen::Index dim = dense_dim(L);
  return StateVector::Constant(dim, Complex(std::pow(2.0, -0.5 * L), 0.0));
}

namespace detail {

inline Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

// Embed a single-site operator at `site` (site 0 = least significant bit,
// so it sits rightmost in the Kronecker chain).
inline Eigen::MatrixXd embed_site(const Eigen::MatrixXd& op, int site, int L) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Identity(1, 1);
  for (int i = 0; i < L; ++i) {
    out = kron(i == site ? op : Eigen::MatrixXd::Identity(2, 2), out);
  }
  return out;
}

}  // namespace detail

// Dense matrix of the tilted Ising Hamiltonian, built from Pauli
// embeddings (independent of the sparse-row route in hamiltonian.hpp).
inline Eigen::MatrixXd dense_hamiltonian(const HamiltonianSpec& h) {
  h.validate();
  const Eigen::Index dim = dense_dim(h.L);
  Eigen::MatrixXd sx(2, 2), sz(2, 2);
  sx << 0, 1, 1, 0;
  // basis index bit 1 <-> spin +1
  sz << -1, 0, 0, 1;
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(dim, dim);
  for (int i = 0; i + 1 < h.L; ++i) {
    H += h.J * (detail::embed_site(sz, i, h.L) * detail::embed_site(sz, i + 1, h.L));
  }
  for (int i = 0; i < h.L; ++i) {
    H -= h.h_x * detail::embed_site(sx, i, h.L);
    H -= h.h_z * detail::embed_site(sz, i, h.L);
  }
  return H;
}

struct SpectralDecomposition {
  Eigen::MatrixXd vectors;
  Eigen::VectorXd values;
};

// Eigendecomposition cached per HamiltonianSpec: many small steps share
// one Hamiltonian. Read-only after construction.
inline const SpectralDecomposition& spectral_decomposition(const HamiltonianSpec& h) {
  using Key = std::tuple<int, double, double, double>;
  static std::map<Key, std::unique_ptr<SpectralDecomposition>> cache;
  static std::mutex mutex;
  std::lock_guard<std::mutex> lock(mutex);
  Key key{h.L, h.J, h.h_x, h.h_z};
  auto it = cache.find(key);
  if (it == cache.end()) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(dense_hamiltonian(h));
    if (solver.info() != Eigen::Success) {
      throw NumericError("spectral_decomposition: eigensolver failed");
    }
    auto spec = std::make_unique<SpectralDecomposition>();
    spec->vectors = solver.eigenvectors();
    spec->values = solver.eigenvalues();
    it = cache.emplace(key, std::move(spec)).first;
  }
  return *it->second;
}

// exp(-i H dt) v through the cached eigenbasis; unitary up to roundoff.
inline StateVector exact_propagate(const StateVector& v, const HamiltonianSpec& h,
                                   double dt) {
  const Eigen::Index dim = dense_dim(h.L);
  if (v.size() != dim) {
    throw DimensionError("exact_propagate: state dimension does not match 2^L");
  }
  if (!v.allFinite()) throw NumericError("exact_propagate: non-finite amplitudes");
  const SpectralDecomposition& spec = spectral_decomposition(h);
  // Split into real matvecs so the eigenvector matrix stays real.
  Eigen::VectorXd wr = spec.vectors.transpose() * v.real();
  Eigen::VectorXd wi = spec.vectors.transpose() * v.imag();
  StateVector w(dim);
  for (Eigen::Index n = 0; n < dim; ++n) {
    w[n] = Complex(wr[n], wi[n]) * std::exp(Complex(0.0, -spec.values[n] * dt));
  }
  Eigen::VectorXd or_ = spec.vectors * w.real();
  Eigen::VectorXd oi = spec.vectors * w.imag();
  StateVector out(dim);
  out.real() = or_;
  out.imag() = oi;
  return out;
}

// 1 - |<a|b>|^2 / (<a|a><b|b>); invariant under rescaling either state.
inline double infidelity(const StateVector& a, const StateVector& b) {
  if (a.size() != b.size()) throw DimensionError("infidelity: dimension mismatch");
  const double na = a.squaredNorm();
  const double nb = b.squaredNorm();
  if (!(na > 0.0) || !(nb > 0.0) || !std::isfinite(na) || !std::isfinite(nb)) {
    throw NumericError("infidelity: degenerate state");
  }
  const double overlap = std::norm(a.dot(b));
  return 1.0 - overlap / (na * nb);
}

// Cached matrix of spins over the full basis: row x holds (x_0 .. x_{L-1})
// as +-1. Shared by the batch RBM evaluators below.
inline const Eigen::MatrixXd& spin_table(int L) {
  static std::map<int, std::unique_ptr<Eigen::MatrixXd>> cache;
  static std::mutex mutex;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(L);
  if (it == cache.end()) {
    const Eigen::Index dim = dense_dim(L);
    auto table = std::make_unique<Eigen::MatrixXd>(dim, L);
    for (Eigen::Index x = 0; x < dim; ++x) {
      for (int i = 0; i < L; ++i) {
        (*table)(x, i) = (x >> i) & 1 ? 1.0 : -1.0;
      }
    }
    it = cache.emplace(L, std::move(table)).first;
  }
  return *it->second;
}

// log psi over the full basis (one entry per configuration code).
inline Eigen::VectorXcd log_amplitudes_dense(const RbmParams& p) {
  const int L = p.n_sites();
  const Eigen::Index dim = dense_dim(L);
  const Eigen::Index M = p.b.size();
  const Eigen::MatrixXd& S = spin_table(L);
  Eigen::MatrixXcd theta = (S * p.W.real()).cast<Complex>();
  theta += Complex(0, 1) * (S * p.W.imag());
  theta.rowwise() += p.b.transpose();
  Eigen::VectorXcd out = (S * p.a.real()).cast<Complex>();
  out += Complex(0, 1) * (S * p.a.imag());
  for (Eigen::Index x = 0; x < dim; ++x) {
    for (Eigen::Index j = 0; j < M; ++j) out[x] += log2cosh(theta(x, j));
  }
  return out;
}

// Log-derivative matrix over the full basis: 2^L x N_p, columns in the
// RBM flattening order.
inline Eigen::MatrixXcd log_derivatives_dense(const RbmParams& p) {
  const int L = p.n_sites();
  const Eigen::Index dim = dense_dim(L);
  const Eigen::Index M = p.b.size();
  const Eigen::MatrixXd& S = spin_table(L);
  Eigen::MatrixXcd theta = (S * p.W.real()).cast<Complex>();
  theta += Complex(0, 1) * (S * p.W.imag());
  theta.rowwise() += p.b.transpose();
  Eigen::MatrixXcd out(dim, p.n_params());
  out.leftCols(L) = S.cast<Complex>();
  for (Eigen::Index j = 0; j < M; ++j) {
    for (Eigen::Index x = 0; x < dim; ++x) out(x, L + j) = stable_tanh(theta(x, j));
  }
  for (Eigen::Index j = 0; j < M; ++j) {
    for (Eigen::Index i = 0; i < L; ++i) {
      out.col(L + M + j * L + i) = out.col(i).cwiseProduct(out.col(L + j));
    }
  }
  return out;
}

// Amplitudes exp(log psi(x)) over the full basis, stabilized by
// subtracting the maximum log-modulus before exponentiating.
inline StateVector densify_rbm(const RbmParams& p) {
  Eigen::VectorXcd logs = log_amplitudes_dense(p);
  double shift = logs.real().maxCoeff();
  StateVector out(logs.size());
  for (Eigen::Index x = 0; x < logs.size(); ++x) out[x] = std::exp(logs[x] - shift);
  if (!out.allFinite()) throw NumericError("densify_rbm: non-finite amplitudes");
  return out;
}

// <v|sx_site|v> / <v|v>.
inline double sigma_x_expectation(const StateVector& v, int site, int L) {
  if (v.size() != dense_dim(L)) {
    throw DimensionError("sigma_x_expectation: state dimension does not match 2^L");
  }
  if (site < 0 || site >= L) throw IndexError("sigma_x_expectation: site out of range");
  Complex acc = 0.0;
  const std::uint64_t bit = 1ull << site;
  for (Eigen::Index x = 0; x < v.size(); ++x) {
    acc += std::conj(v[x]) * v[static_cast<Eigen::Index>(x ^ bit)];
  }
  return (acc / v.squaredNorm()).real();
}

}  // namespace snqs
