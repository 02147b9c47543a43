#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>

#include "snqs/errors.hpp"
#include "snqs/spin.hpp"

namespace snqs {

using Complex = std::complex<double>;

// log(2 cosh z) evaluated without overflow: for s = z * sign(Re z),
// log(2 cosh z) = s + log(1 + exp(-2s)). cosh(-z) = cosh(z), so the sign
// flip is exact; |exp(-2s)| <= 1 keeps the tail bounded.
inline Complex log2cosh(Complex z) {
  Complex s = std::real(z) < 0.0 ? -z : z;
  return s + std::log(1.0 + std::exp(-2.0 * s));
}

// tanh z through exp(-2z) on the half-plane Re z >= 0; plain std::tanh
// overflows internally for large |Re z|.
inline Complex stable_tanh(Complex z) {
  if (std::real(z) < 0.0) return -stable_tanh(-z);
  Complex w = std::exp(-2.0 * z);
  return (1.0 - w) / (1.0 + w);
}

// Complex RBM parameters. Hidden-unit count is M = alpha * L. The
// flattening order (a, then b, then W grouped by hidden unit) is a frozen
// contract shared with the coefficient tensors and the optimizer state.
struct RbmParams {
  Eigen::VectorXcd a;  // L visible biases
  Eigen::VectorXcd b;  // M hidden biases
  Eigen::MatrixXcd W;  // L x M weights

  static RbmParams zero(int L, int alpha) {
    RbmParams p;
    p.a = Eigen::VectorXcd::Zero(L);
    p.b = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(alpha) * L);
    p.W = Eigen::MatrixXcd::Zero(L, static_cast<Eigen::Index>(alpha) * L);
    return p;
  }

  int n_sites() const { return static_cast<int>(a.size()); }
  int n_hidden() const { return static_cast<int>(b.size()); }
  Eigen::Index n_params() const { return a.size() + b.size() + W.size(); }

  bool all_finite() const { return a.allFinite() && b.allFinite() && W.allFinite(); }
};

inline Eigen::Index rbm_param_count(int L, int alpha) {
  auto M = static_cast<Eigen::Index>(alpha) * L;
  return L + M + static_cast<Eigen::Index>(L) * M;
}

inline Eigen::VectorXcd flatten(const RbmParams& p) {
  Eigen::VectorXcd v(p.n_params());
  v.head(p.a.size()) = p.a;
  v.segment(p.a.size(), p.b.size()) = p.b;
  v.tail(p.W.size()) = Eigen::Map<const Eigen::VectorXcd>(p.W.data(), p.W.size());
  return v;
}

inline RbmParams unflatten(const Eigen::VectorXcd& v, int L, int alpha) {
  if (v.size() != rbm_param_count(L, alpha)) {
    throw DimensionError("unflatten: vector length does not match (L, alpha) shape");
  }
  auto M = static_cast<Eigen::Index>(alpha) * L;
  RbmParams p;
  p.a = v.head(L);
  p.b = v.segment(L, M);
  p.W = Eigen::Map<const Eigen::MatrixXcd>(v.data() + L + M, L, M);
  return p;
}

inline Eigen::VectorXcd spin_vector(const SpinConfig& x) {
  Eigen::VectorXcd s(x.size());
  for (int i = 0; i < x.size(); ++i) s[i] = static_cast<double>(x.spin(i));
  return s;
}

// Hidden-unit arguments theta_j(x) = b_j + sum_i W_{i,j} x_i.
inline Eigen::VectorXcd hidden_arguments(const RbmParams& p, const SpinConfig& x) {
  if (x.size() != p.n_sites()) {
    throw DimensionError("rbm: configuration length does not match parameter shape");
  }
  return p.b + p.W.transpose() * spin_vector(x);
}

// log psi(x) = sum_i a_i x_i + sum_j log 2cosh(theta_j(x)).
inline Complex log_amplitude(const RbmParams& p, const SpinConfig& x) {
  if (!p.all_finite()) throw NumericError("rbm: non-finite parameters");
  Eigen::VectorXcd sx = spin_vector(x);
  Complex out = (p.a.array() * sx.array()).sum();
  Eigen::VectorXcd theta = p.b + p.W.transpose() * sx;
  for (Eigen::Index j = 0; j < theta.size(); ++j) out += log2cosh(theta[j]);
  return out;
}

// O_j(x) = d log psi / d theta_j in flattening order:
// d/da_i = x_i, d/db_j = tanh(theta_j), d/dW_{i,j} = x_i tanh(theta_j).
inline Eigen::VectorXcd log_derivatives(const RbmParams& p, const SpinConfig& x) {
  if (!p.all_finite()) throw NumericError("rbm: non-finite parameters");
  const Eigen::Index L = p.a.size();
  const Eigen::Index M = p.b.size();
  Eigen::VectorXcd sx = spin_vector(x);
  Eigen::VectorXcd theta = p.b + p.W.transpose() * sx;
  Eigen::VectorXcd t(M);
  for (Eigen::Index j = 0; j < M; ++j) t[j] = stable_tanh(theta[j]);

  Eigen::VectorXcd out(p.n_params());
  out.head(L) = sx;
  out.segment(L, M) = t;
  for (Eigen::Index j = 0; j < M; ++j) {
    out.segment(L + M + j * L, L) = sx * t[j];
  }
  return out;
}

// psi(x_new) / psi(x_old).
inline Complex amplitude_ratio(const RbmParams& p, const SpinConfig& x_new,
                               const SpinConfig& x_old) {
  return std::exp(log_amplitude(p, x_new) - log_amplitude(p, x_old));
}

// Incremental evaluation state for Markov chains: caches the hidden
// arguments so a single-flip ratio costs O(M) instead of O(L*M).
class HiddenCache {
 public:
  HiddenCache(const RbmParams& p, const SpinConfig& x)
      : p_(&p), x_(x), theta_(hidden_arguments(p, x)) {}

  const SpinConfig& config() const { return x_; }

  // log psi(x with site flipped) - log psi(x).
  Complex log_ratio_flip(int site) const {
    const double s = x_.spin(site);
    Complex delta = -2.0 * p_->a[site] * s;
    for (Eigen::Index j = 0; j < theta_.size(); ++j) {
      delta += log2cosh(theta_[j] - 2.0 * s * p_->W(site, j)) - log2cosh(theta_[j]);
    }
    return delta;
  }

  void apply_flip(int site) {
    const double s = x_.spin(site);
    theta_ -= 2.0 * s * p_->W.row(site).transpose();
    x_.flip(site);
  }

 private:
  const RbmParams* p_;
  SpinConfig x_;
  Eigen::VectorXcd theta_;
};

}  // namespace snqs
