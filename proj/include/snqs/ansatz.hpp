#pragma once

#include <Eigen/Dense>
#include <map>
#include <span>
#include <vector>

#include "snqs/chebyshev.hpp"
#include "snqs/errors.hpp"
#include "snqs/rbm.hpp"
#include "snqs/rng.hpp"

namespace snqs {

// Trainable object of one time window: complex coefficients theta_{j,q}
// (rows in RBM flattening order, one column per basis function), so the
// instantaneous network parameters are
//   vartheta_j(t) = sum_q T_q(r(t)) theta_{j,q}.
struct CoeffTensor {
  Eigen::MatrixXcd coeffs;  // N_p x Q
  WindowSpec window;
  int L = 0;
  int alpha = 0;

  int Q() const { return window.Q; }
  Eigen::Index n_params() const { return coeffs.rows(); }

  void validate() const {
    window.validate();
    if (coeffs.rows() != rbm_param_count(L, alpha)) {
      throw ConfigError("CoeffTensor: row count does not match (L, alpha) shape");
    }
    if (coeffs.cols() != window.Q) {
      throw ConfigError("CoeffTensor: column count does not match window Q");
    }
    if (!coeffs.allFinite()) throw NumericError("CoeffTensor: non-finite coefficients");
  }
};

// Instantaneous RBM parameters at time t; t may lie outside the window
// (polynomial extrapolation).
inline RbmParams materialize(const CoeffTensor& c, double t) {
  c.validate();
  Eigen::VectorXd g = cheb_values(c.Q(), rescale(t, c.window));
  Eigen::VectorXcd flat = c.coeffs * g.cast<Complex>();
  return unflatten(flat, c.L, c.alpha);
}

// Starting tensor for the first window: columns q >= 1 carry small
// complex noise to break symmetry, and column 0 is completed so the
// ansatz reproduces the known parameters at t0 exactly (all zeros for
// the paramagnetic quench start).
inline CoeffTensor initial_coeffs(int L, int alpha, const WindowSpec& w, double t0,
                                  std::uint64_t seed, double noise_scale = 1e-2) {
  w.validate();
  CoeffTensor c;
  c.L = L;
  c.alpha = alpha;
  c.window = w;
  const Eigen::Index np = rbm_param_count(L, alpha);
  c.coeffs = Eigen::MatrixXcd::Zero(np, w.Q);
  CounterRng rng(derive_key(seed, {static_cast<std::uint64_t>(RngStream::coeff_init)}));
  for (int q = 1; q < w.Q; ++q) {
    for (Eigen::Index j = 0; j < np; ++j) {
      c.coeffs(j, q) = noise_scale * Complex(rng.next_normal(), rng.next_normal());
    }
  }
  Eigen::VectorXd g = cheb_values(w.Q, rescale(t0, w));
  if (w.Q > 1) {
    c.coeffs.col(0) = -(c.coeffs.rightCols(w.Q - 1) * g.tail(w.Q - 1).cast<Complex>());
  }
  return c;
}

// One gradient contribution: the Wirtinger derivative of a fidelity term
// C_step with respect to the instantaneous parameters, evaluated at one
// of the times the term touches.
struct GradTerm {
  int step = 0;
  double time = 0.0;
  double value = 1.0;  // C_step
  Eigen::VectorXcd grad;
};

enum class LossForm {
  log_sum,  // gradient of sum_k log C_k
  product,  // gradient of prod_k C_k (the raw form)
};

// Chain-rule assembly into coefficient space:
//   dC/dtheta_{j,q} = sum_terms weight(term) * grad_j(term) * T_q(r(t_term)),
// with weight = prod_{k' != k} C_{k'} in product form and 1/C_k in the
// (default) log form. A step may contribute terms at both of its times;
// the per-step values must agree across duplicates.
inline Eigen::MatrixXcd assemble_gradient(std::span<const GradTerm> terms,
                                          const WindowSpec& w, Eigen::Index n_params,
                                          LossForm form = LossForm::log_sum) {
  w.validate();
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(n_params, w.Q);
  std::map<int, double> step_values;
  for (const GradTerm& term : terms) {
    if (!(term.value > 0.0) || !std::isfinite(term.value)) {
      throw CollapsedStateError("assemble_gradient: fidelity term " +
                                std::to_string(term.step) + " is " +
                                std::to_string(term.value));
    }
    auto [it, inserted] = step_values.emplace(term.step, term.value);
    if (!inserted && it->second != term.value) {
      throw ConfigError("assemble_gradient: inconsistent values for step " +
                        std::to_string(term.step));
    }
    if (term.grad.size() != n_params) {
      throw DimensionError("assemble_gradient: gradient length mismatch");
    }
  }
  std::map<int, double> leave_one_out;
  if (form == LossForm::product) {
    for (const auto& [k, v] : step_values) {
      double prod = 1.0;
      for (const auto& [k2, v2] : step_values) {
        if (k2 != k) prod *= v2;
      }
      leave_one_out[k] = prod;
    }
  }
  for (const GradTerm& term : terms) {
    const double weight = form == LossForm::log_sum ? 1.0 / term.value
                                                    : leave_one_out.at(term.step);
    Eigen::VectorXd g = cheb_values(w.Q, rescale(term.time, w));
    out.noalias() += weight * term.grad * g.transpose().cast<Complex>();
  }
  return out;
}

// Coefficients for the next window such that the materialized parameters
// match all Q time derivatives (orders 0..Q-1) at the boundary. The
// boundary systems are triangular because d^n T_q / dt^n = 0 for q < n;
// unequal window widths enter through the dr/dt factors.
inline CoeffTensor window_handoff(const CoeffTensor& prev, const WindowSpec& next) {
  prev.validate();
  next.validate();
  if (next.Q != prev.Q()) {
    throw ConfigError("window_handoff: basis sizes differ (" + std::to_string(prev.Q()) +
                      " vs " + std::to_string(next.Q) + ")");
  }
  const int Q = prev.Q();
  Eigen::MatrixXd b_prev = boundary_derivative_matrix(Q, +1.0, prev.window.dr_dt());
  Eigen::MatrixXd b_next = boundary_derivative_matrix(Q, -1.0, next.dr_dt());
  // Solve B_next * Theta_row^T = B_prev * theta_row^T for every row.
  Eigen::MatrixXcd rhs = b_prev.cast<Complex>() * prev.coeffs.transpose();
  Eigen::MatrixXcd solved =
      b_next.cast<Complex>().triangularView<Eigen::Upper>().solve(rhs);
  CoeffTensor out = prev;
  out.window = next;
  out.coeffs = solved.transpose();
  return out;
}

}  // namespace snqs
