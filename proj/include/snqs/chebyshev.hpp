#pragma once

#include <Eigen/Dense>

#include "snqs/errors.hpp"

namespace snqs {

// One temporal basis window [t_start, t_end] mapped affinely onto
// r in [-1, 1], carrying Q Chebyshev polynomials T_0 .. T_{Q-1}.
struct WindowSpec {
  double t_start = 0.0;
  double t_end = 0.0;
  int Q = 1;

  double width() const { return t_end - t_start; }
  double dr_dt() const { return 2.0 / width(); }

  void validate() const {
    if (!(t_end > t_start)) throw ConfigError("WindowSpec: t_end must exceed t_start");
    if (Q < 1) throw ConfigError("WindowSpec: Q must be >= 1");
  }

  friend bool operator==(const WindowSpec&, const WindowSpec&) = default;
};

// r = 2 (t - t_start) / (t_end - t_start) - 1. Values of t outside the
// window are allowed and map to |r| > 1 (extrapolation).
inline double rescale(double t, const WindowSpec& w) {
  if (!(w.t_end > w.t_start)) throw ConfigError("rescale: degenerate window");
  return 2.0 * (t - w.t_start) / w.width() - 1.0;
}

inline double rescale_inverse(double r, const WindowSpec& w) {
  if (!(w.t_end > w.t_start)) throw ConfigError("rescale_inverse: degenerate window");
  return w.t_start + 0.5 * (r + 1.0) * w.width();
}

// (T_0(r), ..., T_{Q-1}(r)) via T_{q+1} = 2 r T_q - T_{q-1}; the
// recurrence extends the polynomials to |r| > 1.
inline Eigen::VectorXd cheb_values(int Q, double r) {
  if (Q < 1) throw ConfigError("cheb_values: Q must be >= 1");
  Eigen::VectorXd t(Q);
  t[0] = 1.0;
  if (Q > 1) t[1] = r;
  for (int q = 2; q < Q; ++q) t[q] = 2.0 * r * t[q - 1] - t[q - 2];
  return t;
}

// n-th time derivatives (d^n T_q / dt^n)(r), including the chain-rule
// factor (dr/dt)^n. Differentiating the recurrence m times gives
// D^m T_{q+1} = 2 r D^m T_q + 2 m D^{m-1} T_q - D^m T_{q-1}.
inline Eigen::VectorXd cheb_derivatives(int Q, int n, double r, double dr_dt) {
  if (Q < 1) throw ConfigError("cheb_derivatives: Q must be >= 1");
  if (n < 0) throw ConfigError("cheb_derivatives: derivative order must be >= 0");
  // table(m, q) = d^m T_q / dr^m
  Eigen::MatrixXd table = Eigen::MatrixXd::Zero(n + 1, Q);
  table(0, 0) = 1.0;
  if (Q > 1) {
    table(0, 1) = r;
    if (n >= 1) table(1, 1) = 1.0;
  }
  for (int q = 2; q < Q; ++q) {
    table(0, q) = 2.0 * r * table(0, q - 1) - table(0, q - 2);
    for (int m = 1; m <= n; ++m) {
      table(m, q) =
          2.0 * r * table(m, q - 1) + 2.0 * m * table(m - 1, q - 1) - table(m, q - 2);
    }
  }
  return std::pow(dr_dt, n) * table.row(n).transpose();
}

// Rows n = 0..Q-1 of the boundary derivative matrix
// B(n, q) = (d^n T_q / dt^n)(r). Upper triangular in q since
// d^n T_q / dr^n vanishes for q < n.
inline Eigen::MatrixXd boundary_derivative_matrix(int Q, double r, double dr_dt) {
  Eigen::MatrixXd B(Q, Q);
  for (int n = 0; n < Q; ++n) B.row(n) = cheb_derivatives(Q, n, r, dr_dt).transpose();
  return B;
}

}  // namespace snqs
