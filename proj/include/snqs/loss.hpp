#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <vector>

#include "snqs/ansatz.hpp"
#include "snqs/errors.hpp"
#include "snqs/exact.hpp"
#include "snqs/propagator.hpp"
#include "snqs/sampler.hpp"

namespace snqs {

// One fidelity term C with its Wirtinger gradients at the two times it
// touches (the earlier-time gradient is zero for the anchor term C_0,
// whose target is frozen).
struct StepFidelityReport {
  double value = 0.0;
  Eigen::VectorXcd grad_t_prime;
  Eigen::VectorXcd grad_t_double_prime;
  double statistical_error = 0.0;  // 0 in exact mode
};

// Known state at the start of an interval: a dense vector (exact mode,
// first window) or a frozen network snapshot.
struct InitialTarget {
  std::optional<StateVector> dense;
  std::optional<RbmParams> network;

  static InitialTarget from_state(StateVector v) {
    InitialTarget t;
    t.dense = std::move(v);
    return t;
  }
  static InitialTarget from_network(RbmParams p) {
    InitialTarget t;
    t.network = std::move(p);
    return t;
  }
};

enum class EvalMode { exact, mc };

// --- exact-sum path -------------------------------------------------------

// Everything the exact-sum estimators need at one time point.
struct TimeSlice {
  double t = 0.0;
  RbmParams params;
  StateVector psi;  // stabilized amplitudes over the full basis
  double norm2 = 0.0;
  Eigen::MatrixXcd logderiv;       // 2^L x N_p
  Eigen::VectorXcd logderiv_mean;  // sum_x P(x) O_j(x)
};

inline TimeSlice make_time_slice(const RbmParams& params, double t) {
  TimeSlice s;
  s.t = t;
  s.params = params;
  s.psi = densify_rbm(params);
  s.norm2 = s.psi.squaredNorm();
  if (!(s.norm2 > 0.0) || !std::isfinite(s.norm2)) {
    throw CollapsedStateError("time slice at t=" + std::to_string(t) +
                              ": state norm is degenerate");
  }
  s.logderiv = log_derivatives_dense(params);
  Eigen::VectorXd weights = s.psi.cwiseAbs2() / s.norm2;
  s.logderiv_mean = s.logderiv.transpose() * weights.cast<Complex>();
  return s;
}

inline TimeSlice make_time_slice(const CoeffTensor& c, double t) {
  return make_time_slice(materialize(c, t), t);
}

inline void check_positive_fidelity(double value, double t_prime, double t_double_prime) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw CollapsedStateError("fidelity term over [" + std::to_string(t_prime) + ", " +
                              std::to_string(t_double_prime) + "] is " +
                              std::to_string(value) + " (collapsed state)");
  }
}

// C_k = [sum_x P_t''(x) C_loc^{t''}(x)] [sum_y P_t'(y) C_loc^{t'}(y)] by
// exact summation, with
//   C_loc^{t''}(x) = (U psi')(x) / psi''(x),
//   C_loc^{t'}(y)  = (U^dag psi'')(y) / psi'(y).
// Wirtinger gradients: with F'' and F' the two factors,
//   dC/dtheta''_j = -C <O''_j>_P'' + F'' <D'_j>_P',
//   dC/dtheta'_j  = -C <O'_j>_P'  + F'  <E''_j>_P'',
// where D' and E'' carry the ratio-derivative insertions of O through the
// propagator row. All are reduced here as dense inner products.
inline StepFidelityReport step_fidelity_exact_slices(const TimeSlice& prime,
                                                     const TimeSlice& dprime,
                                                     const PropagatorSpec& p) {
  PropagatorSpec forward = p;
  forward.dagger = false;
  StateVector phi = apply_taylor(prime.psi, forward);            // U psi'
  StateVector chi = apply_taylor(dprime.psi, forward.adjoint());  // U^dag psi''

  Eigen::VectorXcd w_dprime = dprime.psi.conjugate().cwiseProduct(phi);
  Complex f_dprime = w_dprime.sum() / dprime.norm2;
  Complex f_prime = prime.psi.conjugate().cwiseProduct(chi).sum() / prime.norm2;
  const double value = (f_dprime * f_prime).real();
  check_positive_fidelity(value, prime.t, dprime.t);

  // <D'_j>_P' = conj([O''^H (conj(psi'') o U psi')]_j) / n'
  Eigen::VectorXcd d_prime =
      (dprime.logderiv.adjoint() * w_dprime).conjugate() / prime.norm2;
  // <E''_j>_P'' = [O'^T (conj(U^dag psi'') o psi')]_j / n''
  Eigen::VectorXcd e_dprime =
      prime.logderiv.transpose() * chi.conjugate().cwiseProduct(prime.psi) / dprime.norm2;

  StepFidelityReport report;
  report.value = value;
  report.grad_t_double_prime = -value * dprime.logderiv_mean + f_dprime * d_prime;
  report.grad_t_prime = -value * prime.logderiv_mean + f_prime * e_dprime;
  report.statistical_error = 0.0;
  return report;
}

inline StepFidelityReport step_fidelity_exact(const CoeffTensor& c, double t_prime,
                                              double t_double_prime,
                                              const PropagatorSpec& p) {
  check_dense_capacity(c.L);
  return step_fidelity_exact_slices(make_time_slice(c, t_prime),
                                    make_time_slice(c, t_double_prime), p);
}

// C_0 against a dense target: the propagator drops out, leaving plain
// amplitude ratios (Kronecker-delta rows).
inline StepFidelityReport initial_overlap_slice(const TimeSlice& s,
                                                const StateVector& target) {
  if (target.size() != s.psi.size()) {
    throw DimensionError("initial_overlap: target dimension mismatch");
  }
  const double target_norm2 = target.squaredNorm();
  if (!(target_norm2 > 0.0) || !std::isfinite(target_norm2)) {
    throw NumericError("initial_overlap: degenerate target state");
  }
  Complex overlap = s.psi.conjugate().cwiseProduct(target).sum();
  Complex f_var = overlap / s.norm2;
  Complex f_target = std::conj(overlap) / target_norm2;
  const double value = (f_var * f_target).real();
  check_positive_fidelity(value, s.t, s.t);

  Eigen::VectorXcd d =
      s.logderiv.transpose() * target.conjugate().cwiseProduct(s.psi) / target_norm2;
  StepFidelityReport report;
  report.value = value;
  report.grad_t_prime = Eigen::VectorXcd::Zero(s.logderiv.cols());
  report.grad_t_double_prime = -value * s.logderiv_mean + f_var * d;
  return report;
}

inline StateVector target_state(const InitialTarget& target) {
  if (target.dense) return *target.dense;
  if (target.network) return densify_rbm(*target.network);
  throw ConfigError("InitialTarget: neither dense state nor network set");
}

inline StepFidelityReport initial_overlap(const CoeffTensor& c, double t0,
                                          const InitialTarget& target) {
  check_dense_capacity(c.L);
  return initial_overlap_slice(make_time_slice(c, t0), target_state(target));
}

// --- Monte Carlo path -----------------------------------------------------

struct McTimeSlice {
  double t = 0.0;
  RbmParams params;
  SampleSet samples;
  Eigen::VectorXcd logamp;         // log psi at each sample
  Eigen::MatrixXcd logderiv;       // n_samples x N_p
  Eigen::VectorXcd logderiv_mean;  // plain sample mean
};

inline McTimeSlice make_mc_time_slice(const RbmParams& params, double t,
                                      const SampleSet& samples) {
  if (samples.configs.empty()) throw ConfigError("mc time slice: empty sample set");
  McTimeSlice s;
  s.t = t;
  s.params = params;
  s.samples = samples;
  const auto n = static_cast<Eigen::Index>(samples.size());
  s.logamp.resize(n);
  s.logderiv.resize(n, params.n_params());
  for (Eigen::Index i = 0; i < n; ++i) {
    s.logamp[i] = log_amplitude(params, samples.configs[static_cast<std::size_t>(i)]);
    s.logderiv.row(i) =
        log_derivatives(params, samples.configs[static_cast<std::size_t>(i)]).transpose();
  }
  s.logderiv_mean = s.logderiv.colwise().mean();
  return s;
}

namespace detail {

// Mean and covariance components of a complex sample mean, from batch
// means across chains.
struct FactorStats {
  Complex mean;
  double var_re = 0.0;
  double var_im = 0.0;
  double cov = 0.0;
};

inline FactorStats factor_stats(const Eigen::VectorXcd& per_sample, int n_chains,
                                int per_chain) {
  FactorStats f;
  f.mean = per_sample.mean();
  if (n_chains > 1) {
    for (int c = 0; c < n_chains; ++c) {
      Complex m = per_sample.segment(static_cast<Eigen::Index>(c) * per_chain, per_chain)
                      .mean() -
                  f.mean;
      f.var_re += m.real() * m.real();
      f.var_im += m.imag() * m.imag();
      f.cov += m.real() * m.imag();
    }
    const double denom = double(n_chains) * (n_chains - 1);
    f.var_re /= denom;
    f.var_im /= denom;
    f.cov /= denom;
  }
  return f;
}

// Error propagation for Re(A*B) with independently estimated factors;
// the diagonal second-order term keeps the estimate honest when one
// factor mean is small.
inline double product_standard_error(const FactorStats& a, const FactorStats& b) {
  const double ar = a.mean.real(), ai = a.mean.imag();
  const double br = b.mean.real(), bi = b.mean.imag();
  double var = br * br * a.var_re + bi * bi * a.var_im - 2.0 * br * bi * a.cov +
               ar * ar * b.var_re + ai * ai * b.var_im - 2.0 * ar * ai * b.cov +
               a.var_re * b.var_re + a.var_im * b.var_im;
  return std::sqrt(std::max(var, 0.0));
}

}  // namespace detail

// Monte-Carlo estimate of C_k from independent sample sets at the two
// times. Local estimators run over the truncated propagator rows with
// cross-time amplitude ratios; gradients reuse the same samples.
inline StepFidelityReport step_fidelity_mc_slices(const McTimeSlice& prime,
                                                  const McTimeSlice& dprime,
                                                  const PropagatorSpec& p) {
  PropagatorSpec forward = p;
  forward.dagger = false;
  PropagatorSpec backward = forward.adjoint();
  const Eigen::Index np = prime.params.n_params();

  // t'' side: C_loc''(x) = sum_{x'} <x|U|x'> psi'(x')/psi''(x) and the
  // O'-insertion E''(x) = sum_{x'} <x|U|x'> O'(x') psi'(x')/psi''(x).
  const auto n_dp = static_cast<Eigen::Index>(dprime.samples.size());
  Eigen::VectorXcd loc_dp(n_dp);
  Eigen::VectorXcd e_dprime = Eigen::VectorXcd::Zero(np);
  for (Eigen::Index i = 0; i < n_dp; ++i) {
    const SpinConfig& x = dprime.samples.configs[static_cast<std::size_t>(i)];
    Complex loc = 0.0;
    for (const RowEntry& entry : taylor_row(x, forward)) {
      Complex ratio =
          std::exp(log_amplitude(prime.params, entry.config) - dprime.logamp[i]);
      loc += entry.amplitude * ratio;
      e_dprime += entry.amplitude * ratio * log_derivatives(prime.params, entry.config);
    }
    loc_dp[i] = loc;
  }
  e_dprime /= double(n_dp);

  // t' side: C_loc'(y) over U^dagger rows plus the O''-insertion D'(y).
  const auto n_p = static_cast<Eigen::Index>(prime.samples.size());
  Eigen::VectorXcd loc_p(n_p);
  Eigen::VectorXcd d_prime = Eigen::VectorXcd::Zero(np);
  for (Eigen::Index i = 0; i < n_p; ++i) {
    const SpinConfig& y = prime.samples.configs[static_cast<std::size_t>(i)];
    Complex loc = 0.0;
    for (const RowEntry& entry : taylor_row(y, backward)) {
      Complex ratio =
          std::exp(log_amplitude(dprime.params, entry.config) - prime.logamp[i]);
      loc += entry.amplitude * ratio;
      d_prime += entry.amplitude * ratio * log_derivatives(dprime.params, entry.config);
    }
    loc_p[i] = loc;
  }
  d_prime /= double(n_p);

  detail::FactorStats f_dp =
      detail::factor_stats(loc_dp, dprime.samples.n_chains, dprime.samples.samples_per_chain);
  detail::FactorStats f_p =
      detail::factor_stats(loc_p, prime.samples.n_chains, prime.samples.samples_per_chain);
  const double value = (f_dp.mean * f_p.mean).real();
  check_positive_fidelity(value, prime.t, dprime.t);

  StepFidelityReport report;
  report.value = value;
  report.grad_t_double_prime = -value * dprime.logderiv_mean + f_dp.mean * d_prime;
  report.grad_t_prime = -value * prime.logderiv_mean + f_p.mean * e_dprime;
  report.statistical_error = detail::product_standard_error(f_dp, f_p);
  return report;
}

inline StepFidelityReport step_fidelity_mc(const CoeffTensor& c, double t_prime,
                                           double t_double_prime, const PropagatorSpec& p,
                                           const SampleSet& s_prime,
                                           const SampleSet& s_double_prime) {
  return step_fidelity_mc_slices(
      make_mc_time_slice(materialize(c, t_prime), t_prime, s_prime),
      make_mc_time_slice(materialize(c, t_double_prime), t_double_prime, s_double_prime),
      p);
}

// C_0 by sampling: the variational side is sampled from |psi|^2, the
// frozen target side from |target|^2, and the local estimators reduce to
// plain cross ratios.
inline StepFidelityReport initial_overlap_mc_slices(const McTimeSlice& var,
                                                    const RbmParams& target,
                                                    const McTimeSlice& target_slice) {
  const Eigen::Index np = var.params.n_params();
  const auto n_var = static_cast<Eigen::Index>(var.samples.size());
  Eigen::VectorXcd loc_var(n_var);
  for (Eigen::Index i = 0; i < n_var; ++i) {
    loc_var[i] = std::exp(
        log_amplitude(target, var.samples.configs[static_cast<std::size_t>(i)]) -
        var.logamp[i]);
  }
  const auto n_tgt = static_cast<Eigen::Index>(target_slice.samples.size());
  Eigen::VectorXcd loc_tgt(n_tgt);
  Eigen::VectorXcd d = Eigen::VectorXcd::Zero(np);
  for (Eigen::Index i = 0; i < n_tgt; ++i) {
    const SpinConfig& y = target_slice.samples.configs[static_cast<std::size_t>(i)];
    Complex ratio = std::exp(log_amplitude(var.params, y) - target_slice.logamp[i]);
    loc_tgt[i] = ratio;
    d += ratio * log_derivatives(var.params, y);
  }
  d /= double(n_tgt);

  detail::FactorStats f_var =
      detail::factor_stats(loc_var, var.samples.n_chains, var.samples.samples_per_chain);
  detail::FactorStats f_tgt = detail::factor_stats(loc_tgt, target_slice.samples.n_chains,
                                                   target_slice.samples.samples_per_chain);
  const double value = (f_var.mean * f_tgt.mean).real();
  check_positive_fidelity(value, var.t, var.t);

  StepFidelityReport report;
  report.value = value;
  report.grad_t_prime = Eigen::VectorXcd::Zero(np);
  report.grad_t_double_prime = -value * var.logderiv_mean + f_var.mean * d;
  report.statistical_error = detail::product_standard_error(f_var, f_tgt);
  return report;
}

// --- interval loss --------------------------------------------------------

// Grid slice of one optimization interval: times t_k = t0 + k dt for
// k = 0..K.
struct IntervalGrid {
  double t0 = 0.0;
  double dt = 0.0;
  int K = 0;

  double time(int k) const { return t0 + k * dt; }
};

struct McSettings {
  ChainConfig chains;
  std::uint64_t seed_key = 0;  // per-epoch stream key
};

struct LossDiagnostics {
  std::vector<double> step_values;  // C_0 .. C_K
  std::vector<double> step_errors;  // statistical, 0 in exact mode
};

struct IntervalLossResult {
  double neg_log_loss = 0.0;
  Eigen::MatrixXcd gradient;  // Wirtinger d(neg_log_loss)/dtheta_{j,q}
  LossDiagnostics diagnostics;
};

// -sum_k log C_k over one interval and its coefficient-space gradient.
// C_0 anchors the interval start to the frozen target in every interval.
inline IntervalLossResult interval_loss(const CoeffTensor& c, const IntervalGrid& grid,
                                        const PropagatorSpec& p, EvalMode mode,
                                        const InitialTarget& target,
                                        const McSettings* mc = nullptr,
                                        LossForm form = LossForm::log_sum) {
  if (grid.K < 0 || (grid.K > 0 && !(grid.dt > 0.0))) {
    throw ConfigError("interval_loss: invalid grid slice");
  }
  std::vector<GradTerm> terms;
  LossDiagnostics diag;
  auto record = [&](int k, const StepFidelityReport& report) {
    diag.step_values.push_back(report.value);
    diag.step_errors.push_back(report.statistical_error);
    if (k > 0) {
      terms.push_back({k, grid.time(k - 1), report.value, report.grad_t_prime});
    }
    terms.push_back({k, grid.time(k), report.value, report.grad_t_double_prime});
  };

  if (mode == EvalMode::exact) {
    check_dense_capacity(c.L);
    std::vector<TimeSlice> slices;
    slices.reserve(static_cast<std::size_t>(grid.K) + 1);
    for (int k = 0; k <= grid.K; ++k) slices.push_back(make_time_slice(c, grid.time(k)));
    record(0, initial_overlap_slice(slices[0], target_state(target)));
    for (int k = 1; k <= grid.K; ++k) {
      record(k, step_fidelity_exact_slices(slices[static_cast<std::size_t>(k) - 1],
                                           slices[static_cast<std::size_t>(k)], p));
    }
  } else {
    if (mc == nullptr) throw ConfigError("interval_loss: mc mode needs sampler settings");
    if (!target.network) {
      throw ConfigError("interval_loss: mc mode needs a network target");
    }
    std::vector<McTimeSlice> slices;
    slices.reserve(static_cast<std::size_t>(grid.K) + 1);
    for (int k = 0; k <= grid.K; ++k) {
      RbmParams params = materialize(c, grid.time(k));
      ChainConfig cfg = mc->chains;
      cfg.seed = derive_key(mc->seed_key, {static_cast<std::uint64_t>(RngStream::mc_epoch),
                                           static_cast<std::uint64_t>(k)});
      slices.push_back(make_mc_time_slice(params, grid.time(k), sample(params, cfg)));
    }
    ChainConfig tgt_cfg = mc->chains;
    tgt_cfg.seed = derive_key(
        mc->seed_key, {static_cast<std::uint64_t>(RngStream::mc_epoch), ~std::uint64_t(0)});
    McTimeSlice tgt_slice = make_mc_time_slice(*target.network, grid.t0,
                                               sample(*target.network, tgt_cfg));
    record(0, initial_overlap_mc_slices(slices[0], *target.network, tgt_slice));
    for (int k = 1; k <= grid.K; ++k) {
      record(k, step_fidelity_mc_slices(slices[static_cast<std::size_t>(k) - 1],
                                        slices[static_cast<std::size_t>(k)], p));
    }
  }

  IntervalLossResult result;
  result.neg_log_loss = 0.0;
  for (double v : diag.step_values) result.neg_log_loss -= std::log(v);
  Eigen::MatrixXcd assembled = assemble_gradient(terms, c.window, c.n_params(), form);
  // log_sum assembles d(sum log C)/dtheta; the trained objective is its
  // negation. The product form is exposed unnegated (gradient of C).
  result.gradient = form == LossForm::log_sum ? (-assembled).eval() : assembled;
  result.diagnostics = std::move(diag);
  return result;
}

}  // namespace snqs
