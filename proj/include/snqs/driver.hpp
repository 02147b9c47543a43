#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "snqs/ansatz.hpp"
#include "snqs/config.hpp"
#include "snqs/exact.hpp"
#include "snqs/loss.hpp"
#include "snqs/optimizer.hpp"
#include "snqs/rng.hpp"

namespace snqs {

// The three nested temporal scales: propagator step dt, optimization
// interval tau (K = tau/dt steps), basis window T (an integer number of
// intervals). All in units of 1/J.
struct TimeGrid {
  double dt = 0.0;
  double tau = 0.0;
  double T = 0.0;
  double t_max = 0.0;

  static TimeGrid from_config(const RunConfig& c) { return {c.dt, c.tau, c.T, c.t_max}; }

  int steps_per_interval() const { return static_cast<int>(std::llround(tau / dt)); }
  int total_intervals() const { return static_cast<int>(std::llround(t_max / tau)); }
  int total_steps() const { return static_cast<int>(std::llround(t_max / dt)); }
  int intervals_per_window() const { return static_cast<int>(std::llround(T / tau)); }
  int n_windows() const {
    const int m = total_intervals();
    if (m == 0) return 1;
    return (m + intervals_per_window() - 1) / intervals_per_window();
  }
  int window_of_interval(int m) const { return m / intervals_per_window(); }
  double interval_start(int m) const { return m * tau; }
  WindowSpec window(int w, int Q) const { return {w * T, (w + 1) * T, Q}; }
};

struct TrajectoryRow {
  double t = 0.0;
  double sx_mid = 0.0;
  double infidelity = 0.0;
  bool has_infidelity = false;
  bool extrapolated = false;
};

struct IntervalTrace {
  int window = 0;
  int interval = 0;
  double t0 = 0.0;
  double t1 = 0.0;
  int epochs_run = 0;
  double final_loss = 0.0;
  std::vector<double> epoch_losses;
  std::vector<double> final_step_values;
  std::vector<double> final_step_errors;
};

struct WindowCheckpoint {
  int window = 0;  // 1-based in file names
  CoeffTensor tensor;
  double trained_to = 0.0;
};

struct RunRecord {
  std::string method;  // "snqs" | "ptvmc" | "exact"
  EvalMode mode = EvalMode::exact;
  int mid_site = 0;  // 0-based observed site
  std::vector<TrajectoryRow> rows;
  std::vector<IntervalTrace> intervals;
  std::vector<WindowCheckpoint> checkpoints;
  long param_count_snqs = 0;   // Q * N_p per window, summed over windows
  long param_count_ptvmc = 0;  // N_p per time step
};

// --- observables ------------------------------------------------------------

inline StateVector exact_state_at(const HamiltonianSpec& h, double t) {
  return exact_propagate(build_initial_state(h.L), h, t);
}

// Trajectory row for the materialized state at time t. The ED oracle is
// consulted whenever the dense basis can hold the state.
inline TrajectoryRow evaluate_row(const RbmParams& params, double t,
                                  const HamiltonianSpec& h, EvalMode mode,
                                  const ChainConfig& sampler_cfg, std::uint64_t seed,
                                  bool extrapolated) {
  TrajectoryRow row;
  row.t = t;
  row.extrapolated = extrapolated;
  const int mid = middle_site(h.L);
  if (mode == EvalMode::exact || h.L <= kDenseMaxSites) {
    StateVector psi = densify_rbm(params);
    if (mode == EvalMode::exact) {
      row.sx_mid = sigma_x_expectation(psi, mid, h.L);
    }
    row.infidelity = infidelity(exact_state_at(h, t), psi);
    row.has_infidelity = true;
  }
  if (mode == EvalMode::mc) {
    ChainConfig cfg = sampler_cfg;
    cfg.seed = seed;
    SampleSet samples = sample(params, cfg);
    auto [mean, se] = estimate_observable(
        samples, params, [mid](const RbmParams& p, const SpinConfig& x) {
          return sigma_x_local(x, mid, [&p](const SpinConfig& xn, const SpinConfig& xo) {
            return amplitude_ratio(p, xn, xo);
          });
        });
    row.sx_mid = mean.real();
  }
  return row;
}

// --- interval training --------------------------------------------------------

struct TrainSettings {
  AdamWOptions adamw;
  int epochs = 500;
  LrPolicy lr_policy = LrPolicy::constant;
  double stop_loss = 1e-8;
  double stop_rel_improvement = 1e-10;
  int stop_patience = 50;

  static TrainSettings from_config(const RunConfig& c) {
    return {c.adamw,     c.epochs_per_interval,    c.lr_policy,
            c.stop_loss, c.stop_rel_improvement, c.stop_patience};
  }
};

struct TrainResult {
  int epochs_run = 0;
  double final_loss = 0.0;
  std::vector<double> epoch_losses;
  LossDiagnostics final_diagnostics;
};

// Optimizes the coefficients against the interval loss until the epoch
// budget or an early stop. On a collapsed-state error the coefficients
// are restored to the last epoch that still evaluated cleanly, then the
// error propagates.
inline TrainResult train_interval(CoeffTensor& c, const IntervalGrid& grid,
                                  const PropagatorSpec& prop, EvalMode mode,
                                  const InitialTarget& target, const TrainSettings& ts,
                                  const ChainConfig& mc_chains, std::uint64_t seed_key) {
  AdamW optimizer(2 * c.coeffs.size(), ts.adamw);
  TrainResult result;
  CoeffTensor last_good = c;
  double best = std::numeric_limits<double>::infinity();
  int best_epoch = 0;

  auto evaluate = [&](int epoch) {
    McSettings mc;
    const McSettings* mcp = nullptr;
    if (mode == EvalMode::mc) {
      mc.chains = mc_chains;
      mc.seed_key = derive_key(seed_key, {static_cast<std::uint64_t>(epoch)});
      mcp = &mc;
    }
    return interval_loss(c, grid, prop, mode, target, mcp);
  };

  int epoch = 0;
  for (; epoch < ts.epochs; ++epoch) {
    IntervalLossResult loss;
    try {
      loss = evaluate(epoch);
    } catch (const CollapsedStateError&) {
      c = last_good;
      throw;
    }
    last_good = c;
    result.epoch_losses.push_back(loss.neg_log_loss);
    if (loss.neg_log_loss < ts.stop_loss) break;
    if (!std::isfinite(best)) {
      best = loss.neg_log_loss;
      best_epoch = epoch;
    } else if (loss.neg_log_loss <
               best - ts.stop_rel_improvement * std::max(std::abs(best), 1.0)) {
      best = loss.neg_log_loss;
      best_epoch = epoch;
    } else if (epoch - best_epoch >= ts.stop_patience) {
      break;
    }
    Eigen::VectorXd grad = wirtinger_to_real(loss.gradient);
    auto view = real_view(c.coeffs);
    optimizer.step(view, grad,
                   lr_schedule(epoch, ts.adamw.learning_rate, ts.lr_policy, ts.epochs));
  }
  result.epochs_run = epoch;

  IntervalLossResult final_loss;
  try {
    final_loss = evaluate(ts.epochs);
  } catch (const CollapsedStateError&) {
    c = last_good;
    throw;
  }
  result.final_loss = final_loss.neg_log_loss;
  result.final_diagnostics = final_loss.diagnostics;
  result.epoch_losses.push_back(final_loss.neg_log_loss);
  return result;
}

// --- full evolution -------------------------------------------------------

namespace detail {

// Frozen anchor for the interval starting at t0: the representation
// produced by the previous interval (or the known quench state at t=0).
inline InitialTarget freeze_target(const CoeffTensor& tensor, double t0, EvalMode mode,
                                   bool is_run_start) {
  if (is_run_start) {
    if (mode == EvalMode::exact) {
      return InitialTarget::from_state(build_initial_state(tensor.L));
    }
    return InitialTarget::from_network(RbmParams::zero(tensor.L, tensor.alpha));
  }
  RbmParams snapshot = materialize(tensor, t0);
  if (mode == EvalMode::exact) {
    return InitialTarget::from_state(densify_rbm(snapshot));
  }
  return InitialTarget::from_network(std::move(snapshot));
}

inline RunRecord make_record(const RunConfig& cfg, const std::string& method) {
  RunRecord rec;
  rec.method = method;
  rec.mode = cfg.mode;
  rec.mid_site = middle_site(cfg.L);
  TimeGrid grid = TimeGrid::from_config(cfg);
  const long np = rbm_param_count(cfg.L, cfg.alpha);
  rec.param_count_snqs = static_cast<long>(cfg.Q) * np * grid.n_windows();
  rec.param_count_ptvmc = static_cast<long>(grid.total_steps()) * np;
  return rec;
}

}  // namespace detail

// Sequential interval-by-interval training with window handoffs,
// starting at interval m_begin with the given tensor (fresh runs pass
// the initial tensor and m_begin = 0). Rows/checkpoints accumulate into
// `rec` as training progresses so an abort leaves a usable partial record.
inline void run_intervals(const RunConfig& cfg, RunRecord& rec, CoeffTensor tensor,
                          int m_begin) {
  const TimeGrid grid = TimeGrid::from_config(cfg);
  const HamiltonianSpec ham = cfg.hamiltonian();
  const PropagatorSpec prop{cfg.dt, cfg.taylor_order, ham, false};
  const TrainSettings ts = TrainSettings::from_config(cfg);
  const int K = grid.steps_per_interval();

  if (m_begin == 0) {
    rec.rows.push_back(evaluate_row(materialize(tensor, 0.0), 0.0, ham, cfg.mode,
                                    cfg.sampler,
                                    derive_key(cfg.seed, {0x726f77ull, 0ull, 0ull}), false));
  }

  for (int m = m_begin; m < grid.total_intervals(); ++m) {
    const double t0 = grid.interval_start(m);
    const int w = grid.window_of_interval(m);
    InitialTarget target = detail::freeze_target(tensor, t0, cfg.mode, m == 0);
    if (grid.window(w, cfg.Q).t_start != tensor.window.t_start) {
      tensor = window_handoff(tensor, grid.window(w, cfg.Q));
    }
    TrainResult tr =
        train_interval(tensor, {t0, grid.dt, K}, prop, cfg.mode, target, ts, cfg.sampler,
                       derive_key(cfg.seed, {static_cast<std::uint64_t>(RngStream::mc_epoch),
                                             static_cast<std::uint64_t>(m)}));
    IntervalTrace trace;
    trace.window = w;
    trace.interval = m;
    trace.t0 = t0;
    trace.t1 = t0 + grid.tau;
    trace.epochs_run = tr.epochs_run;
    trace.final_loss = tr.final_loss;
    trace.epoch_losses = std::move(tr.epoch_losses);
    trace.final_step_values = tr.final_diagnostics.step_values;
    trace.final_step_errors = tr.final_diagnostics.step_errors;
    rec.intervals.push_back(std::move(trace));

    for (int k = 1; k <= K; ++k) {
      const double t = t0 + k * grid.dt;
      rec.rows.push_back(evaluate_row(
          materialize(tensor, t), t, ham, cfg.mode, cfg.sampler,
          derive_key(cfg.seed, {0x726f77ull, static_cast<std::uint64_t>(m),
                                static_cast<std::uint64_t>(k)}),
          false));
    }

    const bool window_done = (m + 1) % grid.intervals_per_window() == 0;
    const bool run_done = m + 1 == grid.total_intervals();
    if (window_done || run_done) {
      rec.checkpoints.push_back({w + 1, tensor, t0 + grid.tau});
    }
  }
  if (grid.total_intervals() == 0) {
    rec.checkpoints.push_back({1, tensor, 0.0});
  }

  for (double t : cfg.eval_times) {
    rec.rows.push_back(evaluate_row(
        materialize(tensor, t), t, ham, cfg.mode, cfg.sampler,
        derive_key(cfg.seed, {0x6576616cull, static_cast<std::uint64_t>(rec.rows.size())}),
        t > cfg.t_max + 1e-12));
  }
  std::sort(rec.rows.begin(), rec.rows.end(),
            [](const TrajectoryRow& a, const TrajectoryRow& b) { return a.t < b.t; });
  rec.rows.erase(std::unique(rec.rows.begin(), rec.rows.end(),
                             [](const TrajectoryRow& a, const TrajectoryRow& b) {
                               return std::abs(a.t - b.t) < 1e-12;
                             }),
                 rec.rows.end());
}

inline RunRecord run_evolution(const RunConfig& cfg) {
  RunRecord rec = detail::make_record(cfg, "snqs");
  const TimeGrid grid = TimeGrid::from_config(cfg);
  CoeffTensor tensor = initial_coeffs(cfg.L, cfg.alpha, grid.window(0, cfg.Q), 0.0,
                                      cfg.seed, cfg.init_noise);
  run_intervals(cfg, rec, std::move(tensor), 0);
  return rec;
}

// Continues a run from a window checkpoint (the tensor of the last
// completed window). Emits only the remaining rows.
inline RunRecord resume_evolution(const RunConfig& cfg, const CoeffTensor& checkpoint,
                                  double trained_to) {
  RunRecord rec = detail::make_record(cfg, "snqs");
  const TimeGrid grid = TimeGrid::from_config(cfg);
  const int m_begin = static_cast<int>(std::llround(trained_to / grid.tau));
  if (m_begin >= grid.total_intervals()) {
    throw ConfigError("resume: checkpoint already covers t_max");
  }
  run_intervals(cfg, rec, checkpoint, m_begin);
  return rec;
}

// Evaluates the smooth ansatz at arbitrary times (on- or off-grid,
// inside or beyond the trained range) without further optimization.
inline std::vector<TrajectoryRow> predict_untrained(const CoeffTensor& tensor,
                                                    std::span<const double> times,
                                                    const HamiltonianSpec& ham,
                                                    double trained_to, EvalMode mode,
                                                    const ChainConfig& sampler_cfg,
                                                    std::uint64_t seed) {
  std::vector<TrajectoryRow> rows;
  rows.reserve(times.size());
  for (std::size_t i = 0; i < times.size(); ++i) {
    rows.push_back(evaluate_row(
        materialize(tensor, times[i]), times[i], ham, mode, sampler_cfg,
        derive_key(seed, {0x70726564ull, static_cast<std::uint64_t>(i)}),
        times[i] > trained_to + 1e-12));
  }
  return rows;
}

// Coarse-to-fine refinement: the coarse-trained coefficients already
// define parameters at the finer grid times, so they seed retraining
// directly.
inline CoeffTensor refine_timestep(const CoeffTensor& coarse, const RunConfig& fine_cfg) {
  const TimeGrid fine = TimeGrid::from_config(fine_cfg);
  if (!detail::is_integer_multiple(fine_cfg.tau, fine.dt)) {
    throw ConfigError("refine_timestep: fine dt must divide tau");
  }
  RunRecord scratch = detail::make_record(fine_cfg, "snqs");
  CoeffTensor tensor = coarse;
  run_intervals(fine_cfg, scratch, std::move(tensor), 0);
  return scratch.checkpoints.back().tensor;
}

// Per-step projection baseline: a fresh network per time step, trained
// on the single-step fidelity alone, warm-started from the previous
// step. Uses the same propagator and optimizer as the s-NQS runs.
inline RunRecord ptvmc_baseline(const RunConfig& cfg) {
  RunRecord rec = detail::make_record(cfg, "ptvmc");
  const TimeGrid grid = TimeGrid::from_config(cfg);
  const HamiltonianSpec ham = cfg.hamiltonian();
  const PropagatorSpec prop{cfg.dt, cfg.taylor_order, ham, false};
  const int total_steps = grid.total_steps();
  const int epochs = cfg.baseline_epochs_per_step > 0
                         ? cfg.baseline_epochs_per_step
                         : std::max(1, cfg.epochs_per_interval * grid.total_intervals() /
                                           std::max(1, total_steps));

  RbmParams params = RbmParams::zero(cfg.L, cfg.alpha);
  rec.rows.push_back(evaluate_row(params, 0.0, ham, cfg.mode, cfg.sampler,
                                  derive_key(cfg.seed, {0x62617365ull, 0ull}), false));

  // The zero network is a saddle: every hidden-unit log-derivative
  // vanishes there (tanh 0 = 0), freezing b and W under gradient descent.
  // Break the symmetry in the first warm start, as the smooth-ansatz
  // initialization does through its noise columns.
  {
    CounterRng rng(derive_key(cfg.seed, {static_cast<std::uint64_t>(RngStream::baseline),
                                         0x696e6974ull}));
    Eigen::VectorXcd flat = flatten(params);
    for (Eigen::Index i = 0; i < flat.size(); ++i) {
      flat[i] += std::min(cfg.init_noise, 1e-4) * Complex(rng.next_normal(), rng.next_normal());
    }
    params = unflatten(flat, cfg.L, cfg.alpha);
  }

  for (int k = 1; k <= total_steps; ++k) {
    const double t_prev = (k - 1) * grid.dt;
    const double t_cur = k * grid.dt;
    RbmParams prev = params;  // frozen earlier-time state
    std::optional<TimeSlice> prev_slice;
    if (cfg.mode == EvalMode::exact) prev_slice = make_time_slice(prev, t_prev);

    AdamW optimizer(2 * rbm_param_count(cfg.L, cfg.alpha), cfg.adamw);
    double best = std::numeric_limits<double>::infinity();
    int best_epoch = 0;
    IntervalTrace trace;
    trace.interval = k - 1;
    trace.t0 = t_prev;
    trace.t1 = t_cur;
    int epoch = 0;
    for (; epoch < epochs; ++epoch) {
      StepFidelityReport report;
      if (cfg.mode == EvalMode::exact) {
        report = step_fidelity_exact_slices(*prev_slice, make_time_slice(params, t_cur),
                                            prop);
      } else {
        std::uint64_t key =
            derive_key(cfg.seed, {static_cast<std::uint64_t>(RngStream::baseline),
                                  static_cast<std::uint64_t>(k),
                                  static_cast<std::uint64_t>(epoch)});
        ChainConfig prev_cfg = cfg.sampler;
        prev_cfg.seed = derive_key(key, {1});
        ChainConfig cur_cfg = cfg.sampler;
        cur_cfg.seed = derive_key(key, {2});
        report = step_fidelity_mc_slices(
            make_mc_time_slice(prev, t_prev, sample(prev, prev_cfg)),
            make_mc_time_slice(params, t_cur, sample(params, cur_cfg)), prop);
      }
      const double loss = -std::log(report.value);
      trace.epoch_losses.push_back(loss);
      trace.final_loss = loss;
      trace.final_step_values = {report.value};
      trace.final_step_errors = {report.statistical_error};
      if (loss < cfg.stop_loss) break;
      if (!std::isfinite(best)) {
        best = loss;
        best_epoch = epoch;
      } else if (loss <
                 best - cfg.stop_rel_improvement * std::max(std::abs(best), 1.0)) {
        best = loss;
        best_epoch = epoch;
      } else if (epoch - best_epoch >= cfg.stop_patience) {
        break;
      }
      Eigen::MatrixXcd grad_tensor = (-1.0 / report.value) * report.grad_t_double_prime;
      Eigen::VectorXd grad = wirtinger_to_real(grad_tensor);
      Eigen::VectorXcd flat = flatten(params);
      Eigen::Map<Eigen::VectorXd> view(reinterpret_cast<double*>(flat.data()),
                                       2 * flat.size());
      optimizer.step(view, grad,
                     lr_schedule(epoch, cfg.adamw.learning_rate, cfg.lr_policy, epochs));
      params = unflatten(flat, cfg.L, cfg.alpha);
    }
    trace.epochs_run = epoch;
    rec.intervals.push_back(std::move(trace));
    rec.rows.push_back(evaluate_row(
        params, t_cur, ham, cfg.mode, cfg.sampler,
        derive_key(cfg.seed, {0x62617365ull, static_cast<std::uint64_t>(k)}), false));
  }
  return rec;
}

// ED-only reference trajectory over the same grid.
inline RunRecord exact_trajectory(const RunConfig& cfg) {
  RunRecord rec = detail::make_record(cfg, "exact");
  const TimeGrid grid = TimeGrid::from_config(cfg);
  const HamiltonianSpec ham = cfg.hamiltonian();
  const int mid = middle_site(cfg.L);
  for (int k = 0; k <= grid.total_steps(); ++k) {
    const double t = k * cfg.dt;
    StateVector psi = exact_state_at(ham, t);
    rec.rows.push_back({t, sigma_x_expectation(psi, mid, cfg.L), 0.0, true, false});
  }
  return rec;
}

}  // namespace snqs
