#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "snqs/ansatz.hpp"
#include "snqs/config.hpp"
#include "snqs/driver.hpp"
#include "snqs/errors.hpp"

namespace snqs {

namespace detail {

inline void write_file_atomic(const std::filesystem::path& path, const std::string& body) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write to " + tmp.string());
    out << body;
    if (!out) throw ConfigError("write failed on " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace detail

// trajectory.csv: one row per evaluation time, full double precision,
// dot decimal, newline terminated. Schema: t,sx_mid,infidelity,extrapolated
// (infidelity blank when no oracle is available).
inline std::string trajectory_csv(const RunRecord& rec) {
  std::ostringstream out;
  out << "t,sx_mid,infidelity,extrapolated\n";
  for (const TrajectoryRow& row : rec.rows) {
    out << detail::format_full(row.t) << ',' << detail::format_full(row.sx_mid) << ',';
    if (row.has_infidelity) out << detail::format_full(row.infidelity);
    out << ',' << (row.extrapolated ? 1 : 0) << '\n';
  }
  return out.str();
}

inline nlohmann::json manifest_json(const RunRecord& rec, const RunConfig& cfg) {
  nlohmann::json m;
  m["format"] = "snqs-manifest-v1";
  m["method"] = rec.method;
  m["mode"] = rec.mode == EvalMode::exact ? "exact" : "mc";
  m["seed"] = cfg.seed;
  m["config"] = serialize_config(cfg);
  m["mid_site_zero_based"] = rec.mid_site;
  m["mid_site_one_based"] = rec.mid_site + 1;
  m["init_noise_scale"] = cfg.init_noise;
  m["parameter_counts"] = {
      {"n_network_params", rbm_param_count(cfg.L, cfg.alpha)},
      {"snqs_total", rec.param_count_snqs},
      {"ptvmc_total", rec.param_count_ptvmc},
  };
  nlohmann::json intervals = nlohmann::json::array();
  for (const IntervalTrace& tr : rec.intervals) {
    intervals.push_back({{"window", tr.window},
                         {"interval", tr.interval},
                         {"t0", tr.t0},
                         {"t1", tr.t1},
                         {"epochs_run", tr.epochs_run},
                         {"final_loss", tr.final_loss},
                         {"epoch_losses", tr.epoch_losses},
                         {"final_step_values", tr.final_step_values},
                         {"final_step_errors", tr.final_step_errors}});
  }
  m["intervals"] = intervals;
  return m;
}

// window_<n>.ckpt: text checkpoint with a shape header and complex
// entries as paired re/im decimal fields, row j = parameter, column q.
inline std::string checkpoint_text(const CoeffTensor& c, double trained_to) {
  std::ostringstream out;
  out << "snqs-checkpoint v1\n";
  out << "L " << c.L << "\n";
  out << "alpha " << c.alpha << "\n";
  out << "Q " << c.Q() << "\n";
  out << "n_params " << c.n_params() << "\n";
  out << "window " << detail::format_full(c.window.t_start) << ' '
      << detail::format_full(c.window.t_end) << "\n";
  out << "trained_to " << detail::format_full(trained_to) << "\n";
  for (Eigen::Index j = 0; j < c.coeffs.rows(); ++j) {
    for (Eigen::Index q = 0; q < c.coeffs.cols(); ++q) {
      if (q) out << ' ';
      out << detail::format_full(c.coeffs(j, q).real()) << ' '
          << detail::format_full(c.coeffs(j, q).imag());
    }
    out << '\n';
  }
  return out.str();
}

struct CheckpointData {
  CoeffTensor tensor;
  double trained_to = 0.0;
};

inline CheckpointData parse_checkpoint(std::istream& in) {
  std::string tag, version;
  in >> tag >> version;
  if (tag != "snqs-checkpoint" || version != "v1") {
    throw ConfigError("checkpoint: unrecognized header '" + tag + " " + version + "'");
  }
  CheckpointData data;
  Eigen::Index n_params = 0;
  std::string key;
  auto expect = [&](const std::string& want) {
    in >> key;
    if (key != want) throw ConfigError("checkpoint: expected '" + want + "', got '" + key + "'");
  };
  expect("L");
  in >> data.tensor.L;
  expect("alpha");
  in >> data.tensor.alpha;
  expect("Q");
  in >> data.tensor.window.Q;
  expect("n_params");
  in >> n_params;
  expect("window");
  in >> data.tensor.window.t_start >> data.tensor.window.t_end;
  expect("trained_to");
  in >> data.trained_to;
  if (!in) throw ConfigError("checkpoint: truncated header");
  if (n_params != rbm_param_count(data.tensor.L, data.tensor.alpha)) {
    throw ConfigError("checkpoint: n_params does not match (L, alpha)");
  }
  data.tensor.coeffs.resize(n_params, data.tensor.window.Q);
  for (Eigen::Index j = 0; j < n_params; ++j) {
    for (Eigen::Index q = 0; q < data.tensor.window.Q; ++q) {
      double re = 0.0, im = 0.0;
      in >> re >> im;
      data.tensor.coeffs(j, q) = Complex(re, im);
    }
  }
  if (!in) throw ConfigError("checkpoint: truncated coefficient block");
  data.tensor.validate();
  return data;
}

inline CheckpointData read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open checkpoint " + path.string());
  return parse_checkpoint(in);
}

// Writes trajectory.csv, manifest.json and the window checkpoints.
inline void emit_outputs(const RunRecord& rec, const RunConfig& cfg,
                         const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw ConfigError("output directory " + dir.string() + " is not writable");
  }
  detail::write_file_atomic(dir / "trajectory.csv", trajectory_csv(rec));
  detail::write_file_atomic(dir / "manifest.json", manifest_json(rec, cfg).dump(2) + "\n");
  for (const WindowCheckpoint& ckpt : rec.checkpoints) {
    detail::write_file_atomic(dir / ("window_" + std::to_string(ckpt.window) + ".ckpt"),
                              checkpoint_text(ckpt.tensor, ckpt.trained_to));
  }
}

}  // namespace snqs
