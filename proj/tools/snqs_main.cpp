#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "snqs/snqs.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw snqs::ConfigError("cannot open config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct CommonFlags {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> mode;
  std::optional<int> threads;
};

void add_common(CLI::App* cmd, CommonFlags& flags, bool config_required = true) {
  auto* opt = cmd->add_option("--config", flags.config_path, "configuration file");
  if (config_required) opt->required();
  cmd->add_option("--out", flags.out_dir, "output directory (overrides config)");
  cmd->add_option("--seed", flags.seed, "seed override");
  cmd->add_option("--mode", flags.mode, "evaluation mode override (exact|mc)")
      ->check(CLI::IsMember({"exact", "mc"}));
  cmd->add_option("--threads", flags.threads, "worker thread cap");
}

snqs::RunConfig load_config(const CommonFlags& flags) {
  snqs::RunConfig cfg = snqs::parse_config(read_file(flags.config_path));
  if (!flags.out_dir.empty()) cfg.out_dir = flags.out_dir;
  if (flags.seed) cfg.seed = *flags.seed;
  if (flags.mode) cfg.mode = *flags.mode == "exact" ? snqs::EvalMode::exact : snqs::EvalMode::mc;
  if (flags.threads) cfg.threads = *flags.threads;
  if (cfg.mode == snqs::EvalMode::exact && cfg.L > snqs::kDenseMaxSites) {
    throw snqs::ConfigError("exact mode requires L <= " +
                            std::to_string(snqs::kDenseMaxSites));
  }
  return cfg;
}

// Flushes whatever the record holds, also on abort.
int run_and_emit(const snqs::RunConfig& cfg,
                 const std::function<void(snqs::RunRecord&)>& body) {
  snqs::RunRecord rec;
  try {
    body(rec);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    if (!rec.rows.empty() || !rec.checkpoints.empty()) {
      snqs::emit_outputs(rec, cfg, cfg.out_dir);
      std::cerr << "partial results flushed to " << cfg.out_dir << "\n";
    }
    return 1;
  }
  snqs::emit_outputs(rec, cfg, cfg.out_dir);
  std::cout << "wrote " << rec.rows.size() << " trajectory rows to " << cfg.out_dir
            << "\n";
  return 0;
}

std::filesystem::path latest_checkpoint(const std::string& dir) {
  std::filesystem::path best;
  int best_window = -1;
  if (std::filesystem::is_directory(dir)) {
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
      const std::string name = entry.path().filename().string();
      if (name.rfind("window_", 0) == 0 && name.size() > 12 &&
          name.substr(name.size() - 5) == ".ckpt") {
        int w = std::stoi(name.substr(7, name.size() - 12));
        if (w > best_window) {
          best_window = w;
          best = entry.path();
        }
      }
    }
  }
  if (best_window < 0) {
    throw snqs::ConfigError("no window_<n>.ckpt found in " + dir);
  }
  return best;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"smooth neural quantum state quench dynamics"};
  app.require_subcommand(1);

  CommonFlags run_flags, baseline_flags, exact_flags, eval_flags, resume_flags;
  std::string ckpt_path;
  std::vector<double> eval_times;

  auto* run_cmd = app.add_subcommand("run", "train the smooth ansatz over the full grid");
  add_common(run_cmd, run_flags);
  auto* baseline_cmd =
      app.add_subcommand("baseline", "per-step projection baseline on the same grid");
  add_common(baseline_cmd, baseline_flags);
  auto* exact_cmd = app.add_subcommand("exact", "exact-diagonalization reference trajectory");
  add_common(exact_cmd, exact_flags);
  auto* eval_cmd =
      app.add_subcommand("evaluate", "evaluate a checkpoint at user-supplied times");
  add_common(eval_cmd, eval_flags);
  eval_cmd->add_option("--ckpt", ckpt_path, "checkpoint file")->required();
  eval_cmd->add_option("--times", eval_times, "evaluation times (units of 1/J)")
      ->required()
      ->delimiter(',');
  auto* resume_cmd =
      app.add_subcommand("resume", "continue a run from its last window checkpoint");
  add_common(resume_cmd, resume_flags);

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) {
      const auto cfg = load_config(run_flags);
      return run_and_emit(cfg, [&](snqs::RunRecord& rec) {
        rec = snqs::detail::make_record(cfg, "snqs");
        snqs::CoeffTensor tensor = snqs::initial_coeffs(
            cfg.L, cfg.alpha, snqs::TimeGrid::from_config(cfg).window(0, cfg.Q), 0.0,
            cfg.seed, cfg.init_noise);
        snqs::run_intervals(cfg, rec, std::move(tensor), 0);
      });
    }
    if (baseline_cmd->parsed()) {
      const auto cfg = load_config(baseline_flags);
      return run_and_emit(cfg, [&](snqs::RunRecord& rec) { rec = snqs::ptvmc_baseline(cfg); });
    }
    if (exact_cmd->parsed()) {
      const auto cfg = load_config(exact_flags);
      return run_and_emit(cfg, [&](snqs::RunRecord& rec) { rec = snqs::exact_trajectory(cfg); });
    }
    if (eval_cmd->parsed()) {
      const auto cfg = load_config(eval_flags);
      snqs::CheckpointData ckpt = snqs::read_checkpoint(ckpt_path);
      if (ckpt.tensor.L != cfg.L || ckpt.tensor.alpha != cfg.alpha) {
        throw snqs::ConfigError("checkpoint shape does not match the configuration");
      }
      snqs::RunRecord rec = snqs::detail::make_record(cfg, "snqs");
      rec.rows = snqs::predict_untrained(ckpt.tensor, eval_times, cfg.hamiltonian(),
                                         ckpt.trained_to, cfg.mode, cfg.sampler, cfg.seed);
      snqs::emit_outputs(rec, cfg, cfg.out_dir);
      std::cout << "wrote " << rec.rows.size() << " rows to " << cfg.out_dir << "\n";
      return 0;
    }
    if (resume_cmd->parsed()) {
      const auto cfg = load_config(resume_flags);
      snqs::CheckpointData ckpt = snqs::read_checkpoint(latest_checkpoint(cfg.out_dir));
      return run_and_emit(cfg, [&](snqs::RunRecord& rec) {
        rec = snqs::resume_evolution(cfg, ckpt.tensor, ckpt.trained_to);
      });
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
