#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "snqs/errors.hpp"
#include "snqs/exact.hpp"
#include "snqs/loss.hpp"
#include "snqs/optimizer.hpp"
#include "snqs/sampler.hpp"

namespace snqs {

// Full run description. Times are dimensionless (multiples of 1/J).
struct RunConfig {
  // model
  int L = 0;
  double J = 1.0;
  double h_x = 0.0;
  double h_z = 0.0;
  // ansatz
  int alpha = 0;
  int Q = 0;
  // grid
  double dt = 0.0;
  double tau = 0.0;
  double T = 0.0;
  double t_max = 0.0;
  // run
  EvalMode mode = EvalMode::exact;
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  std::vector<double> eval_times;
  int threads = 1;
  int taylor_order = 2;
  // sampler
  ChainConfig sampler;
  // optimizer
  AdamWOptions adamw;
  int epochs_per_interval = 500;
  LrPolicy lr_policy = LrPolicy::constant;
  double stop_loss = 1e-8;
  double stop_rel_improvement = 1e-10;
  int stop_patience = 50;
  int baseline_epochs_per_step = 0;  // 0: match the s-NQS total epoch budget
  double init_noise = 1e-2;

  HamiltonianSpec hamiltonian() const { return {L, J, h_x, h_z}; }

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

namespace detail {

struct ConfigParser {
  std::map<std::string, std::string> values;
  std::vector<std::string> violations;

  static const std::vector<std::string>& known_sections() {
    static const std::vector<std::string> s{"model", "ansatz", "grid", "run",
                                            "sampler", "optimizer"};
    return s;
  }

  static const std::vector<std::string>& known_keys() {
    static const std::vector<std::string> k{
        "L", "J", "h_x", "h_z", "alpha", "Q", "dt", "tau", "T", "t_max",
        "mode", "seed", "out_dir", "eval_times", "threads", "taylor_order",
        "n_chains", "n_samples", "burn_in", "thinning",
        "learning_rate", "beta1", "beta2", "epsilon", "weight_decay",
        "epochs_per_interval", "lr_policy", "stop_loss", "stop_rel_improvement",
        "stop_patience", "baseline_epochs_per_step", "init_noise"};
    return k;
  }

  static std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? "" : s.substr(b, e - b + 1);
  }

  void scan(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      auto hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      line = trim(line);
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']') {
          violations.push_back("line " + std::to_string(line_no) +
                               ": malformed section header '" + line + "'");
          continue;
        }
        std::string section = trim(line.substr(1, line.size() - 2));
        const auto& sections = known_sections();
        if (std::find(sections.begin(), sections.end(), section) == sections.end()) {
          violations.push_back("line " + std::to_string(line_no) + ": unknown section [" +
                               section + "]");
        }
        continue;
      }
      auto eq = line.find('=');
      if (eq == std::string::npos) {
        violations.push_back("line " + std::to_string(line_no) +
                             ": expected 'key = value', got '" + line + "'");
        continue;
      }
      std::string key = trim(line.substr(0, eq));
      std::string value = trim(line.substr(eq + 1));
      const auto& keys = known_keys();
      if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
        violations.push_back("line " + std::to_string(line_no) + ": unknown key '" + key +
                             "'");
        continue;
      }
      if (values.count(key)) {
        violations.push_back("line " + std::to_string(line_no) + ": duplicate key '" +
                             key + "'");
        continue;
      }
      values[key] = value;
    }
  }

  bool has(const std::string& key) const { return values.count(key) > 0; }

  template <class T, class Parse>
  void read(const std::string& key, T& out, Parse&& parse) {
    auto it = values.find(key);
    if (it == values.end()) return;
    try {
      out = parse(it->second);
    } catch (const std::exception& e) {
      violations.push_back("key '" + key + "': cannot parse '" + it->second + "' (" +
                           e.what() + ")");
    }
  }

  void read_double(const std::string& key, double& out) {
    read(key, out, [](const std::string& s) {
      std::size_t pos = 0;
      double v = std::stod(s, &pos);
      if (pos != s.size()) throw std::invalid_argument("trailing characters");
      return v;
    });
  }

  void read_int(const std::string& key, int& out) {
    read(key, out, [](const std::string& s) {
      std::size_t pos = 0;
      long v = std::stol(s, &pos);
      if (pos != s.size()) throw std::invalid_argument("trailing characters");
      return static_cast<int>(v);
    });
  }

  void read_u64(const std::string& key, std::uint64_t& out) {
    read(key, out, [](const std::string& s) {
      std::size_t pos = 0;
      unsigned long long v = std::stoull(s, &pos);
      if (pos != s.size()) throw std::invalid_argument("trailing characters");
      return static_cast<std::uint64_t>(v);
    });
  }
};

inline bool is_integer_multiple(double a, double b) {
  if (!(b > 0.0)) return false;
  double q = a / b;
  return std::abs(q - std::round(q)) < 1e-9 * std::max(1.0, std::abs(q));
}

}  // namespace detail

// Parses the flat key = value document (optional [section] headers) and
// validates it, reporting every violation at once. Physics parameters
// have no silent defaults.
inline RunConfig parse_config(const std::string& text) {
  detail::ConfigParser p;
  p.scan(text);
  RunConfig cfg;

  static const std::vector<std::pair<std::string, std::string>> required{
      {"L", "site count"},         {"h_x", "transverse field (units of J)"},
      {"h_z", "longitudinal field (units of J)"}, {"alpha", "hidden-unit density"},
      {"Q", "temporal basis size"}, {"dt", "time step (units of 1/J)"},
      {"tau", "interval length (units of 1/J)"},  {"T", "window length (units of 1/J)"},
      {"t_max", "total evolution time (units of 1/J)"}};
  for (const auto& [key, what] : required) {
    if (!p.has(key)) p.violations.push_back("missing required key '" + key + "' (" + what + ")");
  }

  p.read_int("L", cfg.L);
  p.read_double("J", cfg.J);
  p.read_double("h_x", cfg.h_x);
  p.read_double("h_z", cfg.h_z);
  p.read_int("alpha", cfg.alpha);
  p.read_int("Q", cfg.Q);
  p.read_double("dt", cfg.dt);
  p.read_double("tau", cfg.tau);
  p.read_double("T", cfg.T);
  p.read_double("t_max", cfg.t_max);
  p.read("mode", cfg.mode, [](const std::string& s) {
    if (s == "exact") return EvalMode::exact;
    if (s == "mc") return EvalMode::mc;
    throw std::invalid_argument("expected 'exact' or 'mc'");
  });
  p.read_u64("seed", cfg.seed);
  p.read("out_dir", cfg.out_dir, [](const std::string& s) { return s; });
  p.read("eval_times", cfg.eval_times, [](const std::string& s) {
    std::vector<double> out;
    std::istringstream in(s);
    std::string item;
    while (std::getline(in, item, ',')) {
      item = detail::ConfigParser::trim(item);
      if (item.empty()) continue;
      std::size_t pos = 0;
      out.push_back(std::stod(item, &pos));
      if (pos != item.size()) throw std::invalid_argument("trailing characters");
    }
    return out;
  });
  p.read_int("threads", cfg.threads);
  p.read_int("taylor_order", cfg.taylor_order);
  p.read_int("n_chains", cfg.sampler.n_chains);
  p.read_int("n_samples", cfg.sampler.n_samples);
  p.read_int("burn_in", cfg.sampler.burn_in);
  p.read_int("thinning", cfg.sampler.thinning);
  p.read_double("learning_rate", cfg.adamw.learning_rate);
  p.read_double("beta1", cfg.adamw.beta1);
  p.read_double("beta2", cfg.adamw.beta2);
  p.read_double("epsilon", cfg.adamw.epsilon);
  p.read_double("weight_decay", cfg.adamw.weight_decay);
  p.read_int("epochs_per_interval", cfg.epochs_per_interval);
  p.read("lr_policy", cfg.lr_policy, [](const std::string& s) {
    if (s == "constant") return LrPolicy::constant;
    if (s == "cosine") return LrPolicy::cosine;
    throw std::invalid_argument("expected 'constant' or 'cosine'");
  });
  p.read_double("stop_loss", cfg.stop_loss);
  p.read_double("stop_rel_improvement", cfg.stop_rel_improvement);
  p.read_int("stop_patience", cfg.stop_patience);
  p.read_int("baseline_epochs_per_step", cfg.baseline_epochs_per_step);
  p.read_double("init_noise", cfg.init_noise);

  auto check = [&](bool ok, const std::string& message) {
    if (!ok) p.violations.push_back(message);
  };
  if (p.has("L")) check(cfg.L >= 2, "L must be >= 2, got " + std::to_string(cfg.L));
  if (p.has("alpha")) check(cfg.alpha >= 1, "alpha must be >= 1");
  if (p.has("Q")) check(cfg.Q >= 1, "Q must be >= 1");
  if (p.has("dt")) check(cfg.dt > 0.0, "dt must be positive");
  if (p.has("tau")) check(cfg.tau > 0.0, "tau must be positive");
  if (p.has("T")) check(cfg.T > 0.0, "T must be positive");
  if (p.has("t_max")) check(cfg.t_max >= 0.0, "t_max must be >= 0");
  if (cfg.dt > 0.0 && cfg.tau > 0.0) {
    check(detail::is_integer_multiple(cfg.tau, cfg.dt),
          "tau = " + std::to_string(cfg.tau) + " must be an integer multiple of dt = " +
              std::to_string(cfg.dt));
  }
  if (cfg.tau > 0.0 && cfg.T > 0.0) {
    check(detail::is_integer_multiple(cfg.T, cfg.tau),
          "T = " + std::to_string(cfg.T) + " must be an integer multiple of tau = " +
              std::to_string(cfg.tau));
  }
  if (cfg.tau > 0.0 && cfg.t_max > 0.0) {
    check(detail::is_integer_multiple(cfg.t_max, cfg.tau),
          "t_max = " + std::to_string(cfg.t_max) +
              " must be an integer multiple of tau = " + std::to_string(cfg.tau));
  }
  if (cfg.mode == EvalMode::exact && p.has("L")) {
    check(cfg.L <= kDenseMaxSites, "exact mode requires L <= " +
                                       std::to_string(kDenseMaxSites) + ", got L=" +
                                       std::to_string(cfg.L));
  }
  check(cfg.taylor_order >= 1 && cfg.taylor_order <= 3, "taylor_order must be in {1,2,3}");
  check(cfg.threads >= 1, "threads must be >= 1");
  check(cfg.epochs_per_interval >= 1, "epochs_per_interval must be >= 1");
  check(cfg.baseline_epochs_per_step >= 0, "baseline_epochs_per_step must be >= 0");
  check(cfg.sampler.n_chains >= 1 && cfg.sampler.n_samples >= 1 &&
            cfg.sampler.burn_in >= 1 && cfg.sampler.thinning >= 1,
        "sampler settings must all be positive");

  if (!p.violations.empty()) {
    std::string message = "invalid configuration:";
    for (const auto& v : p.violations) message += "\n  - " + v;
    throw ConfigError(message);
  }
  return cfg;
}

namespace detail {

inline std::string format_full(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

// Canonical serialization; parse_config(serialize_config(c)) == c.
inline std::string serialize_config(const RunConfig& c) {
  std::ostringstream out;
  auto d = detail::format_full;
  out << "[model]\n";
  out << "L = " << c.L << "\n";
  out << "J = " << d(c.J) << "\n";
  out << "h_x = " << d(c.h_x) << "\n";
  out << "h_z = " << d(c.h_z) << "\n";
  out << "\n[ansatz]\n";
  out << "alpha = " << c.alpha << "\n";
  out << "Q = " << c.Q << "\n";
  out << "\n[grid]\n";
  out << "dt = " << d(c.dt) << "\n";
  out << "tau = " << d(c.tau) << "\n";
  out << "T = " << d(c.T) << "\n";
  out << "t_max = " << d(c.t_max) << "\n";
  out << "\n[run]\n";
  out << "mode = " << (c.mode == EvalMode::exact ? "exact" : "mc") << "\n";
  out << "seed = " << c.seed << "\n";
  out << "out_dir = " << c.out_dir << "\n";
  if (!c.eval_times.empty()) {
    out << "eval_times = ";
    for (std::size_t i = 0; i < c.eval_times.size(); ++i) {
      out << (i ? ", " : "") << d(c.eval_times[i]);
    }
    out << "\n";
  }
  out << "threads = " << c.threads << "\n";
  out << "taylor_order = " << c.taylor_order << "\n";
  out << "\n[sampler]\n";
  out << "n_chains = " << c.sampler.n_chains << "\n";
  out << "n_samples = " << c.sampler.n_samples << "\n";
  out << "burn_in = " << c.sampler.burn_in << "\n";
  out << "thinning = " << c.sampler.thinning << "\n";
  out << "\n[optimizer]\n";
  out << "learning_rate = " << d(c.adamw.learning_rate) << "\n";
  out << "beta1 = " << d(c.adamw.beta1) << "\n";
  out << "beta2 = " << d(c.adamw.beta2) << "\n";
  out << "epsilon = " << d(c.adamw.epsilon) << "\n";
  out << "weight_decay = " << d(c.adamw.weight_decay) << "\n";
  out << "epochs_per_interval = " << c.epochs_per_interval << "\n";
  out << "lr_policy = " << (c.lr_policy == LrPolicy::constant ? "constant" : "cosine")
      << "\n";
  out << "stop_loss = " << d(c.stop_loss) << "\n";
  out << "stop_rel_improvement = " << d(c.stop_rel_improvement) << "\n";
  out << "stop_patience = " << c.stop_patience << "\n";
  out << "baseline_epochs_per_step = " << c.baseline_epochs_per_step << "\n";
  out << "init_noise = " << d(c.init_noise) << "\n";
  return out.str();
}

}  // namespace snqs
