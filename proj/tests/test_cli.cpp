#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "test_support.hpp"

using namespace snqs;

namespace {

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string fig2_text() {
  return read_file(std::filesystem::path(__FILE__).parent_path().parent_path() /
                   "configs" / "fig2.cfg");
}

}  // namespace

TEST(ParseConfig, ShippedFig2Validates) {
  RunConfig cfg = parse_config(fig2_text());
  EXPECT_EQ(cfg.L, 10);
  EXPECT_EQ(cfg.alpha, 5);
  EXPECT_EQ(cfg.Q, 3);
  EXPECT_DOUBLE_EQ(cfg.dt, 0.01);
  EXPECT_DOUBLE_EQ(cfg.tau, 0.1);
  EXPECT_DOUBLE_EQ(cfg.T, 2.0);
  EXPECT_DOUBLE_EQ(cfg.t_max, 2.2);
  EXPECT_DOUBLE_EQ(cfg.h_x, 0.3);
  EXPECT_DOUBLE_EQ(cfg.h_z, 0.3);
  EXPECT_EQ(cfg.mode, EvalMode::exact);
  ASSERT_EQ(cfg.eval_times.size(), 2u);
  EXPECT_DOUBLE_EQ(cfg.eval_times[1], 2.15);
}

TEST(ParseConfig, DivisibilityViolationNamesBothValues) {
  std::string text = fig2_text();
  auto pos = text.find("tau = 0.1");
  ASSERT_NE(pos, std::string::npos);
  text.replace(pos, 9, "tau = 0.03");
  try {
    parse_config(text);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("0.03"), std::string::npos);
    EXPECT_NE(what.find("multiple"), std::string::npos);
  }
}

TEST(ParseConfig, EmptyDocumentListsEveryMissingKey) {
  try {
    parse_config("");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    const std::string what = e.what();
    for (const char* key : {"L", "h_x", "h_z", "alpha", "Q", "dt", "tau", "T", "t_max"}) {
      EXPECT_NE(what.find("missing required key '" + std::string(key) + "'"),
                std::string::npos)
          << key;
    }
  }
}

TEST(ParseConfig, UnknownKeyRejected) {
  std::string text = fig2_text() + "\nbogus_key = 3\n";
  EXPECT_THROW(parse_config(text), ConfigError);
}

TEST(ParseConfig, ExactModeCapacityEnforced) {
  std::string text = fig2_text();
  auto pos = text.find("\nL = 10");
  ASSERT_NE(pos, std::string::npos);
  text.replace(pos, 7, "\nL = 16");
  try {
    parse_config(text);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("exact mode requires"), std::string::npos);
  }
}

TEST(ParseConfig, RoundTripsThroughSerialization) {
  RunConfig cfg = parse_config(fig2_text());
  RunConfig reparsed = parse_config(serialize_config(cfg));
  EXPECT_TRUE(cfg == reparsed);
}

TEST(Outputs, SingleRowTrajectoryForZeroTime) {
  RunConfig cfg;
  cfg.L = 3;
  cfg.h_x = 0.3;
  cfg.h_z = 0.3;
  cfg.alpha = 1;
  cfg.Q = 2;
  cfg.dt = 0.01;
  cfg.tau = 0.05;
  cfg.T = 0.2;
  cfg.t_max = 0.0;
  cfg.seed = 3;
  cfg.epochs_per_interval = 20;
  RunRecord rec = run_evolution(cfg);
  std::string csv = trajectory_csv(rec);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "t,sx_mid,infidelity,extrapolated");
  int data_rows = 0;
  while (std::getline(in, line)) {
    if (!line.empty()) ++data_rows;
  }
  EXPECT_EQ(data_rows, 1);
  EXPECT_EQ(csv.back(), '\n');
}

TEST(Outputs, EmitAndManifestRoundTrip) {
  RunConfig cfg;
  cfg.L = 3;
  cfg.h_x = 0.3;
  cfg.h_z = 0.3;
  cfg.alpha = 1;
  cfg.Q = 2;
  cfg.dt = 0.01;
  cfg.tau = 0.05;
  cfg.T = 0.2;
  cfg.t_max = 0.05;
  cfg.seed = 3;
  cfg.epochs_per_interval = 30;
  RunRecord rec = run_evolution(cfg);
  auto dir = std::filesystem::temp_directory_path() / "snqs_test_out";
  std::filesystem::remove_all(dir);
  emit_outputs(rec, cfg, dir);
  EXPECT_TRUE(std::filesystem::exists(dir / "trajectory.csv"));
  EXPECT_TRUE(std::filesystem::exists(dir / "manifest.json"));
  EXPECT_TRUE(std::filesystem::exists(dir / "window_1.ckpt"));

  auto manifest = nlohmann::json::parse(read_file(dir / "manifest.json"));
  RunConfig echoed = parse_config(manifest["config"].get<std::string>());
  EXPECT_TRUE(echoed == cfg);
  EXPECT_EQ(manifest["parameter_counts"]["snqs_total"].get<long>(),
            rec.param_count_snqs);
  EXPECT_EQ(manifest["parameter_counts"]["ptvmc_total"].get<long>(),
            rec.param_count_ptvmc);
  EXPECT_EQ(manifest["mid_site_one_based"].get<int>(), middle_site(cfg.L) + 1);
  std::filesystem::remove_all(dir);
}

TEST(Checkpoint, WriteThenReadIsEntrywiseEqual) {
  WindowSpec w{0.0, 2.0, 3};
  CoeffTensor c = oracles::random_coeffs(3, 2, w, 17, 0.37);
  std::string text = checkpoint_text(c, 1.3);
  std::istringstream in(text);
  CheckpointData data = parse_checkpoint(in);
  EXPECT_EQ(data.tensor.L, 3);
  EXPECT_EQ(data.tensor.alpha, 2);
  EXPECT_DOUBLE_EQ(data.trained_to, 1.3);
  EXPECT_TRUE(data.tensor.window == w);
  ASSERT_EQ(data.tensor.coeffs.rows(), c.coeffs.rows());
  for (Eigen::Index j = 0; j < c.coeffs.rows(); ++j) {
    for (Eigen::Index q = 0; q < c.coeffs.cols(); ++q) {
      EXPECT_EQ(data.tensor.coeffs(j, q), c.coeffs(j, q));
    }
  }
}

TEST(Checkpoint, RejectsCorruptHeader) {
  std::istringstream in("not-a-checkpoint v9\n");
  EXPECT_THROW(parse_checkpoint(in), ConfigError);
}

TEST(Outputs, UnwritableDirectoryThrows) {
  RunConfig cfg;
  cfg.L = 3;
  cfg.h_x = 0.3;
  cfg.h_z = 0.3;
  cfg.alpha = 1;
  cfg.Q = 1;
  cfg.dt = 0.01;
  cfg.tau = 0.01;
  cfg.T = 0.02;
  cfg.t_max = 0.0;
  RunRecord rec;
  rec.rows.push_back({0.0, 1.0, 0.0, true, false});
  EXPECT_THROW(emit_outputs(rec, cfg, "/proc/definitely/not/writable"), ConfigError);
}
