#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "fixtures.hpp"

using namespace ddc;
using namespace ddc::testing;
using ddc::pipeline::PipelineConfig;
namespace fs = std::filesystem;

namespace {

class PipelineTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("ddc_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    plant_ = (dir_ / "plant.json").string();
    std::ofstream(plant_) << io::plant_to_json(unstable_mimo_example()).dump();
  }
  void TearDown() override { fs::remove_all(dir_); }

  PipelineConfig config(const std::string& sub) const {
    PipelineConfig c;
    c.plant_file = plant_;
    c.output_dir = (dir_ / sub).string();
    return c;
  }

  static std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  }

  static std::size_t line_count(const fs::path& p) {
    std::ifstream in(p);
    std::size_t n = 0;
    for (std::string line; std::getline(in, line);) ++n;
    return n;
  }

  std::string write_csv(const std::string& name, const Trajectory& t) const {
    const fs::path p = dir_ / name;
    std::ofstream out(p);
    io::write_trajectory_csv(out, t);
    return p.string();
  }

  fs::path dir_;
  std::string plant_;
  std::ostringstream log_;
};

}  // namespace

TEST_F(PipelineTest, CollectWritesDataAndReportsRank) {
  const auto res = pipeline::cmd_collect(config("a"), log_);
  EXPECT_EQ(line_count(res.csv_path), static_cast<std::size_t>(kMimoT + 2));  // header + T+1
  EXPECT_EQ(res.excitation.rank, 24);
  EXPECT_NE(log_.str().find("Hankel rank 24"), std::string::npos);
  const auto meta = nlohmann::json::parse(slurp(res.meta_path));
  EXPECT_EQ(meta["seed"], 42);
  EXPECT_EQ(meta["mode"], "open");
  EXPECT_EQ(meta["excitation_satisfied"], true);
}

TEST_F(PipelineTest, CollectRejectsShortDataBeforeWriting) {
  PipelineConfig c = config("short");
  c.T = c.L;
  EXPECT_THROW(pipeline::cmd_collect(c, log_), InvalidInput);
  EXPECT_FALSE(fs::exists(c.output_dir));
}

TEST_F(PipelineTest, CollectWarnsOnZeroAmplitude) {
  PipelineConfig c = config("zero");
  c.amplitude = 0.0;
  const auto res = pipeline::cmd_collect(c, log_);
  EXPECT_EQ(res.excitation.rank, 0);
  EXPECT_NE(log_.str().find("rank condition cannot hold"), std::string::npos);
}

TEST_F(PipelineTest, AnalyzeMimoDataIsStabilizable) {
  PipelineConfig c = config("an");
  c.data_file = pipeline::cmd_collect(c, log_).csv_path.string();
  const auto res = pipeline::cmd_analyze(c, log_);
  const auto j = nlohmann::json::parse(slurp(res.json_path));
  EXPECT_EQ(j["stabilizable"], true);
  EXPECT_EQ(j["rank"], 24);
  EXPECT_EQ(j["inferred_n"], 6);
  EXPECT_EQ(j["autonomous"], false);
  EXPECT_TRUE(j["uncontrollable_eigenvalues"].empty());
}

TEST_F(PipelineTest, AnalyzeAutonomousScalarData) {
  PipelineConfig c = config("auto");
  c.plant_file.clear();
  c.L = 1;
  c.data_file = write_csv("stable.csv", autonomous_data(Matrix::Constant(1, 1, 0.5), Matrix::Ones(1, 1), Vector::Ones(1), 8));
  auto j = nlohmann::json::parse(slurp(pipeline::cmd_analyze(c, log_).json_path));
  EXPECT_EQ(j["autonomous"], true);
  EXPECT_EQ(j["stable"], true);
  EXPECT_NEAR(j["M"][0][0].get<double>(), 4.0 / 3.0, 1e-10);

  c.data_file = write_csv("unstable.csv", autonomous_data(Matrix::Constant(1, 1, 1.1), Matrix::Ones(1, 1), Vector::Ones(1), 8));
  j = nlohmann::json::parse(slurp(pipeline::cmd_analyze(c, log_).json_path));
  EXPECT_EQ(j["stable"], false);
  EXPECT_TRUE(j["M"].is_null());
}

TEST_F(PipelineTest, AnalyzeRejectsPartitionMismatch) {
  PipelineConfig c = config("mm");
  c.data_file = write_csv("siso.csv", scalar_controlled_data(0.5, 30, 1));
  EXPECT_THROW(pipeline::cmd_analyze(c, log_), InvalidInput);
  EXPECT_FALSE(fs::exists(c.output_dir));
}

TEST_F(PipelineTest, SynthesizeIsDeterministic) {
  PipelineConfig c = config("s1");
  c.data_file = pipeline::cmd_collect(c, log_).csv_path.string();
  const auto first = pipeline::cmd_synthesize(c, log_);
  EXPECT_LT(first.closed_loop_radius, 1.0);
  EXPECT_GT(first.lmi_min_eigenvalue, 0.0);
  EXPECT_NE(log_.str().find("LMI min eigenvalue"), std::string::npos);

  PipelineConfig again = config("s2");
  again.data_file = pipeline::cmd_collect(again, log_).csv_path.string();
  const auto second = pipeline::cmd_synthesize(again, log_);
  EXPECT_EQ(slurp(first.json_path), slurp(second.json_path));
  EXPECT_EQ(slurp(fs::path(c.output_dir) / "data.csv"), slurp(fs::path(again.output_dir) / "data.csv"));
}

TEST_F(PipelineTest, SynthesizeRefusesUncontrollableUnstableData) {
  // x⁺ = diag(0.5, 2)x + (1, 0)ᵀu, y = x: the mode at 2 ignores the input.
  const Matrix a = (Matrix(2, 2) << 0.5, 0, 0, 2).finished();
  const Matrix u = generate_excitation(1, 24, 3, 1.0);
  Matrix y(24, 2);
  Vector x(2);
  x << 0.3, 1.0;
  for (Eigen::Index k = 0; k < 24; ++k) {
    y.row(k) = x.transpose();
    x = a * x + Vector::Unit(2, 0) * u(k, 0);
  }
  PipelineConfig c = config("unc");
  c.plant_file.clear();
  c.L = 2;
  c.data_file = write_csv("unc.csv", Trajectory::from_io(u, y));
  try {
    (void)pipeline::cmd_synthesize(c, log_);
    FAIL() << "expected NoSolution";
  } catch (const NoSolution& e) {
    EXPECT_NE(std::string(e.what()).find("uncontrollable eigenvalues"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("2"), std::string::npos);
    EXPECT_EQ(e.exit_code(), 3);
  }
  EXPECT_FALSE(fs::exists(fs::path(c.output_dir) / "controller.json"));
}

TEST_F(PipelineTest, SimulateEndToEnd) {
  PipelineConfig c = config("sim");
  c.data_file = pipeline::cmd_collect(c, log_).csv_path.string();
  c.controller_file = pipeline::cmd_synthesize(c, log_).json_path.string();
  const auto res = pipeline::cmd_simulate(c, log_);
  EXPECT_LE(res.tail_max, 1e-6 * res.initial_max);
  EXPECT_EQ(line_count(res.csv_path), static_cast<std::size_t>(kMimoL + 1 + c.horizon + 1));
  EXPECT_TRUE(fs::exists(res.svg_path));
  EXPECT_NE(log_.str().find("last 10 steps"), std::string::npos);
}

TEST_F(PipelineTest, SimulateZeroInitAndHorizonOne) {
  PipelineConfig c = config("zi");
  c.data_file = pipeline::cmd_collect(c, log_).csv_path.string();
  c.controller_file = pipeline::cmd_synthesize(c, log_).json_path.string();
  c.zero_init = true;
  auto res = pipeline::cmd_simulate(c, log_);
  EXPECT_EQ(res.run.trajectory.samples().norm(), 0.0);
  c.zero_init = false;
  c.horizon = 1;
  res = pipeline::cmd_simulate(c, log_);
  EXPECT_EQ(line_count(res.csv_path), static_cast<std::size_t>(kMimoL + 2 + 1));
}

TEST_F(PipelineTest, SimulateNamesBothShapesOnMismatch) {
  PipelineConfig c = config("dm");
  c.data_file = pipeline::cmd_collect(c, log_).csv_path.string();
  c.controller_file = pipeline::cmd_synthesize(c, log_).json_path.string();
  c.plant_file = (dir_ / "siso.json").string();
  std::ofstream(c.plant_file) << io::plant_to_json(scalar_plant(0.5)).dump();
  c.output_dir = (dir_ / "dm_out").string();
  try {
    (void)pipeline::cmd_simulate(c, log_);
    FAIL() << "expected InvalidInput";
  } catch (const InvalidInput& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("(m=2, p=2)"), std::string::npos) << msg;
    EXPECT_NE(msg.find("(m=1, p=1)"), std::string::npos) << msg;
  }
  EXPECT_FALSE(fs::exists(c.output_dir));
}

TEST_F(PipelineTest, ConfigValidation) {
  PipelineConfig c = config("v");
  c.tol_rel = 0.0;
  EXPECT_THROW(c.validate(), InvalidInput);
  c = config("v");
  c.eps = 1.0;
  EXPECT_THROW(c.validate(), InvalidInput);
  c = config("v");
  c.horizon = 0;
  EXPECT_THROW(c.validate(), InvalidInput);
  c = config("v");
  pipeline::apply_config_json(c, nlohmann::json::parse(R"({"L": 4, "T": 30, "seed": 9, "decay": 0.9})"));
  EXPECT_EQ(c.L, 4);
  EXPECT_EQ(c.T, 30);
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.decay, 0.9);
  EXPECT_THROW(pipeline::apply_config_json(c, nlohmann::json::parse(R"({"L": "x"})")), InvalidInput);
}

TEST_F(PipelineTest, MissingFilesAreInvalidInput) {
  PipelineConfig c = config("mf");
  c.data_file = (dir_ / "nope.csv").string();
  EXPECT_THROW(pipeline::cmd_analyze(c, log_), InvalidInput);
  c.plant_file = (dir_ / "nope.json").string();
  EXPECT_THROW(pipeline::cmd_collect(c, log_), InvalidInput);
}
