#include <gtest/gtest.h>

#include <sstream>

#include "fixtures.hpp"

using namespace ddc;
using namespace ddc::testing;

namespace {

Trajectory read_csv(const std::string& text) {
  std::istringstream is(text);
  return io::read_trajectory_csv(is);
}

std::string error_of(const std::string& text) {
  try {
    (void)read_csv(text);
  } catch (const InvalidInput& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(TrajectoryCsv, RoundTripIsExact) {
  const Trajectory t = mimo_data(42);
  std::ostringstream os;
  io::write_trajectory_csv(os, t);
  EXPECT_EQ(os.str().substr(0, 12), "t,u1,u2,y1,y");
  const Trajectory back = read_csv(os.str());
  EXPECT_EQ(back.partition(), t.partition());
  EXPECT_EQ(back.samples(), t.samples());
}

TEST(TrajectoryCsv, PartitionFromHeader) {
  const Trajectory t = read_csv("t,y1\n0,1\n1,0.5\n");
  EXPECT_EQ(t.partition(), (Partition{0, 1}));
  EXPECT_EQ(t.size(), 2);
  const Trajectory s = read_csv("t,u1,y1,y2\r\n3,1,2,3\r\n");
  EXPECT_EQ(s.partition(), (Partition{1, 2}));
  EXPECT_EQ(s.start_time(), 3);
}

TEST(TrajectoryCsv, ErrorsCarryPosition) {
  EXPECT_NE(error_of("").find("empty"), std::string::npos);
  EXPECT_NE(error_of("k,u1\n").find("'t'"), std::string::npos);
  EXPECT_NE(error_of("t,u2,y1\n").find("column 2"), std::string::npos);
  EXPECT_NE(error_of("t\n").find("no u or y"), std::string::npos);
  EXPECT_NE(error_of("t,u1,y1\n0,1,2\n1,2\n").find("row 3"), std::string::npos);
  const std::string bad = error_of("t,u1,y1\n0,1,2\n1,x,2\n");
  EXPECT_NE(bad.find("row 3, column 2"), std::string::npos) << bad;
  EXPECT_NE(error_of("t,u1,y1\n0,1,nan\n").find("column 3"), std::string::npos);
}

TEST(PlantJson, RoundTrip) {
  const TransferMatrix g = unstable_mimo_example();
  const TransferMatrix back = io::plant_from_json(io::plant_to_json(g));
  ASSERT_EQ(back.outputs(), 2);
  ASSERT_EQ(back.inputs(), 2);
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < 2; ++j) {
      EXPECT_EQ(back.entries[i][j].num, g.entries[i][j].num);
      EXPECT_EQ(back.entries[i][j].den, g.entries[i][j].den);
    }
  }
}

TEST(PlantJson, ShippedFileMatchesBuiltIn) {
  std::ifstream in("data/unstable_mimo.json");
  ASSERT_TRUE(in) << "run from the source directory";
  const TransferMatrix g = io::plant_from_json(io::parse_json(in, "plant"));
  const TransferMatrix ref = unstable_mimo_example();
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < 2; ++j) {
      EXPECT_EQ(g.entries[i][j].num, ref.entries[i][j].num);
      EXPECT_EQ(g.entries[i][j].den, ref.entries[i][j].den);
    }
  }
}

TEST(PlantJson, Malformed) {
  EXPECT_THROW((void)io::plant_from_json(nlohmann::json::parse(R"({"rows": []})")), InvalidInput);
  EXPECT_THROW((void)io::plant_from_json(nlohmann::json::parse(R"({"entries": [[{"num": [1]}]]})")),
               InvalidInput);
  EXPECT_THROW((void)io::plant_from_json(nlohmann::json::parse(R"({"entries": [[{"num": [1], "den": [1, 0.5]}], []]})")),
               InvalidInput);
  std::istringstream broken("{\"entries\": ");
  EXPECT_THROW((void)io::parse_json(broken, "plant"), InvalidInput);
}

TEST(ControllerJson, RoundTripPreservesLaws) {
  const Controller c = mimo_controller();
  const nlohmann::json j = io::controller_to_json(c);
  EXPECT_EQ(j["r"], 24);
  EXPECT_EQ(j["L"], kMimoL);
  EXPECT_EQ(j["trajectory_gain"]["cols"], (kMimoL + 1) * 4);
  const Controller back = io::controller_from_json(nlohmann::json::parse(j.dump()));
  EXPECT_LE((back.trajectory_gain - c.trajectory_gain).norm(), 1e-15 * c.trajectory_gain.norm());
  EXPECT_LE((back.A_cl - c.A_cl).norm(), 1e-15 * c.A_cl.norm());
  std::mt19937_64 gen(71);
  for (int i = 0; i < 20; ++i) {
    const Vector g = gaussian(gen, 24, 1);
    const Vector a = control_from_parameterizer(back, {g, 0});
    const Vector b = control_from_trajectory(back, reconstruct(back.tm.basis, {g, 0}));
    EXPECT_LE((a - b).norm(), 1e-8 * std::max(1.0, a.norm()));
  }
}

TEST(ControllerJson, ShapeErrors) {
  nlohmann::json j = io::controller_to_json(mimo_controller());
  j["r"] = 23;
  EXPECT_THROW((void)io::controller_from_json(j), InvalidInput);
  j = io::controller_to_json(mimo_controller());
  j["trajectory_gain"]["cols"] = 5;
  EXPECT_THROW((void)io::controller_from_json(j), InvalidInput);
  j.erase("W");
  EXPECT_THROW((void)io::controller_from_json(j), InvalidInput);
}

TEST(Svg, OnePanelPerComponentWithStepAxis) {
  const Trajectory t = mimo_data(1, 20);
  std::ostringstream os;
  io::write_svg_plot(os, t, "run");
  const std::string svg = os.str();
  EXPECT_NE(svg.find("height=\"800\""), std::string::npos);
  std::size_t panels = 0, labels = 0;
  for (std::size_t pos = 0; (pos = svg.find("<polyline", pos)) != std::string::npos; ++pos) ++panels;
  for (std::size_t pos = 0; (pos = svg.find("step index k", pos)) != std::string::npos; ++pos) ++labels;
  EXPECT_EQ(panels, 4u);
  EXPECT_EQ(labels, 4u);
  for (const char* name : {"run - u1", "run - u2", "run - y1", "run - y2"}) {
    EXPECT_NE(svg.find(name), std::string::npos) << name;
  }
}

TEST(Svg, FlatTraceIsDrawn) {
  const Trajectory t({1, 1}, Matrix::Zero(5, 2));
  std::ostringstream os;
  io::write_svg_plot(os, t, "zero");
  EXPECT_EQ(os.str().find("nan"), std::string::npos);
}
