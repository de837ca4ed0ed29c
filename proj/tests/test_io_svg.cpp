#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "navskills/io.hpp"
#include "navskills/mapgen.hpp"
#include "navskills/svg.hpp"

namespace ns = navskills;

namespace {

std::filesystem::path temp_dir(const std::string& tag) {
  auto dir = std::filesystem::temp_directory_path() / ("navskills_io_" + tag);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

ns::World sample_world() {
  ns::World w;
  auto g = std::make_shared<ns::Grid>(12, 9, 0.25);
  g->fill_rect_cells(0, 0, 11, 0, 1);
  g->fill_rect_cells(3, 2, 5, 6, 1);
  g->stamp_circle({{1.5, 1.5}, 0.4}, 1);
  g->finalize();
  w.grid = g;
  auto pg = std::make_shared<ns::Grid>(*g);
  pg->inflate(0.35);
  w.plan_grid = pg;
  w.static_circles = {{{0.7, 1.9}, 0.3}, {{2.2, 0.6}, 0.45}};
  ns::DynamicAgent a;
  a.pose = {1.1, 2.3, 0.7};
  a.radius = 0.28;
  a.speed_pref = 0.9;
  a.waypoints = {{0.5, 0.5}, {2.5, 2.0}};
  a.rng.set_state(0x1234abcd5678ef01ull);
  ns::DynamicAgent b;
  b.pose = {2.6, 1.2, -2.1};
  b.speed_pref = 1.2;
  b.rng.set_state(42);
  w.agents.push_back(a);
  w.agents.push_back(b);
  w.robot.pose = {0.6, 0.6, 1.3};
  w.robot.v = 0.35;
  w.robot.w = -0.8;
  w.goal = {2.7, 1.9};
  w.time_step_index = 57;
  return w;
}

int count_substr(const std::string& hay, const std::string& needle) {
  int n = 0;
  for (std::size_t p = hay.find(needle); p != std::string::npos; p = hay.find(needle, p + 1)) ++n;
  return n;
}

}  // namespace

TEST(PoseJson, RoundTripAndShapeErrors) {
  ns::Pose p{1.25, -3.5, 2.0};
  ns::Pose q = ns::pose_from_json(ns::pose_json(p));
  EXPECT_EQ(p.x, q.x);
  EXPECT_EQ(p.y, q.y);
  EXPECT_EQ(p.theta, q.theta);
  EXPECT_THROW(ns::pose_from_json(nlohmann::json{1.0, 2.0}), ns::IoError);
  EXPECT_THROW(ns::vec2_from_json(nlohmann::json{{"x", 1.0}}), ns::IoError);
}

TEST(GridJson, RleRoundTripIsCellExact) {
  ns::World w = sample_world();
  ns::Grid back = ns::grid_from_json(ns::grid_json(*w.grid));
  ASSERT_EQ(back.width(), w.grid->width());
  ASSERT_EQ(back.height(), w.grid->height());
  EXPECT_EQ(back.cell_size(), w.grid->cell_size());
  for (int y = 0; y < back.height(); ++y)
    for (int x = 0; x < back.width(); ++x)
      EXPECT_EQ(back.occupied(x, y), w.grid->occupied(x, y)) << x << "," << y;
  EXPECT_TRUE(back.finalized());
  EXPECT_THROW(ns::grid_from_json(nlohmann::json{{"width", 3}}), ns::IoError);
}

TEST(WorldJson, RoundTripPreservesEveryField) {
  ns::World w = sample_world();
  ns::World r = ns::world_from_json(ns::world_json(w));

  ASSERT_TRUE(r.grid && r.plan_grid);
  EXPECT_EQ(r.grid->rle_encode(), w.grid->rle_encode());
  EXPECT_EQ(r.plan_grid->rle_encode(), w.plan_grid->rle_encode());

  ASSERT_EQ(r.static_circles.size(), 2u);
  EXPECT_EQ(r.static_circles[1].center.x, 2.2);
  EXPECT_EQ(r.static_circles[1].radius, 0.45);

  ASSERT_EQ(r.agents.size(), 2u);
  EXPECT_EQ(r.agents[0].pose.theta, 0.7);
  EXPECT_EQ(r.agents[0].radius, 0.28);
  EXPECT_EQ(r.agents[0].speed_pref, 0.9);
  ASSERT_EQ(r.agents[0].waypoints.size(), 2u);
  EXPECT_EQ(r.agents[0].waypoints[1].y, 2.0);
  EXPECT_EQ(r.agents[0].rng.state(), 0x1234abcd5678ef01ull);
  EXPECT_EQ(r.agents[1].rng.state(), 42u);
  EXPECT_TRUE(r.agents[1].waypoints.empty());

  EXPECT_EQ(r.robot.pose.x, 0.6);
  EXPECT_EQ(r.robot.v, 0.35);
  EXPECT_EQ(r.robot.w, -0.8);
  EXPECT_EQ(r.goal.x, 2.7);
  EXPECT_EQ(r.goal.y, 1.9);
  EXPECT_EQ(r.time_step_index, 57);

  // Round trip again: canonical dumps must already agree.
  EXPECT_EQ(ns::world_json(r).dump(), ns::world_json(w).dump());
}

TEST(WorldJson, RejectsOtherVersionsAndMissingFields) {
  nlohmann::json j = ns::world_json(sample_world());
  nlohmann::json wrong = j;
  wrong["version"] = ns::kWorldFormatVersion + 1;
  EXPECT_THROW(ns::world_from_json(wrong), ns::IoError);
  nlohmann::json missing = j;
  missing.erase("goal");
  EXPECT_THROW(ns::world_from_json(missing), ns::IoError);
}

TEST(ScenarioIo, SaveLoadRoundTripKeepsFingerprint) {
  auto dir = temp_dir("scenario");
  ns::MapSpec spec;
  spec.kind = ns::MapSpec::Kind::indoor;
  spec.width = 10.0;
  spec.height = 8.0;
  spec.n_static = 2;
  spec.n_dynamic = 2;
  spec.seed = 91;
  ns::Scenario sc = ns::build_scenario(spec, {}, 1234);
  std::uint64_t fp = ns::scenario_fingerprint(sc);

  auto path = (dir / "scene.json").string();
  ns::save_scenario(path, sc);
  ns::Scenario back = ns::load_scenario(path);
  EXPECT_EQ(ns::scenario_fingerprint(back), fp);
  EXPECT_EQ(back.start.x, sc.start.x);
  EXPECT_EQ(back.goal.y, sc.goal.y);
  EXPECT_EQ(back.min_start_goal_sep, sc.min_start_goal_sep);
  ASSERT_EQ(back.world.agents.size(), sc.world.agents.size());
  for (std::size_t i = 0; i < sc.world.agents.size(); ++i)
    EXPECT_EQ(back.world.agents[i].rng.state(), sc.world.agents[i].rng.state());
}

TEST(ScenarioIo, SameSeedSameHashDifferentSeedDifferentHash) {
  ns::Scenario a = ns::build_named_scenario("corridor", 7);
  ns::Scenario b = ns::build_named_scenario("corridor", 7);
  ns::Scenario c = ns::build_named_scenario("corridor", 8);
  EXPECT_EQ(ns::scenario_fingerprint(a), ns::scenario_fingerprint(b));
  EXPECT_NE(ns::scenario_fingerprint(a), ns::scenario_fingerprint(c));
}

TEST(ScenarioIo, CorruptOrMissingFileRaises) {
  auto dir = temp_dir("corrupt");
  auto path = (dir / "bad.json").string();
  std::ofstream(path) << "{ not json";
  EXPECT_THROW(ns::load_scenario(path), ns::IoError);
  EXPECT_THROW(ns::load_scenario((dir / "absent.json").string()), ns::IoError);
  std::ofstream(path, std::ios::trunc) << "{\"world\": {}}";
  EXPECT_THROW(ns::load_scenario(path), ns::IoError);
}

TEST(Svg, MapRenderIsByteDeterministic) {
  ns::World w = sample_world();
  std::string s1 = ns::svg::map_svg(w);
  std::string s2 = ns::svg::map_svg(w);
  EXPECT_EQ(s1, s2);
  EXPECT_EQ(s1.rfind("<svg", 0), 0u);
  EXPECT_NE(s1.find("</svg>"), std::string::npos);
  EXPECT_GT(count_substr(s1, "<rect"), 1);       // background + wall runs
  EXPECT_EQ(count_substr(s1, "<circle"), 2 + 2 + 2);  // statics + agents + robot/goal
  EXPECT_EQ(s1.find("nan"), std::string::npos);
}

TEST(Svg, TrajectoryStripHasOneColumnPerStep) {
  ns::World w = sample_world();
  std::vector<ns::Pose> traj;
  std::vector<std::array<double, 5>> skills;
  for (int t = 0; t < 7; ++t) {
    traj.push_back({0.5 + 0.2 * t, 0.6, 0.0});
    skills.push_back({0.0, 0.2, 0.1, 0.0, 0.05});
  }
  std::string s = ns::svg::trajectory_svg(w, traj, &skills, 0.2);
  EXPECT_EQ(count_substr(s, "class=\"sk\""), 5 * 7);
  EXPECT_NE(s.find("<polyline"), std::string::npos);
  for (const char* label : ns::svg::kSkillLabels) EXPECT_NE(s.find(label), std::string::npos);

  std::string bare = ns::svg::trajectory_svg(w, traj);
  EXPECT_EQ(count_substr(bare, "class=\"sk\""), 0);
  EXPECT_LT(bare.size(), s.size());
  EXPECT_EQ(ns::svg::trajectory_svg(w, traj, &skills, 0.2), s);
}

TEST(Svg, CurvesHandleDataAndConstantSeries) {
  std::vector<ns::svg::Series> series(2);
  series[0].label = "success";
  series[1].label = "collision";
  for (int i = 0; i <= 10; ++i) {
    series[0].points.push_back({i * 100.0, i / 10.0});
    series[1].points.push_back({i * 100.0, 0.5});
  }
  std::string s = ns::svg::curves_svg(series, "eval", "env steps", "rate");
  EXPECT_EQ(s, ns::svg::curves_svg(series, "eval", "env steps", "rate"));
  EXPECT_NE(s.find(">success<"), std::string::npos);
  EXPECT_NE(s.find(">collision<"), std::string::npos);
  EXPECT_NE(s.find(">eval<"), std::string::npos);
  EXPECT_NE(s.find("env steps"), std::string::npos);
  EXPECT_EQ(count_substr(s, "<polyline"), 2);
  EXPECT_EQ(s.find("nan"), std::string::npos);

  // A single constant series must not divide by a zero range.
  std::vector<ns::svg::Series> flat(1);
  flat[0].label = "alpha";
  flat[0].points = {{0.0, 0.2}, {1.0, 0.2}, {2.0, 0.2}};
  std::string f = ns::svg::curves_svg(flat, "t", "x", "y");
  EXPECT_EQ(f.find("nan"), std::string::npos);
  EXPECT_EQ(count_substr(f, "<polyline"), 1);
}

TEST(Svg, SkillBarsDrawFiveBarsWithWhiskers) {
  std::array<double, 5> mean{0.01, 0.15, 0.08, 0.02, 0.05};
  std::array<double, 5> sd{0.005, 0.02, 0.01, 0.0, 0.03};
  std::string s = ns::svg::skill_bars_svg(mean, sd);
  EXPECT_EQ(count_substr(s, "<rect"), 1 + 5);  // background + one bar per component
  EXPECT_EQ(count_substr(s, "<line"), 1 + 5);  // axis + one whisker per component
  for (const char* label : ns::svg::kSkillLabels) EXPECT_NE(s.find(label), std::string::npos);
  EXPECT_EQ(s, ns::svg::skill_bars_svg(mean, sd));
}
