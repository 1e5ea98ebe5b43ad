#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "ssat/error.hpp"
#include "ssat/metrics.hpp"
#include "ssat/rng.hpp"
#include "ssat/scenario.hpp"

using namespace ssat;
namespace fs = std::filesystem;

namespace
{

fs::path temp_dir(const std::string & tag)
{
  const auto dir = fs::temp_directory_path() / ("ssat_test_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Straight scene along +x: target history ends at the origin at `speed`, an
// optional front agent sits `gap` ahead in the same lane.
Scene make_follow_scene(std::optional<double> gap, double speed)
{
  Scene scene;
  scene.scene_id = "manual";
  scene.target_id = 0;

  auto make_agent = [&](int id, double x_offset) {
    Agent agent;
    agent.id = id;
    agent.lane_id = 1;
    for (int f = 0; f < kHistoryLen; ++f) {
      const double tau = (f - (kHistoryLen - 1)) * kFrameDt;
      agent.history.points.push_back({speed * tau + x_offset, 0.0});
    }
    for (int f = 0; f < kFutureLen; ++f) {
      const double tau = (f + 1) * kFrameDt;
      agent.future.points.push_back({speed * tau + x_offset, 0.0});
    }
    return agent;
  };
  scene.agents.push_back(make_agent(0, 0.0));
  if (gap) {
    scene.agents.push_back(make_agent(1, *gap));
  }
  LanePolyline lane;
  lane.id = 1;
  for (int i = 0; i <= 30; ++i) {
    lane.points.push_back({-60.0 + 5.0 * i, 0.0});
  }
  scene.map.lanes.push_back(lane);
  return scene;
}

// Straight +x future that stays straight briefly, then shifts laterally to
// `net` (right-positive) and holds there for the rest of the horizon.
Scene with_lateral_future(double net)
{
  Scene scene = make_follow_scene(std::nullopt, 8.0);
  Trajectory & future = scene.target().future;
  for (int f = 0; f < kFutureLen; ++f) {
    const double u = std::clamp((f - 3) / 12.0, 0.0, 1.0);
    future[f].y = -net * 0.5 * (1.0 - std::cos(M_PI * u));  // right is -y here
  }
  return scene;
}

}  // namespace

TEST_CASE("straight-follow template stays laterally tight")
{
  const Scene scene =
    scenario::generate_synthetic_scene(7, scenario::Template::kStraightFollow);
  const Trajectory & future = scene.target().future;
  const auto frame = metrics::direction_frame(future[0], future[1]);
  const double net = dot(future[future.size() - 1] - future[0], frame.u_lat);
  CHECK(std::abs(net) < 0.2);
}

TEST_CASE("generation is deterministic per seed and template")
{
  for (int tpl = 0; tpl < scenario::kTemplateCount; ++tpl) {
    const auto t = static_cast<scenario::Template>(tpl);
    const Scene a = scenario::generate_synthetic_scene(7, t);
    const Scene b = scenario::generate_synthetic_scene(7, t);
    CHECK(a == b);
    const Scene c = scenario::generate_synthetic_scene(8, t);
    CHECK_FALSE(a == c);
  }
}

TEST_CASE("unknown template is rejected by name")
{
  CHECK_THROWS_AS(scenario::generate_synthetic_scene(1, "zigzag"), Error);
}

TEST_CASE("generated scenes validate and label as the template intends")
{
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Scene right = scenario::generate_synthetic_scene(
      seed, scenario::Template::kLaneChangeRight);
    CHECK(scenario::label_lateral_intention(right) == LateralIntent::kRight);

    const Scene straight = scenario::generate_synthetic_scene(
      seed, scenario::Template::kStraightFollow);
    CHECK(scenario::label_lateral_intention(straight) == LateralIntent::kForward);

    const Scene left = scenario::generate_synthetic_scene(
      seed, scenario::Template::kLaneChangeLeft);
    CHECK(scenario::label_lateral_intention(left) == LateralIntent::kLeft);
  }
}

TEST_CASE("straight-follow carries a positive headway label")
{
  int present = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Scene scene = scenario::generate_synthetic_scene(
      seed, scenario::Template::kStraightFollow);
    const auto headway = scenario::compute_time_headway(scene);
    if (headway) {
      ++present;
      CHECK(*headway > 0.0);
    }
    const Scene free = scenario::generate_synthetic_scene(seed, scenario::Template::kFreeFlow);
    const auto free_headway = scenario::compute_time_headway(free);
    CHECK_FALSE(free_headway.has_value());
  }
  CHECK(present > 40);  // nearly all follow scenes keep the front agent in range
}

TEST_CASE("time headway equals gap over speed")
{
  const Scene scene = make_follow_scene(12.0, 8.0);
  const auto headway = scenario::compute_time_headway(scene);
  REQUIRE(headway.has_value());
  CHECK(*headway == doctest::Approx(1.5).epsilon(1e-9));

  const Scene alone = make_follow_scene(std::nullopt, 8.0);
  CHECK_FALSE(scenario::compute_time_headway(alone).has_value());

  const Scene crawling = make_follow_scene(30.0, 0.2);
  CHECK_FALSE(scenario::compute_time_headway(crawling).has_value());

  const Scene far = make_follow_scene(80.0, 8.0);
  CHECK_FALSE(scenario::compute_time_headway(far).has_value());
}

TEST_CASE("lateral intention thresholds")
{
  CHECK(scenario::label_lateral_intention(with_lateral_future(2.5)) == LateralIntent::kRight);
  CHECK(scenario::label_lateral_intention(with_lateral_future(-2.5)) == LateralIntent::kLeft);
  CHECK(scenario::label_lateral_intention(with_lateral_future(0.1)) ==
        LateralIntent::kForward);
  CHECK_FALSE(scenario::label_lateral_intention(with_lateral_future(0.6)).has_value());
}

TEST_CASE("export then ingest reproduces identical scenes")
{
  const auto dir = temp_dir("roundtrip");
  std::vector<Scene> scenes;
  for (int k = 0; k < scenario::kTemplateCount; ++k) {
    scenario::ScenarioConfig cfg;
    cfg.lane_id_base = 1 + k * 8;
    scenes.push_back(scenario::generate_synthetic_scene(
      static_cast<std::uint64_t>(40 + k), static_cast<scenario::Template>(k), cfg));
  }
  const auto path = dir / "scenes.csv";
  scenario::export_scenes(path, scenes);
  const auto back = scenario::ingest_scenes(path);
  REQUIRE(back.size() == scenes.size());
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    CHECK(back[i] == scenes[i]);
  }
}

TEST_CASE("ingest flags bad scenes per scene and keeps good ones")
{
  const auto dir = temp_dir("issues");
  const auto path = dir / "scenes.csv";
  {
    std::vector<Scene> scenes;
    scenario::ScenarioConfig cfg;
    cfg.lane_id_base = 1;
    scenes.push_back(
      scenario::generate_synthetic_scene(1, scenario::Template::kFreeFlow, cfg));
    scenario::export_scenes(path, scenes);
  }
  // Append a scene whose only agent misses frame 19 (19 history points).
  {
    std::ofstream out(path, std::ios::app);
    for (int f = 0; f < kHistoryLen + kFutureLen; ++f) {
      if (f == 19) {
        continue;
      }
      out << "broken,5,1," << f << ',' << f * 0.5 << ",0,\n";
    }
  }
  std::vector<scenario::IngestIssue> issues;
  const auto scenes = scenario::ingest_scenes(path, issues);
  CHECK(scenes.size() == 1);
  REQUIRE(issues.size() == 1);
  CHECK(issues[0].scene_id == "broken");
  CHECK(issues[0].message.find("agent 5") != std::string::npos);
  CHECK(issues[0].line > 0);

  CHECK_THROWS_AS(scenario::ingest_scenes(path), Error);
}

TEST_CASE("ingesting an empty file yields an empty sequence")
{
  const auto dir = temp_dir("empty");
  const auto path = dir / "scenes.csv";
  {
    std::ofstream out(path);
    out << "scene_id,agent_id,is_target,frame,x,y,lane_id\n";
  }
  std::vector<scenario::IngestIssue> issues;
  CHECK(scenario::ingest_scenes(path, issues).empty());
  CHECK(issues.empty());
}

TEST_CASE("turn scenes chain lanes through successors")
{
  const Scene scene = scenario::generate_synthetic_scene(5, scenario::Template::kTurn);
  CHECK(scene.map.lanes.size() == 3);
  CHECK(scene.map.lanes[0].successor_id == scene.map.lanes[1].id);
  CHECK(scene.map.lanes[1].successor_id == scene.map.lanes[2].id);
  const auto intent = scenario::label_lateral_intention(scene);
  REQUIRE(intent.has_value());
  CHECK(intent != LateralIntent::kForward);
}
