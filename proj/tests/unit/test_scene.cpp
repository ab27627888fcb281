#include <cmath>
#include <filesystem>
#include <set>

#include "doctest.h"
#include "scenecast/scene/generator.hpp"
#include "scenecast/scene/scene_io.hpp"

using namespace scenecast;
using namespace scenecast::scene;

namespace {

AgentTrack agent_at(int id, Vec2d pos, double yaw = 0.0, double speed = 5.0) {
  AgentTrack a;
  a.id = id;
  for (int f = 0; f < kHistoryFrames; ++f) {
    const double back = (kHistoryFrames - 1 - f) * kFrameDt * speed;
    a.history[static_cast<std::size_t>(f)] = Frame{pos - back * Vec2d(std::cos(yaw), std::sin(yaw)), yaw, speed, true};
  }
  return a;
}

double distance_to_polyline(const Vec2d& p, const std::vector<Vec2d>& pts) {
  double best = 1e300;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const Vec2d d = pts[i + 1] - pts[i];
    const double t = std::clamp((p - pts[i]).dot(d) / std::max(d.squaredNorm(), 1e-12), 0.0, 1.0);
    best = std::min(best, (pts[i] + t * d - p).norm());
  }
  return best;
}

int nearest_lane(const Scene& s, const Vec2d& p) {
  int best = -1;
  double best_d = 1e300;
  for (const auto& l : s.lanes) {
    const double d = distance_to_polyline(p, l.points);
    if (d < best_d) {
      best_d = d;
      best = l.id;
    }
  }
  return best;
}

GeneratorConfig crossroad_only() {
  GeneratorConfig cfg;
  cfg.templates = {MapTemplate::Crossroad};
  cfg.min_agents = 2;
  cfg.max_agents = 6;
  cfg.exit_spawn_fraction = 0.0;
  return cfg;
}

}  // namespace

TEST_CASE("same seed gives identical scenes") {
  GeneratorConfig cfg;
  for (std::uint64_t seed : {1u, 2u, 99u}) {
    const Scene a = generate_scene(seed, cfg);
    const Scene b = generate_scene(seed, cfg);
    CHECK(a == b);
    CHECK(scene_to_json_line(a) == scene_to_json_line(b));
  }
  CHECK_FALSE(generate_scene(1, cfg) == generate_scene(2, cfg));
}

TEST_CASE("agent count range [1, 1] yields exactly one agent") {
  GeneratorConfig cfg;
  cfg.min_agents = cfg.max_agents = 1;
  for (std::uint64_t seed = 0; seed < 20; ++seed) CHECK(generate_scene(seed, cfg).agents.size() == 1);
}

TEST_CASE("invalid generator configs are rejected") {
  GeneratorConfig cfg;
  cfg.min_agents = 3;
  cfg.max_agents = 2;
  CHECK_THROWS_AS(generate_scene(0, cfg), std::invalid_argument);
  cfg = {};
  cfg.templates.clear();
  CHECK_THROWS_AS(generate_scene(0, cfg), std::invalid_argument);
  cfg = {};
  cfg.missing_history_prob = 1.5;
  CHECK_THROWS_AS(generate_scene(0, cfg), std::invalid_argument);
  cfg = {};
  cfg.max_speed = -1;
  CHECK_THROWS_AS(generate_scene(0, cfg), std::invalid_argument);
}

TEST_CASE("crossroad agents approaching the junction end on a connected exit lanelet") {
  const auto cfg = crossroad_only();
  int checked = 0;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const Scene s = generate_scene(seed, cfg);
    for (const auto& a : s.agents) {
      const int start = nearest_lane(s, a.current().position);
      // Lanelets reachable along successors from where the agent is now.
      std::set<int> reach{start};
      std::vector<int> frontier{start};
      while (!frontier.empty()) {
        const int id = frontier.back();
        frontier.pop_back();
        for (int nxt : s.find_lane(id)->successors)
          if (reach.insert(nxt).second) frontier.push_back(nxt);
      }
      double best = 1e300;
      for (int id : reach) best = std::min(best, distance_to_polyline(a.future->back(), s.find_lane(id)->points));
      CHECK(best < 2.0);
      ++checked;
    }
  }
  CHECK(checked > 40);
}

TEST_CASE("lane graph relations are consistent") {
  GeneratorConfig cfg;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const Scene s = generate_scene(seed, cfg);
    for (const auto& l : s.lanes) {
      CHECK(l.points.size() <= static_cast<std::size_t>(kMaxLanePoints));
      for (int succ : l.successors) {
        const Lane* n = s.find_lane(succ);
        REQUIRE(n != nullptr);
        CHECK(std::count(n->predecessors.begin(), n->predecessors.end(), l.id) == 1);
        CHECK((n->points.front() - l.points.back()).norm() < 1e-9);
      }
      for (int pred : l.predecessors) {
        const Lane* n = s.find_lane(pred);
        REQUIRE(n != nullptr);
        CHECK(std::count(n->successors.begin(), n->successors.end(), l.id) == 1);
      }
      for (int left : l.left) CHECK(s.find_lane(left) != nullptr);
      for (int right : l.right) CHECK(s.find_lane(right) != nullptr);
    }
  }
}

TEST_CASE("generated tracks have full-length histories and futures within the decoder range") {
  GeneratorConfig cfg;
  const auto scenes = generate_dataset(5, 200, cfg);
  for (const auto& s : scenes) {
    REQUIRE(!s.agents.empty());
    const Scene n = normalize_scene(s, select_reference(s));
    for (const auto& a : n.agents) {
      CHECK(a.history.size() == static_cast<std::size_t>(kHistoryFrames));
      REQUIRE(a.future.has_value());
      CHECK(a.future->size() == static_cast<std::size_t>(kFutureFrames));
      CHECK(a.future->back().norm() <= cfg.max_endpoint_range);
      CHECK(std::abs(a.future->back().x()) < 96.0);
      CHECK(std::abs(a.future->back().y()) < 96.0);
      CHECK(a.current().present);
      for (const auto& f : a.history) {
        CHECK(f.speed >= 0.0);
        if (!f.present) CHECK(f == Frame::absent());
      }
    }
  }
}

TEST_CASE("reference selection") {
  Scene s;
  s.id = "ref";
  s.agents = {agent_at(3, {7, 7})};
  CHECK(select_reference(s) == 3);

  s.agents = {agent_at(0, {0, 0}), agent_at(1, {1, 0}), agent_at(2, {5, 0})};
  CHECK(select_reference(s) == 1);

  s.agents = {agent_at(9, {-4, 1}), agent_at(4, {4, -1})};
  CHECK(select_reference(s) == 4);

  // Training mode is a seeded uniform draw.
  s.agents = {agent_at(0, {0, 0}), agent_at(1, {1, 0}), agent_at(2, {5, 0})};
  std::set<int> seen;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const int r = select_reference(s, ReferenceMode::Training, seed);
    CHECK(r == select_reference(s, ReferenceMode::Training, seed));
    seen.insert(r);
  }
  CHECK(seen.size() == 3);

  s.agents.clear();
  CHECK_THROWS_AS(select_reference(s), std::invalid_argument);
}

TEST_CASE("normalization round trip and heading convention") {
  Scene s;
  s.id = "norm";
  s.agents = {agent_at(0, {12.5, -3.0}, M_PI / 2), agent_at(1, {20, 4}, 0.3)};
  Lane lane;
  lane.id = 0;
  lane.points = {Vec2d(12.5, 7.0), Vec2d(12.5, 17.0)};  // 10 m due north of agent 0
  s.lanes = {lane};

  const Scene n = normalize_scene(s, 0);
  CHECK(n.reference_id == 0);
  CHECK(n.agent(0).current().position == Vec2d::Zero());
  CHECK(n.agent(0).current().yaw == 0.0);
  CHECK(n.lanes[0].points[0].x() == doctest::Approx(10.0).epsilon(1e-12));
  CHECK(std::abs(n.lanes[0].points[0].y()) < 1e-12);

  const Scene back = denormalize_scene(n);
  for (std::size_t i = 0; i < s.agents.size(); ++i)
    for (std::size_t f = 0; f < s.agents[i].history.size(); ++f)
      CHECK((back.agents[i].history[f].position - s.agents[i].history[f].position).norm() < 1e-9);
  CHECK((back.lanes[0].points[1] - s.lanes[0].points[1]).norm() < 1e-9);

  // Generated scenes in arbitrary world poses also round-trip.
  const Scene g = generate_scene(17, GeneratorConfig{});
  const Scene gb = denormalize_scene(normalize_scene(g, select_reference(g)));
  for (std::size_t i = 0; i < g.agents.size(); ++i)
    CHECK((gb.agents[i].future->back() - g.agents[i].future->back()).norm() < 1e-9);

  Scene absent = s;
  absent.agents[1].history.back() = Frame::absent();
  CHECK_THROWS_AS(normalize_scene(absent, 1), std::invalid_argument);
  CHECK_THROWS_AS(normalize_scene(s, 42), std::invalid_argument);
}

TEST_CASE("training-agent subsampling") {
  Scene s;
  s.id = "sub";
  for (int i = 0; i < 5; ++i) {
    s.agents.push_back(agent_at(i, {i * 10.0, 0}));
    s.agents.back().future = Future{};
  }
  CHECK(subsample_training_agents(s, 8, 1) == std::vector<int>{0, 1, 2, 3, 4});

  s.agents.clear();
  for (int i = 0; i < 40; ++i) {
    s.agents.push_back(agent_at(i, {i * 10.0, 0}));
    if (i != 7) s.agents.back().future = Future{};
  }
  const auto ids = subsample_training_agents(s, 8, 3);
  CHECK(ids.size() == 8);
  CHECK(std::set<int>(ids.begin(), ids.end()).size() == 8);
  for (int id : ids) CHECK(s.agent(id).has_future());
  CHECK(ids == subsample_training_agents(s, 8, 3));
}

TEST_CASE("scene files round-trip exactly") {
  const auto scenes = generate_dataset(11, 25, GeneratorConfig{});
  std::vector<Scene> mixed = scenes;
  mixed[0] = normalize_scene(mixed[0], select_reference(mixed[0]));
  mixed[1].agents[0].future.reset();
  const auto path = std::filesystem::temp_directory_path() / "scenecast_test_scenes.jsonl";
  write_scenes(path, mixed, R"({"seed":11})");
  const auto read = read_scenes(path);
  REQUIRE(read.size() == mixed.size());
  for (std::size_t i = 0; i < read.size(); ++i) CHECK(read[i] == mixed[i]);
  CHECK(read_scene_header(path).find("\"seed\":11") != std::string::npos);

  write_scenes(path, {});
  CHECK(read_scenes(path).empty());
  std::filesystem::remove(path);
}
