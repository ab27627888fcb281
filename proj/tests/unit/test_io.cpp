#include <filesystem>

#include "../support/metric_fixtures.hpp"
#include "doctest.h"
#include "scenecast/io.hpp"
#include "scenecast/model/heatmap_io.hpp"
#include "scenecast/sampler/prediction_io.hpp"

using namespace scenecast;

namespace {

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("scenecast_test_io_" + name);
}

}  // namespace

TEST_CASE("prediction files round-trip exactly") {
  Rng rng(3);
  sampler::PredictionFile f;
  f.mode = "joint-algo";
  f.config_json = R"({"K":6})";
  for (int i = 0; i < 6; ++i) {
    auto c = testing::random_prediction_case(rng, 4.0, i % 2 == 0);
    c.prediction.orientation = sampler::Orientation::Joint;
    if (i % 3 == 0) {
      c.prediction.confidence.assign(c.prediction.endpoints.size(),
                                     std::vector<double>(c.prediction.endpoints[0].size(), 0.1 + i));
      c.prediction.flagged.assign(c.prediction.endpoints.size(),
                                  std::vector<bool>(c.prediction.endpoints[0].size(), i == 3));
    }
    f.scenes.push_back({"s" + std::to_string(i), c.prediction});
  }
  const auto path = temp_path("pred.jsonl");
  sampler::write_predictions(path, f);
  const auto back = sampler::read_predictions(path);
  CHECK(back.mode == "joint-algo");
  REQUIRE(back.scenes.size() == f.scenes.size());
  for (std::size_t i = 0; i < f.scenes.size(); ++i) {
    const auto& a = f.scenes[i].set;
    const auto& b = back.scenes[i].set;
    CHECK(back.scenes[i].scene_id == f.scenes[i].scene_id);
    CHECK(b.orientation == sampler::Orientation::Joint);
    CHECK(b.agent_ids == a.agent_ids);
    CHECK(b.endpoints == a.endpoints);
    CHECK(b.confidence == a.confidence);
    CHECK(b.flagged == a.flagged);
    CHECK(b.trajectories == a.trajectories);
  }
  CHECK_FALSE(std::filesystem::exists(path.string() + ".tmp"));
  std::filesystem::remove(path);
}

TEST_CASE("empty and malformed prediction files") {
  const auto path = temp_path("empty.jsonl");
  sampler::write_predictions(path, {});
  CHECK(sampler::read_predictions(path).scenes.empty());
  io::write_atomic(path, R"({"format":"scenecast-scenes","version":1})" "\n");
  CHECK_THROWS(sampler::read_predictions(path));
  io::write_atomic(path, R"({"format":"scenecast-predictions","version":1,"count":1})" "\n"
                         R"({"scene":"a","orientation":"sideways","agents":[1],"endpoints":[[[0,0]]]})" "\n");
  CHECK_THROWS(sampler::read_predictions(path));
  io::write_atomic(path, R"({"format":"scenecast-predictions","version":1,"count":1})" "\n"
                         R"({"scene":"a","orientation":"joint","agents":[1,2],"endpoints":[[[0,0]],[[1,1],[2,2]]]})" "\n");
  CHECK_THROWS(sampler::read_predictions(path));
  std::filesystem::remove(path);
}

TEST_CASE("transform_set moves endpoints and trajectories rigidly") {
  Rng rng(5);
  const auto c = testing::random_prediction_case(rng);
  const scene::Transform tf{Vec2d(10, -4), 0.7};
  const auto moved = sampler::transform_set(c.prediction, tf);
  for (std::size_t a = 0; a < moved.endpoints.size(); ++a)
    for (std::size_t k = 0; k < moved.endpoints[a].size(); ++k) {
      CHECK((moved.endpoints[a][k] - tf.to_world(c.prediction.endpoints[a][k])).norm() < 1e-12);
      CHECK((tf.to_local(moved.trajectories[a][k][7]) - c.prediction.trajectories[a][k][7]).norm() < 1e-9);
    }
}

TEST_CASE("heatmap dumps round-trip and keep only final cells") {
  model::HierConfig hc;
  model::SparseHeatmap h;
  h.config = hc;
  h.agent_id = 4;
  h.cells.push_back({model::GridCell{0, 1, 2}, Vec2d(-88, -80), 0.25});
  h.cells.push_back({model::GridCell{2, 5, 9}, Vec2d(1.25, -3.75), 0.125});
  h.cells.push_back({model::GridCell{2, 6, 9}, Vec2d(1.75, -3.75), 1.0 / 3.0});
  const auto rec = model::heatmap_record("scene-1", h, scene::Transform{Vec2d(1, 2), 0.0});
  REQUIRE(rec.centers.size() == 2);
  CHECK(rec.centers[0] == Vec2d(2.25, -1.75));
  const auto text = model::heatmaps_to_text({rec, rec}, R"({"W":192})");
  CHECK(text.rfind("# scenecast-heatmaps 1\n# config {\"W\":192}\n", 0) == 0);
  const auto back = model::heatmaps_from_text(text);
  REQUIRE(back.size() == 2);
  CHECK(back[1].scene_id == "scene-1");
  CHECK(back[1].agent_id == 4);
  CHECK(back[1].centers == rec.centers);
  CHECK(back[1].probability == rec.probability);
  CHECK_THROWS(model::heatmaps_from_text("x y p\n"));
  CHECK_THROWS(model::heatmaps_from_text("# scenecast-heatmaps 1\nscene a agent 1 cells 3\n0 0 1\n"));
}
