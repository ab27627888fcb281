#include <algorithm>
#include <regex>
#include <stdexcept>

#include "doctest.h"
#include "scenecast/pipeline/pipeline.hpp"
#include "scenecast/pipeline/render.hpp"
#include "scenecast/pipeline/run_config.hpp"
#include "scenecast/scene/generator.hpp"

using namespace scenecast;
using namespace scenecast::pipeline;

namespace {

RunConfig tiny_config() {
  RunConfig c;
  c.model.encoding_width = 16;
  c.model.point_width = 8;
  c.model.attention_layers = 1;
  c.recombiner.D = 16;
  c.recombiner.attention_layers = 1;
  c.generator.min_agents = 2;
  c.generator.max_agents = 4;
  c.generator.templates = {scene::MapTemplate::Crossroad};
  c.decoder_schedule.epochs = 1;
  c.decoder_schedule.batch_size = 4;
  c.trajectory_schedule.epochs = 1;
  c.recombiner_schedule.epochs = 2;
  c.threads = 1;
  return c;
}

struct Trained {
  RunConfig config = tiny_config();
  std::vector<scene::Scene> train = scene::generate_dataset(1, 8, config.generator);
  std::vector<scene::Scene> test = scene::generate_dataset(2, 6, config.generator);
  std::unique_ptr<model::PredictionModel> decoder = train_decoder_stage(config, train);
  std::unique_ptr<model::TrajectoryModel> trajectory = train_trajectory_stage(config, train);
  std::unique_ptr<recombiner::Recombiner> rec = train_recombiner_stage(config, *decoder, train);
  [[nodiscard]] Models models(bool with_trajectory = true) const {
    return {decoder.get(), with_trajectory ? trajectory.get() : nullptr, rec.get()};
  }
};

const Trained& trained() {
  static const Trained t;
  return t;
}

}  // namespace

TEST_CASE("run config round-trips and rejects unknown keys") {
  RunConfig c = tiny_config();
  c.seed = 42;
  c.sampler.order = sampler::AgentOrder::Input;
  c.decoder_schedule.milestones = {{2, 0.1}};
  const RunConfig back = RunConfig::from_json(c.to_json());
  CHECK(back.to_json() == c.to_json());
  CHECK(back.model == c.model);
  CHECK(back.decoder_schedule == c.decoder_schedule);
  CHECK(back.generator.templates == c.generator.templates);

  const RunConfig partial = RunConfig::from_json(R"({"sampler":{"K":4},"recombiner":{"K":4},"model":{"hier":{"N2":32}}})");
  CHECK(partial.sampler.K == 4);
  CHECK(partial.sampler.r == 2.0);
  CHECK(partial.model.hier.N2 == 32);
  CHECK(partial.model.hier.N1 == 16);

  CHECK_THROWS_AS(RunConfig::from_json(R"({"sampler":{"radius":3}})"), std::invalid_argument);
  CHECK_THROWS_AS(RunConfig::from_json(R"({"sede":3})"), std::invalid_argument);
  CHECK_THROWS_AS(RunConfig::from_json(R"({"train":{"decoder":{"epochs":"many"}}})"), std::invalid_argument);
  CHECK_THROWS_AS(RunConfig::from_json("not json"), std::invalid_argument);
  CHECK_THROWS_AS(RunConfig::from_json(R"({"sampler":{"K":4}})").validate(), std::invalid_argument);
}

TEST_CASE("parallel_map keeps index order and propagates errors") {
  std::function<int(std::size_t)> square = [](std::size_t i) { return static_cast<int>(i * i); };
  for (unsigned threads : {1u, 2u, 7u}) {
    const auto v = parallel_map<int>(50, threads, square);
    REQUIRE(v.size() == 50);
    for (std::size_t i = 0; i < v.size(); ++i) CHECK(v[i] == static_cast<int>(i * i));
  }
  CHECK(parallel_map<int>(0, 4, square).empty());
  std::function<int(std::size_t)> failing = [](std::size_t i) {
    if (i == 13) throw std::runtime_error("boom");
    return 0;
  };
  CHECK_THROWS_WITH(parallel_map<int>(40, 3, failing), "boom");
}

TEST_CASE("mode names") {
  for (Mode m : {Mode::Marginal, Mode::JointAlgo, Mode::JointThomas}) CHECK(mode_from_string(to_string(m)) == m);
  CHECK_THROWS(mode_from_string("joint"));
}

TEST_CASE("predictions are world-frame, oriented by mode and deterministic") {
  const auto& t = trained();
  const auto& sc = t.config.sampler;
  for (Mode mode : {Mode::Marginal, Mode::JointAlgo, Mode::JointThomas}) {
    const auto a = predict_scenes(t.models(), t.test, mode, sc, 1);
    const auto b = predict_scenes(t.models(), t.test, mode, sc, 3);
    REQUIRE(a.size() == t.test.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      const auto& s = a[i].prediction.set;
      CHECK(a[i].prediction.scene_id == t.test[i].id);
      CHECK(s.orientation == (mode == Mode::Marginal ? sampler::Orientation::Marginal : sampler::Orientation::Joint));
      CHECK(s.modalities() == sc.K);
      CHECK(s.has_trajectories());
      CHECK(s.endpoints == b[i].prediction.set.endpoints);
      CHECK(s.trajectories == b[i].prediction.set.trajectories);
      CHECK(a[i].heatmaps.size() == s.agent_ids.size());
      // The model frame sits on the reference agent; mapped back, every
      // endpoint lies inside the grid.
      const auto world = scene::denormalize_scene(t.test[i]);
      const Vec2d origin = world.agent(scene::select_reference(world)).current().position;
      CHECK((a[i].local_to_world.translation - origin).norm() < 1e-9);
      for (const auto& per : s.endpoints)
        for (const auto& e : per)
          CHECK(a[i].local_to_world.to_local(e).cwiseAbs().maxCoeff() <= t.config.model.hier.W / 2 + 1e-9);
    }
  }
}

TEST_CASE("single agent: marginal and joint-algo agree") {
  const auto& t = trained();
  auto cfg = t.config.generator;
  cfg.min_agents = cfg.max_agents = 1;
  const auto scenes = scene::generate_dataset(5, 3, cfg);
  const auto m = predict_scenes(t.models(), scenes, Mode::Marginal, t.config.sampler, 1);
  const auto j = predict_scenes(t.models(), scenes, Mode::JointAlgo, t.config.sampler, 1);
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    CHECK(m[i].prediction.set.endpoints == j[i].prediction.set.endpoints);
    CHECK(m[i].prediction.set.confidence == j[i].prediction.set.confidence);
  }
}

TEST_CASE("joint-thomas needs a recombiner") {
  const auto& t = trained();
  Models m = t.models();
  m.recombiner = nullptr;
  CHECK_THROWS_AS(predict_scene(m, t.test[0], Mode::JointThomas, t.config.sampler), std::invalid_argument);
  CHECK_NOTHROW(predict_scene(m, t.test[0], Mode::JointAlgo, t.config.sampler));
}

TEST_CASE("stage training is reproducible") {
  const auto& t = trained();
  const auto again = train_decoder_stage(t.config, t.train);
  const auto& ref = t.decoder->params();
  for (const auto* p : again->params().all()) CHECK(p->value == ref.at(p->name).value);
}

TEST_CASE("perfect predictions score zero; unknown scenes are rejected") {
  const auto& t = trained();
  sampler::PredictionFile f;
  f.mode = "oracle";
  for (const auto& s : t.test) {
    const auto world = scene::denormalize_scene(s);
    sampler::ScenePrediction p;
    p.scene_id = s.id;
    p.set.orientation = sampler::Orientation::Joint;
    for (const auto& g : metrics::ground_truth(world)) {
      p.set.agent_ids.push_back(g.agent_id);
      p.set.endpoints.push_back({g.endpoint, g.endpoint + Vec2d(30, 0)});
      sampler::Trajectory tr;
      std::copy(g.trajectory.begin(), g.trajectory.end(), tr.begin());
      p.set.trajectories.push_back({tr, tr});
    }
    f.scenes.push_back(p);
  }
  const auto r = evaluate(f, t.test, 2.0, 2);
  CHECK(r.mode == "oracle");
  CHECK(r.skipped_scenes == 0);
  CHECK(*r.mFDE.value == 0.0);
  CHECK(*r.mADE.value == 0.0);
  CHECK(*r.jointFDE.value == 0.0);
  CHECK(*r.MR.value == 0.0);
  CHECK(*r.JointMR.value == 0.0);

  f.scenes.pop_back();
  CHECK(evaluate(f, t.test, 2.0, 1).skipped_scenes == 1);
  f.scenes.front().scene_id = "no-such-scene";
  CHECK_THROWS(evaluate(f, t.test, 2.0, 1));
}

TEST_CASE("render produces a standalone SVG with opacity peaking at the best cell") {
  const auto& t = trained();
  const auto world = scene::denormalize_scene(t.test[0]);
  const std::string bare = render_svg(world);
  CHECK(bare.rfind("<?xml", 0) == 0);
  CHECK(bare.find("<svg xmlns=\"http://www.w3.org/2000/svg\"") != std::string::npos);
  CHECK(bare.size() > 10);
  CHECK(bare.substr(bare.size() - 7) == "</svg>\n");
  CHECK(bare.find("id=\"predictions\"") == std::string::npos);
  CHECK(bare.find("fill-opacity") == std::string::npos);

  const auto p = predict_scene(t.models(), t.test[0], Mode::JointThomas, t.config.sampler);
  std::vector<model::HeatmapRecord> maps;
  for (const auto& h : p.heatmaps) maps.push_back(model::heatmap_record(t.test[0].id, h, p.local_to_world));
  const std::string svg = render_svg(world, &p.prediction.set, maps);
  CHECK(svg.find("id=\"predictions\"") != std::string::npos);

  // Opacity 1 appears once per agent, on that agent's most probable cell.
  const auto& rec = maps.front();
  const auto best = std::max_element(rec.probability.begin(), rec.probability.end()) - rec.probability.begin();
  const std::regex rect(R"re(<rect [^>]*fill-opacity="([0-9.]+)")re");
  double max_opacity = 0.0;
  int full = 0;
  for (auto it = std::sregex_iterator(svg.begin(), svg.end(), rect); it != std::sregex_iterator(); ++it) {
    const double o = std::stod((*it)[1]);
    max_opacity = std::max(max_opacity, o);
    if (o == 1.0) ++full;
  }
  CHECK(max_opacity == 1.0);
  CHECK(full >= static_cast<int>(maps.size()));
  CHECK(rec.probability[static_cast<std::size_t>(best)] > 0);

  // Balanced element nesting for the container tags we emit.
  for (const char* tag : {"g", "svg"}) {
    const std::string open = std::string("<") + tag + " ", close = std::string("</") + tag + ">";
    std::size_t n_open = 0, n_close = 0;
    for (auto pos = svg.find(open); pos != std::string::npos; pos = svg.find(open, pos + 1)) ++n_open;
    for (auto pos = svg.find(close); pos != std::string::npos; pos = svg.find(close, pos + 1)) ++n_close;
    CHECK(n_open == n_close);
  }
}
