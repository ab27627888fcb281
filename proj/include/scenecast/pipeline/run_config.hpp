#pragma once

#include <cstdint>
#include <string>

#include "scenecast/metrics/metrics.hpp"
#include "scenecast/model/predictor.hpp"
#include "scenecast/model/training.hpp"
#include "scenecast/recombiner/recombiner.hpp"
#include "scenecast/sampler/sampler.hpp"
#include "scenecast/scene/generator.hpp"

namespace scenecast::pipeline {

/// Training schedule of one stage, without callbacks.
struct StageSchedule {
  int epochs = 16;
  int batch_size = 32;
  double lr = 1e-3;
  std::vector<std::pair<int, double>> milestones{{3, 0.5}, {6, 0.5}, {9, 0.5}, {13, 0.5}};
  std::size_t max_agents = 8;

  [[nodiscard]] model::TrainConfig train_config(std::uint64_t seed) const;
  bool operator==(const StageSchedule&) const = default;
};

/// Every parameter of every command. Config files are JSON objects with the
/// sections below; omitted keys keep their defaults, unknown keys are
/// rejected so typos do not pass silently.
///
///   {"seed":0, "threads":0, "d_col":2.0,
///    "generator":{...}, "model":{...}, "sampler":{...}, "recombiner":{...},
///    "train":{"decoder":{...}, "trajectory":{...}, "recombiner":{...}}}
struct RunConfig {
  std::uint64_t seed = 0;
  /// Worker threads for prediction and evaluation; 0 = all cores.
  unsigned threads = 0;
  double d_col = metrics::kDefaultCollisionDistance;
  scene::GeneratorConfig generator;
  model::ModelConfig model;
  sampler::SamplerConfig sampler;
  recombiner::RecombinerConfig recombiner;
  StageSchedule decoder_schedule;
  StageSchedule trajectory_schedule{16, 64, 1e-3, {{3, 0.5}, {6, 0.5}, {9, 0.5}, {13, 0.5}}, 8};
  StageSchedule recombiner_schedule{20, 8, 1e-3, {{10, 0.5}, {15, 0.5}}, 8};

  /// Throws std::invalid_argument on any invalid section.
  void validate() const;
  /// Complete resolved config, pretty-printed when `indent` >= 0.
  [[nodiscard]] std::string to_json(int indent = -1) const;
  static RunConfig from_json(const std::string& text);
  /// Layers `text` over `base`.
  static RunConfig merge_json(const RunConfig& base, const std::string& text);
};

}  // namespace scenecast::pipeline
