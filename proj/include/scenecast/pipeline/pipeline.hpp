#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "scenecast/metrics/metrics.hpp"
#include "scenecast/model/predictor.hpp"
#include "scenecast/model/trajectory.hpp"
#include "scenecast/pipeline/run_config.hpp"
#include "scenecast/recombiner/recombiner.hpp"
#include "scenecast/sampler/prediction_io.hpp"

namespace scenecast::pipeline {

enum class Mode { Marginal, JointAlgo, JointThomas };

std::string to_string(Mode m);
Mode mode_from_string(const std::string& s);

/// Trained stages used for prediction. The decoder is always required, the
/// recombiner only for JointThomas; without a trajectory model the
/// predictions carry endpoints only.
struct Models {
  const model::PredictionModel* decoder = nullptr;
  const model::TrajectoryModel* trajectory = nullptr;
  const recombiner::Recombiner* recombiner = nullptr;
};

struct PredictedScene {
  /// World coordinates.
  sampler::ScenePrediction prediction;
  /// Scene-frame heatmaps of the predicted agents, in prediction order.
  std::vector<model::SparseHeatmap> heatmaps;
  /// Maps the normalized frame the model ran in to world coordinates.
  scene::Transform local_to_world;
};

/// Normalizes `scene` on its evaluation reference, decodes every agent
/// present at prediction time and samples:
///   Marginal    - sample_marginal per agent, (A, K) orientation
///   JointAlgo   - sample_joint with current speeds
///   JointThomas - sample_marginal, then the recombiner, (L, A) orientation
/// Trajectories are completed per endpoint when a trajectory model is set.
/// Returns a prediction with no agents if nobody is present.
PredictedScene predict_scene(const Models& models, const scene::Scene& scene, Mode mode,
                             const sampler::SamplerConfig& config);

/// Runs fn(i) for i in [0, n) on `threads` workers (0: hardware
/// concurrency). Results land at their index, so the output does not
/// depend on scheduling. The first exception is rethrown.
template <typename T>
std::vector<T> parallel_map(std::size_t n, unsigned threads, const std::function<T(std::size_t)>& fn);

std::vector<PredictedScene> predict_scenes(const Models& models, std::span<const scene::Scene> scenes, Mode mode,
                                           const sampler::SamplerConfig& config, unsigned threads = 0);

/// Staged training. Initialization and visiting order derive from
/// config.seed, so equal configs and data give bit-identical parameters.
/// `on_epoch` (may be empty) sees every epoch log.
using EpochCallback = std::function<void(const model::EpochLog&)>;

std::unique_ptr<model::PredictionModel> train_decoder_stage(const RunConfig& config,
                                                            std::span<const scene::Scene> scenes,
                                                            const EpochCallback& on_epoch = {});
std::unique_ptr<model::TrajectoryModel> train_trajectory_stage(const RunConfig& config,
                                                               std::span<const scene::Scene> scenes,
                                                               const EpochCallback& on_epoch = {});
/// Samples the frozen decoder on `scenes` and fits the recombiner to the
/// resulting marginal sets.
std::unique_ptr<recombiner::Recombiner> train_recombiner_stage(const RunConfig& config,
                                                               const model::PredictionModel& decoder,
                                                               std::span<const scene::Scene> scenes,
                                                               const EpochCallback& on_epoch = {});

/// Scores world-frame predictions against the ground truth of `scenes`
/// (matched by id). Scenes without any prediction or ground truth are
/// counted as skipped; a prediction for an unknown scene is an error.
metrics::EvalReport evaluate(const sampler::PredictionFile& predictions, std::span<const scene::Scene> scenes,
                             double d_col = metrics::kDefaultCollisionDistance, unsigned threads = 0);

}  // namespace scenecast::pipeline

#include "scenecast/pipeline/parallel.ipp"
