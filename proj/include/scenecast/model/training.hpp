#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "scenecast/model/predictor.hpp"
#include "scenecast/model/trajectory.hpp"
#include "scenecast/nn/optim.hpp"

namespace scenecast::model {

struct EpochLog {
  int epoch = 0;  // 1-based
  double lr = 0.0;
  double mean_loss = 0.0;
  long steps = 0;
  double seconds = 0.0;
};

struct TrainConfig {
  int epochs = 16;
  /// Scenes per optimizer step (agents per step for the trajectory model).
  int batch_size = 32;
  nn::LrSchedule schedule;
  std::uint64_t seed = 0;
  /// Predicted agents per training scene.
  std::size_t max_agents = 8;
  /// Called after every epoch (logging, checkpointing).
  std::function<void(const EpochLog&)> on_epoch;

  void validate() const;
};

/// Raised when a loss stops being finite; the message names epoch, step
/// and scene.
class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Each epoch visits the scenes in a seeded order. Every visit picks a
/// random reference agent (training-mode selection), normalizes the scene
/// and supervises at most max_agents agents with ground truth.
std::vector<EpochLog> train_decoder(PredictionModel& model, std::span<const scene::Scene> scenes,
                                    const TrainConfig& config);

/// Mean-squared error on agent-frame positions, fed ground-truth endpoints.
std::vector<EpochLog> train_trajectory(TrajectoryModel& model, std::span<const scene::Scene> scenes,
                                       const TrainConfig& config);

/// Seed of the visit of scene `index` in `epoch`.
std::uint64_t visit_seed(std::uint64_t seed, int epoch, std::size_t index);

/// Seeded permutation of [0, n) used as the visiting order of `epoch`.
std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, int epoch);

}  // namespace scenecast::model
