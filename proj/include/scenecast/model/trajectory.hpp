#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "scenecast/model/features.hpp"
#include "scenecast/nn/layers.hpp"

namespace scenecast::model {

/// Fully connected completion of a trajectory from its endpoint: input is
/// the agent-frame history and the agent-frame endpoint, output the T
/// future positions in the agent frame. The last output point is not
/// pinned to the endpoint; endpoint_drift() measures the gap.
class TrajectoryModel {
 public:
  explicit TrajectoryModel(std::uint64_t seed = 0, int hidden = 128);
  TrajectoryModel(const TrajectoryModel&) = delete;
  TrajectoryModel& operator=(const TrajectoryModel&) = delete;

  [[nodiscard]] nn::ParameterStore& params() { return store_; }
  [[nodiscard]] const nn::ParameterStore& params() const { return store_; }
  [[nodiscard]] int hidden() const { return hidden_; }

  /// histories: n x kTrajectoryHistoryWidth; endpoints: n x 2 in agent
  /// frame / kAgentScale. Returns n x 2T, agent frame / kAgentScale.
  [[nodiscard]] nn::Var forward(nn::Graph& g, const Matrix& histories, const Matrix& endpoints) const;

  /// Scene-frame trajectories for several endpoints of one agent.
  [[nodiscard]] std::vector<scene::Future> complete(const scene::AgentTrack& agent,
                                                    std::span<const Vec2d> endpoints) const;
  [[nodiscard]] scene::Future complete(const scene::AgentTrack& agent, const Vec2d& endpoint) const;

  void save(const std::string& path, const std::string& extra_meta_json = {}) const;
  static std::unique_ptr<TrajectoryModel> load(const std::string& path);

 private:
  int hidden_;
  nn::ParameterStore store_;
  nn::Mlp mlp_;
};

/// |trajectory[T-1] - endpoint|.
double endpoint_drift(const scene::Future& trajectory, const Vec2d& endpoint);

/// Packs the agent-frame training pair of an agent with ground truth:
/// returns (history row, endpoint row, target row).
struct TrajectorySample {
  Matrix history;
  Matrix endpoint;
  Matrix target;
};
TrajectorySample trajectory_sample(const scene::AgentTrack& agent);

}  // namespace scenecast::model
