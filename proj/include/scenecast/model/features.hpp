#pragma once

#include <vector>

#include "scenecast/scene/scene.hpp"

namespace scenecast::model {

/// Meters per network unit for scene-frame coordinates (the grid spans +-3).
inline constexpr double kSceneScale = 32.0;
/// Meters per network unit for agent-relative coordinates.
inline constexpr double kAgentScale = 16.0;
inline constexpr double kSpeedScale = 10.0;

inline constexpr int kHistoryFeatures = 8;
inline constexpr int kAgentInputWidth = scene::kHistoryFrames * kHistoryFeatures;
inline constexpr int kLaneInputWidth = scene::kMaxLanePoints * 3;
inline constexpr int kTrajectoryHistoryWidth = scene::kHistoryFrames * 6;

/// Pose of an agent at prediction time in the scene frame. Agents absent at
/// prediction time use their last present frame.
struct AgentPose {
  Vec2d position = Vec2d::Zero();
  double yaw = 0.0;
  double speed = 0.0;

  [[nodiscard]] Vec2d to_agent(const Vec2d& scene_point) const;
  [[nodiscard]] Vec2d to_scene(const Vec2d& agent_point) const;
};

AgentPose agent_pose(const scene::AgentTrack& agent);

/// Network inputs of one normalized scene. Rows follow scene.agents and
/// scene.lanes order.
struct SceneInputs {
  std::vector<int> agent_ids;
  std::vector<AgentPose> poses;
  /// A x kAgentInputWidth: per frame (x, y)/kSceneScale, agent-relative
  /// (x, y)/kAgentScale, cos yaw, sin yaw, speed/kSpeedScale, presence.
  /// Absent frames are all zeros.
  Matrix agents;
  /// L x kLaneInputWidth: up to 10 points (x, y)/kSceneScale, then a
  /// presence flag per point; padding is zero.
  Matrix lanes;

  [[nodiscard]] int row_of(int agent_id) const;
};

SceneInputs scene_inputs(const scene::Scene& normalized);

/// Agent-frame history for the trajectory model (1 x kTrajectoryHistoryWidth):
/// per frame relative (x, y)/kAgentScale, cos/sin of relative yaw,
/// speed/kSpeedScale, presence.
Matrix trajectory_history(const scene::AgentTrack& agent);

}  // namespace scenecast::model
