#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "scenecast/nn/tensor.hpp"

namespace scenecast::scene {

inline constexpr int kHistoryFrames = 10;
inline constexpr int kFutureFrames = 30;
inline constexpr double kFrameDt = 0.1;
inline constexpr int kMaxLanePoints = 10;

/// Directed lane segment. Relations hold lanelet ids.
struct Lane {
  int id = 0;
  std::vector<Vec2d> points;
  std::vector<int> predecessors;
  std::vector<int> successors;
  std::vector<int> left;
  std::vector<int> right;

  [[nodiscard]] double length() const;
  bool operator==(const Lane&) const = default;
};

/// One observed frame. Absent frames carry an all-zero payload.
struct Frame {
  Vec2d position = Vec2d::Zero();
  double yaw = 0.0;
  double speed = 0.0;
  bool present = false;

  static Frame absent() { return {}; }
  bool operator==(const Frame&) const = default;
};

using History = std::array<Frame, kHistoryFrames>;
using Future = std::array<Vec2d, kFutureFrames>;

struct AgentTrack {
  int id = 0;
  History history{};
  std::optional<Future> future;

  /// Frame at prediction time (last history frame).
  [[nodiscard]] const Frame& current() const { return history.back(); }
  [[nodiscard]] bool has_future() const { return future.has_value(); }
  bool operator==(const AgentTrack&) const = default;
};

/// Rigid map from the normalized frame back to the world frame:
/// world = R(rotation) * local + translation.
struct Transform {
  Vec2d translation = Vec2d::Zero();
  double rotation = 0.0;

  [[nodiscard]] Vec2d to_world(const Vec2d& local) const;
  [[nodiscard]] Vec2d to_local(const Vec2d& world) const;
  /// this o inner: first apply `inner`, then this.
  [[nodiscard]] Transform compose(const Transform& inner) const;
  bool operator==(const Transform&) const = default;
};

struct Scene {
  std::string id;
  std::vector<Lane> lanes;
  std::vector<AgentTrack> agents;
  /// -1 until a reference agent has been chosen.
  int reference_id = -1;
  /// Maps the scene's current coordinates to world coordinates.
  Transform transform;

  [[nodiscard]] const AgentTrack& agent(int agent_id) const;
  [[nodiscard]] const AgentTrack* find_agent(int agent_id) const;
  [[nodiscard]] const Lane* find_lane(int lane_id) const;
  bool operator==(const Scene&) const = default;
};

enum class ReferenceMode { Evaluation, Training };

/// Evaluation mode picks the present agent closest to the barycenter of all
/// present agents (ties go to the lowest id). Training mode draws uniformly
/// among present agents using `seed`.
int select_reference(const Scene& scene, ReferenceMode mode = ReferenceMode::Evaluation, std::uint64_t seed = 0);

/// Re-expresses the scene in the reference agent's frame: its current
/// position becomes the origin and its heading the +x axis (y points left).
/// The stored transform accumulates so denormalize_scene() recovers the
/// original world coordinates.
Scene normalize_scene(const Scene& scene, int reference_id);

/// Applies the stored transform and resets it to identity.
Scene denormalize_scene(const Scene& scene);

/// Applies `local_to_world` to every coordinate and yaw of the scene.
Scene transform_scene(const Scene& scene, const Transform& local_to_world);

/// Agents with a ground-truth future; all of them if at most `max_agents`,
/// else a seeded uniform subset. Returned ids are sorted.
std::vector<int> subsample_training_agents(const Scene& scene, std::size_t max_agents, std::uint64_t seed);

/// Ids of agents that have a future, in scene order.
std::vector<int> predictable_agents(const Scene& scene);

/// Ground-truth heading at the horizon, from the last non-stationary future
/// displacement, falling back to the current yaw.
double final_heading(const AgentTrack& agent);
/// Ground-truth speed at the horizon from the last future displacement.
double final_speed(const AgentTrack& agent);

double wrap_angle(double a);

}  // namespace scenecast::scene
