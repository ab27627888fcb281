#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "scenecast/sampler/sampler.hpp"
#include "scenecast/scene/scene.hpp"

namespace scenecast::metrics {

inline constexpr double kLateralThreshold = 1.0;
inline constexpr double kDefaultCollisionDistance = 2.0;

/// Speed-dependent longitudinal miss threshold: 1 m up to 1.4 m/s, 2 m from
/// 11 m/s, linear in between. Throws std::invalid_argument for v < 0.
template <typename Scalar>
Scalar longitudinal_threshold(Scalar v) {
  if (!(v >= Scalar(0))) throw std::invalid_argument("longitudinal_threshold: speed must be >= 0");
  const Scalar lo(1.4), hi(11.0);
  if (v < lo) return Scalar(1);
  if (v >= hi) return Scalar(2);
  return Scalar(1) + (v - lo) / (hi - lo);
}

/// Miss test in the frame of the ground-truth final heading.
bool is_miss(const Vec2d& prediction, const Vec2d& truth, double truth_heading, double truth_speed);

struct GroundTruth {
  int agent_id = 0;
  Vec2d endpoint = Vec2d::Zero();
  double heading = 0.0;
  double speed = 0.0;
  scene::Future trajectory{};
};

/// Agents of `scene` with a future, in scene order, in the scene's frame.
std::vector<GroundTruth> ground_truth(const scene::Scene& scene);

/// Both functions accept either orientation: the set is read as [a][k].
/// Agents without ground truth are excluded and counted.
struct MarginalMetrics {
  std::optional<double> mADE;
  double mFDE = 0.0;
  double MR = 0.0;  // percent
  int agents = 0;
  int excluded = 0;
};
MarginalMetrics marginal_metrics(const sampler::ModalitySet& prediction, std::span<const GroundTruth> truth);

struct JointMetrics {
  std::optional<double> jointADE;
  double jointFDE = 0.0;
  double JointMR = 0.0;  // percent
  int agents = 0;
  int excluded = 0;
};
JointMetrics joint_metrics(const sampler::ModalitySet& prediction, std::span<const GroundTruth> truth);

/// Modality k collides if any two of its agents' endpoints are closer than
/// d_col (every agent of the set counts, with or without ground truth).
/// cMR is JointMR with every agent of a colliding modality counted as a miss.
struct CollisionMetrics {
  double Col = 0.0;  // percent of modalities
  double cMR = 0.0;  // percent
  int modalities = 0;
};
CollisionMetrics collision_metrics(const sampler::ModalitySet& prediction, std::span<const GroundTruth> truth,
                                   double d_col = kDefaultCollisionDistance);

struct SceneMetrics {
  std::string scene_id;
  int agents = 0;
  int excluded = 0;
  std::optional<double> mADE, jointADE;
  double mFDE = 0.0, MR = 0.0, jointFDE = 0.0, JointMR = 0.0, Col = 0.0, cMR = 0.0;
};

/// Every metric of one scene; nullopt if no predicted agent has ground truth.
std::optional<SceneMetrics> evaluate_scene(const std::string& scene_id, const sampler::ModalitySet& prediction,
                                           std::span<const GroundTruth> truth, double d_col = kDefaultCollisionDistance);

struct MetricSummary {
  std::optional<double> value;  // uniform mean over the scenes that have it
  int scenes = 0;
};

/// Per-scene metrics averaged uniformly over scenes, in input order.
struct EvalReport {
  std::string mode;
  double d_col = kDefaultCollisionDistance;
  MetricSummary mADE, mFDE, MR, jointADE, jointFDE, JointMR, Col, cMR;
  int excluded_agents = 0;
  int skipped_scenes = 0;
  /// Resolved run configuration echoed into the report; JSON object text.
  std::string config_json = "{}";
  std::vector<SceneMetrics> scenes;

  [[nodiscard]] std::string to_json() const;
  static EvalReport from_json(const std::string& text);
  /// Marginal | joint columns: mADE, mFDE, MR | jointFDE, JointMR, Col, cMR.
  [[nodiscard]] std::string table() const;
};

EvalReport aggregate(std::vector<SceneMetrics> scenes, double d_col, std::string mode = {}, int skipped_scenes = 0);

}  // namespace scenecast::metrics
