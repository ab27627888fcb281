#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "scenecast/model/hierarchy.hpp"
#include "scenecast/scene/scene.hpp"

namespace scenecast::sampler {

enum class AgentOrder { DescendingSpeed, Input };

struct SamplerConfig {
  int K = 6;
  /// Radius (m) of the mass-aggregation disk and of every suppression disk.
  double r = 2.0;
  AgentOrder order = AgentOrder::DescendingSpeed;
  /// Joint sampling only: suppress other agents' heatmaps of the same modality.
  bool cross_suppression = true;

  void validate() const;
};

struct Pick {
  Vec2d endpoint = Vec2d::Zero();
  /// Disk-integrated probability around the endpoint at pick time.
  double confidence = 0.0;
  /// Set when mass ran out and a zero-score fallback cell was used; in joint
  /// sampling this means the modality may contain a collision.
  bool flagged = false;
};

/// Greedy MR-optimizing sampling on the final-resolution cells: K times,
/// take the non-suppressed cell whose r-disk holds the most probability
/// (ties: smaller (x, y)), then zero and suppress its r-disk.
std::vector<Pick> sample_marginal(const model::SparseHeatmap& heatmap, const SamplerConfig& config);

enum class Orientation { Marginal, Joint };

using Trajectory = std::array<Vec2d, scene::kFutureFrames>;

/// Endpoints per agent and modality, always indexed [a][k]. In a marginal
/// set k indexes each agent's own alternatives (A, K); in a joint set k is
/// a scene modality shared by all agents (the (K, A) view).
struct ModalitySet {
  Orientation orientation = Orientation::Marginal;
  std::vector<int> agent_ids;
  std::vector<std::vector<Vec2d>> endpoints;
  std::vector<std::vector<double>> confidence;  // empty if absent
  std::vector<std::vector<bool>> flagged;       // empty if absent
  std::vector<std::vector<Trajectory>> trajectories;  // empty if absent

  [[nodiscard]] int agents() const { return static_cast<int>(endpoints.size()); }
  [[nodiscard]] int modalities() const { return endpoints.empty() ? 0 : static_cast<int>(endpoints.front().size()); }
  [[nodiscard]] bool has_trajectories() const { return !trajectories.empty(); }
  /// Throws std::invalid_argument if ragged or inconsistent.
  void check() const;
  /// Whether modality k contains a fallback pick of any agent.
  [[nodiscard]] bool modality_flagged(int k) const;
};

/// Marginal sampling for several agents, assembled into an (A, K) set.
ModalitySet sample_marginal_set(std::span<const model::SparseHeatmap> heatmaps, const SamplerConfig& config);

/// Collision-aware joint sampling. Outer loop over modalities, inner loop
/// over agents (descending `speeds`, ties by heatmap agent id). A pick by
/// agent a suppresses its disk in a's own later modalities and, with
/// cross suppression, in every other agent's heatmap of the same modality.
ModalitySet sample_joint(std::span<const model::SparseHeatmap> heatmaps, std::span<const double> speeds,
                         const SamplerConfig& config);

/// Probability mass of the final cells within r of `endpoint`.
double sampled_confidence(const model::SparseHeatmap& heatmap, const Vec2d& endpoint, double r);

}  // namespace scenecast::sampler
