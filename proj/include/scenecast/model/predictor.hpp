#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "scenecast/model/features.hpp"
#include "scenecast/model/hierarchy.hpp"
#include "scenecast/nn/layers.hpp"

namespace scenecast::model {

struct ModelConfig {
  HierConfig hier;
  /// Width D of agent encodings, lane features and attention embeddings.
  int encoding_width = 64;
  /// Width of the per-point coordinate MLP.
  int point_width = 32;
  /// Cross-attention layers from grid points onto lane features.
  int attention_layers = 2;

  void validate() const;
  [[nodiscard]] std::string to_json() const;
  static ModelConfig from_json(const std::string& text);
  bool operator==(const ModelConfig&) const = default;
};

/// History MLP -> Lanes2Agents cross-attention -> Agents2Agents
/// self-attention. No positional encoding over agents, so the encoding is
/// equivariant to agent order.
class SceneEncoder {
 public:
  SceneEncoder() = default;
  SceneEncoder(nn::ParameterStore& store, int width, Rng& rng);

  struct Output {
    nn::Var agents;  // A x D
    nn::Var lanes;   // L x D
  };
  [[nodiscard]] Output operator()(nn::Graph& g, const SceneInputs& in) const;

 private:
  nn::Mlp history_;
  nn::Mlp lane_;
  nn::AttentionBlock lanes_to_agents_;
  nn::AttentionBlock agents_to_agents_;
};

/// Per-point scorer shared by all refinement levels:
///   h = MLP2(point coords) W_pt + F_a W_agent + b     (concat + linear)
///   h = CrossAttention(h, lanes) x attention_layers
///   logit = MLP(h) -> 1
/// Point coordinates enter in the scene frame, in the frame of the agent
/// being decoded, and relative to that agent's constant-velocity endpoint.
class HeatmapDecoder {
 public:
  HeatmapDecoder() = default;
  HeatmapDecoder(nn::ParameterStore& store, const ModelConfig& config, Rng& rng);

  [[nodiscard]] std::vector<nn::AttentionBlock::ProjectedContext> project_lanes(nn::Graph& g, nn::Var lanes) const;
  /// Logits (n x 1) of n points; row i belongs to agent row owner[i].
  [[nodiscard]] nn::Var score(nn::Graph& g, nn::Var agents,
                              const std::vector<nn::AttentionBlock::ProjectedContext>& lanes,
                              const Matrix& point_inputs, std::span<const int> owner) const;

 private:
  nn::Mlp point_mlp_;
  nn::Parameter* w_point_ = nullptr;
  nn::Parameter* w_agent_ = nullptr;
  nn::Parameter* bias_ = nullptr;
  std::vector<nn::AttentionBlock> attention_;
  nn::Mlp head_;
};

inline constexpr int kPointInputWidth = 6;
inline constexpr double kAnchorScale = 8.0;

/// n x kPointInputWidth point inputs: scene-frame (x, y)/kSceneScale,
/// agent-frame (x, y)/kAgentScale, and the agent-frame offset from the
/// constant-velocity endpoint, /kAnchorScale.
Matrix point_inputs(const std::vector<Vec2d>& centers, const AgentPose& pose);

/// Result of decoding some agents of one scene.
struct SceneDecoding {
  SceneInputs inputs;
  /// A x D encodings of every agent in the scene (scene.agents order).
  Matrix encodings;
  /// One heatmap per requested agent, in request order.
  std::vector<SparseHeatmap> heatmaps;
};

/// Encoder + hierarchical heatmap decoder with their parameters.
class PredictionModel {
 public:
  explicit PredictionModel(const ModelConfig& config = {}, std::uint64_t seed = 0);
  PredictionModel(const PredictionModel&) = delete;
  PredictionModel& operator=(const PredictionModel&) = delete;

  [[nodiscard]] const ModelConfig& config() const { return config_; }
  [[nodiscard]] nn::ParameterStore& params() { return store_; }
  [[nodiscard]] const nn::ParameterStore& params() const { return store_; }

  /// Inference on a normalized scene; `agent_ids` empty means every agent.
  [[nodiscard]] SceneDecoding decode(const scene::Scene& normalized, std::span<const int> agent_ids = {}) const;

  /// Focal loss over every evaluated cell of every level for the given
  /// agents (which must have ground truth). Targets at a level use
  /// sigma = 2 m * cell_size / R2 at that level's cell centers; the top-N
  /// routing uses current scores and carries no gradient.
  [[nodiscard]] nn::Var training_loss(nn::Graph& g, const scene::Scene& normalized,
                                      std::span<const int> agent_ids) const;

  void save(const std::string& path, const std::string& extra_meta_json = {}) const;
  /// Throws if the checkpoint was written for a different model config.
  static std::unique_ptr<PredictionModel> load(const std::string& path);

 private:
  struct Hierarchy {
    std::array<nn::Var, 3> logits;
    std::vector<std::array<LevelEval, 3>> per_agent;
  };
  Hierarchy run(nn::Graph& g, const SceneInputs& in, const SceneEncoder::Output& enc, std::span<const int> rows) const;

  ModelConfig config_;
  nn::ParameterStore store_;
  SceneEncoder encoder_;
  HeatmapDecoder decoder_;
};

/// Level-specific target width used by training_loss().
double level_sigma(const HierConfig& config, int level);

}  // namespace scenecast::model
