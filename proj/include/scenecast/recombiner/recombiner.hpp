#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "scenecast/model/features.hpp"
#include "scenecast/model/training.hpp"
#include "scenecast/nn/layers.hpp"
#include "scenecast/sampler/sampler.hpp"

namespace scenecast::recombiner {

struct RecombinerConfig {
  /// Scene modalities produced.
  int L = 6;
  /// Agent modalities consumed per agent.
  int K = 6;
  /// Width of the scene-modality vectors and agent-modality encodings.
  int D = 64;
  int attention_layers = 2;
  /// Soft-argmax temperature.
  double tau = 1.0;
  /// Replace the soft argmax by a one-hot selection of the best-scoring
  /// input (inference only: it has no useful gradient).
  bool hard = false;

  void validate() const;
  [[nodiscard]] std::string to_json() const;
  static RecombinerConfig from_json(const std::string& text);
  bool operator==(const RecombinerConfig&) const = default;
};

/// Per-scene input: K endpoints for each of A agents in the normalized scene
/// frame, plus each agent's stored encoding and pose.
struct RecombinerInput {
  /// (A*K) x 2, row a*K + k.
  Matrix endpoints;
  /// A x D_enc, frozen encoder output.
  Matrix encodings;
  std::vector<model::AgentPose> poses;

  [[nodiscard]] int agents() const { return static_cast<int>(encodings.rows()); }
  [[nodiscard]] int modalities() const;
  /// Throws nn::ShapeError on inconsistent sizes.
  void check(int K) const;
};

/// Columns fed to the modality MLP for each endpoint: scene-frame (x, y) /
/// kSceneScale and (x, y) / kAgentScale in the frame of its agent.
inline constexpr int kModalityInputWidth = 4;
Matrix modality_inputs(const RecombinerInput& in);

/// Differentiable recombination of one scene.
struct RecombinerOutput {
  /// (L*A) x 2, row l*A + a.
  nn::Var joint;
  /// One L x K soft-argmax weight matrix per agent.
  std::vector<nn::Var> weights;
};

/// Learned scene-modality vectors S (L x D) attend to every agent-modality
/// encoding A_k^a = Linear(concat(MLP2(p_k^a), F_a)); each S_l then scores
/// the K modalities of every agent by dot product, and agent a's endpoint in
/// scene modality l is the softmax-weighted average of its K endpoints.
/// Nothing forces different l to choose different inputs.
class Recombiner {
 public:
  Recombiner(const RecombinerConfig& config, int encoding_width, std::uint64_t seed = 0);
  Recombiner(const Recombiner&) = delete;
  Recombiner& operator=(const Recombiner&) = delete;

  [[nodiscard]] const RecombinerConfig& config() const { return config_; }
  [[nodiscard]] int encoding_width() const { return encoding_width_; }
  [[nodiscard]] nn::ParameterStore& params() { return store_; }
  [[nodiscard]] const nn::ParameterStore& params() const { return store_; }

  /// Soft argmax at temperature config().tau (hard selection is applied by
  /// recombine(), not here, so this is always differentiable).
  [[nodiscard]] RecombinerOutput forward(nn::Graph& g, const RecombinerInput& in) const;

  /// L x (A*K) raw scores s_l^{k_a}, column a*K + k.
  [[nodiscard]] Matrix scores(const RecombinerInput& in) const;

  void save(const std::string& path, const std::string& extra_meta_json = {}) const;
  static std::unique_ptr<Recombiner> load(const std::string& path);

 private:
  RecombinerConfig config_;
  int encoding_width_;
  nn::ParameterStore store_;
  nn::Mlp point_mlp_;
  nn::Linear merge_;
  nn::Parameter* modes_ = nullptr;
  std::vector<nn::AttentionBlock> attention_;
};

/// Winner-take-all joint loss: min over l of (1/A) sum_a |p_l^a - g^a|.
/// `truth` is A x 2. Returns the 1 x 1 loss; `winner` receives the l.
nn::Var joint_wta_loss(const RecombinerOutput& out, const Matrix& truth, int* winner = nullptr);

/// Orders scene modalities by the mean over agents of sum_k w_lk^a c_k^a,
/// descending; equal values keep ascending l.
std::vector<int> rank_joint_modalities(std::span<const Matrix> weights, const std::vector<std::vector<double>>& confidence);

struct Recombination {
  /// Joint set oriented (L, A): endpoints[a][l], ordered by rank, with the
  /// weighted marginal confidence of each agent in each scene modality.
  sampler::ModalitySet joint;
  /// ranked position -> original scene modality l.
  std::vector<int> order;
  /// Per agent, L x K weights in original l order.
  std::vector<Matrix> weights;
};

/// Inference: builds the input from a marginal set, the scene encodings and
/// poses (rows aligned with marginal.agent_ids), recombines, ranks.
Recombination recombine(const Recombiner& model, const sampler::ModalitySet& marginal, const Matrix& encodings,
                        std::span<const model::AgentPose> poses);

/// Input assembled from a marginal set (confidences are not used).
RecombinerInput make_input(const sampler::ModalitySet& marginal, const Matrix& encodings,
                           std::span<const model::AgentPose> poses);

/// One training scene: recombiner input plus ground-truth endpoints.
struct RecombinerSample {
  RecombinerInput input;
  Matrix truth;  // A x 2
  std::string scene_id;
};

/// Decodes each scene with the frozen model (evaluation reference), samples
/// K marginal modalities per agent with ground truth, and pairs them with
/// the true endpoints. Scenes without such agents are skipped.
std::vector<RecombinerSample> make_samples(const model::PredictionModel& model, std::span<const scene::Scene> scenes,
                                           const sampler::SamplerConfig& sampler);

/// Winner-take-all training with the shared schedule; batch_size counts
/// scenes per optimizer step. Divergence throws model::TrainingDiverged.
std::vector<model::EpochLog> train_recombiner(Recombiner& model, std::span<const RecombinerSample> samples,
                                              const model::TrainConfig& config);

/// Mean winner-take-all loss over samples, without training.
double mean_wta_loss(const Recombiner& model, std::span<const RecombinerSample> samples);

}  // namespace scenecast::recombiner
