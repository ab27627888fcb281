#include "scenecast/pipeline/pipeline.hpp"

#include <algorithm>
#include <map>
#include <memory>

#include "scenecast/scene/generator.hpp"
#include <stdexcept>

namespace scenecast::pipeline {

std::string to_string(Mode m) {
  switch (m) {
    case Mode::Marginal: return "marginal";
    case Mode::JointAlgo: return "joint-algo";
    case Mode::JointThomas: return "joint-thomas";
  }
  return "?";
}

Mode mode_from_string(const std::string& s) {
  if (s == "marginal") return Mode::Marginal;
  if (s == "joint-algo") return Mode::JointAlgo;
  if (s == "joint-thomas") return Mode::JointThomas;
  throw std::invalid_argument("unknown mode '" + s + "' (expected marginal, joint-algo or joint-thomas)");
}

namespace {

void complete_trajectories(const model::TrajectoryModel& traj, const scene::Scene& norm, sampler::ModalitySet& set) {
  set.trajectories.clear();
  for (std::size_t a = 0; a < set.endpoints.size(); ++a) {
    const auto futures = traj.complete(norm.agent(set.agent_ids[a]), set.endpoints[a]);
    set.trajectories.emplace_back(futures.begin(), futures.end());
  }
}

}  // namespace

PredictedScene predict_scene(const Models& models, const scene::Scene& scene, Mode mode,
                             const sampler::SamplerConfig& config) {
  if (models.decoder == nullptr) throw std::invalid_argument("predict_scene: no decoder model");
  if (mode == Mode::JointThomas && models.recombiner == nullptr)
    throw std::invalid_argument("predict_scene: joint-thomas needs a recombiner model");
  config.validate();

  PredictedScene out;
  out.prediction.scene_id = scene.id;
  out.prediction.set.orientation = mode == Mode::Marginal ? sampler::Orientation::Marginal : sampler::Orientation::Joint;
  std::vector<int> ids;
  for (const auto& a : scene.agents)
    if (a.current().present) ids.push_back(a.id);
  if (ids.empty()) {
    out.local_to_world = scene.transform;
    return out;
  }
  const scene::Scene norm = scene::normalize_scene(scene, scene::select_reference(scene));
  out.local_to_world = norm.transform;

  auto dec = models.decoder->decode(norm, ids);
  sampler::ModalitySet set;
  if (mode == Mode::JointAlgo) {
    std::vector<double> speeds;
    for (int id : ids) speeds.push_back(dec.inputs.poses[static_cast<std::size_t>(dec.inputs.row_of(id))].speed);
    set = sampler::sample_joint(dec.heatmaps, speeds, config);
  } else {
    set = sampler::sample_marginal_set(dec.heatmaps, config);
    if (mode == Mode::JointThomas) {
      Matrix enc(static_cast<Eigen::Index>(ids.size()), dec.encodings.cols());
      std::vector<model::AgentPose> poses;
      for (std::size_t i = 0; i < ids.size(); ++i) {
        const int row = dec.inputs.row_of(ids[i]);
        enc.row(static_cast<Eigen::Index>(i)) = dec.encodings.row(row);
        poses.push_back(dec.inputs.poses[static_cast<std::size_t>(row)]);
      }
      set = recombiner::recombine(*models.recombiner, set, enc, poses).joint;
    }
  }
  if (models.trajectory != nullptr) complete_trajectories(*models.trajectory, norm, set);
  out.prediction.set = sampler::transform_set(set, norm.transform);
  out.heatmaps = std::move(dec.heatmaps);
  return out;
}

std::vector<PredictedScene> predict_scenes(const Models& models, std::span<const scene::Scene> scenes, Mode mode,
                                           const sampler::SamplerConfig& config, unsigned threads) {
  return parallel_map<PredictedScene>(scenes.size(), threads, [&](std::size_t i) {
    return predict_scene(models, scenes[i], mode, config);
  });
}

namespace {

// Distinct, fixed streams per stage and purpose.
std::uint64_t stage_seed(std::uint64_t seed, std::uint64_t stage) { return scene::dataset_scene_seed(seed, 1000 + stage); }

model::TrainConfig stage_config(const StageSchedule& schedule, std::uint64_t seed, const EpochCallback& on_epoch) {
  auto c = schedule.train_config(seed);
  c.on_epoch = on_epoch;
  return c;
}

}  // namespace

std::unique_ptr<model::PredictionModel> train_decoder_stage(const RunConfig& config,
                                                            std::span<const scene::Scene> scenes,
                                                            const EpochCallback& on_epoch) {
  config.validate();
  auto m = std::make_unique<model::PredictionModel>(config.model, stage_seed(config.seed, 0));
  model::train_decoder(*m, scenes, stage_config(config.decoder_schedule, stage_seed(config.seed, 1), on_epoch));
  return m;
}

std::unique_ptr<model::TrajectoryModel> train_trajectory_stage(const RunConfig& config,
                                                               std::span<const scene::Scene> scenes,
                                                               const EpochCallback& on_epoch) {
  config.validate();
  auto m = std::make_unique<model::TrajectoryModel>(stage_seed(config.seed, 2));
  model::train_trajectory(*m, scenes, stage_config(config.trajectory_schedule, stage_seed(config.seed, 3), on_epoch));
  return m;
}

std::unique_ptr<recombiner::Recombiner> train_recombiner_stage(const RunConfig& config,
                                                               const model::PredictionModel& decoder,
                                                               std::span<const scene::Scene> scenes,
                                                               const EpochCallback& on_epoch) {
  config.validate();
  const auto samples = recombiner::make_samples(decoder, scenes, config.sampler);
  if (samples.empty()) throw std::runtime_error("recombiner stage: no training scene has an agent with ground truth");
  auto m = std::make_unique<recombiner::Recombiner>(config.recombiner, decoder.config().encoding_width,
                                                    stage_seed(config.seed, 4));
  recombiner::train_recombiner(*m, samples, stage_config(config.recombiner_schedule, stage_seed(config.seed, 5), on_epoch));
  return m;
}

metrics::EvalReport evaluate(const sampler::PredictionFile& predictions, std::span<const scene::Scene> scenes,
                             double d_col, unsigned threads) {
  std::map<std::string, std::size_t> by_id;
  for (std::size_t i = 0; i < scenes.size(); ++i) by_id.emplace(scenes[i].id, i);
  for (const auto& p : predictions.scenes)
    if (!by_id.contains(p.scene_id))
      throw std::runtime_error("prediction for scene '" + p.scene_id + "' which is not in the scene file");

  const auto& preds = predictions.scenes;
  auto per_scene = parallel_map<std::optional<metrics::SceneMetrics>>(preds.size(), threads, [&](std::size_t i) {
    const scene::Scene world = scene::denormalize_scene(scenes[by_id.at(preds[i].scene_id)]);
    return metrics::evaluate_scene(preds[i].scene_id, preds[i].set, metrics::ground_truth(world), d_col);
  });
  std::vector<metrics::SceneMetrics> kept;
  int skipped = std::max(0, static_cast<int>(scenes.size()) - static_cast<int>(preds.size()));
  for (auto& m : per_scene) {
    if (m)
      kept.push_back(std::move(*m));
    else
      ++skipped;
  }
  return metrics::aggregate(std::move(kept), d_col, predictions.mode, skipped);
}

}  // namespace scenecast::pipeline
