#include "scenecast/model/trajectory.hpp"

#include <stdexcept>

#include "json.hpp"

namespace scenecast::model {

using nlohmann::json;

TrajectoryModel::TrajectoryModel(std::uint64_t seed, int hidden) : hidden_(hidden) {
  Rng rng(seed);
  mlp_ = nn::Mlp(store_, "traj", {kTrajectoryHistoryWidth + 2, hidden, hidden, 2 * scene::kFutureFrames}, rng, false);
}

nn::Var TrajectoryModel::forward(nn::Graph& g, const Matrix& histories, const Matrix& endpoints) const {
  Matrix in(histories.rows(), histories.cols() + 2);
  in << histories, endpoints;
  return mlp_(g, g.constant(std::move(in)));
}

std::vector<scene::Future> TrajectoryModel::complete(const scene::AgentTrack& agent,
                                                     std::span<const Vec2d> endpoints) const {
  const AgentPose pose = agent_pose(agent);
  const Matrix hist = trajectory_history(agent);
  const auto n = static_cast<Eigen::Index>(endpoints.size());
  Matrix h(n, hist.cols()), e(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    h.row(i) = hist;
    const Vec2d rel = pose.to_agent(endpoints[static_cast<std::size_t>(i)]) / kAgentScale;
    e(i, 0) = rel.x();
    e(i, 1) = rel.y();
  }
  nn::Graph g(false);
  const Matrix out = forward(g, h, e).value();
  std::vector<scene::Future> trajs(endpoints.size());
  for (Eigen::Index i = 0; i < n; ++i)
    for (int t = 0; t < scene::kFutureFrames; ++t)
      trajs[static_cast<std::size_t>(i)][static_cast<std::size_t>(t)] =
          pose.to_scene(Vec2d(out(i, 2 * t), out(i, 2 * t + 1)) * kAgentScale);
  return trajs;
}

scene::Future TrajectoryModel::complete(const scene::AgentTrack& agent, const Vec2d& endpoint) const {
  return complete(agent, std::span<const Vec2d>(&endpoint, 1)).front();
}

void TrajectoryModel::save(const std::string& path, const std::string& extra_meta_json) const {
  json meta = extra_meta_json.empty() ? json::object() : json::parse(extra_meta_json);
  meta["kind"] = "trajectory-model";
  meta["hidden"] = hidden_;
  nn::save_checkpoint(store_, meta.dump(), path);
}

std::unique_ptr<TrajectoryModel> TrajectoryModel::load(const std::string& path) {
  const json meta = json::parse(nn::read_checkpoint_meta(path));
  if (meta.value("kind", "") != "trajectory-model")
    throw std::runtime_error(path + " is not a trajectory-model checkpoint (kind '" + meta.value("kind", "") + "')");
  auto m = std::make_unique<TrajectoryModel>(0, meta.value("hidden", 128));
  nn::load_checkpoint(m->store_, path);
  return m;
}

double endpoint_drift(const scene::Future& trajectory, const Vec2d& endpoint) {
  return (trajectory.back() - endpoint).norm();
}

TrajectorySample trajectory_sample(const scene::AgentTrack& agent) {
  if (!agent.future) throw std::invalid_argument("trajectory_sample: agent " + std::to_string(agent.id) + " has no ground truth");
  const AgentPose pose = agent_pose(agent);
  TrajectorySample s;
  s.history = trajectory_history(agent);
  s.endpoint.resize(1, 2);
  s.target.resize(1, 2 * scene::kFutureFrames);
  for (int t = 0; t < scene::kFutureFrames; ++t) {
    const Vec2d rel = pose.to_agent((*agent.future)[static_cast<std::size_t>(t)]) / kAgentScale;
    s.target(0, 2 * t) = rel.x();
    s.target(0, 2 * t + 1) = rel.y();
  }
  s.endpoint << s.target(0, 2 * scene::kFutureFrames - 2), s.target(0, 2 * scene::kFutureFrames - 1);
  return s;
}

}  // namespace scenecast::model
