#include "scenecast/model/features.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace scenecast::model {

namespace {

Vec2d rotate(const Vec2d& p, double a) {
  const double c = std::cos(a), s = std::sin(a);
  return {c * p.x() - s * p.y(), s * p.x() + c * p.y()};
}

}  // namespace

Vec2d AgentPose::to_agent(const Vec2d& p) const { return rotate(p - position, -yaw); }
Vec2d AgentPose::to_scene(const Vec2d& p) const { return rotate(p, yaw) + position; }

AgentPose agent_pose(const scene::AgentTrack& agent) {
  for (auto it = agent.history.rbegin(); it != agent.history.rend(); ++it)
    if (it->present) return {it->position, it->yaw, it->speed};
  return {};
}

int SceneInputs::row_of(int agent_id) const {
  for (std::size_t i = 0; i < agent_ids.size(); ++i)
    if (agent_ids[i] == agent_id) return static_cast<int>(i);
  throw std::out_of_range("scene inputs have no agent " + std::to_string(agent_id));
}

SceneInputs scene_inputs(const scene::Scene& s) {
  SceneInputs in;
  const auto A = static_cast<Eigen::Index>(s.agents.size());
  in.agents = Matrix::Zero(A, kAgentInputWidth);
  for (Eigen::Index a = 0; a < A; ++a) {
    const auto& track = s.agents[static_cast<std::size_t>(a)];
    const AgentPose pose = agent_pose(track);
    in.agent_ids.push_back(track.id);
    in.poses.push_back(pose);
    for (int f = 0; f < scene::kHistoryFrames; ++f) {
      const auto& fr = track.history[static_cast<std::size_t>(f)];
      if (!fr.present) continue;
      const Vec2d rel = pose.to_agent(fr.position);
      const Eigen::Index o = f * kHistoryFeatures;
      in.agents(a, o + 0) = fr.position.x() / kSceneScale;
      in.agents(a, o + 1) = fr.position.y() / kSceneScale;
      in.agents(a, o + 2) = rel.x() / kAgentScale;
      in.agents(a, o + 3) = rel.y() / kAgentScale;
      in.agents(a, o + 4) = std::cos(fr.yaw);
      in.agents(a, o + 5) = std::sin(fr.yaw);
      in.agents(a, o + 6) = fr.speed / kSpeedScale;
      in.agents(a, o + 7) = 1.0;
    }
  }
  const auto L = static_cast<Eigen::Index>(s.lanes.size());
  in.lanes = Matrix::Zero(L, kLaneInputWidth);
  for (Eigen::Index l = 0; l < L; ++l) {
    const auto& pts = s.lanes[static_cast<std::size_t>(l)].points;
    const std::size_t n = std::min<std::size_t>(pts.size(), scene::kMaxLanePoints);
    for (std::size_t p = 0; p < n; ++p) {
      in.lanes(l, static_cast<Eigen::Index>(2 * p)) = pts[p].x() / kSceneScale;
      in.lanes(l, static_cast<Eigen::Index>(2 * p + 1)) = pts[p].y() / kSceneScale;
      in.lanes(l, static_cast<Eigen::Index>(2 * scene::kMaxLanePoints + p)) = 1.0;
    }
  }
  return in;
}

Matrix trajectory_history(const scene::AgentTrack& agent) {
  const AgentPose pose = agent_pose(agent);
  Matrix out = Matrix::Zero(1, kTrajectoryHistoryWidth);
  for (int f = 0; f < scene::kHistoryFrames; ++f) {
    const auto& fr = agent.history[static_cast<std::size_t>(f)];
    if (!fr.present) continue;
    const Vec2d rel = pose.to_agent(fr.position);
    const Eigen::Index o = f * 6;
    out(0, o + 0) = rel.x() / kAgentScale;
    out(0, o + 1) = rel.y() / kAgentScale;
    out(0, o + 2) = std::cos(fr.yaw - pose.yaw);
    out(0, o + 3) = std::sin(fr.yaw - pose.yaw);
    out(0, o + 4) = fr.speed / kSpeedScale;
    out(0, o + 5) = 1.0;
  }
  return out;
}

}  // namespace scenecast::model
