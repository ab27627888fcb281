#include "scenecast/scene/scene.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "scenecast/nn/params.hpp"

namespace scenecast::scene {

namespace {

Vec2d rotate(const Vec2d& p, double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  return {c * p.x() - s * p.y(), s * p.x() + c * p.y()};
}

}  // namespace

double wrap_angle(double a) {
  a = std::fmod(a + M_PI, 2.0 * M_PI);
  if (a < 0) a += 2.0 * M_PI;
  return a - M_PI;
}

double Lane::length() const {
  double len = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) len += (points[i] - points[i - 1]).norm();
  return len;
}

Vec2d Transform::to_world(const Vec2d& local) const { return rotate(local, rotation) + translation; }

Vec2d Transform::to_local(const Vec2d& world) const { return rotate(world - translation, -rotation); }

Transform Transform::compose(const Transform& inner) const {
  return {to_world(inner.translation), wrap_angle(rotation + inner.rotation)};
}

const AgentTrack* Scene::find_agent(int agent_id) const {
  for (const auto& a : agents)
    if (a.id == agent_id) return &a;
  return nullptr;
}

const AgentTrack& Scene::agent(int agent_id) const {
  const AgentTrack* a = find_agent(agent_id);
  if (a == nullptr) throw std::out_of_range("scene " + id + " has no agent " + std::to_string(agent_id));
  return *a;
}

const Lane* Scene::find_lane(int lane_id) const {
  for (const auto& l : lanes)
    if (l.id == lane_id) return &l;
  return nullptr;
}

int select_reference(const Scene& scene, ReferenceMode mode, std::uint64_t seed) {
  std::vector<const AgentTrack*> present;
  for (const auto& a : scene.agents)
    if (a.current().present) present.push_back(&a);
  if (present.empty()) throw std::invalid_argument("select_reference: scene " + scene.id + " has no present agent");
  std::sort(present.begin(), present.end(), [](auto* a, auto* b) { return a->id < b->id; });

  if (mode == ReferenceMode::Training) {
    Rng rng(seed);
    return present[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(present.size()) - 1))]->id;
  }
  Vec2d bary = Vec2d::Zero();
  for (auto* a : present) bary += a->current().position;
  bary /= static_cast<double>(present.size());
  const AgentTrack* best = present.front();
  double best_d = (best->current().position - bary).squaredNorm();
  for (auto* a : present) {
    const double d = (a->current().position - bary).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = a;
    }
  }
  return best->id;
}

Scene transform_scene(const Scene& scene, const Transform& tf) {
  Scene out = scene;
  for (auto& lane : out.lanes)
    for (auto& p : lane.points) p = tf.to_world(p);
  for (auto& a : out.agents) {
    for (auto& f : a.history) {
      if (!f.present) continue;
      f.position = tf.to_world(f.position);
      f.yaw = wrap_angle(f.yaw + tf.rotation);
    }
    if (a.future)
      for (auto& p : *a.future) p = tf.to_world(p);
  }
  return out;
}

Scene normalize_scene(const Scene& scene, int reference_id) {
  const AgentTrack* ref = scene.find_agent(reference_id);
  if (ref == nullptr || !ref->current().present)
    throw std::invalid_argument("normalize_scene: reference agent " + std::to_string(reference_id) +
                                " is not present at prediction time in scene " + scene.id);
  // local_to_current maps the new normalized frame into the scene's current frame.
  const Transform local_to_current{ref->current().position, ref->current().yaw};
  const Transform current_to_local{rotate(-local_to_current.translation, -local_to_current.rotation),
                                   -local_to_current.rotation};
  Scene out = transform_scene(scene, current_to_local);
  // Pin the reference exactly to the origin despite rounding.
  for (auto& a : out.agents) {
    if (a.id == reference_id) {
      a.history.back().position = Vec2d::Zero();
      a.history.back().yaw = 0.0;
    }
  }
  out.reference_id = reference_id;
  out.transform = scene.transform.compose(local_to_current);
  return out;
}

Scene denormalize_scene(const Scene& scene) {
  Scene out = transform_scene(scene, scene.transform);
  out.transform = Transform{};
  return out;
}

std::vector<int> predictable_agents(const Scene& scene) {
  std::vector<int> ids;
  for (const auto& a : scene.agents)
    if (a.has_future()) ids.push_back(a.id);
  return ids;
}

std::vector<int> subsample_training_agents(const Scene& scene, std::size_t max_agents, std::uint64_t seed) {
  std::vector<int> ids = predictable_agents(scene);
  std::sort(ids.begin(), ids.end());
  if (ids.size() <= max_agents) return ids;
  Rng rng(seed);
  for (std::size_t i = 0; i < max_agents; ++i) {
    const int j = rng.uniform_int(static_cast<int>(i), static_cast<int>(ids.size()) - 1);
    std::swap(ids[i], ids[static_cast<std::size_t>(j)]);
  }
  ids.resize(max_agents);
  std::sort(ids.begin(), ids.end());
  return ids;
}

double final_heading(const AgentTrack& agent) {
  if (agent.future) {
    const Future& f = *agent.future;
    for (int i = kFutureFrames - 1; i >= 1; --i) {
      const Vec2d d = f[static_cast<std::size_t>(i)] - f[static_cast<std::size_t>(i - 1)];
      if (d.norm() > 1e-3) return std::atan2(d.y(), d.x());
    }
    const Vec2d d = f.back() - agent.current().position;
    if (d.norm() > 1e-3) return std::atan2(d.y(), d.x());
  }
  return agent.current().yaw;
}

double final_speed(const AgentTrack& agent) {
  if (!agent.future) return agent.current().speed;
  const Future& f = *agent.future;
  return (f[kFutureFrames - 1] - f[kFutureFrames - 2]).norm() / kFrameDt;
}

}  // namespace scenecast::scene
