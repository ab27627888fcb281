#pragma once

// Synthetic recombiner inputs shared by unit and acceptance tests.

#include <utility>
#include <vector>

#include "scenecast/recombiner/recombiner.hpp"

namespace scenecast::testing {

inline recombiner::RecombinerInput random_recombiner_input(Rng& rng, int A, int K, int encoding_width) {
  recombiner::RecombinerInput in;
  in.endpoints.resize(static_cast<Eigen::Index>(A) * K, 2);
  in.encodings.resize(A, encoding_width);
  for (int a = 0; a < A; ++a) {
    model::AgentPose pose;
    pose.position = Vec2d(rng.uniform(-30, 30), rng.uniform(-30, 30));
    pose.yaw = rng.uniform(-M_PI, M_PI);
    pose.speed = rng.uniform(0, 12);
    in.poses.push_back(pose);
    for (int k = 0; k < K; ++k)
      in.endpoints.row(a * K + k) =
          (pose.position + Vec2d(rng.uniform(-25, 25), rng.uniform(-25, 25))).transpose();
    for (int d = 0; d < encoding_width; ++d) in.encodings(a, d) = rng.uniform(-1, 1);
  }
  return in;
}

/// Agent 0 has one endpoint close ahead of it (always the truth) and K-1 far
/// decoys. Agent 1 has an "ahead" and a "left" endpoint, one of them the
/// truth with equal odds, plus K-2 far decoys; slots are shuffled. With
/// L >= 2, winner-take-all training can only cover both of agent 1's
/// alternatives by placing agent 0 at the same endpoint twice.
inline std::vector<recombiner::RecombinerSample> reselection_samples(Rng& rng, int count, int K, int encoding_width) {
  std::vector<recombiner::RecombinerSample> out;
  auto shuffled = [&]() {
    std::vector<int> slots(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) slots[static_cast<std::size_t>(k)] = k;
    for (int k = K - 1; k > 0; --k) std::swap(slots[static_cast<std::size_t>(k)], slots[static_cast<std::size_t>(rng.uniform_int(0, k))]);
    return slots;
  };
  for (int n = 0; n < count; ++n) {
    recombiner::RecombinerSample s;
    s.input = random_recombiner_input(rng, 2, K, encoding_width);
    s.truth.resize(2, 2);
    const auto& p0 = s.input.poses[0];
    const auto& p1 = s.input.poses[1];
    const auto slots0 = shuffled();
    const auto slots1 = shuffled();
    for (int k = 0; k < K; ++k) {
      const Vec2d local0 = slots0[static_cast<std::size_t>(k)] == 0 ? Vec2d(rng.uniform(5, 10), rng.uniform(-1, 1))
                                                                     : Vec2d(rng.uniform(45, 60), rng.uniform(-8, 8));
      s.input.endpoints.row(k) = p0.to_scene(local0).transpose();
      const int type = slots1[static_cast<std::size_t>(k)];
      const Vec2d local1 = type == 0   ? Vec2d(rng.uniform(18, 22), rng.uniform(-1, 1))
                           : type == 1 ? Vec2d(rng.uniform(10, 14), rng.uniform(10, 14))
                                       : Vec2d(rng.uniform(-60, -45), rng.uniform(-8, 8));
      s.input.endpoints.row(K + k) = p1.to_scene(local1).transpose();
    }
    const int truth_type = rng.uniform_int(0, 1);
    for (int k = 0; k < K; ++k) {
      if (slots0[static_cast<std::size_t>(k)] == 0) s.truth.row(0) = s.input.endpoints.row(k);
      if (slots1[static_cast<std::size_t>(k)] == truth_type) s.truth.row(1) = s.input.endpoints.row(K + k);
    }
    s.scene_id = "reselect-" + std::to_string(n);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace scenecast::testing
