#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "scenecast/scene/scene.hpp"

namespace scenecast::scene {

enum class MapTemplate { Straight, TJunction, Crossroad, Roundabout };

std::string to_string(MapTemplate t);
MapTemplate map_template_from_string(const std::string& s);

/// Parameters of the synthetic scene generator. Distances in meters,
/// speeds in m/s, probabilities in [0, 1].
struct GeneratorConfig {
  int min_agents = 1;
  int max_agents = 8;
  std::vector<MapTemplate> templates{MapTemplate::Straight, MapTemplate::TJunction, MapTemplate::Crossroad,
                                     MapTemplate::Roundabout};
  double lane_width = 3.5;
  double arm_length = 70.0;
  double roundabout_radius = 14.0;
  /// Largest curvature (1/m) of the straight-road template.
  double max_curvature = 0.006;
  /// Upstream distance range from the junction for spawned agents.
  double spawn_min_distance = 3.0;
  double spawn_max_distance = 35.0;
  /// Fraction of agents spawned on exit lanes, already leaving the junction.
  double exit_spawn_fraction = 0.15;
  double min_speed = 3.0;
  double max_speed = 12.0;
  double min_spacing = 9.0;
  double position_noise = 0.03;
  double yaw_noise = 0.01;
  double speed_noise = 0.05;
  double missing_history_prob = 0.1;
  double missing_future_prob = 0.0;
  /// Fraction of scenes with a forced crossing/merge interaction.
  double interaction_fraction = 0.5;
  /// Agents reaching a conflict within this window of each other yield.
  double yield_window = 2.0;
  /// Time the yielding agent trails the priority agent at the conflict.
  double yield_gap = 2.0;
  /// Ground-truth endpoints must stay within this distance of the
  /// evaluation reference agent.
  double max_endpoint_range = 90.0;

  void validate() const;
};

/// Deterministic in (seed, config). The scene is in a world frame with no
/// reference selected.
Scene generate_scene(std::uint64_t seed, const GeneratorConfig& config, std::string id = {});

/// Seed of the index-th scene of a dataset with base seed `seed`.
std::uint64_t dataset_scene_seed(std::uint64_t seed, std::uint64_t index);

std::vector<Scene> generate_dataset(std::uint64_t seed, std::size_t count, const GeneratorConfig& config);

}  // namespace scenecast::scene
