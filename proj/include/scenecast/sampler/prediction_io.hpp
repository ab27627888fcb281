#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "scenecast/sampler/sampler.hpp"
#include "scenecast/scene/scene.hpp"

namespace scenecast::sampler {

/// Prediction files are JSON Lines in world coordinates. Line 1 is the header
///   {"format":"scenecast-predictions","version":1,"mode":"...",
///    "orientation":"marginal"|"joint","count":N,"config":{...}}
/// and every further line holds one scene:
///   {"scene":"...","orientation":"joint","agents":[id,...],
///    "endpoints":[[[x,y] x K] x A],"confidence":[[c x K] x A],
///    "flagged":[[0|1 x K] x A],"trajectories":[[[[x,y] x30] x K] x A]}
/// Arrays are always indexed [agent][modality]; in a joint set modality k
/// of every agent belongs to the same scene modality. "confidence",
/// "flagged" and "trajectories" are omitted when absent.
inline constexpr const char* kPredictionFormat = "scenecast-predictions";
inline constexpr int kPredictionFormatVersion = 1;

struct ScenePrediction {
  std::string scene_id;
  ModalitySet set;
};

struct PredictionFile {
  std::string mode;
  std::string config_json;  // "{}" if none
  std::vector<ScenePrediction> scenes;
};

const char* orientation_name(Orientation o);
Orientation parse_orientation(const std::string& name);

/// Applies `tf` to every endpoint and trajectory point.
ModalitySet transform_set(const ModalitySet& set, const scene::Transform& tf);

std::string prediction_to_json_line(const ScenePrediction& p);
ScenePrediction prediction_from_json_line(const std::string& line);

void write_predictions(const std::filesystem::path& path, const PredictionFile& file);
PredictionFile read_predictions(const std::filesystem::path& path);

}  // namespace scenecast::sampler
