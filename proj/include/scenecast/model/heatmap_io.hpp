#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "scenecast/model/hierarchy.hpp"
#include "scenecast/scene/scene.hpp"

namespace scenecast::model {

/// Plain-text heatmap dump, final-resolution cells only, world coordinates:
///
///   # scenecast-heatmaps 1
///   # config {"hier":{...},...}
///   scene <scene-id> agent <agent-id> cells <n>
///   <x> <y> <p>            (n lines)
///   scene ...
///
/// Lines starting with '#' after the first two are ignored.
inline constexpr const char* kHeatmapFormat = "scenecast-heatmaps";

struct HeatmapRecord {
  std::string scene_id;
  int agent_id = -1;
  std::vector<Vec2d> centers;
  std::vector<double> probability;
};

/// Final cells of `heatmap` mapped to the world with `local_to_world`.
HeatmapRecord heatmap_record(const std::string& scene_id, const SparseHeatmap& heatmap,
                             const scene::Transform& local_to_world);

std::string heatmaps_to_text(const std::vector<HeatmapRecord>& records, const std::string& config_json = {});
std::vector<HeatmapRecord> heatmaps_from_text(const std::string& text);

void write_heatmaps(const std::filesystem::path& path, const std::vector<HeatmapRecord>& records,
                    const std::string& config_json = {});
std::vector<HeatmapRecord> read_heatmaps(const std::filesystem::path& path);

}  // namespace scenecast::model
