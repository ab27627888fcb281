#include "scenecast/model/heatmap_io.hpp"

#include <charconv>
#include <sstream>
#include <stdexcept>

#include "scenecast/io.hpp"

namespace scenecast::model {

namespace {

// Shortest round-trip representation.
std::string fmt(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

}  // namespace

HeatmapRecord heatmap_record(const std::string& scene_id, const SparseHeatmap& heatmap,
                             const scene::Transform& local_to_world) {
  HeatmapRecord r;
  r.scene_id = scene_id;
  r.agent_id = heatmap.agent_id;
  for (const auto& c : heatmap.final_cells()) {
    r.centers.push_back(local_to_world.to_world(c.center));
    r.probability.push_back(c.probability);
  }
  return r;
}

std::string heatmaps_to_text(const std::vector<HeatmapRecord>& records, const std::string& config_json) {
  std::string out = std::string("# ") + kHeatmapFormat + " 1\n# config " + (config_json.empty() ? "{}" : config_json) + "\n";
  for (const auto& r : records) {
    if (r.scene_id.find_first_of(" \t\n") != std::string::npos)
      throw std::invalid_argument("heatmap dump: scene id '" + r.scene_id + "' contains whitespace");
    out += "scene " + r.scene_id + " agent " + std::to_string(r.agent_id) + " cells " +
           std::to_string(r.centers.size()) + "\n";
    for (std::size_t i = 0; i < r.centers.size(); ++i)
      out += fmt(r.centers[i].x()) + " " + fmt(r.centers[i].y()) + " " + fmt(r.probability[i]) + "\n";
  }
  return out;
}

std::vector<HeatmapRecord> heatmaps_from_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind(std::string("# ") + kHeatmapFormat, 0) != 0)
    throw std::runtime_error("not a scenecast heatmap dump");
  std::vector<HeatmapRecord> out;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream head(line);
    std::string kw_scene, kw_agent, kw_cells;
    HeatmapRecord r;
    std::size_t n = 0;
    if (!(head >> kw_scene >> r.scene_id >> kw_agent >> r.agent_id >> kw_cells >> n) || kw_scene != "scene" ||
        kw_agent != "agent" || kw_cells != "cells")
      throw std::runtime_error("heatmap dump: bad record header '" + line + "'");
    for (std::size_t i = 0; i < n; ++i) {
      double x = 0, y = 0, p = 0;
      if (!std::getline(in, line)) throw std::runtime_error("heatmap dump: truncated record for scene " + r.scene_id);
      std::istringstream cell(line);
      if (!(cell >> x >> y >> p)) throw std::runtime_error("heatmap dump: bad cell line '" + line + "'");
      r.centers.emplace_back(x, y);
      r.probability.push_back(p);
    }
    out.push_back(std::move(r));
  }
  return out;
}

void write_heatmaps(const std::filesystem::path& path, const std::vector<HeatmapRecord>& records,
                    const std::string& config_json) {
  io::write_atomic(path, heatmaps_to_text(records, config_json));
}

std::vector<HeatmapRecord> read_heatmaps(const std::filesystem::path& path) {
  return heatmaps_from_text(io::read_file(path));
}

}  // namespace scenecast::model
