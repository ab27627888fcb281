#include "scenecast/sampler/prediction_io.hpp"

#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "scenecast/io.hpp"

namespace scenecast::sampler {

using nlohmann::json;

namespace {

json point(const Vec2d& p) { return json::array({p.x(), p.y()}); }
Vec2d point(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

}  // namespace

const char* orientation_name(Orientation o) { return o == Orientation::Joint ? "joint" : "marginal"; }

Orientation parse_orientation(const std::string& name) {
  if (name == "joint") return Orientation::Joint;
  if (name == "marginal") return Orientation::Marginal;
  throw std::invalid_argument("unknown orientation '" + name + "' (expected marginal or joint)");
}

ModalitySet transform_set(const ModalitySet& set, const scene::Transform& tf) {
  ModalitySet out = set;
  for (auto& per : out.endpoints)
    for (auto& p : per) p = tf.to_world(p);
  for (auto& per : out.trajectories)
    for (auto& tr : per)
      for (auto& p : tr) p = tf.to_world(p);
  return out;
}

std::string prediction_to_json_line(const ScenePrediction& p) {
  p.set.check();
  json j;
  j["scene"] = p.scene_id;
  j["orientation"] = orientation_name(p.set.orientation);
  j["agents"] = p.set.agent_ids;
  json ends = json::array();
  for (const auto& per : p.set.endpoints) {
    json row = json::array();
    for (const auto& e : per) row.push_back(point(e));
    ends.push_back(row);
  }
  j["endpoints"] = ends;
  if (!p.set.confidence.empty()) j["confidence"] = p.set.confidence;
  if (!p.set.flagged.empty()) {
    json fl = json::array();
    for (const auto& per : p.set.flagged) {
      json row = json::array();
      for (bool f : per) row.push_back(f ? 1 : 0);
      fl.push_back(row);
    }
    j["flagged"] = fl;
  }
  if (p.set.has_trajectories()) {
    json trs = json::array();
    for (const auto& per : p.set.trajectories) {
      json row = json::array();
      for (const auto& tr : per) {
        json pts = json::array();
        for (const auto& q : tr) pts.push_back(point(q));
        row.push_back(pts);
      }
      trs.push_back(row);
    }
    j["trajectories"] = trs;
  }
  return j.dump();
}

ScenePrediction prediction_from_json_line(const std::string& line) {
  const json j = json::parse(line);
  ScenePrediction p;
  p.scene_id = j.at("scene").get<std::string>();
  auto& s = p.set;
  s.orientation = parse_orientation(j.at("orientation").get<std::string>());
  s.agent_ids = j.at("agents").get<std::vector<int>>();
  for (const auto& row : j.at("endpoints")) {
    std::vector<Vec2d> per;
    for (const auto& e : row) per.push_back(point(e));
    s.endpoints.push_back(std::move(per));
  }
  if (j.contains("confidence")) s.confidence = j.at("confidence").get<std::vector<std::vector<double>>>();
  if (j.contains("flagged"))
    for (const auto& row : j.at("flagged")) {
      std::vector<bool> per;
      for (const auto& f : row) per.push_back(f.get<int>() != 0);
      s.flagged.push_back(std::move(per));
    }
  if (j.contains("trajectories"))
    for (const auto& row : j.at("trajectories")) {
      std::vector<Trajectory> per;
      for (const auto& pts : row) {
        if (pts.size() != static_cast<std::size_t>(scene::kFutureFrames))
          throw std::runtime_error("scene " + p.scene_id + ": trajectory has " + std::to_string(pts.size()) +
                                   " points, expected " + std::to_string(scene::kFutureFrames));
        Trajectory tr;
        for (std::size_t t = 0; t < pts.size(); ++t) tr[t] = point(pts[t]);
        per.push_back(tr);
      }
      s.trajectories.push_back(std::move(per));
    }
  s.check();
  return p;
}

void write_predictions(const std::filesystem::path& path, const PredictionFile& file) {
  json header = {{"format", kPredictionFormat}, {"version", kPredictionFormatVersion}, {"mode", file.mode},
                 {"count", file.scenes.size()}};
  if (!file.scenes.empty()) header["orientation"] = orientation_name(file.scenes.front().set.orientation);
  header["config"] = file.config_json.empty() ? json::object() : json::parse(file.config_json);
  std::string out = header.dump() + "\n";
  for (const auto& p : file.scenes) out += prediction_to_json_line(p) + "\n";
  io::write_atomic(path, out);
}

PredictionFile read_predictions(const std::filesystem::path& path) {
  std::istringstream in(io::read_file(path));
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path.string() + ": empty prediction file");
  json h;
  try {
    h = json::parse(line);
  } catch (const json::exception&) {
    throw std::runtime_error(path.string() + ": missing prediction file header");
  }
  if (!h.is_object() || h.value("format", "") != kPredictionFormat)
    throw std::runtime_error(path.string() + ": not a scenecast prediction file");
  if (h.value("version", 0) != kPredictionFormatVersion)
    throw std::runtime_error(path.string() + ": unsupported prediction file version");
  PredictionFile f;
  f.mode = h.value("mode", "");
  f.config_json = h.value("config", json::object()).dump();
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      f.scenes.push_back(prediction_from_json_line(line));
    } catch (const std::exception& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (h.contains("count") && h.at("count").get<std::size_t>() != f.scenes.size())
    throw std::runtime_error(path.string() + ": header announces " + std::to_string(h.at("count").get<std::size_t>()) +
                             " scenes but file holds " + std::to_string(f.scenes.size()));
  return f;
}

}  // namespace scenecast::sampler
