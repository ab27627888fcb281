#include "scenecast/scene/scene_io.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "scenecast/io.hpp"

namespace scenecast::scene {

using nlohmann::json;

namespace {

json point(const Vec2d& p) { return json::array({p.x(), p.y()}); }
Vec2d point(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

void check_lane_graph(const Scene& s) {
  for (const auto& lane : s.lanes) {
    if (lane.points.size() < 2 || lane.points.size() > static_cast<std::size_t>(kMaxLanePoints))
      throw std::runtime_error("scene " + s.id + ": lanelet " + std::to_string(lane.id) + " has " +
                               std::to_string(lane.points.size()) + " points (expected 2.." +
                               std::to_string(kMaxLanePoints) + ")");
    for (const auto* rel : {&lane.predecessors, &lane.successors, &lane.left, &lane.right})
      for (int id : *rel)
        if (s.find_lane(id) == nullptr)
          throw std::runtime_error("scene " + s.id + ": lanelet " + std::to_string(lane.id) +
                                   " references missing lanelet " + std::to_string(id));
  }
}

}  // namespace

std::string scene_to_json_line(const Scene& scene) {
  json j;
  j["id"] = scene.id;
  j["ref"] = scene.reference_id;
  j["tf"] = json::array({scene.transform.translation.x(), scene.transform.translation.y(), scene.transform.rotation});
  json lanes = json::array();
  for (const auto& l : scene.lanes) {
    json pts = json::array();
    for (const auto& p : l.points) pts.push_back(point(p));
    lanes.push_back({{"id", l.id}, {"pts", pts}, {"pred", l.predecessors}, {"succ", l.successors},
                     {"left", l.left}, {"right", l.right}});
  }
  j["lanes"] = lanes;
  json agents = json::array();
  for (const auto& a : scene.agents) {
    json hist = json::array();
    for (const auto& f : a.history)
      hist.push_back(json::array({f.position.x(), f.position.y(), f.yaw, f.speed, f.present ? 1 : 0}));
    json aj = {{"id", a.id}, {"hist", hist}};
    if (a.future) {
      json fut = json::array();
      for (const auto& p : *a.future) fut.push_back(point(p));
      aj["fut"] = fut;
    }
    agents.push_back(aj);
  }
  j["agents"] = agents;
  return j.dump();
}

Scene scene_from_json_line(const std::string& line) {
  const json j = json::parse(line);
  Scene s;
  s.id = j.at("id").get<std::string>();
  s.reference_id = j.value("ref", -1);
  if (j.contains("tf")) {
    const auto& tf = j.at("tf");
    s.transform = Transform{Vec2d(tf.at(0).get<double>(), tf.at(1).get<double>()), tf.at(2).get<double>()};
  }
  for (const auto& lj : j.at("lanes")) {
    Lane l;
    l.id = lj.at("id").get<int>();
    for (const auto& p : lj.at("pts")) l.points.push_back(point(p));
    l.predecessors = lj.value("pred", std::vector<int>{});
    l.successors = lj.value("succ", std::vector<int>{});
    l.left = lj.value("left", std::vector<int>{});
    l.right = lj.value("right", std::vector<int>{});
    s.lanes.push_back(std::move(l));
  }
  for (const auto& aj : j.at("agents")) {
    AgentTrack a;
    a.id = aj.at("id").get<int>();
    const auto& hist = aj.at("hist");
    if (hist.size() != static_cast<std::size_t>(kHistoryFrames))
      throw std::runtime_error("scene " + s.id + ": agent " + std::to_string(a.id) + " has " +
                               std::to_string(hist.size()) + " history frames, expected " +
                               std::to_string(kHistoryFrames));
    for (std::size_t f = 0; f < hist.size(); ++f) {
      const auto& fj = hist[f];
      Frame fr;
      fr.present = fj.at(4).get<double>() != 0.0;
      fr.position = Vec2d(fj.at(0).get<double>(), fj.at(1).get<double>());
      fr.yaw = fj.at(2).get<double>();
      fr.speed = fj.at(3).get<double>();
      if (fr.speed < 0) throw std::runtime_error("scene " + s.id + ": negative speed");
      a.history[f] = fr;
    }
    if (aj.contains("fut")) {
      const auto& fut = aj.at("fut");
      if (fut.size() != static_cast<std::size_t>(kFutureFrames))
        throw std::runtime_error("scene " + s.id + ": agent " + std::to_string(a.id) + " has " +
                                 std::to_string(fut.size()) + " future frames, expected " +
                                 std::to_string(kFutureFrames));
      Future f;
      for (std::size_t k = 0; k < fut.size(); ++k) f[k] = point(fut[k]);
      a.future = f;
    }
    s.agents.push_back(std::move(a));
  }
  check_lane_graph(s);
  return s;
}

void write_scenes(const std::filesystem::path& path, const std::vector<Scene>& scenes, const std::string& config_json) {
  json header = {{"format", kSceneFormat}, {"version", kSceneFormatVersion}, {"count", scenes.size()}};
  header["config"] = config_json.empty() ? json::object() : json::parse(config_json);
  std::string out = header.dump() + "\n";
  for (const auto& s : scenes) out += scene_to_json_line(s) + "\n";
  io::write_atomic(path, out);
}

namespace {

json parse_header(const std::string& line, const std::filesystem::path& path) {
  json h;
  try {
    h = json::parse(line);
  } catch (const json::exception&) {
    throw std::runtime_error(path.string() + ": missing scene file header");
  }
  if (!h.is_object() || h.value("format", "") != kSceneFormat)
    throw std::runtime_error(path.string() + ": not a scenecast scene file");
  if (h.value("version", 0) != kSceneFormatVersion)
    throw std::runtime_error(path.string() + ": unsupported scene file version " + std::to_string(h.value("version", 0)));
  return h;
}

}  // namespace

std::vector<Scene> read_scenes(const std::filesystem::path& path) {
  std::istringstream in(io::read_file(path));
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path.string() + ": empty scene file");
  const json header = parse_header(line, path);
  std::vector<Scene> scenes;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      scenes.push_back(scene_from_json_line(line));
    } catch (const std::exception& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (header.contains("count") && header.at("count").get<std::size_t>() != scenes.size())
    throw std::runtime_error(path.string() + ": header announces " + std::to_string(header.at("count").get<std::size_t>()) +
                             " scenes but file holds " + std::to_string(scenes.size()));
  return scenes;
}

std::string read_scene_header(const std::filesystem::path& path) {
  std::istringstream in(io::read_file(path));
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path.string() + ": empty scene file");
  return parse_header(line, path).dump();
}

}  // namespace scenecast::scene
