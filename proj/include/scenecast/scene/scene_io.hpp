#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "scenecast/scene/scene.hpp"

namespace scenecast::scene {

/// Scene files are JSON Lines. Line 1 is the header
///   {"format":"scenecast-scenes","version":1,"count":N,"config":{...}}
/// and every further line is one scene:
///   {"id":"...","ref":-1,"tf":[tx,ty,theta],
///    "lanes":[{"id":0,"pts":[[x,y],...],"pred":[],"succ":[],"left":[],"right":[]}],
///    "agents":[{"id":0,"hist":[[x,y,yaw,v,mask] x10],"fut":[[x,y] x30]}]}
/// "fut" is omitted for agents without ground truth. Doubles are written
/// with round-trip precision, so write -> read reproduces scenes exactly.
inline constexpr const char* kSceneFormat = "scenecast-scenes";
inline constexpr int kSceneFormatVersion = 1;

std::string scene_to_json_line(const Scene& scene);
Scene scene_from_json_line(const std::string& line);

/// `config_json` (may be empty) is embedded in the header as a record of how the file was made.
void write_scenes(const std::filesystem::path& path, const std::vector<Scene>& scenes,
                  const std::string& config_json = {});
std::vector<Scene> read_scenes(const std::filesystem::path& path);
/// Header object of a scene file as JSON text.
std::string read_scene_header(const std::filesystem::path& path);

}  // namespace scenecast::scene
