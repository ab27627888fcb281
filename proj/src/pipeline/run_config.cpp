#include "scenecast/pipeline/run_config.hpp"

#include <set>
#include <stdexcept>

#include "json.hpp"

namespace scenecast::pipeline {

using nlohmann::json;

namespace {

void check_keys(const json& j, const std::string& section, const std::set<std::string>& allowed) {
  if (!j.is_object()) throw std::invalid_argument("config: '" + section + "' must be an object");
  for (const auto& [key, value] : j.items())
    if (!allowed.contains(key)) throw std::invalid_argument("config: unknown key '" + key + "' in '" + section + "'");
}

template <typename T>
void read(const json& j, const char* key, T& into) {
  if (j.contains(key)) into = j.at(key).get<T>();
}

json generator_json(const scene::GeneratorConfig& g) {
  json templates = json::array();
  for (auto t : g.templates) templates.push_back(scene::to_string(t));
  return {{"min_agents", g.min_agents},
          {"max_agents", g.max_agents},
          {"templates", templates},
          {"lane_width", g.lane_width},
          {"arm_length", g.arm_length},
          {"roundabout_radius", g.roundabout_radius},
          {"max_curvature", g.max_curvature},
          {"spawn_min_distance", g.spawn_min_distance},
          {"spawn_max_distance", g.spawn_max_distance},
          {"exit_spawn_fraction", g.exit_spawn_fraction},
          {"min_speed", g.min_speed},
          {"max_speed", g.max_speed},
          {"min_spacing", g.min_spacing},
          {"position_noise", g.position_noise},
          {"yaw_noise", g.yaw_noise},
          {"speed_noise", g.speed_noise},
          {"missing_history_prob", g.missing_history_prob},
          {"missing_future_prob", g.missing_future_prob},
          {"interaction_fraction", g.interaction_fraction},
          {"yield_window", g.yield_window},
          {"yield_gap", g.yield_gap},
          {"max_endpoint_range", g.max_endpoint_range}};
}

void read_generator(const json& j, scene::GeneratorConfig& g) {
  check_keys(j, "generator", [] {
    std::set<std::string> keys;
    const json defaults = generator_json({});
    for (const auto& [k, v] : defaults.items()) keys.insert(k);
    return keys;
  }());
  read(j, "min_agents", g.min_agents);
  read(j, "max_agents", g.max_agents);
  if (j.contains("templates")) {
    g.templates.clear();
    for (const auto& t : j.at("templates")) g.templates.push_back(scene::map_template_from_string(t.get<std::string>()));
  }
  read(j, "lane_width", g.lane_width);
  read(j, "arm_length", g.arm_length);
  read(j, "roundabout_radius", g.roundabout_radius);
  read(j, "max_curvature", g.max_curvature);
  read(j, "spawn_min_distance", g.spawn_min_distance);
  read(j, "spawn_max_distance", g.spawn_max_distance);
  read(j, "exit_spawn_fraction", g.exit_spawn_fraction);
  read(j, "min_speed", g.min_speed);
  read(j, "max_speed", g.max_speed);
  read(j, "min_spacing", g.min_spacing);
  read(j, "position_noise", g.position_noise);
  read(j, "yaw_noise", g.yaw_noise);
  read(j, "speed_noise", g.speed_noise);
  read(j, "missing_history_prob", g.missing_history_prob);
  read(j, "missing_future_prob", g.missing_future_prob);
  read(j, "interaction_fraction", g.interaction_fraction);
  read(j, "yield_window", g.yield_window);
  read(j, "yield_gap", g.yield_gap);
  read(j, "max_endpoint_range", g.max_endpoint_range);
}

json sampler_json(const sampler::SamplerConfig& s) {
  return {{"K", s.K},
          {"r", s.r},
          {"order", s.order == sampler::AgentOrder::DescendingSpeed ? "descending-speed" : "input"},
          {"cross_suppression", s.cross_suppression}};
}

void read_sampler(const json& j, sampler::SamplerConfig& s) {
  check_keys(j, "sampler", {"K", "r", "order", "cross_suppression"});
  read(j, "K", s.K);
  read(j, "r", s.r);
  read(j, "cross_suppression", s.cross_suppression);
  if (j.contains("order")) {
    const auto o = j.at("order").get<std::string>();
    if (o == "descending-speed")
      s.order = sampler::AgentOrder::DescendingSpeed;
    else if (o == "input")
      s.order = sampler::AgentOrder::Input;
    else
      throw std::invalid_argument("config: sampler.order must be 'descending-speed' or 'input'");
  }
}

json schedule_json(const StageSchedule& s) {
  json ms = json::array();
  for (const auto& [epoch, factor] : s.milestones) ms.push_back(json::array({epoch, factor}));
  return {{"epochs", s.epochs}, {"batch_size", s.batch_size}, {"lr", s.lr}, {"milestones", ms},
          {"max_agents", s.max_agents}};
}

void read_schedule(const json& j, const std::string& name, StageSchedule& s) {
  check_keys(j, "train." + name, {"epochs", "batch_size", "lr", "milestones", "max_agents"});
  read(j, "epochs", s.epochs);
  read(j, "batch_size", s.batch_size);
  read(j, "lr", s.lr);
  read(j, "max_agents", s.max_agents);
  if (j.contains("milestones")) {
    s.milestones.clear();
    for (const auto& m : j.at("milestones")) s.milestones.emplace_back(m.at(0).get<int>(), m.at(1).get<double>());
  }
}

}  // namespace

model::TrainConfig StageSchedule::train_config(std::uint64_t seed) const {
  model::TrainConfig c;
  c.epochs = epochs;
  c.batch_size = batch_size;
  c.schedule.base_lr = lr;
  c.schedule.milestones = milestones;
  c.seed = seed;
  c.max_agents = max_agents;
  return c;
}

void RunConfig::validate() const {
  generator.validate();
  model.validate();
  sampler.validate();
  recombiner.validate();
  for (const auto* s : {&decoder_schedule, &trajectory_schedule, &recombiner_schedule}) s->train_config(seed).validate();
  if (!(d_col > 0)) throw std::invalid_argument("config: d_col must be > 0");
  if (recombiner.K != sampler.K)
    throw std::invalid_argument("config: recombiner.K (" + std::to_string(recombiner.K) + ") must equal sampler.K (" +
                                std::to_string(sampler.K) + ")");
}

std::string RunConfig::to_json(int indent) const {
  json j;
  j["seed"] = seed;
  j["threads"] = threads;
  j["d_col"] = d_col;
  j["generator"] = generator_json(generator);
  j["model"] = json::parse(model.to_json());
  j["sampler"] = sampler_json(sampler);
  j["recombiner"] = json::parse(recombiner.to_json());
  j["train"] = {{"decoder", schedule_json(decoder_schedule)},
                {"trajectory", schedule_json(trajectory_schedule)},
                {"recombiner", schedule_json(recombiner_schedule)}};
  return j.dump(indent);
}

RunConfig RunConfig::merge_json(const RunConfig& base, const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config: not valid JSON: ") + e.what());
  }
  check_keys(j, "config", {"seed", "threads", "d_col", "generator", "model", "sampler", "recombiner", "train"});
  RunConfig c = base;
  try {
    read(j, "seed", c.seed);
    read(j, "threads", c.threads);
    read(j, "d_col", c.d_col);
    if (j.contains("generator")) read_generator(j.at("generator"), c.generator);
    if (j.contains("model")) {
      check_keys(j.at("model"), "model", {"hier", "encoding_width", "point_width", "attention_layers"});
      json merged = json::parse(c.model.to_json());
      merged.merge_patch(j.at("model"));
      c.model = model::ModelConfig::from_json(merged.dump());
    }
    if (j.contains("sampler")) read_sampler(j.at("sampler"), c.sampler);
    if (j.contains("recombiner")) {
      check_keys(j.at("recombiner"), "recombiner", {"L", "K", "D", "attention_layers", "tau", "hard"});
      json merged = json::parse(c.recombiner.to_json());
      merged.merge_patch(j.at("recombiner"));
      c.recombiner = recombiner::RecombinerConfig::from_json(merged.dump());
    }
    if (j.contains("train")) {
      const auto& t = j.at("train");
      check_keys(t, "train", {"decoder", "trajectory", "recombiner"});
      if (t.contains("decoder")) read_schedule(t.at("decoder"), "decoder", c.decoder_schedule);
      if (t.contains("trajectory")) read_schedule(t.at("trajectory"), "trajectory", c.trajectory_schedule);
      if (t.contains("recombiner")) read_schedule(t.at("recombiner"), "recombiner", c.recombiner_schedule);
    }
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  return c;
}

RunConfig RunConfig::from_json(const std::string& text) { return merge_json(RunConfig{}, text); }

}  // namespace scenecast::pipeline
