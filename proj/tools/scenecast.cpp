// scenecast command-line entry point: gen-data, train, predict, evaluate,
// render. Every command echoes its resolved configuration to stderr and
// embeds it in its output; outputs are written via write-then-rename.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "scenecast/io.hpp"
#include "scenecast/model/heatmap_io.hpp"
#include "scenecast/nn/allocator.hpp"
#include "scenecast/nn/params.hpp"
#include "scenecast/pipeline/pipeline.hpp"
#include "scenecast/pipeline/render.hpp"
#include "scenecast/pipeline/run_config.hpp"
#include "scenecast/scene/generator.hpp"
#include "scenecast/scene/scene_io.hpp"

namespace fs = std::filesystem;
using namespace scenecast;
using nlohmann::json;

namespace {

constexpr const char* kDataDirEnv = "SCENECAST_DATA_DIR";

/// Relative paths resolve against $SCENECAST_DATA_DIR when it is set.
fs::path resolve(const std::string& p) {
  fs::path path(p);
  if (path.is_relative()) {
    if (const char* dir = std::getenv(kDataDirEnv); dir != nullptr && *dir != '\0') return fs::path(dir) / path;
  }
  return path;
}

struct Overrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> k;
  std::optional<double> radius;
  std::optional<double> d_col;
  std::optional<int> epochs;
  std::optional<unsigned> threads;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config_path, "JSON config file (see README)");
  cmd->add_option("--seed", o.seed, "Base seed");
  cmd->add_option("--threads", o.threads, "Worker threads (0 = all cores)");
}

pipeline::RunConfig resolve_config(const Overrides& o, const std::string& stage = {}) {
  pipeline::RunConfig c;
  if (!o.config_path.empty()) c = pipeline::RunConfig::from_json(io::read_file(resolve(o.config_path)));
  if (o.seed) c.seed = *o.seed;
  if (o.threads) c.threads = *o.threads;
  if (o.k) {
    c.sampler.K = *o.k;
    c.recombiner.K = *o.k;
  }
  if (o.radius) c.sampler.r = *o.radius;
  if (o.d_col) c.d_col = *o.d_col;
  if (o.epochs) {
    if (stage == "decoder") c.decoder_schedule.epochs = *o.epochs;
    if (stage == "trajectory") c.trajectory_schedule.epochs = *o.epochs;
    if (stage == "recombiner") c.recombiner_schedule.epochs = *o.epochs;
  }
  c.validate();
  std::cerr << "resolved config: " << c.to_json() << "\n";
  return c;
}

bool config_sets(const Overrides& o, const char* section) {
  if (o.config_path.empty()) return false;
  return json::parse(io::read_file(resolve(o.config_path))).contains(section);
}

void require_file(const fs::path& p, const std::string& what) {
  if (!fs::exists(p)) throw std::runtime_error(what + " not found: " + p.string());
}

std::string run_meta(const pipeline::RunConfig& c, const std::string& stage, const fs::path& data) {
  return json{{"stage", stage}, {"data", data.string()}, {"run_config", json::parse(c.to_json())}}.dump();
}

// ---------------------------------------------------------------- gen-data

int cmd_gen_data(const Overrides& o, std::size_t count, const std::string& out) {
  const auto c = resolve_config(o);
  const auto scenes = scene::generate_dataset(c.seed, count, c.generator);
  json cfg = {{"seed", c.seed}, {"count", count}, {"run_config", json::parse(c.to_json())}};
  scene::write_scenes(resolve(out), scenes, cfg.dump());
  std::cerr << "wrote " << scenes.size() << " scenes to " << resolve(out).string() << "\n";
  return 0;
}

// ---------------------------------------------------------------- train

int cmd_train(const Overrides& o, const std::string& stage, const std::string& data, const std::string& out,
              const std::string& decoder_path) {
  if (stage == "recombiner") {
    if (decoder_path.empty())
      throw std::runtime_error("recombiner stage needs the decoder stage: pass --decoder with a checkpoint from "
                               "'scenecast train --stage decoder'");
    require_file(resolve(decoder_path), "decoder checkpoint (train --stage decoder first)");
  }
  const auto c = resolve_config(o, stage);
  const fs::path data_path = resolve(data);
  const auto scenes = scene::read_scenes(data_path);
  const fs::path out_path = resolve(out);
  fs::path log_path = out_path;
  log_path += ".log.jsonl";
  std::string log;
  auto on_epoch = [&](const model::EpochLog& l) {
    std::cerr << stage << " epoch " << l.epoch << "  lr " << l.lr << "  loss " << l.mean_loss << "  steps " << l.steps
              << "  " << l.seconds << " s\n";
    log += json{{"epoch", l.epoch}, {"lr", l.lr}, {"loss", l.mean_loss}, {"steps", l.steps}, {"seconds", l.seconds}}
               .dump() +
           "\n";
  };
  const std::string meta = run_meta(c, stage, data_path);
  if (stage == "decoder") {
    pipeline::train_decoder_stage(c, scenes, on_epoch)->save(out_path.string(), meta);
  } else if (stage == "trajectory") {
    pipeline::train_trajectory_stage(c, scenes, on_epoch)->save(out_path.string(), meta);
  } else if (stage == "recombiner") {
    const auto decoder = model::PredictionModel::load(resolve(decoder_path).string());
    pipeline::train_recombiner_stage(c, *decoder, scenes, on_epoch)->save(out_path.string(), meta);
  } else {
    throw std::invalid_argument("unknown stage '" + stage + "' (expected decoder, trajectory or recombiner)");
  }
  io::write_atomic(log_path, log);
  std::cerr << "wrote " << out_path.string() << " and " << log_path.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------- predict

struct PredictArgs {
  std::string data, decoder, trajectory, recombiner, out, heatmaps, mode = "joint-algo";
};

int cmd_predict(const Overrides& o, const PredictArgs& a) {
  const auto mode = pipeline::mode_from_string(a.mode);
  auto c = resolve_config(o);
  require_file(resolve(a.decoder), "decoder checkpoint");
  const auto decoder = model::PredictionModel::load(resolve(a.decoder).string());
  if (config_sets(o, "model") && !(decoder->config() == c.model))
    throw std::runtime_error("model config " + c.model.to_json() + " does not match the decoder checkpoint (" +
                             decoder->config().to_json() + ")");
  c.model = decoder->config();

  std::unique_ptr<model::TrajectoryModel> trajectory;
  if (!a.trajectory.empty()) {
    require_file(resolve(a.trajectory), "trajectory checkpoint");
    trajectory = model::TrajectoryModel::load(resolve(a.trajectory).string());
  }
  std::unique_ptr<recombiner::Recombiner> rec;
  if (mode == pipeline::Mode::JointThomas) {
    if (a.recombiner.empty())
      throw std::runtime_error("joint-thomas needs the recombiner stage: pass --recombiner with a checkpoint from "
                               "'scenecast train --stage recombiner'");
    require_file(resolve(a.recombiner), "recombiner checkpoint");
    rec = recombiner::Recombiner::load(resolve(a.recombiner).string());
    if (rec->config().K != c.sampler.K)
      throw std::runtime_error("recombiner checkpoint expects K=" + std::to_string(rec->config().K) +
                               " marginal modalities but the sampler is configured for K=" +
                               std::to_string(c.sampler.K));
    if (rec->encoding_width() != decoder->config().encoding_width)
      throw std::runtime_error("recombiner checkpoint was trained on encodings of width " +
                               std::to_string(rec->encoding_width()) + ", decoder produces " +
                               std::to_string(decoder->config().encoding_width));
  }

  const auto scenes = scene::read_scenes(resolve(a.data));
  const pipeline::Models models{decoder.get(), trajectory.get(), rec.get()};
  auto predicted = pipeline::predict_scenes(models, scenes, mode, c.sampler, c.threads);

  sampler::PredictionFile file;
  file.mode = a.mode;
  file.config_json = json{{"run_config", json::parse(c.to_json())},
                          {"data", resolve(a.data).string()},
                          {"decoder", resolve(a.decoder).string()},
                          {"trajectory", a.trajectory.empty() ? "" : resolve(a.trajectory).string()},
                          {"recombiner", a.recombiner.empty() ? "" : resolve(a.recombiner).string()}}
                         .dump();
  std::vector<model::HeatmapRecord> records;
  for (auto& p : predicted) {
    if (!a.heatmaps.empty())
      for (const auto& h : p.heatmaps)
        records.push_back(model::heatmap_record(p.prediction.scene_id, h, p.local_to_world));
    file.scenes.push_back(std::move(p.prediction));
  }
  sampler::write_predictions(resolve(a.out), file);
  if (!a.heatmaps.empty()) model::write_heatmaps(resolve(a.heatmaps), records, c.model.to_json());
  std::cerr << "wrote " << file.scenes.size() << " " << a.mode << " predictions to " << resolve(a.out).string()
            << "\n";
  return 0;
}

// ---------------------------------------------------------------- evaluate

int cmd_evaluate(const Overrides& o, const std::string& predictions, const std::string& data,
                 const std::string& out) {
  const auto c = resolve_config(o);
  const auto preds = sampler::read_predictions(resolve(predictions));
  const auto scenes = scene::read_scenes(resolve(data));
  auto report = pipeline::evaluate(preds, scenes, c.d_col, c.threads);
  report.config_json = json{{"run_config", json::parse(c.to_json())},
                            {"predictions", resolve(predictions).string()},
                            {"data", resolve(data).string()}}
                           .dump();
  std::cout << report.table();
  if (!out.empty()) io::write_atomic(resolve(out), report.to_json() + "\n");
  return 0;
}

// ---------------------------------------------------------------- render

int cmd_render(const Overrides& o, const std::string& data, const std::string& scene_id,
               const std::string& predictions, const std::string& heatmaps, const std::string& out) {
  resolve_config(o);
  const auto scenes = scene::read_scenes(resolve(data));
  if (scenes.empty()) throw std::runtime_error("scene file is empty");
  const scene::Scene* chosen = &scenes.front();
  if (!scene_id.empty()) {
    chosen = nullptr;
    for (const auto& s : scenes)
      if (s.id == scene_id) chosen = &s;
    if (chosen == nullptr) throw std::runtime_error("scene '" + scene_id + "' not in " + resolve(data).string());
  }
  std::optional<sampler::ModalitySet> set;
  if (!predictions.empty()) {
    for (auto& p : sampler::read_predictions(resolve(predictions)).scenes)
      if (p.scene_id == chosen->id) set = std::move(p.set);
    if (!set) throw std::runtime_error("no prediction for scene '" + chosen->id + "'");
  }
  std::vector<model::HeatmapRecord> maps;
  if (!heatmaps.empty())
    for (auto& r : model::read_heatmaps(resolve(heatmaps)))
      if (r.scene_id == chosen->id) maps.push_back(std::move(r));
  std::string svg = pipeline::render_svg(scene::denormalize_scene(*chosen), set ? &*set : nullptr, maps);
  io::write_atomic(resolve(out), svg);
  std::cerr << "wrote " << resolve(out).string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  nn::tune_allocator();
  CLI::App app{"scenecast: hierarchical heatmap trajectory prediction with joint sampling"};
  app.require_subcommand(1);
  Overrides o;

  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic scene file");
  std::size_t count = 1000;
  std::string out;
  add_common(gen, o);
  gen->add_option("--count", count, "Number of scenes")->capture_default_str();
  gen->add_option("--out", out, "Output scene file")->required();

  auto* train = app.add_subcommand("train", "Train one stage and write its checkpoint");
  std::string stage, data, decoder_path;
  add_common(train, o);
  train->add_option("--stage", stage, "decoder | trajectory | recombiner")
      ->required()
      ->check(CLI::IsMember({"decoder", "trajectory", "recombiner"}));
  train->add_option("--data", data, "Training scene file")->required();
  train->add_option("--decoder", decoder_path, "Decoder checkpoint (recombiner stage)");
  train->add_option("--epochs", o.epochs, "Epochs of this stage");
  train->add_option("--k", o.k, "Marginal modalities per agent (recombiner stage)");
  train->add_option("--radius", o.radius, "Sampling radius in meters (recombiner stage)");
  train->add_option("--out", out, "Output checkpoint")->required();

  auto* predict = app.add_subcommand("predict", "Predict endpoints and trajectories for every scene");
  PredictArgs pa;
  add_common(predict, o);
  predict->add_option("--data", pa.data, "Scene file")->required();
  predict->add_option("--decoder", pa.decoder, "Decoder checkpoint")->required();
  predict->add_option("--trajectory", pa.trajectory, "Trajectory checkpoint (optional)");
  predict->add_option("--recombiner", pa.recombiner, "Recombiner checkpoint (joint-thomas)");
  predict->add_option("--mode", pa.mode, "marginal | joint-algo | joint-thomas")
      ->check(CLI::IsMember({"marginal", "joint-algo", "joint-thomas"}))
      ->capture_default_str();
  predict->add_option("--k", o.k, "Modalities per agent");
  predict->add_option("--radius", o.radius, "Sampling radius in meters");
  predict->add_option("--heatmaps", pa.heatmaps, "Also dump final-level heatmaps here");
  predict->add_option("--out", pa.out, "Output prediction file")->required();

  auto* evaluate = app.add_subcommand("evaluate", "Score a prediction file against ground truth");
  std::string predictions;
  add_common(evaluate, o);
  evaluate->add_option("--predictions", predictions, "Prediction file")->required();
  evaluate->add_option("--data", data, "Scene file with ground truth")->required();
  evaluate->add_option("--d-col", o.d_col, "Collision distance in meters");
  evaluate->add_option("--out", out, "Write the JSON report here");

  auto* render = app.add_subcommand("render", "Draw one scene as SVG");
  std::string scene_id, heatmaps;
  add_common(render, o);
  render->add_option("--data", data, "Scene file")->required();
  render->add_option("--scene", scene_id, "Scene id (default: first)");
  render->add_option("--predictions", predictions, "Prediction file");
  render->add_option("--heatmaps", heatmaps, "Heatmap dump");
  render->add_option("--out", out, "Output SVG")->required();

  CLI11_PARSE(app, argc, argv);
  try {
    if (gen->parsed()) return cmd_gen_data(o, count, out);
    if (train->parsed()) return cmd_train(o, stage, data, out, decoder_path);
    if (predict->parsed()) return cmd_predict(o, pa);
    if (evaluate->parsed()) return cmd_evaluate(o, predictions, data, out);
    if (render->parsed()) return cmd_render(o, data, scene_id, predictions, heatmaps, out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
