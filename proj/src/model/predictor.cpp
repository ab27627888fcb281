#include "scenecast/model/predictor.hpp"

#include <stdexcept>

#include "json.hpp"
#include "scenecast/field/field.hpp"

namespace scenecast::model {

using nlohmann::json;
using nn::Var;

void ModelConfig::validate() const {
  hier.validate();
  if (encoding_width < 1 || point_width < 1) throw std::invalid_argument("model config: widths must be positive");
  if (attention_layers < 0) throw std::invalid_argument("model config: attention_layers must be >= 0");
}

std::string ModelConfig::to_json() const {
  json j;
  j["hier"] = {{"W", hier.W}, {"R0", hier.R0}, {"N1", hier.N1}, {"R1", hier.R1}, {"N2", hier.N2}, {"R2", hier.R2}};
  j["encoding_width"] = encoding_width;
  j["point_width"] = point_width;
  j["attention_layers"] = attention_layers;
  return j.dump();
}

ModelConfig ModelConfig::from_json(const std::string& text) {
  const json j = json::parse(text);
  ModelConfig c;
  if (j.contains("hier")) {
    const auto& h = j.at("hier");
    c.hier.W = h.value("W", c.hier.W);
    c.hier.R0 = h.value("R0", c.hier.R0);
    c.hier.N1 = h.value("N1", c.hier.N1);
    c.hier.R1 = h.value("R1", c.hier.R1);
    c.hier.N2 = h.value("N2", c.hier.N2);
    c.hier.R2 = h.value("R2", c.hier.R2);
  }
  c.encoding_width = j.value("encoding_width", c.encoding_width);
  c.point_width = j.value("point_width", c.point_width);
  c.attention_layers = j.value("attention_layers", c.attention_layers);
  c.validate();
  return c;
}

SceneEncoder::SceneEncoder(nn::ParameterStore& store, int width, Rng& rng)
    : history_(store, "enc.history", {kAgentInputWidth, width, width}, rng),
      lane_(store, "enc.lane", {kLaneInputWidth, width, width}, rng),
      lanes_to_agents_(store, "enc.lanes2agents", width, width, rng),
      agents_to_agents_(store, "enc.agents2agents", width, width, rng) {}

SceneEncoder::Output SceneEncoder::operator()(nn::Graph& g, const SceneInputs& in) const {
  Var agents = history_(g, g.constant(in.agents));
  Var lanes = lane_(g, g.constant(in.lanes));
  agents = lanes_to_agents_(g, agents, lanes);
  agents = agents_to_agents_(g, agents, agents);
  return {agents, lanes};
}

HeatmapDecoder::HeatmapDecoder(nn::ParameterStore& store, const ModelConfig& c, Rng& rng)
    : point_mlp_(store, "dec.point", {kPointInputWidth, c.point_width, c.point_width}, rng),
      w_point_(&store.create("dec.merge.w_point", c.point_width, c.encoding_width, c.point_width + c.encoding_width, rng)),
      w_agent_(&store.create("dec.merge.w_agent", c.encoding_width, c.encoding_width,
                             c.point_width + c.encoding_width, rng)),
      bias_(&store.create("dec.merge.b", 1, c.encoding_width, c.point_width + c.encoding_width, rng)),
      head_(store, "dec.head", {c.encoding_width, c.encoding_width, 1}, rng, false) {
  for (int l = 0; l < c.attention_layers; ++l)
    attention_.emplace_back(store, "dec.attn" + std::to_string(l), c.encoding_width, c.encoding_width, rng);
}

std::vector<nn::AttentionBlock::ProjectedContext> HeatmapDecoder::project_lanes(nn::Graph& g, Var lanes) const {
  std::vector<nn::AttentionBlock::ProjectedContext> out;
  for (const auto& a : attention_) out.push_back(a.project(g, lanes));
  return out;
}

Var HeatmapDecoder::score(nn::Graph& g, Var agents, const std::vector<nn::AttentionBlock::ProjectedContext>& lanes,
                          const Matrix& points, std::span<const int> owner) const {
  Var pf = point_mlp_(g, g.constant(points));
  Var agent_part = nn::gather(nn::matmul(agents, g.param(*w_agent_)), owner);
  Var h = nn::add_bias(nn::add(nn::matmul(pf, g.param(*w_point_)), agent_part), g.param(*bias_));
  for (std::size_t l = 0; l < attention_.size(); ++l) h = attention_[l].attend(g, h, lanes[l]);
  return head_(g, h);
}

Matrix point_inputs(const std::vector<Vec2d>& centers, const AgentPose& pose) {
  // Offset of the point from where the agent would be at constant velocity.
  const double reach = pose.speed * scene::kFutureFrames * scene::kFrameDt;
  Matrix m(static_cast<Eigen::Index>(centers.size()), kPointInputWidth);
  for (std::size_t p = 0; p < centers.size(); ++p) {
    const Vec2d rel = pose.to_agent(centers[p]);
    const auto r = static_cast<Eigen::Index>(p);
    m(r, 0) = centers[p].x() / kSceneScale;
    m(r, 1) = centers[p].y() / kSceneScale;
    m(r, 2) = rel.x() / kAgentScale;
    m(r, 3) = rel.y() / kAgentScale;
    m(r, 4) = (rel.x() - reach) / kAnchorScale;
    m(r, 5) = rel.y() / kAnchorScale;
  }
  return m;
}

double level_sigma(const HierConfig& c, int level) { return field::kTargetSigma * c.cell_size(level) / c.R2; }

PredictionModel::PredictionModel(const ModelConfig& config, std::uint64_t seed) : config_(config) {
  config_.validate();
  Rng rng(seed);
  encoder_ = SceneEncoder(store_, config_.encoding_width, rng);
  decoder_ = HeatmapDecoder(store_, config_, rng);
}

PredictionModel::Hierarchy PredictionModel::run(nn::Graph& g, const SceneInputs& in, const SceneEncoder::Output& enc,
                                                std::span<const int> rows) const {
  const HierConfig& hc = config_.hier;
  const auto lanes = decoder_.project_lanes(g, enc.lanes);
  Hierarchy H;
  H.per_agent.resize(rows.size());
  const int keep[2] = {hc.N1, hc.N2};
  const std::vector<GridCell> coarse = coarse_cells(hc);
  for (int l = 0; l < 3; ++l) {
    std::vector<int> owner;
    std::vector<Matrix> blocks;
    Eigen::Index total = 0;
    for (std::size_t a = 0; a < rows.size(); ++a) {
      LevelEval& lv = H.per_agent[a][static_cast<std::size_t>(l)];
      if (l == 0) {
        lv.cells = coarse;
      } else {
        const LevelEval& prev = H.per_agent[a][static_cast<std::size_t>(l - 1)];
        std::vector<GridCell> parents;
        for (int s : prev.selected) parents.push_back(prev.cells[static_cast<std::size_t>(s)]);
        lv.cells = subdivide(hc, parents);
      }
      for (const auto& c : lv.cells) lv.centers.push_back(cell_center(hc, c));
      blocks.push_back(point_inputs(lv.centers, in.poses[static_cast<std::size_t>(rows[a])]));
      owner.insert(owner.end(), lv.cells.size(), rows[a]);
      total += static_cast<Eigen::Index>(lv.cells.size());
    }
    Matrix points(total, kPointInputWidth);
    Eigen::Index at = 0;
    for (const auto& b : blocks) {
      points.middleRows(at, b.rows()) = b;
      at += b.rows();
    }
    Var logits = decoder_.score(g, enc.agents, lanes, points, owner);
    H.logits[static_cast<std::size_t>(l)] = logits;
    at = 0;
    for (std::size_t a = 0; a < rows.size(); ++a) {
      LevelEval& lv = H.per_agent[a][static_cast<std::size_t>(l)];
      const auto n = static_cast<Eigen::Index>(lv.cells.size());
      lv.scores.assign(logits.value().data() + at, logits.value().data() + at + n);
      at += n;
      if (l < 2) lv.selected = select_top(lv.scores, lv.cells, keep[l]);
    }
  }
  return H;
}

namespace {

std::vector<int> rows_for(const SceneInputs& in, std::span<const int> agent_ids) {
  std::vector<int> rows;
  if (agent_ids.empty()) {
    for (std::size_t i = 0; i < in.agent_ids.size(); ++i) rows.push_back(static_cast<int>(i));
  } else {
    for (int id : agent_ids) rows.push_back(in.row_of(id));
  }
  return rows;
}

double squash(double logit) {
  const double p = logit >= 0 ? 1.0 / (1.0 + std::exp(-logit)) : std::exp(logit) / (1.0 + std::exp(logit));
  return std::clamp(p, field::kProbabilityClamp, 1.0 - field::kProbabilityClamp);
}

}  // namespace

SceneDecoding PredictionModel::decode(const scene::Scene& normalized, std::span<const int> agent_ids) const {
  nn::Graph g(false);
  SceneDecoding out;
  out.inputs = scene_inputs(normalized);
  const auto enc = encoder_(g, out.inputs);
  out.encodings = enc.agents.value();
  const auto rows = rows_for(out.inputs, agent_ids);
  if (rows.empty()) return out;
  const Hierarchy H = run(g, out.inputs, enc, rows);
  for (std::size_t a = 0; a < rows.size(); ++a)
    out.heatmaps.push_back(heatmap_from_levels(config_.hier, H.per_agent[a], squash,
                                               out.inputs.agent_ids[static_cast<std::size_t>(rows[a])]));
  return out;
}

Var PredictionModel::training_loss(nn::Graph& g, const scene::Scene& normalized, std::span<const int> agent_ids) const {
  if (agent_ids.empty()) throw std::invalid_argument("training_loss: no agents to supervise");
  const SceneInputs in = scene_inputs(normalized);
  const auto enc = encoder_(g, in);
  const auto rows = rows_for(in, agent_ids);
  const Hierarchy H = run(g, in, enc, rows);
  std::vector<Matrix> targets;
  Eigen::Index total = 0;
  for (int l = 0; l < 3; ++l) {
    for (std::size_t a = 0; a < rows.size(); ++a) {
      const auto& track = normalized.agents[static_cast<std::size_t>(rows[a])];
      if (!track.future) throw std::invalid_argument("training_loss: agent " + std::to_string(track.id) + " has no ground truth");
      const LevelEval& lv = H.per_agent[a][static_cast<std::size_t>(l)];
      targets.push_back(field::target_values(track.future->back(), lv.centers, config_.hier.cell_size(l),
                                             level_sigma(config_.hier, l)));
      total += targets.back().rows();
    }
  }
  Matrix y(total, 1);
  Eigen::Index at = 0;
  for (const auto& t : targets) {
    y.middleRows(at, t.rows()) = t;
    at += t.rows();
  }
  Var logits = nn::concat({H.logits[0], H.logits[1], H.logits[2]}, 0);
  return field::focal_loss(y, nn::sigmoid(logits));
}

void PredictionModel::save(const std::string& path, const std::string& extra_meta_json) const {
  json meta = extra_meta_json.empty() ? json::object() : json::parse(extra_meta_json);
  meta["kind"] = "heatmap-model";
  meta["model"] = json::parse(config_.to_json());
  nn::save_checkpoint(store_, meta.dump(), path);
}

std::unique_ptr<PredictionModel> PredictionModel::load(const std::string& path) {
  const json meta = json::parse(nn::read_checkpoint_meta(path));
  if (meta.value("kind", "") != "heatmap-model")
    throw std::runtime_error(path + " is not a heatmap-model checkpoint (kind '" + meta.value("kind", "") + "')");
  auto model = std::make_unique<PredictionModel>(ModelConfig::from_json(meta.at("model").dump()));
  nn::load_checkpoint(model->store_, path);
  return model;
}

}  // namespace scenecast::model
