#include "scenecast/recombiner/recombiner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "json.hpp"

namespace scenecast::recombiner {

using nlohmann::json;
using nn::Var;

namespace {

// Keeps the distance differentiable when a prediction hits the truth exactly.
constexpr double kDistanceEps = 1e-12;

}  // namespace

void RecombinerConfig::validate() const {
  if (L < 1) throw std::invalid_argument("recombiner config: L must be >= 1");
  if (K < 1) throw std::invalid_argument("recombiner config: K must be >= 1");
  if (D < 1) throw std::invalid_argument("recombiner config: D must be >= 1");
  if (attention_layers < 0) throw std::invalid_argument("recombiner config: attention_layers must be >= 0");
  if (!(tau > 0.0) || !std::isfinite(tau)) throw std::invalid_argument("recombiner config: tau must be > 0");
}

std::string RecombinerConfig::to_json() const {
  return json{{"L", L}, {"K", K}, {"D", D}, {"attention_layers", attention_layers}, {"tau", tau}, {"hard", hard}}.dump();
}

RecombinerConfig RecombinerConfig::from_json(const std::string& text) {
  const json j = json::parse(text);
  RecombinerConfig c;
  c.L = j.value("L", c.L);
  c.K = j.value("K", c.K);
  c.D = j.value("D", c.D);
  c.attention_layers = j.value("attention_layers", c.attention_layers);
  c.tau = j.value("tau", c.tau);
  c.hard = j.value("hard", c.hard);
  c.validate();
  return c;
}

int RecombinerInput::modalities() const {
  const int a = agents();
  return a == 0 ? 0 : static_cast<int>(endpoints.rows()) / a;
}

void RecombinerInput::check(int K) const {
  const auto A = encodings.rows();
  if (A < 1) throw nn::ShapeError("recombiner input: no agents");
  if (endpoints.cols() != 2 || endpoints.rows() != A * K)
    throw nn::ShapeError("recombiner input: endpoints " + nn::shape_string(endpoints) + " for " + std::to_string(A) +
                         " agents x K=" + std::to_string(K));
  if (static_cast<Eigen::Index>(poses.size()) != A)
    throw nn::ShapeError("recombiner input: " + std::to_string(poses.size()) + " poses for " + std::to_string(A) +
                         " agents");
  if (!endpoints.allFinite() || !encodings.allFinite()) throw std::invalid_argument("recombiner input: non-finite values");
}

Matrix modality_inputs(const RecombinerInput& in) {
  const int A = in.agents();
  const int K = in.modalities();
  Matrix x(in.endpoints.rows(), kModalityInputWidth);
  for (int a = 0; a < A; ++a)
    for (int k = 0; k < K; ++k) {
      const Eigen::Index r = a * K + k;
      const Vec2d p = in.endpoints.row(r).transpose();
      const Vec2d rel = in.poses[static_cast<std::size_t>(a)].to_agent(p);
      x(r, 0) = p.x() / model::kSceneScale;
      x(r, 1) = p.y() / model::kSceneScale;
      x(r, 2) = rel.x() / model::kAgentScale;
      x(r, 3) = rel.y() / model::kAgentScale;
    }
  return x;
}

Recombiner::Recombiner(const RecombinerConfig& config, int encoding_width, std::uint64_t seed)
    : config_(config), encoding_width_(encoding_width) {
  config_.validate();
  if (encoding_width < 1) throw std::invalid_argument("recombiner: encoding width must be >= 1");
  Rng rng(seed);
  point_mlp_ = nn::Mlp(store_, "rec.point", {kModalityInputWidth, config_.D, config_.D}, rng);
  merge_ = nn::Linear(store_, "rec.merge", config_.D + encoding_width, config_.D, rng);
  modes_ = &store_.create("rec.modes", config_.L, config_.D, config_.D, rng);
  for (int l = 0; l < config_.attention_layers; ++l)
    attention_.emplace_back(store_, "rec.attn" + std::to_string(l), config_.D, config_.D, rng);
}

namespace {

struct Encoded {
  Var modes;   // L x D, enriched
  Var agents;  // (A*K) x D
};

Encoded encode(nn::Graph& g, const RecombinerInput& in, const nn::Mlp& point_mlp, const nn::Linear& merge,
               nn::Parameter& modes, const std::vector<nn::AttentionBlock>& attention) {
  const int A = in.agents();
  const int K = in.modalities();
  Matrix fe(in.endpoints.rows(), in.encodings.cols());
  for (int a = 0; a < A; ++a) fe.middleRows(a * K, K).rowwise() = in.encodings.row(a);
  Var h = point_mlp(g, g.constant(modality_inputs(in)));
  Var agents = merge(g, nn::concat({h, g.constant(fe)}, 1));
  Var s = g.param(modes);
  for (const auto& block : attention) s = block(g, s, agents);
  return {s, agents};
}

std::vector<int> rows_of_agent(int a, int K) {
  std::vector<int> rows(static_cast<std::size_t>(K));
  std::iota(rows.begin(), rows.end(), a * K);
  return rows;
}

}  // namespace

RecombinerOutput Recombiner::forward(nn::Graph& g, const RecombinerInput& in) const {
  in.check(config_.K);
  if (in.encodings.cols() != encoding_width_)
    throw nn::ShapeError("recombiner: encodings " + nn::shape_string(in.encodings) + ", expected width " +
                         std::to_string(encoding_width_));
  const int A = in.agents();
  const int K = config_.K;
  const Encoded e = encode(g, in, point_mlp_, merge_, *modes_, attention_);
  RecombinerOutput out;
  std::vector<Var> per_agent;
  for (int a = 0; a < A; ++a) {
    const auto rows = rows_of_agent(a, K);
    Var scores = nn::matmul_nt(e.modes, nn::gather(e.agents, rows));  // L x K
    Var w = nn::softmax(nn::scale(scores, 1.0 / config_.tau), 1);
    out.weights.push_back(w);
    per_agent.push_back(nn::matmul(w, g.constant(in.endpoints.middleRows(a * K, K))));  // L x 2
  }
  // L x 2A, row-major, viewed as (L*A) x 2 puts (l, a) at row l*A + a.
  out.joint = nn::reshape(nn::concat(per_agent, 1), static_cast<Eigen::Index>(config_.L) * A, 2);
  return out;
}

Matrix Recombiner::scores(const RecombinerInput& in) const {
  in.check(config_.K);
  nn::Graph g(false);
  const Encoded e = encode(g, in, point_mlp_, merge_, *modes_, attention_);
  return nn::matmul_nt(e.modes, e.agents).value();
}

void Recombiner::save(const std::string& path, const std::string& extra_meta_json) const {
  json meta = extra_meta_json.empty() ? json::object() : json::parse(extra_meta_json);
  meta["kind"] = "recombiner";
  meta["recombiner"] = json::parse(config_.to_json());
  meta["encoding_width"] = encoding_width_;
  nn::save_checkpoint(store_, meta.dump(), path);
}

std::unique_ptr<Recombiner> Recombiner::load(const std::string& path) {
  const json meta = json::parse(nn::read_checkpoint_meta(path));
  if (meta.value("kind", "") != "recombiner")
    throw std::runtime_error(path + " is not a recombiner checkpoint (kind '" + meta.value("kind", "") + "')");
  auto m = std::make_unique<Recombiner>(RecombinerConfig::from_json(meta.at("recombiner").dump()),
                                        meta.at("encoding_width").get<int>());
  nn::load_checkpoint(m->store_, path);
  return m;
}

Var joint_wta_loss(const RecombinerOutput& out, const Matrix& truth, int* winner) {
  nn::Graph& g = *out.joint.graph();
  const auto A = truth.rows();
  if (truth.cols() != 2 || A < 1 || out.joint.rows() % A != 0)
    throw nn::ShapeError("joint_wta_loss: truth " + nn::shape_string(truth) + " vs joint " +
                         nn::shape_string(out.joint.value()));
  const auto L = out.joint.rows() / A;
  Matrix target(out.joint.rows(), 2);
  for (Eigen::Index l = 0; l < L; ++l) target.middleRows(l * A, A) = truth;
  Var sq = nn::sum_axis(nn::square(nn::sub(out.joint, g.constant(target))), 1);  // (L*A) x 1
  Var dist = nn::sqrt(nn::add_scalar(sq, kDistanceEps));
  Var per_mode = nn::scale(nn::sum_axis(nn::reshape(dist, L, A), 1), 1.0 / static_cast<double>(A));  // L x 1
  int best = 0;
  for (Eigen::Index l = 1; l < L; ++l)
    if (per_mode.value()(l, 0) < per_mode.value()(best, 0)) best = static_cast<int>(l);
  if (winner != nullptr) *winner = best;
  return nn::gather(per_mode, std::span<const int>(&best, 1));
}

std::vector<int> rank_joint_modalities(std::span<const Matrix> weights,
                                       const std::vector<std::vector<double>>& confidence) {
  if (weights.empty()) return {};
  const auto L = weights.front().rows();
  std::vector<int> order(static_cast<std::size_t>(L));
  std::iota(order.begin(), order.end(), 0);
  if (confidence.empty()) return order;
  if (confidence.size() != weights.size())
    throw std::invalid_argument("rank_joint_modalities: confidences for " + std::to_string(confidence.size()) +
                                " agents, weights for " + std::to_string(weights.size()));
  std::vector<double> score(static_cast<std::size_t>(L), 0.0);
  for (std::size_t a = 0; a < weights.size(); ++a) {
    const Matrix& w = weights[a];
    if (w.rows() != L || static_cast<std::size_t>(w.cols()) != confidence[a].size())
      throw nn::ShapeError("rank_joint_modalities: weights " + nn::shape_string(w) + " for " +
                           std::to_string(confidence[a].size()) + " confidences");
    const Eigen::Map<const Eigen::VectorXd> c(confidence[a].data(), w.cols());
    const Eigen::VectorXd per_l = w * c;
    for (Eigen::Index l = 0; l < L; ++l) score[static_cast<std::size_t>(l)] += per_l(l);
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](int x, int y) { return score[static_cast<std::size_t>(x)] > score[static_cast<std::size_t>(y)]; });
  return order;
}

RecombinerInput make_input(const sampler::ModalitySet& marginal, const Matrix& encodings,
                           std::span<const model::AgentPose> poses) {
  marginal.check();
  if (marginal.orientation != sampler::Orientation::Marginal)
    throw std::invalid_argument("recombine: expected a marginal modality set");
  const int A = marginal.agents();
  const int K = marginal.modalities();
  if (encodings.rows() != A || static_cast<int>(poses.size()) != A)
    throw nn::ShapeError("recombine: " + std::to_string(A) + " agents but encodings " + nn::shape_string(encodings) +
                         " and " + std::to_string(poses.size()) + " poses");
  RecombinerInput in;
  in.endpoints.resize(static_cast<Eigen::Index>(A) * K, 2);
  for (int a = 0; a < A; ++a)
    for (int k = 0; k < K; ++k)
      in.endpoints.row(a * K + k) = marginal.endpoints[static_cast<std::size_t>(a)][static_cast<std::size_t>(k)].transpose();
  in.encodings = encodings;
  in.poses.assign(poses.begin(), poses.end());
  return in;
}

Recombination recombine(const Recombiner& model, const sampler::ModalitySet& marginal, const Matrix& encodings,
                        std::span<const model::AgentPose> poses) {
  const RecombinerInput in = make_input(marginal, encodings, poses);
  const auto& cfg = model.config();
  const int A = in.agents();
  const int K = cfg.K;
  const int L = cfg.L;
  Recombination r;
  Matrix joint(static_cast<Eigen::Index>(L) * A, 2);
  if (cfg.hard) {
    const Matrix s = model.scores(in);
    for (int a = 0; a < A; ++a) {
      Matrix w = Matrix::Zero(L, K);
      for (int l = 0; l < L; ++l) {
        int best = 0;
        for (int k = 1; k < K; ++k)
          if (s(l, a * K + k) > s(l, a * K + best)) best = k;
        w(l, best) = 1.0;
        joint.row(l * A + a) = in.endpoints.row(a * K + best);
      }
      r.weights.push_back(std::move(w));
    }
  } else {
    nn::Graph g(false);
    const RecombinerOutput out = model.forward(g, in);
    joint = out.joint.value();
    for (const auto& w : out.weights) r.weights.push_back(w.value());
  }
  r.order = rank_joint_modalities(r.weights, marginal.confidence);

  sampler::ModalitySet& j = r.joint;
  j.orientation = sampler::Orientation::Joint;
  j.agent_ids = marginal.agent_ids;
  j.endpoints.assign(static_cast<std::size_t>(A), std::vector<Vec2d>(static_cast<std::size_t>(L)));
  if (!marginal.confidence.empty())
    j.confidence.assign(static_cast<std::size_t>(A), std::vector<double>(static_cast<std::size_t>(L), 0.0));
  for (int rank = 0; rank < L; ++rank) {
    const int l = r.order[static_cast<std::size_t>(rank)];
    for (int a = 0; a < A; ++a) {
      const auto ai = static_cast<std::size_t>(a);
      j.endpoints[ai][static_cast<std::size_t>(rank)] = joint.row(l * A + a).transpose();
      if (!j.confidence.empty()) {
        double c = 0.0;
        for (int k = 0; k < K; ++k) c += r.weights[ai](l, k) * marginal.confidence[ai][static_cast<std::size_t>(k)];
        j.confidence[ai][static_cast<std::size_t>(rank)] = c;
      }
    }
  }
  return r;
}

std::vector<RecombinerSample> make_samples(const model::PredictionModel& model, std::span<const scene::Scene> scenes,
                                           const sampler::SamplerConfig& sampler) {
  std::vector<RecombinerSample> out;
  for (const auto& s : scenes) {
    scene::Scene norm;
    try {
      norm = scene::normalize_scene(s, scene::select_reference(s));
    } catch (const std::invalid_argument&) {
      continue;
    }
    std::vector<int> ids;
    for (const auto& a : norm.agents)
      if (a.future && a.current().present) ids.push_back(a.id);
    if (ids.empty()) continue;
    const auto dec = model.decode(norm, ids);
    const auto marginal = sampler::sample_marginal_set(dec.heatmaps, sampler);
    Matrix enc(static_cast<Eigen::Index>(ids.size()), dec.encodings.cols());
    std::vector<model::AgentPose> poses;
    RecombinerSample smp;
    smp.truth.resize(static_cast<Eigen::Index>(ids.size()), 2);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const int row = dec.inputs.row_of(ids[i]);
      enc.row(static_cast<Eigen::Index>(i)) = dec.encodings.row(row);
      poses.push_back(dec.inputs.poses[static_cast<std::size_t>(row)]);
      smp.truth.row(static_cast<Eigen::Index>(i)) = norm.agent(ids[i]).future->back().transpose();
    }
    smp.input = make_input(marginal, enc, poses);
    smp.scene_id = s.id;
    out.push_back(std::move(smp));
  }
  return out;
}

std::vector<model::EpochLog> train_recombiner(Recombiner& model, std::span<const RecombinerSample> samples,
                                              const model::TrainConfig& config) {
  config.validate();
  nn::Adam opt(config.schedule);
  auto params = model.params().all();
  std::vector<model::EpochLog> logs;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    opt.set_epoch(epoch);
    const auto order = model::epoch_order(samples.size(), config.seed, epoch);
    double loss_sum = 0.0;
    long steps = 0;
    std::size_t in_batch = 0;
    model.params().zero_grad();
    auto flush = [&]() {
      if (in_batch == 0) return;
      for (auto* p : params) *p->grad /= static_cast<double>(in_batch);
      opt.step(params);
      model.params().zero_grad();
      ++steps;
      in_batch = 0;
    };
    for (std::size_t idx : order) {
      const RecombinerSample& smp = samples[idx];
      nn::Graph g;
      Var loss = joint_wta_loss(model.forward(g, smp.input), smp.truth);
      const double v = loss.scalar();
      if (!std::isfinite(v))
        throw model::TrainingDiverged("recombiner training diverged: epoch " + std::to_string(epoch) + ", step " +
                                      std::to_string(steps) + ", scene " + smp.scene_id + ", loss " +
                                      std::to_string(v));
      g.backward(loss);
      loss_sum += v;
      if (++in_batch == static_cast<std::size_t>(config.batch_size)) flush();
    }
    flush();
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    logs.push_back({epoch, opt.lr(), samples.empty() ? 0.0 : loss_sum / static_cast<double>(samples.size()), steps, secs});
    if (config.on_epoch) config.on_epoch(logs.back());
  }
  return logs;
}

double mean_wta_loss(const Recombiner& model, std::span<const RecombinerSample> samples) {
  if (samples.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& smp : samples) {
    nn::Graph g(false);
    sum += joint_wta_loss(model.forward(g, smp.input), smp.truth).scalar();
  }
  return sum / static_cast<double>(samples.size());
}

}  // namespace scenecast::recombiner
