#include "scenecast/model/training.hpp"

#include <chrono>
#include <cmath>
#include <numeric>

namespace scenecast::model {

void TrainConfig::validate() const {
  if (epochs < 0) throw std::invalid_argument("train: epochs must be >= 0");
  if (batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
  if (max_agents < 1) throw std::invalid_argument("train: max_agents must be >= 1");
}

std::uint64_t visit_seed(std::uint64_t seed, int epoch, std::size_t index) {
  Rng rng(seed ^ (0xa0761d6478bd642fULL * static_cast<std::uint64_t>(epoch + 1)) ^
          (0xe7037ed1a0b428dbULL * static_cast<std::uint64_t>(index + 1)));
  return rng.next();
}

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, int epoch) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(visit_seed(seed, epoch, n));
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(i) - 1))]);
  return order;
}

namespace {

class EpochTimer {
 public:
  EpochTimer() : start_(std::chrono::steady_clock::now()) {}
  [[nodiscard]] double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace

std::vector<EpochLog> train_decoder(PredictionModel& model, std::span<const scene::Scene> scenes,
                                    const TrainConfig& config) {
  config.validate();
  nn::Adam opt(config.schedule);
  auto params = model.params().all();
  std::vector<EpochLog> logs;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    EpochTimer timer;
    opt.set_epoch(epoch);
    const auto order = epoch_order(scenes.size(), config.seed, epoch);
    double loss_sum = 0.0;
    std::size_t loss_count = 0;
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
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
      const scene::Scene& s = scenes[order[pos]];
      const std::uint64_t vs = visit_seed(config.seed, epoch, order[pos]);
      scene::Scene norm;
      try {
        norm = scene::normalize_scene(s, scene::select_reference(s, scene::ReferenceMode::Training, vs));
      } catch (const std::invalid_argument&) {
        continue;  // no agent present at prediction time
      }
      const auto agents = scene::subsample_training_agents(norm, config.max_agents, vs + 1);
      if (agents.empty()) continue;
      nn::Graph g;
      nn::Var loss = model.training_loss(g, norm, agents);
      const double v = loss.scalar();
      if (!std::isfinite(v))
        throw TrainingDiverged("decoder training diverged: epoch " + std::to_string(epoch) + ", step " +
                               std::to_string(steps) + ", scene " + s.id + ", loss " + std::to_string(v));
      g.backward(loss);
      loss_sum += v;
      ++loss_count;
      if (++in_batch == static_cast<std::size_t>(config.batch_size)) flush();
    }
    flush();
    logs.push_back({epoch, opt.lr(), loss_count ? loss_sum / static_cast<double>(loss_count) : 0.0, steps, timer.seconds()});
    if (config.on_epoch) config.on_epoch(logs.back());
  }
  return logs;
}

std::vector<EpochLog> train_trajectory(TrajectoryModel& model, std::span<const scene::Scene> scenes,
                                       const TrainConfig& config) {
  config.validate();
  std::vector<TrajectorySample> samples;
  for (const auto& s : scenes)
    for (const auto& a : s.agents)
      if (a.future && a.current().present) samples.push_back(trajectory_sample(a));
  nn::Adam opt(config.schedule);
  auto params = model.params().all();
  std::vector<EpochLog> logs;
  const Eigen::Index hw = kTrajectoryHistoryWidth, tw = 2 * scene::kFutureFrames;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    EpochTimer timer;
    opt.set_epoch(epoch);
    const auto order = epoch_order(samples.size(), config.seed, epoch);
    double loss_sum = 0.0;
    long steps = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t n = std::min(order.size() - start, static_cast<std::size_t>(config.batch_size));
      Matrix h(static_cast<Eigen::Index>(n), hw), e(static_cast<Eigen::Index>(n), 2), y(static_cast<Eigen::Index>(n), tw);
      for (std::size_t i = 0; i < n; ++i) {
        const auto& smp = samples[order[start + i]];
        h.row(static_cast<Eigen::Index>(i)) = smp.history;
        e.row(static_cast<Eigen::Index>(i)) = smp.endpoint;
        y.row(static_cast<Eigen::Index>(i)) = smp.target;
      }
      model.params().zero_grad();
      nn::Graph g;
      nn::Var loss = nn::mse(model.forward(g, h, e), g.constant(y));
      const double v = loss.scalar();
      if (!std::isfinite(v))
        throw TrainingDiverged("trajectory training diverged: epoch " + std::to_string(epoch) + ", step " +
                               std::to_string(steps) + ", loss " + std::to_string(v));
      g.backward(loss);
      opt.step(params);
      loss_sum += v * static_cast<double>(n);
      ++steps;
    }
    logs.push_back({epoch, opt.lr(), samples.empty() ? 0.0 : loss_sum / static_cast<double>(samples.size()), steps,
                    timer.seconds()});
    if (config.on_epoch) config.on_epoch(logs.back());
  }
  return logs;
}

}  // namespace scenecast::model
