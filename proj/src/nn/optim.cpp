#include "scenecast/nn/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace scenecast::nn {

double LrSchedule::lr_at(int epoch) const {
  double lr = base_lr;
  for (const auto& [at, mult] : milestones)
    if (epoch >= at) lr *= mult;
  return lr;
}

Adam::Adam(LrSchedule schedule, AdamConfig cfg) : schedule_(std::move(schedule)), cfg_(cfg), lr_(schedule_.lr_at(1)) {}

void Adam::set_epoch(int epoch) { lr_ = schedule_.lr_at(epoch); }

void Adam::step(std::span<Parameter* const> params) {
  for (const Parameter* p : params)
    if (!p->grad) throw std::logic_error("optimizer step: parameter '" + p->name + "' has no gradient");
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (Parameter* p : params) {
    auto [it, fresh] = state_.try_emplace(p->name);
    Moments& mo = it->second;
    if (fresh) {
      mo.m = Matrix::Zero(p->value.rows(), p->value.cols());
      mo.v = Matrix::Zero(p->value.rows(), p->value.cols());
    }
    const Matrix& g = *p->grad;
    mo.m = cfg_.beta1 * mo.m + (1.0 - cfg_.beta1) * g;
    mo.v = cfg_.beta2 * mo.v + (1.0 - cfg_.beta2) * g.cwiseAbs2();
    p->value.array() -= lr_ * (mo.m.array() / bc1) / ((mo.v.array() / bc2).sqrt() + cfg_.eps);
    p->grad.reset();
  }
}

}  // namespace scenecast::nn
