#pragma once

#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "scenecast/nn/tensor.hpp"

namespace scenecast::nn {

/// Step schedule: the learning rate for 1-based epoch `e` is the base rate
/// times every multiplier whose milestone epoch is <= e.
struct LrSchedule {
  double base_lr = 1e-3;
  std::vector<std::pair<int, double>> milestones{{3, 0.5}, {6, 0.5}, {9, 0.5}, {13, 0.5}};

  [[nodiscard]] double lr_at(int epoch) const;
};

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adaptive-moment optimizer. Moments are keyed by parameter name and
/// created lazily with the parameter's shape.
class Adam {
 public:
  explicit Adam(LrSchedule schedule = {}, AdamConfig cfg = {});

  /// Applies the schedule for 1-based `epoch`.
  void set_epoch(int epoch);
  [[nodiscard]] double lr() const { return lr_; }
  [[nodiscard]] long steps() const { return t_; }

  /// Updates every parameter from its gradient, then clears the gradients.
  /// Throws if any parameter has no gradient.
  void step(std::span<Parameter* const> params);

 private:
  struct Moments {
    Matrix m;
    Matrix v;
  };
  LrSchedule schedule_;
  AdamConfig cfg_;
  double lr_;
  long t_ = 0;
  std::map<std::string, Moments> state_;
};

}  // namespace scenecast::nn
