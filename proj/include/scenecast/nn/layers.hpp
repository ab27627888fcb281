#pragma once

#include <string>
#include <vector>

#include "scenecast/nn/params.hpp"
#include "scenecast/nn/tensor.hpp"

namespace scenecast::nn {

/// y = x W + b, W is (in x out).
class Linear {
 public:
  Linear() = default;
  Linear(ParameterStore& store, const std::string& name, Eigen::Index in, Eigen::Index out, Rng& rng);

  [[nodiscard]] Var operator()(Graph& g, Var x) const;
  [[nodiscard]] Eigen::Index in() const { return weight_->value.rows(); }
  [[nodiscard]] Eigen::Index out() const { return weight_->value.cols(); }

 private:
  Parameter* weight_ = nullptr;
  Parameter* bias_ = nullptr;
};

/// Stack of linear layers with ReLU after each one; `final_relu` controls
/// the activation on the last layer.
class Mlp {
 public:
  Mlp() = default;
  Mlp(ParameterStore& store, const std::string& name, const std::vector<Eigen::Index>& widths, Rng& rng,
      bool final_relu = true);

  [[nodiscard]] Var operator()(Graph& g, Var x) const;

 private:
  std::vector<Linear> layers_;
  bool final_relu_ = true;
};

/// Single-head scaled dot-product attention followed by a residual
/// connection and layer normalization:
///   out = LN(x + softmax(Q K^T / sqrt(d)) V Wo)
/// With an empty context the input passes through unchanged.
class AttentionBlock {
 public:
  AttentionBlock() = default;
  AttentionBlock(ParameterStore& store, const std::string& name, Eigen::Index query_dim, Eigen::Index context_dim,
                 Rng& rng);

  [[nodiscard]] Var operator()(Graph& g, Var queries, Var context) const;

  /// Context keys/values are often shared by many query batches; projecting
  /// them once keeps the per-query cost independent of context width.
  struct ProjectedContext {
    Var keys;
    Var values;
    bool empty = true;
  };
  [[nodiscard]] ProjectedContext project(Graph& g, Var context) const;
  [[nodiscard]] Var attend(Graph& g, Var queries, const ProjectedContext& ctx) const;

 private:
  Linear q_, k_, v_, o_;
  double inv_sqrt_d_ = 1.0;
};

}  // namespace scenecast::nn
