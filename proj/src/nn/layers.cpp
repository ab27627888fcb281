#include "scenecast/nn/layers.hpp"

#include <cmath>

namespace scenecast::nn {

Linear::Linear(ParameterStore& store, const std::string& name, Eigen::Index in, Eigen::Index out, Rng& rng)
    : weight_(&store.create(name + ".w", in, out, in, rng)), bias_(&store.create(name + ".b", 1, out, in, rng)) {}

Var Linear::operator()(Graph& g, Var x) const {
  return add_bias(matmul(x, g.param(*weight_)), g.param(*bias_));
}

Mlp::Mlp(ParameterStore& store, const std::string& name, const std::vector<Eigen::Index>& widths, Rng& rng,
         bool final_relu)
    : final_relu_(final_relu) {
  for (std::size_t i = 0; i + 1 < widths.size(); ++i)
    layers_.emplace_back(store, name + "." + std::to_string(i), widths[i], widths[i + 1], rng);
}

Var Mlp::operator()(Graph& g, Var x) const {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    x = layers_[i](g, x);
    if (i + 1 < layers_.size() || final_relu_) x = relu(x);
  }
  return x;
}

AttentionBlock::AttentionBlock(ParameterStore& store, const std::string& name, Eigen::Index query_dim,
                               Eigen::Index context_dim, Rng& rng)
    : q_(store, name + ".q", query_dim, query_dim, rng),
      k_(store, name + ".k", context_dim, query_dim, rng),
      v_(store, name + ".v", context_dim, query_dim, rng),
      o_(store, name + ".o", query_dim, query_dim, rng),
      inv_sqrt_d_(1.0 / std::sqrt(static_cast<double>(query_dim))) {}

AttentionBlock::ProjectedContext AttentionBlock::project(Graph& g, Var context) const {
  if (context.rows() == 0) return {};
  return {k_(g, context), v_(g, context), false};
}

Var AttentionBlock::attend(Graph& g, Var queries, const ProjectedContext& ctx) const {
  if (ctx.empty || queries.rows() == 0) return queries;
  Var q = q_(g, queries);
  Var weights = softmax(scale(matmul_nt(q, ctx.keys), inv_sqrt_d_), 1);
  Var mixed = o_(g, matmul(weights, ctx.values));
  return layernorm(add(queries, mixed), 1);
}

Var AttentionBlock::operator()(Graph& g, Var queries, Var context) const {
  return attend(g, queries, project(g, context));
}

}  // namespace scenecast::nn
