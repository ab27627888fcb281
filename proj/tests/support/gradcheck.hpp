#pragma once

// Finite-difference oracle shared by unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "scenecast/nn/params.hpp"
#include "scenecast/nn/tensor.hpp"

namespace scenecast::testing {

inline Matrix random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double lo = -1.0, double hi = 1.0) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(lo, hi);
  return m;
}

inline double relative_error(const Matrix& a, const Matrix& b) {
  const double denom = std::max({a.norm(), b.norm(), 1e-8});
  return (a - b).norm() / denom;
}

/// Builds `loss = sum(op(inputs...) .* weights)` twice: once through the
/// graph for the analytic gradient, once per perturbed input for central
/// differences. Returns the worst relative error over inputs.
inline double check_op_gradient(const std::vector<Matrix>& inputs,
                                const std::function<nn::Var(nn::Graph&, const std::vector<nn::Var>&)>& op,
                                const Matrix& weights, double step = 1e-5) {
  auto evaluate = [&](const std::vector<Matrix>& xs) {
    nn::Graph g(false);
    std::vector<nn::Var> vars;
    for (const auto& x : xs) vars.push_back(g.constant(x));
    return op(g, vars).value().cwiseProduct(weights).sum();
  };

  std::vector<nn::Parameter> params(inputs.size());
  nn::Graph g;
  std::vector<nn::Var> vars;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    params[i].name = "x" + std::to_string(i);
    params[i].value = inputs[i];
    vars.push_back(g.param(params[i]));
  }
  nn::Var out = op(g, vars);
  nn::Var loss = nn::sum(nn::mul(out, g.constant(weights)));
  g.backward(loss);

  double worst = 0.0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    Matrix analytic = params[i].grad ? *params[i].grad : Matrix::Zero(inputs[i].rows(), inputs[i].cols());
    Matrix numeric = nn::numeric_gradient(
        [&](const Matrix& x) {
          auto xs = inputs;
          xs[i] = x;
          return evaluate(xs);
        },
        inputs[i], step);
    worst = std::max(worst, relative_error(analytic, numeric));
  }
  return worst;
}

/// Gradient of a scalar loss w.r.t. every parameter of a store, checked by
/// central differences at up to `per_param` random entries per parameter.
/// `loss` must rebuild the graph from the store's current values. Returns
/// the relative error over all checked entries.
///
/// With `kinks` set, entries whose forward and backward one-sided slopes
/// disagree (the step straddles a ReLU hinge or similar) are left out and
/// counted there; central differences say nothing about such points.
inline double check_store_gradient(nn::ParameterStore& store, const std::function<nn::Var(nn::Graph&)>& loss,
                                   Rng& rng, int per_param = 8, double step = 1e-5, int* kinks = nullptr) {
  store.clear_grad();
  {
    nn::Graph g;
    g.backward(loss(g));
  }
  std::vector<double> analytic, numeric;
  for (nn::Parameter* p : store.all()) {
    const auto n = p->value.size();
    const int count = static_cast<int>(std::min<Eigen::Index>(per_param, n));
    for (int c = 0; c < count; ++c) {
      const auto idx = count == n ? c : rng.uniform_int(0, static_cast<int>(n) - 1);
      double& x = p->value.data()[idx];
      const double keep = x;
      auto eval = [&](double v) {
        x = v;
        nn::Graph g(false);
        return loss(g).scalar();
      };
      const double fp = eval(keep + step), fm = eval(keep - step);
      if (kinks != nullptr) {
        const double f0 = eval(keep);
        const double ahead = (fp - f0) / step, behind = (f0 - fm) / step;
        if (std::abs(ahead - behind) > 1e-3 * std::max(1.0, std::abs(ahead + behind) / 2)) {
          x = keep;
          ++*kinks;
          continue;
        }
      }
      x = keep;
      numeric.push_back((fp - fm) / (2 * step));
      analytic.push_back(p->grad ? p->grad->data()[idx] : 0.0);
    }
  }
  const Eigen::Map<const Eigen::VectorXd> a(analytic.data(), static_cast<Eigen::Index>(analytic.size()));
  const Eigen::Map<const Eigen::VectorXd> b(numeric.data(), static_cast<Eigen::Index>(numeric.size()));
  return (a - b).norm() / std::max({a.norm(), b.norm(), 1e-8});
}

}  // namespace scenecast::testing
