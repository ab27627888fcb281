#pragma once

// Every differentiable op with a random-input generator, for gradient suites.

#include <memory>
#include <string>
#include <vector>

#include "gradcheck.hpp"
#include "scenecast/field/field.hpp"

namespace scenecast::testing {

struct OpCase {
  std::string name;
  std::function<std::vector<Matrix>(Rng&)> make_inputs;
  std::function<nn::Var(nn::Graph&, const std::vector<nn::Var>&)> op;
};

inline std::vector<OpCase> differentiable_ops() {
  using nn::Var;
  using Inputs = std::vector<Matrix>;
  using Vars = std::vector<Var>;
  std::vector<OpCase> ops;
  ops.push_back({"matmul", [](Rng& r) { return Inputs{random_matrix(r, 4, 3), random_matrix(r, 3, 5)}; },
                 [](nn::Graph&, const Vars& v) { return nn::matmul(v[0], v[1]); }});
  ops.push_back({"matmul_chain", [](Rng& r) { return Inputs{random_matrix(r, 4, 3), random_matrix(r, 3, 3), random_matrix(r, 3, 2)}; },
                 [](nn::Graph&, const Vars& v) { return nn::matmul(nn::matmul(v[0], v[1]), v[2]); }});
  ops.push_back({"matmul_nt", [](Rng& r) { return Inputs{random_matrix(r, 4, 3), random_matrix(r, 5, 3)}; },
                 [](nn::Graph&, const Vars& v) { return nn::matmul_nt(v[0], v[1]); }});
  ops.push_back({"add", [](Rng& r) { return Inputs{random_matrix(r, 3, 4), random_matrix(r, 3, 4)}; },
                 [](nn::Graph&, const Vars& v) { return nn::add(v[0], v[1]); }});
  ops.push_back({"sub", [](Rng& r) { return Inputs{random_matrix(r, 3, 4), random_matrix(r, 3, 4)}; },
                 [](nn::Graph&, const Vars& v) { return nn::sub(v[0], v[1]); }});
  ops.push_back({"mul", [](Rng& r) { return Inputs{random_matrix(r, 3, 4), random_matrix(r, 3, 4)}; },
                 [](nn::Graph&, const Vars& v) { return nn::mul(v[0], v[1]); }});
  ops.push_back({"scale", [](Rng& r) { return Inputs{random_matrix(r, 3, 4)}; },
                 [](nn::Graph&, const Vars& v) { return nn::scale(v[0], -1.7); }});
  ops.push_back({"add_bias", [](Rng& r) { return Inputs{random_matrix(r, 5, 4), random_matrix(r, 1, 4)}; },
                 [](nn::Graph&, const Vars& v) { return nn::add_bias(v[0], v[1]); }});
  ops.push_back({"mul_row", [](Rng& r) { return Inputs{random_matrix(r, 5, 4), random_matrix(r, 1, 4)}; },
                 [](nn::Graph&, const Vars& v) { return nn::mul_row(v[0], v[1]); }});
  ops.push_back({"mul_col", [](Rng& r) { return Inputs{random_matrix(r, 5, 4), random_matrix(r, 5, 1)}; },
                 [](nn::Graph&, const Vars& v) { return nn::mul_col(v[0], v[1]); }});
  ops.push_back({"relu", [](Rng& r) { return Inputs{random_matrix(r, 4, 4)}; },
                 [](nn::Graph&, const Vars& v) { return nn::relu(v[0]); }});
  ops.push_back({"sigmoid", [](Rng& r) { return Inputs{random_matrix(r, 4, 4, -4, 4)}; },
                 [](nn::Graph&, const Vars& v) { return nn::sigmoid(v[0]); }});
  ops.push_back({"exp", [](Rng& r) { return Inputs{random_matrix(r, 3, 3)}; },
                 [](nn::Graph&, const Vars& v) { return nn::exp(v[0]); }});
  ops.push_back({"log", [](Rng& r) { return Inputs{random_matrix(r, 3, 3, 0.2, 3.0)}; },
                 [](nn::Graph&, const Vars& v) { return nn::log(v[0]); }});
  ops.push_back({"sqrt", [](Rng& r) { return Inputs{random_matrix(r, 3, 3, 0.2, 3.0)}; },
                 [](nn::Graph&, const Vars& v) { return nn::sqrt(v[0]); }});
  ops.push_back({"square", [](Rng& r) { return Inputs{random_matrix(r, 3, 3)}; },
                 [](nn::Graph&, const Vars& v) { return nn::square(v[0]); }});
  ops.push_back({"softmax_rows", [](Rng& r) { return Inputs{random_matrix(r, 3, 5, -2, 2)}; },
                 [](nn::Graph&, const Vars& v) { return nn::softmax(v[0], 1); }});
  ops.push_back({"softmax_cols", [](Rng& r) { return Inputs{random_matrix(r, 5, 3, -2, 2)}; },
                 [](nn::Graph&, const Vars& v) { return nn::softmax(v[0], 0); }});
  ops.push_back({"layernorm_rows", [](Rng& r) { return Inputs{random_matrix(r, 3, 6, -2, 2)}; },
                 [](nn::Graph&, const Vars& v) { return nn::layernorm(v[0], 1); }});
  ops.push_back({"layernorm_cols", [](Rng& r) { return Inputs{random_matrix(r, 6, 3, -2, 2)}; },
                 [](nn::Graph&, const Vars& v) { return nn::layernorm(v[0], 0); }});
  ops.push_back({"concat_rows", [](Rng& r) { return Inputs{random_matrix(r, 2, 3), random_matrix(r, 4, 3)}; },
                 [](nn::Graph&, const Vars& v) { return nn::concat({v[0], v[1]}, 0); }});
  ops.push_back({"concat_cols", [](Rng& r) { return Inputs{random_matrix(r, 3, 2), random_matrix(r, 3, 4)}; },
                 [](nn::Graph&, const Vars& v) { return nn::concat({v[0], v[1]}, 1); }});
  ops.push_back({"gather", [](Rng& r) { return Inputs{random_matrix(r, 4, 3)}; },
                 [](nn::Graph&, const Vars& v) {
                   static const std::vector<int> idx{2, 0, 2, 3};
                   return nn::gather(v[0], idx);
                 }});
  ops.push_back({"transpose", [](Rng& r) { return Inputs{random_matrix(r, 3, 4)}; },
                 [](nn::Graph&, const Vars& v) { return nn::transpose(v[0]); }});
  ops.push_back({"reshape", [](Rng& r) { return Inputs{random_matrix(r, 3, 4)}; },
                 [](nn::Graph&, const Vars& v) { return nn::reshape(v[0], 2, 6); }});
  ops.push_back({"sum", [](Rng& r) { return Inputs{random_matrix(r, 3, 4)}; },
                 [](nn::Graph&, const Vars& v) { return nn::sum(v[0]); }});
  ops.push_back({"mean", [](Rng& r) { return Inputs{random_matrix(r, 3, 4)}; },
                 [](nn::Graph&, const Vars& v) { return nn::mean(v[0]); }});
  ops.push_back({"sum_axis0", [](Rng& r) { return Inputs{random_matrix(r, 3, 4)}; },
                 [](nn::Graph&, const Vars& v) { return nn::sum_axis(v[0], 0); }});
  ops.push_back({"sum_axis1", [](Rng& r) { return Inputs{random_matrix(r, 3, 4)}; },
                 [](nn::Graph&, const Vars& v) { return nn::sum_axis(v[0], 1); }});
  ops.push_back({"mse", [](Rng& r) { return Inputs{random_matrix(r, 3, 4), random_matrix(r, 3, 4)}; },
                 [](nn::Graph&, const Vars& v) { return nn::mse(v[0], v[1]); }});
  return ops;
}

/// Focal loss with a fresh random target per trial; the target is drawn
/// alongside the prediction and held fixed while differentiating.
inline OpCase focal_loss_case() {
  auto target = std::make_shared<Matrix>();
  return {"focal_loss",
          [target](Rng& r) {
            *target = random_matrix(r, 6, 5, 0.0, 0.999);
            (*target)(r.uniform_int(0, 5), r.uniform_int(0, 4)) = 1.0;
            return std::vector<Matrix>{random_matrix(r, 6, 5, 0.01, 0.99)};
          },
          [target](nn::Graph&, const std::vector<nn::Var>& v) { return field::focal_loss(*target, v[0]); }};
}

/// Output shape of an op, needed to draw the random projection weights.
inline Matrix random_weights_for(const OpCase& c, const std::vector<Matrix>& inputs, Rng& rng) {
  nn::Graph g(false);
  std::vector<nn::Var> vars;
  for (const auto& x : inputs) vars.push_back(g.constant(x));
  const Matrix& out = c.op(g, vars).value();
  return random_matrix(rng, out.rows(), out.cols());
}

}  // namespace scenecast::testing
