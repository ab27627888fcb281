#include <cmath>

#include "doctest.h"
#include "scenecast/nn/layers.hpp"
#include "scenecast/nn/tensor.hpp"
#include "../support/op_catalog.hpp"

using namespace scenecast;
using namespace scenecast::nn;

TEST_CASE("relu zeroes negatives") {
  Graph g;
  Matrix x(1, 3);
  x << -1, 0, 2;
  Var y = relu(g.constant(x));
  CHECK(y.value()(0, 0) == 0.0);
  CHECK(y.value()(0, 1) == 0.0);
  CHECK(y.value()(0, 2) == 2.0);
}

TEST_CASE("softmax of a constant row is uniform") {
  Graph g;
  Var y = softmax(g.constant(Matrix::Constant(1, 3, 4.2)), 1);
  for (int i = 0; i < 3; ++i) CHECK(y.value()(0, i) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("identity matmul returns the operand") {
  Rng rng(3);
  Graph g;
  Matrix m = testing::random_matrix(rng, 3, 3);
  Var y = matmul(g.constant(Matrix::Identity(3, 3)), g.constant(m));
  CHECK(y.value() == m);
}

TEST_CASE("shape mismatch names both shapes and the op") {
  Graph g;
  Var a = g.constant(Matrix::Zero(2, 3));
  Var b = g.constant(Matrix::Zero(2, 3));
  try {
    (void)matmul(a, b);
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("matmul") != std::string::npos);
    CHECK(msg.find("(2, 3)") != std::string::npos);
  }
  CHECK_THROWS_AS((void)add(a, g.constant(Matrix::Zero(3, 2))), ShapeError);
  CHECK_THROWS_AS((void)concat({a, g.constant(Matrix::Zero(1, 2))}, 0), ShapeError);
}

TEST_CASE("backward of x^2 at 3 gives 6") {
  Parameter x{"x", Matrix::Constant(1, 1, 3.0), {}};
  Graph g;
  Var v = g.param(x);
  g.backward(mul(v, v));
  REQUIRE(x.grad.has_value());
  CHECK((*x.grad)(0, 0) == doctest::Approx(6.0));
}

TEST_CASE("sum of softmax has zero gradient") {
  Rng rng(5);
  Parameter z{"z", testing::random_matrix(rng, 1, 6), {}};
  Graph g;
  g.backward(sum(softmax(g.param(z), 1)));
  CHECK(z.grad->cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("backward requires a scalar loss") {
  Parameter x{"x", Matrix::Ones(2, 2), {}};
  Graph g;
  CHECK_THROWS_AS(g.backward(g.param(x)), ShapeError);
}

TEST_CASE("random 4x3 matmul chain matches finite differences") {
  Rng rng(11);
  auto ops = testing::differentiable_ops();
  const auto& chain = *std::find_if(ops.begin(), ops.end(), [](const auto& c) { return c.name == "matmul_chain"; });
  for (int trial = 0; trial < 20; ++trial) {
    auto inputs = chain.make_inputs(rng);
    Matrix w = testing::random_weights_for(chain, inputs, rng);
    CHECK(testing::check_op_gradient(inputs, chain.op, w) < 1e-4);
  }
}

TEST_CASE("every op gradient matches central differences over 100 trials") {
  Rng rng(2024);
  for (const auto& c : testing::differentiable_ops()) {
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      auto inputs = c.make_inputs(rng);
      Matrix w = testing::random_weights_for(c, inputs, rng);
      worst = std::max(worst, testing::check_op_gradient(inputs, c.op, w));
    }
    INFO(c.name << " worst relative error " << worst);
    CHECK(worst < 1e-4);
  }
}

TEST_CASE("softmax sums to one and layernorm standardizes") {
  Rng rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    Graph g;
    Matrix x = testing::random_matrix(rng, 4, 7, -5, 5);
    Var s = softmax(g.constant(x), 1);
    for (int i = 0; i < 4; ++i) CHECK(std::abs(s.value().row(i).sum() - 1.0) < 1e-12);
    Var sc = softmax(g.constant(x), 0);
    for (int j = 0; j < 7; ++j) CHECK(std::abs(sc.value().col(j).sum() - 1.0) < 1e-12);
    Var ln = layernorm(g.constant(x), 1);
    for (int i = 0; i < 4; ++i) {
      const auto row = ln.value().row(i);
      const double mu = row.mean();
      const double var = (row.array() - mu).square().mean();
      CHECK(std::abs(mu) < 1e-10);
      CHECK(std::abs(var - 1.0) < 1e-6);
    }
  }
}

TEST_CASE("forward and backward are deterministic") {
  auto run = [] {
    Rng rng(42);
    ParameterStore store;
    Mlp mlp(store, "m", {5, 8, 3}, rng);
    AttentionBlock att(store, "a", 3, 4, rng);
    Graph g;
    Var x = g.constant(testing::random_matrix(rng, 6, 5));
    Var ctx = g.constant(testing::random_matrix(rng, 4, 4));
    Var y = att(g, mlp(g, x), ctx);
    g.backward(sum(square(y)));
    std::vector<Matrix> out{y.value()};
    for (auto* p : store.all()) out.push_back(*p->grad);
    return out;
  };
  CHECK(run() == run());
}

TEST_CASE("attention block with empty context is the identity") {
  Rng rng(1);
  ParameterStore store;
  AttentionBlock att(store, "a", 4, 4, rng);
  Graph g;
  Matrix x = testing::random_matrix(rng, 2, 4);
  Var y = att(g, g.constant(x), g.constant(Matrix(0, 4)));
  CHECK(y.value() == x);
}

TEST_CASE("attention block gradient matches finite differences") {
  Rng rng(77);
  ParameterStore store;
  AttentionBlock att(store, "a", 4, 3, rng);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<Matrix> inputs{testing::random_matrix(rng, 3, 4), testing::random_matrix(rng, 5, 3)};
    Matrix w = testing::random_matrix(rng, 3, 4);
    double err = testing::check_op_gradient(
        inputs, [&](Graph& g, const std::vector<Var>& v) { return att(g, v[0], v[1]); }, w);
    CHECK(err < 1e-4);
  }
}
