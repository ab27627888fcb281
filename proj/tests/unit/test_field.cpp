#include <cmath>

#include "doctest.h"
#include "scenecast/field/field.hpp"
#include "../support/op_catalog.hpp"

using namespace scenecast;
using namespace scenecast::field;

TEST_CASE("grid layout of the default decoder range") {
  GridSpec g;
  CHECK(g.cells_per_side() == 384);
  CHECK(g.cell_count() == 147456);
  CHECK(g.center(0, 0) == Vec2d(-95.75, -95.75));
  CHECK(g.center(383, 383) == Vec2d(95.75, 95.75));
  CHECK(g.cell_of(Vec2d(0.1, -0.1)) == std::make_pair(192, 191));
  CHECK_FALSE(g.cell_of(Vec2d(96.0, 0.0)).has_value());
  CHECK_THROWS_AS((void)(GridSpec{192.0, 0.7}).cells_per_side(), std::invalid_argument);
}

TEST_CASE("Gaussian target values") {
  const Vec2d e(3.0, -1.0);
  CHECK(target_value(e, e) == 1.0);
  CHECK(target_value(e, Vec2d(5.0, -1.0)) == doctest::Approx(0.6065306597).epsilon(1e-9));
  CHECK(target_value(e, Vec2d(3.0, 19.0)) < 1e-21);
  CHECK(target_value<float>(Vec2<float>(0, 0), Vec2<float>(2, 0)) == doctest::Approx(0.60653f));

  // The cell containing the endpoint is pinned to 1, everything else in (0, 1).
  GridSpec g{8.0, 0.5};
  std::vector<Vec2d> centers;
  for (int i = 0; i < 16; ++i)
    for (int j = 0; j < 16; ++j) centers.push_back(g.center(i, j));
  const Vec2d ep(0.3, 1.1);
  const Matrix y = target_values(ep, centers, 0.5);
  int ones = 0;
  for (Eigen::Index p = 0; p < y.rows(); ++p) {
    CHECK(y(p, 0) > 0.0);
    CHECK(y(p, 0) <= 1.0);
    ones += y(p, 0) == 1.0;
  }
  CHECK(ones == 1);
  const auto cell = *g.cell_of(ep);
  CHECK(y(cell.first * 16 + cell.second, 0) == 1.0);
}

TEST_CASE("focal loss values") {
  CHECK(focal_term(1.0, 0.5) == doctest::Approx(-0.25 * std::log(0.5)).epsilon(1e-12));
  CHECK(focal_term(1.0, 0.5) == doctest::Approx(0.1733).epsilon(1e-3));
  CHECK(focal_term(1.0, 1.0) < 1e-12);
  CHECK(focal_term(0.0, 0.0) < 1e-12);
  CHECK(focal_term(0.3, 0.3) == 0.0);

  nn::Graph g;
  Matrix y(1, 2), p(1, 2);
  y << 1.0, 0.2;
  p << 0.5, 0.6;
  const double expect = 0.5 * (focal_term(1.0, 0.5) + focal_term(0.2, 0.6));
  CHECK(focal_loss(y, g.constant(p)).scalar() == doctest::Approx(expect).epsilon(1e-14));

  Matrix bad(1, 2);
  bad << 0.5, 1.2;
  CHECK_THROWS_AS(focal_loss(y, g.constant(bad)), std::domain_error);
  CHECK_THROWS_AS(focal_loss(Matrix::Zero(2, 1), g.constant(p)), nn::ShapeError);
}

TEST_CASE("focal loss gradient matches finite differences") {
  Rng rng(77);
  const auto c = testing::focal_loss_case();
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    auto inputs = c.make_inputs(rng);
    Matrix w = Matrix::Constant(1, 1, 1.0);
    worst = std::max(worst, testing::check_op_gradient(inputs, c.op, w));
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("focal loss is minimized by the clamped target") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    Matrix y = testing::random_matrix(rng, 1, 8, 0.0, 0.95);
    y(0, 3) = 1.0;
    Matrix best = y.unaryExpr([](double v) { return std::clamp(v, kProbabilityClamp, 1 - kProbabilityClamp); });
    nn::Graph g(false);
    const double base = focal_loss(y, g.constant(best)).scalar();
    for (Eigen::Index p = 0; p < y.cols(); ++p) {
      for (double delta : {-0.05, -1e-3, 1e-3, 0.05}) {
        Matrix q = best;
        q(0, p) = std::clamp(q(0, p) + delta, 0.0, 1.0);
        CHECK(focal_loss(y, g.constant(q)).scalar() >= base);
      }
    }
  }
}

TEST_CASE("analytic field evaluation") {
  AnalyticField single{{GaussianComponent{0.7, Vec2d(4, 5), Eigen::Matrix2d::Identity() * 4.0}}};
  CHECK(single(Vec2d(4, 5)) == doctest::Approx(0.7));
  CHECK(single(Vec2d(6, 5)) == doctest::Approx(0.7 * std::exp(-0.5)));

  AnalyticField pair{{GaussianComponent{0.5, Vec2d(-10, 0), Eigen::Matrix2d::Identity() * 4.0},
                      GaussianComponent{0.5, Vec2d(10, 0), Eigen::Matrix2d::Identity() * 4.0}}};
  const auto v = eval_field(pair, {Vec2d(0, 0), Vec2d(-10, 0), Vec2d(10, 0)});
  CHECK(v[1] == doctest::Approx(v[2]));
  CHECK(v[0] == doctest::Approx(2 * 0.5 * std::exp(-12.5)));

  // The dense-grid maximum dominates random probes.
  Rng rng(3);
  GridSpec g;
  for (int trial = 0; trial < 5; ++trial) {
    const AnalyticField f = random_mixture(rng);
    double w = 0.0;
    for (const auto& c : f.components) w += c.weight;
    CHECK(w == doctest::Approx(1.0));
    const auto dense = eval_dense(f, g);
    const double peak = *std::max_element(dense.begin(), dense.end());
    std::vector<Vec2d> probes;
    for (int i = 0; i < 1000; ++i) probes.push_back(g.center(rng.uniform_int(0, 383), rng.uniform_int(0, 383)));
    for (double p : eval_field(f, probes)) CHECK(p <= peak);
    for (double p : dense) CHECK(p >= 0.0);
  }
}
