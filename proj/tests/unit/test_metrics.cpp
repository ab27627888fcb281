#include <cmath>

#include <Eigen/Geometry>

#include "../support/metric_fixtures.hpp"
#include "doctest.h"

using namespace scenecast;
using namespace scenecast::metrics;

namespace {

sampler::ModalitySet set_of(std::vector<std::vector<Vec2d>> endpoints, std::vector<int> ids) {
  sampler::ModalitySet s;
  s.agent_ids = std::move(ids);
  s.endpoints = std::move(endpoints);
  return s;
}

GroundTruth truth_at(int id, Vec2d p, double heading = 0.0, double speed = 0.0) {
  GroundTruth g;
  g.agent_id = id;
  g.endpoint = p;
  g.heading = heading;
  g.speed = speed;
  return g;
}

// Agent 0's FDEs are [1, 3], agent 1's are [3, 1].
struct CrossFixture {
  sampler::ModalitySet set = set_of({{Vec2d(1, 0), Vec2d(3, 0)}, {Vec2d(103, 0), Vec2d(101, 0)}}, {0, 1});
  std::vector<GroundTruth> truth{truth_at(0, Vec2d(0, 0)), truth_at(1, Vec2d(100, 0))};
};

}  // namespace

TEST_CASE("longitudinal threshold anchors and knots") {
  CHECK(longitudinal_threshold(0.0) == 1.0);
  CHECK(longitudinal_threshold(1.4) == 1.0);
  CHECK(longitudinal_threshold(11.0) == 2.0);
  CHECK(longitudinal_threshold(6.2) == doctest::Approx(1.5).epsilon(1e-15));
  CHECK(longitudinal_threshold(30.0) == 2.0);
  CHECK(std::abs(longitudinal_threshold(1.4 - 1e-13) - longitudinal_threshold(1.4 + 1e-13)) < 1e-12);
  CHECK(std::abs(longitudinal_threshold(11.0 - 1e-13) - longitudinal_threshold(11.0 + 1e-13)) < 1e-12);
  CHECK_THROWS_AS(longitudinal_threshold(-0.1), std::invalid_argument);
  CHECK_THROWS_AS(longitudinal_threshold(std::nan("")), std::invalid_argument);
  double prev = 0.0;
  for (double v = 0.0; v < 15.0; v += 0.01) {
    CHECK(longitudinal_threshold(v) >= prev);
    prev = longitudinal_threshold(v);
  }
  CHECK(longitudinal_threshold(6.2f) == doctest::Approx(1.5f));
}

TEST_CASE("miss test in the ground-truth heading frame") {
  CHECK_FALSE(is_miss(Vec2d(3, 4), Vec2d(3, 4), 0.3, 5.0));
  CHECK(is_miss(Vec2d(0, 1.5), Vec2d(0, 0), 0.0, 0.0));       // lateral 1.5
  CHECK_FALSE(is_miss(Vec2d(0.9, 0), Vec2d(0, 0), 0.0, 0.0));  // longitudinal 0.9 < 1
  CHECK(is_miss(Vec2d(1.1, 0), Vec2d(0, 0), 0.0, 0.0));
  CHECK_FALSE(is_miss(Vec2d(1.9, 0), Vec2d(0, 0), 0.0, 12.0));
  // Heading north: an x error is lateral.
  CHECK(is_miss(Vec2d(1.2, 0), Vec2d(0, 0), M_PI / 2, 12.0));
  CHECK_FALSE(is_miss(Vec2d(0, 1.9), Vec2d(0, 0), M_PI / 2, 12.0));
}

TEST_CASE("marginal and joint FDE on the crossed fixture") {
  const CrossFixture f;
  const auto m = marginal_metrics(f.set, f.truth);
  const auto j = joint_metrics(f.set, f.truth);
  CHECK(m.mFDE == doctest::Approx(1.0));
  CHECK(j.jointFDE == doctest::Approx(2.0));
  CHECK(m.agents == 2);
  CHECK_FALSE(m.mADE.has_value());
  // Each agent has one hit, but no modality hits both.
  CHECK(m.MR == 0.0);
  CHECK(j.JointMR == doctest::Approx(50.0));
}

TEST_CASE("exact prediction, duplicates and K = 1") {
  const auto exact = set_of({{Vec2d(5, 5)}}, {3});
  const std::vector<GroundTruth> t{truth_at(3, Vec2d(5, 5))};
  const auto m = marginal_metrics(exact, t);
  CHECK(m.mFDE == 0.0);
  CHECK(m.MR == 0.0);

  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    auto c = testing::random_prediction_case(rng);
    // Keep only modality 0, then duplicate it three times.
    for (auto& e : c.prediction.endpoints) e.resize(1);
    for (auto& tr : c.prediction.trajectories) tr.resize(1);
    const auto one_m = marginal_metrics(c.prediction, c.truth);
    const auto one_j = joint_metrics(c.prediction, c.truth);
    CHECK(one_m.mFDE == doctest::Approx(one_j.jointFDE));
    CHECK(one_m.mADE.value() == doctest::Approx(one_j.jointADE.value()));
    auto dup = c.prediction;
    for (auto& e : dup.endpoints) e = {e[0], e[0], e[0]};
    for (auto& tr : dup.trajectories) tr = {tr[0], tr[0], tr[0]};
    CHECK(marginal_metrics(dup, c.truth).mFDE == one_m.mFDE);
    CHECK(marginal_metrics(dup, c.truth).MR == one_m.MR);
    CHECK(joint_metrics(dup, c.truth).JointMR == one_j.JointMR);
  }
}

TEST_CASE("collision rate and consistent miss rate") {
  // Six modalities, agents apart except in modality 2.
  std::vector<Vec2d> a0, a1;
  for (int k = 0; k < 6; ++k) {
    a0.emplace_back(k * 10.0, 0.0);
    a1.emplace_back(k * 10.0, k == 2 ? 0.0 : 5.0);
  }
  const auto s = set_of({a0, a1}, {1, 2});
  const std::vector<GroundTruth> t{truth_at(1, Vec2d(20, 0)), truth_at(2, Vec2d(20, 0))};
  const auto c = collision_metrics(s, t, 2.0);
  CHECK(c.Col == doctest::Approx(100.0 / 6.0));
  CHECK(c.modalities == 6);
  // Modality 2 is the only joint hit, and it collides; every other
  // modality misses both agents.
  CHECK(joint_metrics(s, t).JointMR == 0.0);
  CHECK(c.cMR == 100.0);

  const auto apart = set_of({{Vec2d(0, 0)}, {Vec2d(0, 3)}}, {1, 2});
  const auto c2 = collision_metrics(apart, {{truth_at(1, Vec2d(0, 0)), truth_at(2, Vec2d(0, 3))}}, 2.0);
  CHECK(c2.Col == 0.0);
  CHECK(c2.cMR == joint_metrics(apart, {{truth_at(1, Vec2d(0, 0)), truth_at(2, Vec2d(0, 3))}}).JointMR);
  CHECK(collision_metrics(apart, {}, 3.5).Col == 100.0);
}

TEST_CASE("agents without ground truth are excluded and counted") {
  const auto s = set_of({{Vec2d(0, 0)}, {Vec2d(9, 9)}}, {1, 2});
  const std::vector<GroundTruth> t{truth_at(1, Vec2d(0, 0))};
  const auto m = marginal_metrics(s, t);
  CHECK(m.agents == 1);
  CHECK(m.excluded == 1);
  CHECK(m.mFDE == 0.0);
  CHECK_FALSE(evaluate_scene("x", s, {}).has_value());
}

TEST_CASE("joint metrics dominate marginal ones on random sets") {
  Rng rng(7);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto c = testing::random_prediction_case(rng);
    const auto m = marginal_metrics(c.prediction, c.truth);
    const auto j = joint_metrics(c.prediction, c.truth);
    const auto col = collision_metrics(c.prediction, c.truth, 2.0);
    CHECK(j.jointFDE >= m.mFDE - 1e-12);
    CHECK(*j.jointADE >= *m.mADE - 1e-12);
    CHECK(j.JointMR >= m.MR);
    CHECK(col.cMR >= j.JointMR);
    CHECK(m.MR >= 0.0);
    CHECK(col.cMR <= 100.0);
  }
}

TEST_CASE("metrics are invariant to rigid motions and modality order") {
  Rng rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    const auto c = testing::random_prediction_case(rng);
    const double th = rng.uniform(-M_PI, M_PI);
    const Vec2d shift(rng.uniform(-500, 500), rng.uniform(-500, 500));
    const Eigen::Rotation2Dd R(th);
    auto moved = c;
    for (auto& g : moved.truth) {
      g.endpoint = R * g.endpoint + shift;
      g.heading += th;
      for (auto& p : g.trajectory) p = R * p + shift;
    }
    for (auto& per : moved.prediction.endpoints)
      for (auto& p : per) p = R * p + shift;
    for (auto& per : moved.prediction.trajectories)
      for (auto& tr : per)
        for (auto& p : tr) p = R * p + shift;
    const auto a = evaluate_scene("s", c.prediction, c.truth).value();
    const auto b = evaluate_scene("s", moved.prediction, moved.truth).value();
    CHECK(a.mFDE == doctest::Approx(b.mFDE).epsilon(1e-9));
    CHECK(a.jointFDE == doctest::Approx(b.jointFDE).epsilon(1e-9));
    CHECK(*a.mADE == doctest::Approx(*b.mADE).epsilon(1e-9));
    // Rates only move when an error sits within rounding of a threshold.
    CHECK(a.MR == b.MR);
    CHECK(a.JointMR == b.JointMR);
    CHECK(a.Col == b.Col);
    CHECK(a.cMR == b.cMR);

    auto reversed = c.prediction;
    for (auto& e : reversed.endpoints) std::reverse(e.begin(), e.end());
    for (auto& tr : reversed.trajectories) std::reverse(tr.begin(), tr.end());
    const auto r = evaluate_scene("s", reversed, c.truth).value();
    CHECK(r.mFDE == a.mFDE);
    CHECK(r.jointFDE == a.jointFDE);
    CHECK(r.MR == a.MR);
    CHECK(r.JointMR == a.JointMR);
    CHECK(r.Col == a.Col);
    CHECK(r.cMR == a.cMR);
  }
}

TEST_CASE("report averages per scene and round-trips through JSON") {
  Rng rng(11);
  std::vector<SceneMetrics> scenes;
  for (int i = 0; i < 5; ++i) {
    const auto c = testing::random_prediction_case(rng, 4.0, i % 2 == 0);
    scenes.push_back(evaluate_scene("scene-" + std::to_string(i), c.prediction, c.truth).value());
  }
  const auto r = aggregate(scenes, 2.0, "joint-algo");
  double mean = 0.0;
  for (const auto& s : scenes) mean += s.jointFDE;
  CHECK(*r.jointFDE.value == doctest::Approx(mean / 5));
  CHECK(r.jointFDE.scenes == 5);
  CHECK(r.mADE.scenes == 3);
  const auto back = EvalReport::from_json(r.to_json());
  CHECK(back.to_json() == r.to_json());
  CHECK(*back.cMR.value == *r.cMR.value);
  const std::string table = r.table();
  for (const char* col : {"mADE", "mFDE", "MR", "jointFDE", "JointMR", "Col", "cMR"}) CHECK(table.find(col) != std::string::npos);
  CHECK_THROWS(EvalReport::from_json(R"({"format":"other"})"));
}
