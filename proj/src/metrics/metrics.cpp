#include "scenecast/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "json.hpp"

namespace scenecast::metrics {

using nlohmann::json;
using sampler::ModalitySet;

bool is_miss(const Vec2d& prediction, const Vec2d& truth, double truth_heading, double truth_speed) {
  const Vec2d e = prediction - truth;
  const double c = std::cos(truth_heading), s = std::sin(truth_heading);
  const double longitudinal = c * e.x() + s * e.y();
  const double lateral = -s * e.x() + c * e.y();
  return std::abs(lateral) > kLateralThreshold || std::abs(longitudinal) > longitudinal_threshold(truth_speed);
}

std::vector<GroundTruth> ground_truth(const scene::Scene& scene) {
  std::vector<GroundTruth> out;
  for (const auto& a : scene.agents) {
    if (!a.future) continue;
    out.push_back({a.id, a.future->back(), scene::final_heading(a), scene::final_speed(a), *a.future});
  }
  return out;
}

namespace {

/// Predicted agents matched to their ground truth.
struct Matched {
  std::vector<int> rows;                  // rows of the prediction set
  std::vector<const GroundTruth*> truth;  // same length
  int excluded = 0;
};

Matched match(const ModalitySet& p, std::span<const GroundTruth> truth) {
  p.check();
  Matched m;
  for (int a = 0; a < p.agents(); ++a) {
    const int id = p.agent_ids[static_cast<std::size_t>(a)];
    const auto it = std::find_if(truth.begin(), truth.end(), [id](const GroundTruth& g) { return g.agent_id == id; });
    if (it == truth.end()) {
      ++m.excluded;
    } else {
      m.rows.push_back(a);
      m.truth.push_back(&*it);
    }
  }
  return m;
}

double percent(std::size_t count, std::size_t total) {
  return 100.0 * static_cast<double>(count) / static_cast<double>(total);
}

double fde(const ModalitySet& p, int a, int k, const GroundTruth& g) {
  return (p.endpoints[static_cast<std::size_t>(a)][static_cast<std::size_t>(k)] - g.endpoint).norm();
}

double ade(const ModalitySet& p, int a, int k, const GroundTruth& g) {
  const auto& t = p.trajectories[static_cast<std::size_t>(a)][static_cast<std::size_t>(k)];
  double s = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) s += (t[i] - g.trajectory[i]).norm();
  return s / static_cast<double>(t.size());
}

bool miss(const ModalitySet& p, int a, int k, const GroundTruth& g) {
  return is_miss(p.endpoints[static_cast<std::size_t>(a)][static_cast<std::size_t>(k)], g.endpoint, g.heading, g.speed);
}

std::vector<bool> colliding_modalities(const ModalitySet& p, double d_col) {
  std::vector<bool> out(static_cast<std::size_t>(p.modalities()), false);
  for (int k = 0; k < p.modalities(); ++k)
    for (int a = 0; a < p.agents() && !out[static_cast<std::size_t>(k)]; ++a)
      for (int b = a + 1; b < p.agents(); ++b)
        if ((p.endpoints[static_cast<std::size_t>(a)][static_cast<std::size_t>(k)] -
             p.endpoints[static_cast<std::size_t>(b)][static_cast<std::size_t>(k)])
                .norm() < d_col) {
          out[static_cast<std::size_t>(k)] = true;
          break;
        }
  return out;
}

/// min over k of the agent-averaged miss fraction, with optional forced
/// misses. Counts are compared as integers so every rate rounds alike.
double joint_miss_rate(const ModalitySet& p, const Matched& m, const std::vector<bool>* forced) {
  std::size_t best = m.rows.size();
  for (int k = 0; k < p.modalities(); ++k) {
    std::size_t misses = 0;
    for (std::size_t i = 0; i < m.rows.size(); ++i) {
      const bool f = forced != nullptr && (*forced)[static_cast<std::size_t>(k)];
      misses += (f || miss(p, m.rows[i], k, *m.truth[i])) ? 1 : 0;
    }
    best = std::min(best, misses);
  }
  return percent(best, m.rows.size());
}

}  // namespace

MarginalMetrics marginal_metrics(const ModalitySet& p, std::span<const GroundTruth> truth) {
  const Matched m = match(p, truth);
  MarginalMetrics r;
  r.agents = static_cast<int>(m.rows.size());
  r.excluded = m.excluded;
  if (m.rows.empty() || p.modalities() == 0) return r;
  double fde_sum = 0.0, ade_sum = 0.0;
  std::size_t misses = 0;
  for (std::size_t i = 0; i < m.rows.size(); ++i) {
    double best_fde = std::numeric_limits<double>::infinity(), best_ade = best_fde;
    bool all_miss = true;
    for (int k = 0; k < p.modalities(); ++k) {
      best_fde = std::min(best_fde, fde(p, m.rows[i], k, *m.truth[i]));
      if (p.has_trajectories()) best_ade = std::min(best_ade, ade(p, m.rows[i], k, *m.truth[i]));
      all_miss = all_miss && miss(p, m.rows[i], k, *m.truth[i]);
    }
    fde_sum += best_fde;
    ade_sum += best_ade;
    misses += all_miss ? 1 : 0;
  }
  const auto A = static_cast<double>(m.rows.size());
  r.mFDE = fde_sum / A;
  r.MR = percent(misses, m.rows.size());
  if (p.has_trajectories()) r.mADE = ade_sum / A;
  return r;
}

JointMetrics joint_metrics(const ModalitySet& p, std::span<const GroundTruth> truth) {
  const Matched m = match(p, truth);
  JointMetrics r;
  r.agents = static_cast<int>(m.rows.size());
  r.excluded = m.excluded;
  if (m.rows.empty() || p.modalities() == 0) return r;
  const auto A = static_cast<double>(m.rows.size());
  double best_fde = std::numeric_limits<double>::infinity(), best_ade = best_fde;
  for (int k = 0; k < p.modalities(); ++k) {
    double f = 0.0, d = 0.0;
    for (std::size_t i = 0; i < m.rows.size(); ++i) {
      f += fde(p, m.rows[i], k, *m.truth[i]);
      if (p.has_trajectories()) d += ade(p, m.rows[i], k, *m.truth[i]);
    }
    best_fde = std::min(best_fde, f / A);
    best_ade = std::min(best_ade, d / A);
  }
  r.jointFDE = best_fde;
  r.JointMR = joint_miss_rate(p, m, nullptr);
  if (p.has_trajectories()) r.jointADE = best_ade;
  return r;
}

CollisionMetrics collision_metrics(const ModalitySet& p, std::span<const GroundTruth> truth, double d_col) {
  if (!(d_col >= 0.0)) throw std::invalid_argument("collision_metrics: d_col must be >= 0");
  const Matched m = match(p, truth);
  CollisionMetrics r;
  r.modalities = p.modalities();
  if (r.modalities == 0) return r;
  const auto col = colliding_modalities(p, d_col);
  r.Col = 100.0 * static_cast<double>(std::count(col.begin(), col.end(), true)) / static_cast<double>(r.modalities);
  if (!m.rows.empty()) r.cMR = joint_miss_rate(p, m, &col);
  return r;
}

std::optional<SceneMetrics> evaluate_scene(const std::string& scene_id, const ModalitySet& prediction,
                                           std::span<const GroundTruth> truth, double d_col) {
  const auto mm = marginal_metrics(prediction, truth);
  if (mm.agents == 0) return std::nullopt;
  const auto jm = joint_metrics(prediction, truth);
  const auto cm = collision_metrics(prediction, truth, d_col);
  SceneMetrics s;
  s.scene_id = scene_id;
  s.agents = mm.agents;
  s.excluded = mm.excluded;
  s.mADE = mm.mADE;
  s.mFDE = mm.mFDE;
  s.MR = mm.MR;
  s.jointADE = jm.jointADE;
  s.jointFDE = jm.jointFDE;
  s.JointMR = jm.JointMR;
  s.Col = cm.Col;
  s.cMR = cm.cMR;
  return s;
}

namespace {

template <typename Get>
MetricSummary summarize(const std::vector<SceneMetrics>& scenes, Get get) {
  MetricSummary m;
  double sum = 0.0;
  for (const auto& s : scenes) {
    const std::optional<double> v = get(s);
    if (!v) continue;
    sum += *v;
    ++m.scenes;
  }
  if (m.scenes > 0) m.value = sum / static_cast<double>(m.scenes);
  return m;
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> optional_from(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

json summary_json(const MetricSummary& m) { return {{"value", optional_json(m.value)}, {"scenes", m.scenes}}; }

MetricSummary summary_from(const json& j) { return {optional_from(j.at("value")), j.at("scenes").get<int>()}; }

struct Field {
  const char* name;
  MetricSummary EvalReport::*summary;
};

constexpr Field kFields[] = {{"mADE", &EvalReport::mADE},         {"mFDE", &EvalReport::mFDE},
                             {"MR", &EvalReport::MR},             {"jointADE", &EvalReport::jointADE},
                             {"jointFDE", &EvalReport::jointFDE}, {"JointMR", &EvalReport::JointMR},
                             {"Col", &EvalReport::Col},           {"cMR", &EvalReport::cMR}};

}  // namespace

EvalReport aggregate(std::vector<SceneMetrics> scenes, double d_col, std::string mode, int skipped_scenes) {
  EvalReport r;
  r.mode = std::move(mode);
  r.d_col = d_col;
  r.skipped_scenes = skipped_scenes;
  r.mADE = summarize(scenes, [](const SceneMetrics& s) { return s.mADE; });
  r.mFDE = summarize(scenes, [](const SceneMetrics& s) { return std::optional(s.mFDE); });
  r.MR = summarize(scenes, [](const SceneMetrics& s) { return std::optional(s.MR); });
  r.jointADE = summarize(scenes, [](const SceneMetrics& s) { return s.jointADE; });
  r.jointFDE = summarize(scenes, [](const SceneMetrics& s) { return std::optional(s.jointFDE); });
  r.JointMR = summarize(scenes, [](const SceneMetrics& s) { return std::optional(s.JointMR); });
  r.Col = summarize(scenes, [](const SceneMetrics& s) { return std::optional(s.Col); });
  r.cMR = summarize(scenes, [](const SceneMetrics& s) { return std::optional(s.cMR); });
  for (const auto& s : scenes) r.excluded_agents += s.excluded;
  r.scenes = std::move(scenes);
  return r;
}

std::string EvalReport::to_json() const {
  json j;
  j["format"] = "scenecast-eval";
  j["version"] = 1;
  j["mode"] = mode;
  j["d_col"] = d_col;
  j["excluded_agents"] = excluded_agents;
  j["skipped_scenes"] = skipped_scenes;
  j["config"] = json::parse(config_json.empty() ? "{}" : config_json);
  json metrics = json::object();
  for (const auto& f : kFields) metrics[f.name] = summary_json(this->*f.summary);
  j["metrics"] = metrics;
  json per = json::array();
  for (const auto& s : scenes)
    per.push_back({{"id", s.scene_id},
                   {"agents", s.agents},
                   {"excluded", s.excluded},
                   {"mADE", optional_json(s.mADE)},
                   {"mFDE", s.mFDE},
                   {"MR", s.MR},
                   {"jointADE", optional_json(s.jointADE)},
                   {"jointFDE", s.jointFDE},
                   {"JointMR", s.JointMR},
                   {"Col", s.Col},
                   {"cMR", s.cMR}});
  j["scenes"] = per;
  return j.dump(1);
}

EvalReport EvalReport::from_json(const std::string& text) {
  const json j = json::parse(text);
  if (j.value("format", "") != "scenecast-eval") throw std::runtime_error("not a scenecast evaluation report");
  EvalReport r;
  r.mode = j.value("mode", "");
  r.d_col = j.at("d_col").get<double>();
  r.excluded_agents = j.value("excluded_agents", 0);
  r.skipped_scenes = j.value("skipped_scenes", 0);
  r.config_json = j.value("config", json::object()).dump();
  for (const auto& f : kFields) r.*f.summary = summary_from(j.at("metrics").at(f.name));
  for (const auto& s : j.at("scenes")) {
    SceneMetrics m;
    m.scene_id = s.at("id").get<std::string>();
    m.agents = s.at("agents").get<int>();
    m.excluded = s.at("excluded").get<int>();
    m.mADE = optional_from(s.at("mADE"));
    m.mFDE = s.at("mFDE").get<double>();
    m.MR = s.at("MR").get<double>();
    m.jointADE = optional_from(s.at("jointADE"));
    m.jointFDE = s.at("jointFDE").get<double>();
    m.JointMR = s.at("JointMR").get<double>();
    m.Col = s.at("Col").get<double>();
    m.cMR = s.at("cMR").get<double>();
    r.scenes.push_back(std::move(m));
  }
  return r;
}

std::string EvalReport::table() const {
  auto cell = [](const MetricSummary& m, int precision) {
    if (!m.value) return std::string("-");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.*f", precision, *m.value);
    return std::string(buf);
  };
  char line[256];
  std::ostringstream os;
  os << "mode: " << (mode.empty() ? "-" : mode) << "   scenes: " << scenes.size() << "   d_col: " << d_col << " m\n";
  std::snprintf(line, sizeof line, "%-8s %8s %8s %8s | %9s %8s %8s %8s\n", "", "mADE", "mFDE", "MR", "jointFDE",
                "JointMR", "Col", "cMR");
  os << line;
  std::snprintf(line, sizeof line, "%-8s %8s %8s %8s | %9s %8s %8s %8s\n", "", "(m)", "(m)", "(%)", "(m)", "(%)",
                "(%)", "(%)");
  os << line;
  std::snprintf(line, sizeof line, "%-8s %8s %8s %8s | %9s %8s %8s %8s\n", "value", cell(mADE, 3).c_str(),
                cell(mFDE, 3).c_str(), cell(MR, 2).c_str(), cell(jointFDE, 3).c_str(), cell(JointMR, 2).c_str(),
                cell(Col, 2).c_str(), cell(cMR, 2).c_str());
  os << line;
  return os.str();
}

}  // namespace scenecast::metrics
