#include "scenecast/scene/generator.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "scenecast/nn/params.hpp"

namespace scenecast::scene {

std::string to_string(MapTemplate t) {
  switch (t) {
    case MapTemplate::Straight: return "straight";
    case MapTemplate::TJunction: return "t_junction";
    case MapTemplate::Crossroad: return "crossroad";
    case MapTemplate::Roundabout: return "roundabout";
  }
  return "unknown";
}

MapTemplate map_template_from_string(const std::string& s) {
  for (auto t : {MapTemplate::Straight, MapTemplate::TJunction, MapTemplate::Crossroad, MapTemplate::Roundabout})
    if (to_string(t) == s) return t;
  throw std::invalid_argument("unknown map template '" + s + "'");
}

void GeneratorConfig::validate() const {
  auto fail = [](const std::string& m) { throw std::invalid_argument("generator config: " + m); };
  if (min_agents < 1 || max_agents > 40 || min_agents > max_agents) fail("agent count range must satisfy 1 <= min <= max <= 40");
  if (templates.empty()) fail("at least one map template is required");
  if (!(lane_width > 0) || !(arm_length >= 40) || !(roundabout_radius >= 8)) fail("invalid map geometry");
  if (max_curvature < 0 || max_curvature > 0.02) fail("max_curvature must lie in [0, 0.02]");
  if (!(spawn_min_distance >= 0) || spawn_max_distance < spawn_min_distance || spawn_max_distance > arm_length - 15)
    fail("spawn distance range must lie within the arm");
  if (min_speed < 0 || max_speed < min_speed || max_speed > 15) fail("speed range must satisfy 0 <= min <= max <= 15");
  if (!(min_spacing > 0)) fail("min_spacing must be positive");
  if (position_noise < 0 || yaw_noise < 0 || speed_noise < 0) fail("noise levels must be non-negative");
  for (double p : {exit_spawn_fraction, missing_history_prob, missing_future_prob, interaction_fraction})
    if (p < 0 || p > 1) fail("probabilities must lie in [0, 1]");
  if (yield_window < 0 || yield_gap < 0) fail("yield timings must be non-negative");
  if (!(max_endpoint_range > 0) || max_endpoint_range > 96) fail("max_endpoint_range must lie in (0, 96]");
}

namespace {

constexpr double kLaneletTargetLength = 18.0;
constexpr double kHorizon = kFutureFrames * kFrameDt;

Vec2d unit(double a) { return {std::cos(a), std::sin(a)}; }
Vec2d right_of(const Vec2d& d) { return {d.y(), -d.x()}; }

double cross(const Vec2d& a, const Vec2d& b) { return a.x() * b.y() - a.y() * b.x(); }

/// Resamples a polyline to `n` points evenly spaced in arc length.
std::vector<Vec2d> resample(const std::vector<Vec2d>& pts, int n) {
  std::vector<double> s(pts.size(), 0.0);
  for (std::size_t i = 1; i < pts.size(); ++i) s[i] = s[i - 1] + (pts[i] - pts[i - 1]).norm();
  std::vector<Vec2d> out;
  std::size_t seg = 0;
  for (int k = 0; k < n; ++k) {
    const double target = s.back() * k / (n - 1);
    while (seg + 2 < pts.size() && s[seg + 1] < target) ++seg;
    const double len = s[seg + 1] - s[seg];
    const double t = len > 0 ? std::clamp((target - s[seg]) / len, 0.0, 1.0) : 0.0;
    out.push_back(pts[seg] + t * (pts[seg + 1] - pts[seg]));
  }
  out.front() = pts.front();
  out.back() = pts.back();
  return out;
}

std::vector<Vec2d> bezier(const Vec2d& p0, const Vec2d& c, const Vec2d& p2, int n) {
  std::vector<Vec2d> dense;
  for (int i = 0; i <= 60; ++i) {
    const double t = i / 60.0;
    dense.push_back((1 - t) * (1 - t) * p0 + 2 * (1 - t) * t * c + t * t * p2);
  }
  return resample(dense, n);
}

int point_count(double length) {
  return std::clamp(static_cast<int>(std::ceil(length / 2.5)) + 1, 2, kMaxLanePoints);
}

double polyline_length(const std::vector<Vec2d>& pts) {
  double l = 0;
  for (std::size_t i = 1; i < pts.size(); ++i) l += (pts[i] - pts[i - 1]).norm();
  return l;
}

class LaneGraph {
 public:
  int add(const std::vector<Vec2d>& pts) {
    Lane l;
    l.id = static_cast<int>(lanes_.size());
    l.points = resample(pts, point_count(polyline_length(pts)));
    lanes_.push_back(std::move(l));
    return lanes_.back().id;
  }

  /// Splits a dense polyline into consecutive lanelets; returns their ids in order.
  std::vector<int> add_chain(const std::vector<Vec2d>& dense) {
    const double len = polyline_length(dense);
    const int pieces = std::max(1, static_cast<int>(std::round(len / kLaneletTargetLength)));
    std::vector<double> s(dense.size(), 0.0);
    for (std::size_t i = 1; i < dense.size(); ++i) s[i] = s[i - 1] + (dense[i] - dense[i - 1]).norm();
    std::vector<int> ids;
    std::size_t start = 0;
    for (int p = 1; p <= pieces; ++p) {
      const double end_s = len * p / pieces;
      std::size_t end = start + 1;
      while (end + 1 < dense.size() && s[end] < end_s - 1e-9) ++end;
      if (p == pieces) end = dense.size() - 1;
      std::vector<Vec2d> part(dense.begin() + static_cast<long>(start), dense.begin() + static_cast<long>(end) + 1);
      ids.push_back(add(part));
      start = end;
    }
    for (std::size_t i = 1; i < ids.size(); ++i) link(ids[i - 1], ids[i]);
    return ids;
  }

  void link(int from, int to) {
    add_unique(lanes_[static_cast<std::size_t>(from)].successors, to);
    add_unique(lanes_[static_cast<std::size_t>(to)].predecessors, from);
  }

  /// `left_lane` lies to the left of `right_lane` in their travel direction.
  void side(int left_lane, int right_lane) {
    add_unique(lanes_[static_cast<std::size_t>(right_lane)].left, left_lane);
    add_unique(lanes_[static_cast<std::size_t>(left_lane)].right, right_lane);
  }

  [[nodiscard]] const Lane& lane(int id) const { return lanes_[static_cast<std::size_t>(id)]; }
  [[nodiscard]] std::vector<Lane> take() { return std::move(lanes_); }
  [[nodiscard]] const std::vector<Lane>& lanes() const { return lanes_; }

 private:
  static void add_unique(std::vector<int>& v, int x) {
    if (std::find(v.begin(), v.end(), x) == v.end()) v.push_back(x);
  }
  std::vector<Lane> lanes_;
};

std::vector<Vec2d> dense_segment(const Vec2d& a, const Vec2d& b, double step = 1.0) {
  const int n = std::max(2, static_cast<int>(std::ceil((b - a).norm() / step)) + 1);
  std::vector<Vec2d> out;
  for (int i = 0; i < n; ++i) out.push_back(a + (b - a) * (static_cast<double>(i) / (n - 1)));
  return out;
}

/// A spawn site: an entry lanelet chain plus where agents may be placed on it.
struct SpawnChain {
  std::vector<int> lanelets;  // upstream to downstream
  double min_from_end = 0;    // allowed distance before the chain's end
  double max_from_end = 0;
  bool entering = true;
};

struct MapLayout {
  LaneGraph graph;
  std::vector<SpawnChain> spawns;
};

Vec2d line_intersection(const Vec2d& p, const Vec2d& d, const Vec2d& q, const Vec2d& e, bool& ok) {
  const double den = cross(d, e);
  ok = std::abs(den) > 1e-6;
  if (!ok) return p;
  const double t = cross(q - p, e) / den;
  return p + t * d;
}

MapLayout build_junction(const GeneratorConfig& cfg, Rng& rng, int arms) {
  MapLayout m;
  const double w = cfg.lane_width;
  const double j = 2.0 * w;
  const double len = cfg.arm_length;
  std::vector<double> angles;
  const double base = rng.uniform(-M_PI, M_PI);
  // T-junctions drop the arm at 270 degrees.
  const std::vector<double> slots = arms == 4 ? std::vector<double>{0, 0.5 * M_PI, M_PI, 1.5 * M_PI}
                                              : std::vector<double>{0, 0.5 * M_PI, M_PI};
  for (double s : slots) angles.push_back(base + s + rng.uniform(-0.15, 0.15));

  std::vector<int> in_last(angles.size()), out_first(angles.size());
  std::vector<Vec2d> in_end(angles.size()), out_start(angles.size());
  for (std::size_t i = 0; i < angles.size(); ++i) {
    const Vec2d u = unit(angles[i]);
    const Vec2d off_in = right_of(-u) * (w / 2);
    const Vec2d off_out = right_of(u) * (w / 2);
    in_end[i] = u * j + off_in;
    out_start[i] = u * j + off_out;
    auto in_ids = m.graph.add_chain(dense_segment(u * (j + len) + off_in, in_end[i]));
    auto out_ids = m.graph.add_chain(dense_segment(out_start[i], u * (j + len) + off_out));
    in_last[i] = in_ids.back();
    out_first[i] = out_ids.front();
    m.spawns.push_back({in_ids, cfg.spawn_min_distance, cfg.spawn_max_distance, true});
    m.spawns.push_back({out_ids, len - 22.0, len - 2.0, false});
  }
  for (std::size_t a = 0; a < angles.size(); ++a) {
    for (std::size_t b = 0; b < angles.size(); ++b) {
      if (a == b) continue;
      bool ok = false;
      Vec2d c = line_intersection(in_end[a], -unit(angles[a]), out_start[b], unit(angles[b]), ok);
      const Vec2d mid = 0.5 * (in_end[a] + out_start[b]);
      if (!ok || (c - mid).norm() > 3.0 * j || (c - in_end[a]).dot(-unit(angles[a])) < 0) c = mid;
      const int conn = m.graph.add(bezier(in_end[a], c, out_start[b], kMaxLanePoints));
      m.graph.link(in_last[a], conn);
      m.graph.link(conn, out_first[b]);
    }
  }
  return m;
}

MapLayout build_roundabout(const GeneratorConfig& cfg, Rng& rng) {
  MapLayout m;
  const double w = cfg.lane_width;
  const double radius = cfg.roundabout_radius;
  const double gap = 6.0;
  const double len = cfg.arm_length;
  const double delta = 0.45;
  const double base = rng.uniform(-M_PI, M_PI);
  std::vector<double> angles;
  for (int i = 0; i < 4; ++i) angles.push_back(base + i * 0.5 * M_PI + rng.uniform(-0.15, 0.15));

  auto ring = [&](double a) { return Vec2d(radius * std::cos(a), radius * std::sin(a)); };
  auto tangent = [&](double a) { return Vec2d(-std::sin(a), std::cos(a)); };

  // Ring nodes in counter-clockwise order: exit (phi - delta) then entry (phi + delta) per arm.
  struct Node {
    double angle;
    int arm;
    bool entry;
  };
  std::vector<Node> nodes;
  for (int i = 0; i < 4; ++i) {
    nodes.push_back({angles[static_cast<std::size_t>(i)] - delta, i, false});
    nodes.push_back({angles[static_cast<std::size_t>(i)] + delta, i, true});
  }
  // Ring segments between consecutive nodes.
  std::vector<std::vector<int>> seg(nodes.size());
  for (std::size_t n = 0; n < nodes.size(); ++n) {
    const double a0 = nodes[n].angle;
    double a1 = nodes[(n + 1) % nodes.size()].angle;
    while (a1 <= a0) a1 += 2 * M_PI;
    std::vector<Vec2d> dense;
    const int steps = std::max(4, static_cast<int>((a1 - a0) * radius));
    for (int k = 0; k <= steps; ++k) dense.push_back(ring(a0 + (a1 - a0) * k / steps));
    seg[n] = m.graph.add_chain(dense);
  }
  for (std::size_t n = 0; n < nodes.size(); ++n) m.graph.link(seg[n].back(), seg[(n + 1) % nodes.size()].front());

  for (std::size_t n = 0; n < nodes.size(); ++n) {
    const int arm = nodes[n].arm;
    const Vec2d u = unit(angles[static_cast<std::size_t>(arm)]);
    const double a = nodes[n].angle;
    if (nodes[n].entry) {
      const Vec2d off_in = right_of(-u) * (w / 2);
      const Vec2d end = u * (radius + gap) + off_in;
      auto in_ids = m.graph.add_chain(dense_segment(u * (radius + gap + len) + off_in, end));
      const int conn = m.graph.add(bezier(end, ring(a) - tangent(a) * 4.0, ring(a), 6));
      m.graph.link(in_ids.back(), conn);
      m.graph.link(conn, seg[n].front());
      m.spawns.push_back({in_ids, cfg.spawn_min_distance, cfg.spawn_max_distance, true});
    } else {
      const Vec2d off_out = right_of(u) * (w / 2);
      const Vec2d start = u * (radius + gap) + off_out;
      const int prev = seg[(n + nodes.size() - 1) % nodes.size()].back();
      const int conn = m.graph.add(bezier(ring(a), ring(a) + tangent(a) * 4.0, start, 6));
      auto out_ids = m.graph.add_chain(dense_segment(start, u * (radius + gap + len) + off_out));
      m.graph.link(prev, conn);
      m.graph.link(conn, out_ids.front());
      m.spawns.push_back({out_ids, len - 22.0, len - 2.0, false});
    }
  }
  return m;
}

MapLayout build_straight(const GeneratorConfig& cfg, Rng& rng) {
  MapLayout m;
  const double w = cfg.lane_width;
  const double total = 2.0 * cfg.arm_length + 40.0;
  const double kappa = rng.uniform(-cfg.max_curvature, cfg.max_curvature);
  auto at = [&](double s, double offset) -> Vec2d {
    if (std::abs(kappa) < 1e-9) return {s, offset};
    const double r = 1.0 / kappa;
    return {std::sin(s * kappa) * (r - offset), r - std::cos(s * kappa) * (r - offset)};
  };
  auto lane_line = [&](double offset, bool forward) {
    std::vector<Vec2d> dense;
    const int n = static_cast<int>(total);
    for (int i = 0; i <= n; ++i) {
      const double s = -total / 2 + total * i / n;
      dense.push_back(at(forward ? s : -s, offset));
    }
    return dense;
  };
  // Right-hand traffic: forward lanes at negative offsets.
  auto f_inner = m.graph.add_chain(lane_line(-w / 2, true));
  auto f_outer = m.graph.add_chain(lane_line(-1.5 * w, true));
  auto b_inner = m.graph.add_chain(lane_line(w / 2, false));
  auto b_outer = m.graph.add_chain(lane_line(1.5 * w, false));
  for (std::size_t i = 0; i < f_inner.size(); ++i) m.graph.side(f_inner[i], f_outer[i]);
  for (std::size_t i = 0; i < b_inner.size(); ++i) m.graph.side(b_inner[i], b_outer[i]);
  const double from_end_lo = total / 2 - 40.0;
  const double from_end_hi = total / 2 + 40.0;
  for (auto* chain : {&f_inner, &f_outer, &b_inner, &b_outer}) m.spawns.push_back({*chain, from_end_lo, from_end_hi, false});
  return m;
}

/// Continuous polyline over a route of lanelets, parameterized by arc length.
struct RoutePath {
  std::vector<int> lanelets;
  std::vector<double> lanelet_start;  // arc at the start of each lanelet
  std::vector<Vec2d> pts;
  std::vector<double> s;

  void append(const Lane& lane) {
    lanelets.push_back(lane.id);
    std::size_t first = 0;
    if (!pts.empty() && (pts.back() - lane.points.front()).norm() < 1e-6) first = 1;
    lanelet_start.push_back(s.empty() ? 0.0 : s.back());
    for (std::size_t i = first; i < lane.points.size(); ++i) {
      const double ds = pts.empty() ? 0.0 : (lane.points[i] - pts.back()).norm();
      s.push_back(s.empty() ? 0.0 : s.back() + ds);
      pts.push_back(lane.points[i]);
    }
  }

  [[nodiscard]] double length() const { return s.back(); }

  [[nodiscard]] std::size_t segment(double arc) const {
    auto it = std::upper_bound(s.begin(), s.end(), arc);
    std::size_t i = it == s.begin() ? 0 : static_cast<std::size_t>(it - s.begin()) - 1;
    return std::min(i, pts.size() - 2);
  }

  [[nodiscard]] Vec2d at(double arc) const {
    arc = std::clamp(arc, 0.0, length());
    const std::size_t i = segment(arc);
    const double len = s[i + 1] - s[i];
    const double t = len > 0 ? (arc - s[i]) / len : 0.0;
    return pts[i] + t * (pts[i + 1] - pts[i]);
  }

  [[nodiscard]] double heading(double arc) const {
    arc = std::clamp(arc, 0.0, length());
    const std::size_t i = segment(arc);
    const Vec2d d = pts[i + 1] - pts[i];
    return std::atan2(d.y(), d.x());
  }

  [[nodiscard]] int lanelet_index_at(double arc) const {
    auto it = std::upper_bound(lanelet_start.begin(), lanelet_start.end(), arc);
    return std::max(0, static_cast<int>(it - lanelet_start.begin()) - 1);
  }
};

struct AgentPlan {
  RoutePath path;
  double s0 = 0;     // arc at prediction time
  double speed = 0;  // nominal speed
  double future_speed = 0;
  std::array<double, kFutureFrames> future_s{};
};

/// Samples a route through `chain` with `before` meters behind the spawn
/// arc and enough lanelets ahead for the horizon.
std::optional<AgentPlan> plan_agent(const LaneGraph& g, const SpawnChain& chain, double from_end, double speed, Rng& rng) {
  // Backward extension from the chain start.
  std::vector<int> back;
  double behind = 0;
  for (const int id : chain.lanelets) behind += g.lane(id).length();
  behind -= from_end;
  int cur = chain.lanelets.front();
  while (behind < 15.0) {
    const auto& preds = g.lane(cur).predecessors;
    if (preds.empty()) return std::nullopt;
    cur = preds.front();
    back.push_back(cur);
    behind += g.lane(cur).length();
  }
  std::reverse(back.begin(), back.end());
  AgentPlan plan;
  for (int id : back) plan.path.append(g.lane(id));
  for (int id : chain.lanelets) plan.path.append(g.lane(id));
  const double chain_end = plan.path.length();
  plan.s0 = chain_end - from_end;
  // Forward extension with uniform branch choice.
  cur = chain.lanelets.back();
  while (plan.path.length() - plan.s0 < speed * kHorizon + 15.0) {
    const auto& succ = g.lane(cur).successors;
    if (succ.empty()) break;
    cur = succ[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(succ.size()) - 1))];
    plan.path.append(g.lane(cur));
  }
  plan.speed = speed;
  plan.future_speed = speed;
  return plan;
}

/// First conflict between two routes ahead of their current positions:
/// a merge onto a shared lanelet or a proper crossing of the polylines.
/// Returns arcs (on a, on b) or nullopt. Agents already sharing a lanelet
/// are car-following rather than conflicting.
std::optional<std::pair<double, double>> find_conflict(const AgentPlan& a, const AgentPlan& b) {
  const int ia = a.path.lanelet_index_at(a.s0);
  const int ib = b.path.lanelet_index_at(b.s0);
  std::set<int> ahead_b;
  for (std::size_t k = static_cast<std::size_t>(ib); k < b.path.lanelets.size(); ++k) ahead_b.insert(b.path.lanelets[k]);
  std::set<int> ahead_a;
  for (std::size_t k = static_cast<std::size_t>(ia); k < a.path.lanelets.size(); ++k) ahead_a.insert(a.path.lanelets[k]);
  if (ahead_b.count(a.path.lanelets[static_cast<std::size_t>(ia)]) || ahead_a.count(b.path.lanelets[static_cast<std::size_t>(ib)]))
    return std::nullopt;

  std::optional<std::pair<double, double>> best;
  // Merge: first shared lanelet.
  for (std::size_t k = static_cast<std::size_t>(ia); k < a.path.lanelets.size(); ++k) {
    const int id = a.path.lanelets[k];
    if (!ahead_b.count(id)) continue;
    const auto kb = std::find(b.path.lanelets.begin(), b.path.lanelets.end(), id) - b.path.lanelets.begin();
    best = std::make_pair(a.path.lanelet_start[k], b.path.lanelet_start[static_cast<std::size_t>(kb)]);
    break;
  }
  // Crossing: proper segment intersections ahead of both agents.
  const double a_limit = best ? best->first : a.path.length();
  for (std::size_t i = a.path.segment(a.s0); i + 1 < a.path.pts.size() && a.path.s[i] < a_limit; ++i) {
    const Vec2d p = a.path.pts[i], d = a.path.pts[i + 1] - a.path.pts[i];
    for (std::size_t j = b.path.segment(b.s0); j + 1 < b.path.pts.size(); ++j) {
      const Vec2d q = b.path.pts[j], e = b.path.pts[j + 1] - b.path.pts[j];
      const double den = cross(d, e);
      if (std::abs(den) < 1e-9) continue;
      const double t = cross(q - p, e) / den;
      const double u = cross(q - p, d) / den;
      if (t < 0 || t > 1 || u < 0 || u > 1) continue;
      const double sa = a.path.s[i] + t * d.norm();
      const double sb = b.path.s[j] + u * e.norm();
      if (sa < a.s0 || sb < b.s0) continue;
      if (!best || sa < best->first) best = std::make_pair(sa, sb);
      goto done;
    }
  }
done:
  return best;
}

struct PlacedAgent {
  AgentPlan plan;
  int id;
};

}  // namespace

std::uint64_t dataset_scene_seed(std::uint64_t seed, std::uint64_t index) {
  Rng mix(seed ^ (0x9e3779b97f4a7c15ULL * (index + 1)));
  return mix.next();
}

namespace {

std::optional<Scene> try_generate(Rng& rng, const GeneratorConfig& cfg, const std::string& id) {
  const auto tmpl = cfg.templates[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(cfg.templates.size()) - 1))];
  MapLayout layout = tmpl == MapTemplate::Straight   ? build_straight(cfg, rng)
                     : tmpl == MapTemplate::Roundabout ? build_roundabout(cfg, rng)
                     : build_junction(cfg, rng, tmpl == MapTemplate::Crossroad ? 4 : 3);
  const int target = rng.uniform_int(cfg.min_agents, cfg.max_agents);
  const bool interaction = tmpl != MapTemplate::Straight && rng.bernoulli(cfg.interaction_fraction);

  std::vector<PlacedAgent> placed;
  auto spaced = [&](const AgentPlan& p) {
    for (const auto& o : placed) {
      for (double dt : {0.0, -0.9}) {
        const Vec2d a = p.path.at(p.s0 + dt * p.speed);
        const Vec2d b = o.plan.path.at(o.plan.s0 + dt * o.plan.speed);
        if ((a - b).norm() < cfg.min_spacing) return false;
      }
    }
    return true;
  };
  auto entering = [&]() {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < layout.spawns.size(); ++i)
      if (layout.spawns[i].entering || tmpl == MapTemplate::Straight) idx.push_back(i);
    return idx;
  }();
  auto pick_spawn = [&](bool allow_exit) -> const SpawnChain& {
    if (allow_exit && tmpl != MapTemplate::Straight && rng.bernoulli(cfg.exit_spawn_fraction)) {
      std::vector<std::size_t> exits;
      for (std::size_t i = 0; i < layout.spawns.size(); ++i)
        if (!layout.spawns[i].entering) exits.push_back(i);
      return layout.spawns[exits[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(exits.size()) - 1))]];
    }
    return layout.spawns[entering[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(entering.size()) - 1))]];
  };

  int attempts = 0;
  int forced_attempts = 0;
  while (static_cast<int>(placed.size()) < target && attempts < 60 * target) {
    ++attempts;
    const double speed = rng.uniform(cfg.min_speed, cfg.max_speed);
    const bool forced = interaction && placed.size() == 1 && forced_attempts++ < 40;
    const SpawnChain& chain = pick_spawn(!forced && !placed.empty());
    double from_end = rng.uniform(chain.min_from_end, chain.max_from_end);
    auto plan = plan_agent(layout.graph, chain, from_end, speed, rng);
    if (!plan) continue;
    if (forced) {
      // Place the second agent so both reach a shared conflict within the yield window.
      auto c = find_conflict(placed.front().plan, *plan);
      if (!c) continue;
      const auto& a = placed.front().plan;
      const double t_a = (c->first - a.s0) / a.speed;
      if (t_a > kHorizon - 0.5) continue;
      const double t_b = std::max(0.3, t_a + rng.uniform(-0.8 * cfg.yield_window, 0.8 * cfg.yield_window));
      const double new_s0 = c->second - speed * t_b;
      const double shift = new_s0 - plan->s0;
      if (new_s0 < 16.0 || shift > from_end - chain.min_from_end + 1e-9) continue;
      plan->s0 = new_s0;
      if (plan->path.length() - plan->s0 < speed * kHorizon + 5.0) continue;
    }
    if (!spaced(*plan)) continue;
    placed.push_back({std::move(*plan), static_cast<int>(placed.size())});
  }
  if (static_cast<int>(placed.size()) < cfg.min_agents) return std::nullopt;

  // Yielding: later arrivals at a conflict inside the window slow down to
  // pass `yield_gap` seconds after the priority agent.
  for (std::size_t i = 0; i < placed.size(); ++i) {
    for (std::size_t j = i + 1; j < placed.size(); ++j) {
      auto& a = placed[i].plan;
      auto& b = placed[j].plan;
      auto c = find_conflict(a, b);
      if (!c) continue;
      const double ta = a.future_speed > 0 ? (c->first - a.s0) / a.future_speed : 1e9;
      const double tb = b.future_speed > 0 ? (c->second - b.s0) / b.future_speed : 1e9;
      if (std::min(ta, tb) > kHorizon || std::abs(ta - tb) >= cfg.yield_window) continue;
      const bool a_first = ta < tb || (ta == tb && placed[i].id < placed[j].id);
      AgentPlan& yielder = a_first ? b : a;
      const double t_first = a_first ? ta : tb;
      const double dist = (a_first ? c->second : c->first) - yielder.s0;
      yielder.future_speed = std::min(yielder.future_speed, dist / (t_first + cfg.yield_gap));
    }
  }

  // Time-stepped rollout with a car-following hold.
  std::vector<double> s(placed.size());
  for (std::size_t i = 0; i < placed.size(); ++i) s[i] = placed[i].plan.s0;
  for (int k = 0; k < kFutureFrames; ++k) {
    std::vector<Vec2d> prev(placed.size());
    for (std::size_t i = 0; i < placed.size(); ++i) prev[i] = placed[i].plan.path.at(s[i]);
    for (std::size_t i = 0; i < placed.size(); ++i) {
      const auto& p = placed[i].plan;
      const double cand = std::min(s[i] + p.future_speed * kFrameDt, p.path.length());
      const Vec2d pos = p.path.at(cand);
      const Vec2d dir = unit(p.path.heading(cand));
      bool blocked = false;
      for (std::size_t o = 0; o < placed.size() && !blocked; ++o) {
        if (o == i) continue;
        const Vec2d d = prev[o] - pos;
        const double lon = d.dot(dir);
        if (lon > 0 && lon < 6.0 && std::abs(cross(dir, d)) < 1.5) blocked = true;
      }
      if (!blocked) s[i] = cand;
      placed[i].plan.future_s[static_cast<std::size_t>(k)] = s[i];
    }
  }

  Scene scene;
  scene.id = id;
  scene.lanes = layout.graph.take();
  for (const auto& pa : placed) {
    const auto& p = pa.plan;
    AgentTrack track;
    track.id = pa.id;
    const int missing = rng.bernoulli(cfg.missing_history_prob) ? rng.uniform_int(1, 6) : 0;
    for (int f = 0; f < kHistoryFrames; ++f) {
      const double arc = p.s0 + (f - (kHistoryFrames - 1)) * kFrameDt * p.speed;
      Frame fr;
      fr.present = f >= missing;
      if (fr.present) {
        fr.position = p.path.at(arc) + Vec2d(rng.normal(), rng.normal()) * cfg.position_noise;
        fr.yaw = wrap_angle(p.path.heading(arc) + rng.normal() * cfg.yaw_noise);
        fr.speed = std::max(0.0, p.speed + rng.normal() * cfg.speed_noise);
      }
      track.history[static_cast<std::size_t>(f)] = fr;
    }
    if (!rng.bernoulli(cfg.missing_future_prob)) {
      Future fut;
      for (int k = 0; k < kFutureFrames; ++k) fut[static_cast<std::size_t>(k)] = p.path.at(p.future_s[static_cast<std::size_t>(k)]);
      track.future = fut;
    }
    scene.agents.push_back(track);
  }

  // Every ground-truth endpoint must stay inside the decoder range.
  const int ref = select_reference(scene);
  const Vec2d ref_pos = scene.agent(ref).current().position;
  for (const auto& a : scene.agents)
    if (a.future && (a.future->back() - ref_pos).norm() > cfg.max_endpoint_range) return std::nullopt;

  const Transform world{Vec2d(rng.uniform(-300, 300), rng.uniform(-300, 300)), rng.uniform(-M_PI, M_PI)};
  return transform_scene(scene, world);
}

}  // namespace

Scene generate_scene(std::uint64_t seed, const GeneratorConfig& config, std::string id) {
  config.validate();
  if (id.empty()) {
    std::ostringstream os;
    os << "scene-" << std::hex << seed;
    id = os.str();
  }
  Rng rng(seed);
  for (int attempt = 0; attempt < 50; ++attempt) {
    Rng sub = rng.fork();
    if (auto s = try_generate(sub, config, id)) return *s;
  }
  throw std::runtime_error("generator could not satisfy the config for seed " + std::to_string(seed));
}

std::vector<Scene> generate_dataset(std::uint64_t seed, std::size_t count, const GeneratorConfig& config) {
  std::vector<Scene> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::ostringstream os;
    os << "s" << seed << "-" << i;
    out.push_back(generate_scene(dataset_scene_seed(seed, i), config, os.str()));
  }
  return out;
}

}  // namespace scenecast::scene
