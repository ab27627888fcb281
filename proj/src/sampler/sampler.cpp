#include "scenecast/sampler/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <unordered_map>

namespace scenecast::sampler {

void SamplerConfig::validate() const {
  if (K < 1) throw std::invalid_argument("sampler: K must be >= 1, got " + std::to_string(K));
  if (!(r > 0)) throw std::invalid_argument("sampler: r must be positive");
}

void ModalitySet::check() const {
  if (agent_ids.size() != endpoints.size()) throw std::invalid_argument("modality set: agent id count mismatch");
  const std::size_t k = endpoints.empty() ? 0 : endpoints.front().size();
  auto same_shape = [&](const auto& m, const char* what) {
    if (m.empty()) return;
    if (m.size() != endpoints.size()) throw std::invalid_argument(std::string("modality set: ragged ") + what);
    for (const auto& row : m)
      if (row.size() != k) throw std::invalid_argument(std::string("modality set: ragged ") + what);
  };
  same_shape(endpoints, "endpoints");
  same_shape(confidence, "confidence");
  same_shape(flagged, "flags");
  same_shape(trajectories, "trajectories");
}

bool ModalitySet::modality_flagged(int k) const {
  for (const auto& row : flagged)
    if (row[static_cast<std::size_t>(k)]) return true;
  return false;
}

namespace {

/// Final-level cells of one heatmap with lattice lookup and precomputed disks.
class CellSet {
 public:
  CellSet(const model::SparseHeatmap& h, const std::vector<std::pair<int, int>>& offsets) {
    for (const auto& c : h.cells) {
      if (c.cell.level != 2) continue;
      index_.emplace(key(c.cell.i, c.cell.j), static_cast<int>(cells_.size()));
      cells_.push_back(c);
    }
    disks_.resize(cells_.size());
    for (std::size_t c = 0; c < cells_.size(); ++c) disks_[c] = within(cells_[c].cell.i, cells_[c].cell.j, offsets);
  }

  /// Cells of this set inside the disk around lattice point (i, j).
  [[nodiscard]] std::vector<int> within(int i, int j, const std::vector<std::pair<int, int>>& offsets) const {
    std::vector<int> out;
    for (const auto& [di, dj] : offsets) {
      auto it = index_.find(key(i + di, j + dj));
      if (it != index_.end()) out.push_back(it->second);
    }
    return out;
  }

  [[nodiscard]] std::size_t size() const { return cells_.size(); }
  [[nodiscard]] const model::HeatCell& cell(int c) const { return cells_[static_cast<std::size_t>(c)]; }
  [[nodiscard]] const std::vector<int>& disk(int c) const { return disks_[static_cast<std::size_t>(c)]; }

 private:
  static long long key(int i, int j) { return (static_cast<long long>(i) << 32) ^ static_cast<unsigned int>(j); }
  std::vector<model::HeatCell> cells_;
  std::unordered_map<long long, int> index_;
  std::vector<std::vector<int>> disks_;
};

/// Lattice offsets (di, dj) with |(di, dj)| s <= r, in (di, dj) order.
std::vector<std::pair<int, int>> disk_offsets(double r, double s) {
  const double limit = (r / s) * (r / s) * (1 + 1e-12);
  const int m = static_cast<int>(std::floor(r / s));
  std::vector<std::pair<int, int>> out;
  for (int di = -m; di <= m; ++di)
    for (int dj = -m; dj <= m; ++dj)
      if (di * di + dj * dj <= limit) out.emplace_back(di, dj);
  return out;
}

/// Mutable working copy of one heatmap for one modality.
struct WorkingCopy {
  std::vector<double> p;
  std::vector<char> suppressed;
};

WorkingCopy fresh_copy(const CellSet& cells) {
  WorkingCopy w;
  w.p.resize(cells.size());
  for (std::size_t c = 0; c < cells.size(); ++c) w.p[c] = cells.cell(static_cast<int>(c)).probability;
  w.suppressed.assign(cells.size(), 0);
  return w;
}

bool lex_less(const model::HeatCell& a, const model::HeatCell& b) {
  return a.cell.i != b.cell.i ? a.cell.i < b.cell.i : a.cell.j < b.cell.j;
}

struct PickResult {
  int cell = -1;
  double score = 0.0;
  bool flagged = false;
};

/// Best non-suppressed cell; falls back to the cell farthest from `avoid`
/// once no candidate has positive disk mass.
PickResult pick(const CellSet& cells, const WorkingCopy& w, const std::vector<Vec2d>& avoid) {
  PickResult best;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    if (w.suppressed[c]) continue;
    double s = 0.0;
    for (int n : cells.disk(static_cast<int>(c))) s += w.p[static_cast<std::size_t>(n)];
    const int ci = static_cast<int>(c);
    if (best.cell < 0 || s > best.score || (s == best.score && lex_less(cells.cell(ci), cells.cell(best.cell)))) {
      best.cell = ci;
      best.score = s;
    }
  }
  if (best.cell >= 0 && best.score > 0) return best;

  // Mass exhausted: spread out as far as possible from earlier picks,
  // preferring cells that are not suppressed.
  for (int pass = 0; pass < 2; ++pass) {
    PickResult fb;
    fb.flagged = true;
    double far = -1.0;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (pass == 0 && w.suppressed[c]) continue;
      double d = std::numeric_limits<double>::infinity();
      for (const auto& a : avoid) d = std::min(d, (cells.cell(static_cast<int>(c)).center - a).squaredNorm());
      const int ci = static_cast<int>(c);
      if (fb.cell < 0 || d > far || (d == far && lex_less(cells.cell(ci), cells.cell(fb.cell)))) {
        fb.cell = ci;
        far = d;
      }
    }
    if (fb.cell >= 0) {
      fb.score = 0.0;
      return fb;
    }
  }
  throw std::invalid_argument("sampler: heatmap has no final-resolution cells");
}

void suppress(const CellSet& cells, WorkingCopy& w, const model::GridCell& at,
              const std::vector<std::pair<int, int>>& offsets) {
  for (int n : cells.within(at.i, at.j, offsets)) {
    w.p[static_cast<std::size_t>(n)] = 0.0;
    w.suppressed[static_cast<std::size_t>(n)] = 1;
  }
}

ModalitySet run_joint(std::span<const model::SparseHeatmap> heatmaps, const std::vector<int>& order,
                      const SamplerConfig& config, bool cross) {
  config.validate();
  if (heatmaps.empty()) return {};
  const auto& hc = heatmaps.front().config;
  for (const auto& h : heatmaps)
    if (!(h.config == hc)) throw std::invalid_argument("sample_joint: heatmaps use different grid configs");
  const auto offsets = disk_offsets(config.r, hc.R2);
  const std::size_t A = heatmaps.size();
  const std::size_t K = static_cast<std::size_t>(config.K);

  std::vector<CellSet> cells;
  cells.reserve(A);
  for (const auto& h : heatmaps) {
    cells.emplace_back(h, offsets);
    if (cells.back().size() == 0) throw std::invalid_argument("sampler: empty heatmap");
  }
  std::vector<std::vector<WorkingCopy>> copies(A);
  for (std::size_t a = 0; a < A; ++a) copies[a].assign(K, fresh_copy(cells[a]));

  ModalitySet out;
  out.orientation = cross ? Orientation::Joint : Orientation::Marginal;
  out.endpoints.assign(A, std::vector<Vec2d>(K, Vec2d::Zero()));
  out.confidence.assign(A, std::vector<double>(K, 0.0));
  out.flagged.assign(A, std::vector<bool>(K, false));
  for (const auto& h : heatmaps) out.agent_ids.push_back(h.agent_id);

  for (std::size_t k = 0; k < K; ++k) {
    for (int ai : order) {
      const std::size_t a = static_cast<std::size_t>(ai);
      std::vector<Vec2d> avoid;
      for (std::size_t kk = 0; kk < k; ++kk) avoid.push_back(out.endpoints[a][kk]);
      if (cross)
        for (int bi : order) {
          if (bi == ai) break;
          avoid.push_back(out.endpoints[static_cast<std::size_t>(bi)][k]);
        }
      const PickResult pr = pick(cells[a], copies[a][k], avoid);
      const model::HeatCell& chosen = cells[a].cell(pr.cell);
      out.endpoints[a][k] = chosen.center;
      out.confidence[a][k] = pr.score;
      out.flagged[a][k] = pr.flagged;
      for (std::size_t kk = k; kk < K; ++kk) suppress(cells[a], copies[a][kk], chosen.cell, offsets);
      if (cross)
        for (std::size_t b = 0; b < A; ++b)
          if (b != a) suppress(cells[b], copies[b][k], chosen.cell, offsets);
    }
  }
  return out;
}

}  // namespace

std::vector<Pick> sample_marginal(const model::SparseHeatmap& heatmap, const SamplerConfig& config) {
  const ModalitySet s = run_joint(std::span<const model::SparseHeatmap>(&heatmap, 1), {0}, config, false);
  std::vector<Pick> out;
  for (int k = 0; k < config.K; ++k) {
    const auto kk = static_cast<std::size_t>(k);
    out.push_back({s.endpoints[0][kk], s.confidence[0][kk], s.flagged[0][kk]});
  }
  return out;
}

ModalitySet sample_marginal_set(std::span<const model::SparseHeatmap> heatmaps, const SamplerConfig& config) {
  std::vector<int> order(heatmaps.size());
  std::iota(order.begin(), order.end(), 0);
  return run_joint(heatmaps, order, config, false);
}

ModalitySet sample_joint(std::span<const model::SparseHeatmap> heatmaps, std::span<const double> speeds,
                         const SamplerConfig& config) {
  if (speeds.size() != heatmaps.size())
    throw std::invalid_argument("sample_joint: " + std::to_string(speeds.size()) + " speeds for " +
                                std::to_string(heatmaps.size()) + " heatmaps");
  std::vector<int> order(heatmaps.size());
  std::iota(order.begin(), order.end(), 0);
  if (config.order == AgentOrder::DescendingSpeed)
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      const double sa = speeds[static_cast<std::size_t>(a)], sb = speeds[static_cast<std::size_t>(b)];
      if (sa != sb) return sa > sb;
      return heatmaps[static_cast<std::size_t>(a)].agent_id < heatmaps[static_cast<std::size_t>(b)].agent_id;
    });
  ModalitySet s = run_joint(heatmaps, order, config, config.cross_suppression);
  s.orientation = Orientation::Joint;
  return s;
}

double sampled_confidence(const model::SparseHeatmap& heatmap, const Vec2d& endpoint, double r) {
  const double r2 = r * r * (1 + 1e-12);
  double mass = 0.0;
  for (const auto& c : heatmap.cells)
    if (c.cell.level == 2 && (c.center - endpoint).squaredNorm() <= r2) mass += c.probability;
  return mass;
}

}  // namespace scenecast::sampler
