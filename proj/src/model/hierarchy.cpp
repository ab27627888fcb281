#include "scenecast/model/hierarchy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace scenecast::model {

namespace {

int integer_ratio(double a, double b, const char* what) {
  if (!(a > 0) || !(b > 0)) throw std::invalid_argument(std::string("hier config: ") + what + " must be positive");
  const double r = a / b;
  const double rr = std::round(r);
  if (std::abs(r - rr) > 1e-9 * rr) throw std::invalid_argument(std::string("hier config: ") + what + " is not an integer");
  return static_cast<int>(rr);
}

}  // namespace

void HierConfig::validate() const {
  const int side = integer_ratio(W, R0, "W/R0");
  const int f1 = integer_ratio(R0, R1, "R0/R1");
  const int f2 = integer_ratio(R1, R2, "R1/R2");
  if (f1 < 2 || f2 < 2) throw std::invalid_argument("hier config: refinement ratios must be >= 2");
  if (N1 < 0 || N2 < 0) throw std::invalid_argument("hier config: N1 and N2 must be non-negative");
  if (static_cast<long long>(N1) > static_cast<long long>(side) * side)
    throw std::invalid_argument("hier config: N1 = " + std::to_string(N1) + " exceeds the coarse cell count");
  if (static_cast<long long>(N2) > static_cast<long long>(N1) * f1 * f1)
    throw std::invalid_argument("hier config: N2 = " + std::to_string(N2) + " exceeds N1 (R0/R1)^2");
}

int HierConfig::coarse_side() const { return integer_ratio(W, R0, "W/R0"); }

int HierConfig::factor(int level) const {
  return level == 0 ? integer_ratio(R0, R1, "R0/R1") : integer_ratio(R1, R2, "R1/R2");
}

long long grid_point_budget(const HierConfig& c) {
  c.validate();
  const long long side = c.coarse_side();
  const long long f1 = c.factor(0), f2 = c.factor(1);
  return side * side + static_cast<long long>(c.N1) * f1 * f1 + static_cast<long long>(c.N2) * f2 * f2;
}

long long dense_point_count(const HierConfig& c) {
  c.validate();
  return c.final_grid().cell_count();
}

Vec2d cell_center(const HierConfig& c, const GridCell& cell) {
  const double s = c.cell_size(cell.level);
  return {-c.W / 2 + (cell.i + 0.5) * s, -c.W / 2 + (cell.j + 0.5) * s};
}

bool contains(const HierConfig& c, const GridCell& outer, const GridCell& inner) {
  if (outer.level > inner.level) return false;
  int i = inner.i, j = inner.j;
  for (int l = inner.level; l > outer.level; --l) {
    const int f = c.factor(l - 1);
    i = i / f;
    j = j / f;
  }
  return i == outer.i && j == outer.j;
}

std::vector<GridCell> coarse_cells(const HierConfig& c) {
  const int n = c.coarse_side();
  std::vector<GridCell> out;
  out.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out.push_back({0, i, j});
  return out;
}

std::vector<GridCell> subdivide(const HierConfig& c, std::span<const GridCell> parents) {
  std::vector<GridCell> out;
  if (parents.empty()) return out;
  const int f = c.factor(parents.front().level);
  out.reserve(parents.size() * static_cast<std::size_t>(f * f));
  for (const auto& p : parents)
    for (int u = 0; u < f; ++u)
      for (int v = 0; v < f; ++v) out.push_back({p.level + 1, p.i * f + u, p.j * f + v});
  return out;
}

std::vector<int> select_top(std::span<const double> scores, std::span<const GridCell> cells, int n) {
  if (scores.size() != cells.size()) throw std::invalid_argument("select_top: score/cell count mismatch");
  std::vector<int> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  n = std::min<int>(n, static_cast<int>(idx.size()));
  auto better = [&](int a, int b) {
    if (scores[static_cast<std::size_t>(a)] != scores[static_cast<std::size_t>(b)])
      return scores[static_cast<std::size_t>(a)] > scores[static_cast<std::size_t>(b)];
    return cells[static_cast<std::size_t>(a)] < cells[static_cast<std::size_t>(b)];
  };
  std::partial_sort(idx.begin(), idx.begin() + n, idx.end(), better);
  idx.resize(static_cast<std::size_t>(n));
  return idx;
}

std::array<LevelEval, 3> refine(const HierConfig& config, const LevelScorer& score) {
  config.validate();
  std::array<LevelEval, 3> levels;
  levels[0].cells = coarse_cells(config);
  const int keep[2] = {config.N1, config.N2};
  for (int l = 0; l < 3; ++l) {
    LevelEval& lv = levels[static_cast<std::size_t>(l)];
    if (l > 0) {
      const LevelEval& prev = levels[static_cast<std::size_t>(l - 1)];
      std::vector<GridCell> parents;
      for (int s : prev.selected) parents.push_back(prev.cells[static_cast<std::size_t>(s)]);
      lv.cells = subdivide(config, parents);
    }
    lv.centers.reserve(lv.cells.size());
    for (const auto& c : lv.cells) lv.centers.push_back(cell_center(config, c));
    lv.scores = lv.cells.empty() ? std::vector<double>{} : score(l, lv.centers);
    if (lv.scores.size() != lv.cells.size()) throw std::runtime_error("refine: scorer returned the wrong number of scores");
    if (l < 2) lv.selected = select_top(lv.scores, lv.cells, keep[l]);
  }
  return levels;
}

std::vector<HeatCell> SparseHeatmap::final_cells() const {
  std::vector<HeatCell> out;
  for (const auto& c : cells)
    if (c.cell.level == 2) out.push_back(c);
  return out;
}

SparseHeatmap heatmap_from_levels(const HierConfig& config, const std::array<LevelEval, 3>& levels,
                                  const std::function<double(double)>& to_probability, int agent_id) {
  SparseHeatmap h;
  h.agent_id = agent_id;
  h.config = config;
  for (const auto& lv : levels)
    for (std::size_t p = 0; p < lv.cells.size(); ++p)
      h.cells.push_back({lv.cells[p], lv.centers[p], to_probability(lv.scores[p])});
  return h;
}

SparseHeatmap decode_oracle(const field::AnalyticField& field, const HierConfig& config, std::uint64_t* evaluated) {
  auto levels = refine(config, [&](int, const std::vector<Vec2d>& centers) {
    if (evaluated != nullptr) *evaluated += centers.size();
    return field::eval_field(field, centers);
  });
  return heatmap_from_levels(config, levels, [](double v) { return v; });
}

}  // namespace scenecast::model
