#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "scenecast/field/field.hpp"

namespace scenecast::model {

/// Coarse-to-fine decoding grid. All lengths in meters.
struct HierConfig {
  double W = 192.0;
  double R0 = 8.0;
  int N1 = 16;
  double R1 = 2.0;
  int N2 = 64;
  double R2 = 0.5;

  /// Throws std::invalid_argument unless W/R0 is an integer, R0/R1 and
  /// R1/R2 are integers >= 2, N1 <= (W/R0)^2 and N2 <= N1 (R0/R1)^2.
  void validate() const;

  [[nodiscard]] int coarse_side() const;
  /// Children per side when refining level 0 -> 1 and 1 -> 2.
  [[nodiscard]] int factor(int level) const;
  [[nodiscard]] double cell_size(int level) const { return level == 0 ? R0 : level == 1 ? R1 : R2; }
  /// Dense grid at the final resolution.
  [[nodiscard]] field::GridSpec final_grid() const { return {W, R2}; }
  bool operator==(const HierConfig&) const = default;
};

/// W/R0 x W/R0 + N1 (R0/R1)^2 + N2 (R1/R2)^2.
long long grid_point_budget(const HierConfig& config);
/// (W/R2)^2.
long long dense_point_count(const HierConfig& config);

/// Cell (i, j) of the lattice at `level`; i along x, j along y.
struct GridCell {
  int level = 0;
  int i = 0;
  int j = 0;
  bool operator==(const GridCell&) const = default;
  auto operator<=>(const GridCell&) const = default;
};

Vec2d cell_center(const HierConfig& config, const GridCell& cell);
/// Whether `inner` lies geometrically inside `outer` (outer.level <= inner.level).
bool contains(const HierConfig& config, const GridCell& outer, const GridCell& inner);

std::vector<GridCell> coarse_cells(const HierConfig& config);
/// Children of every parent at the next level, parent by parent, each in
/// (i, j) order.
std::vector<GridCell> subdivide(const HierConfig& config, std::span<const GridCell> parents);
/// Indices of the n highest scores; ties go to the lexicographically
/// smaller (i, j). Result is ordered by rank.
std::vector<int> select_top(std::span<const double> scores, std::span<const GridCell> cells, int n);

struct LevelEval {
  std::vector<GridCell> cells;
  std::vector<Vec2d> centers;
  std::vector<double> scores;
  std::vector<int> selected;  // indices into cells; empty on the last level
};

/// Scores a list of cell centers at one level.
using LevelScorer = std::function<std::vector<double>(int level, const std::vector<Vec2d>& centers)>;

/// Runs the three-level refinement with an arbitrary scorer; the scorer is
/// called exactly once per level, on grid_point_budget() points in total.
std::array<LevelEval, 3> refine(const HierConfig& config, const LevelScorer& score);

struct HeatCell {
  GridCell cell;
  Vec2d center = Vec2d::Zero();
  double probability = 0.0;
};

/// Output of hierarchical decoding for one agent: every evaluated cell of
/// every level (grid_point_budget() cells, no duplicates). Sampling uses
/// the final-resolution cells.
struct SparseHeatmap {
  int agent_id = -1;
  HierConfig config;
  std::vector<HeatCell> cells;

  [[nodiscard]] std::vector<HeatCell> final_cells() const;
};

SparseHeatmap heatmap_from_levels(const HierConfig& config, const std::array<LevelEval, 3>& levels,
                                  const std::function<double(double)>& to_probability, int agent_id = -1);

/// Oracle decoding: the analytic field replaces the learned scorer and
/// doubles as the probability. `evaluated`, when given, is incremented by
/// the number of field evaluations.
SparseHeatmap decode_oracle(const field::AnalyticField& field, const HierConfig& config,
                            std::uint64_t* evaluated = nullptr);

}  // namespace scenecast::model
