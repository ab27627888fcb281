#pragma once

#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include "scenecast/nn/params.hpp"
#include "scenecast/nn/tensor.hpp"

namespace scenecast::field {

inline constexpr double kTargetSigma = 2.0;
inline constexpr double kProbabilityClamp = 1e-7;

/// Square grid of `range` meters centered on the scene reference point.
/// Cell (i, j) has center (-range/2 + (i + 1/2) s, -range/2 + (j + 1/2) s);
/// i runs along x, j along y.
struct GridSpec {
  double range = 192.0;
  double resolution = 0.5;

  /// Throws unless range / resolution is a positive integer.
  [[nodiscard]] int cells_per_side() const;
  [[nodiscard]] long long cell_count() const {
    const long long n = cells_per_side();
    return n * n;
  }
  [[nodiscard]] Vec2d center(int i, int j) const {
    return {-range / 2 + (i + 0.5) * resolution, -range / 2 + (j + 0.5) * resolution};
  }
  /// Cell containing `p`, or nothing outside the grid.
  [[nodiscard]] std::optional<std::pair<int, int>> cell_of(const Vec2d& p) const;
};

/// Gaussian training target exp(-|q - endpoint|^2 / (2 sigma^2)).
template <typename Scalar>
Scalar target_value(const Vec2<Scalar>& endpoint, const Vec2<Scalar>& q, Scalar sigma = Scalar(kTargetSigma)) {
  using std::exp;
  return exp(-(q - endpoint).squaredNorm() / (Scalar(2) * sigma * sigma));
}

/// Targets at a set of cell centers of width `cell_size`. The cell that
/// contains the endpoint is pinned to exactly 1, so it alone takes the
/// positive branch of focal_loss().
Matrix target_values(const Vec2d& endpoint, const std::vector<Vec2d>& centers, double cell_size,
                     double sigma = kTargetSigma);

/// Penalty-reduced pixel-wise focal loss, averaged over cells:
///   -(1/P) sum_p (Y_p - Yhat_p)^2 * (Y_p == 1 ? log Yhat_p : (1 - Y_p)^4 log(1 - Yhat_p)).
/// `pred` holds probabilities; they must lie in [0, 1] and are clamped to
/// [1e-7, 1 - 1e-7]. Clamped entries receive no gradient.
nn::Var focal_loss(const Matrix& target, nn::Var pred);
/// Per-cell contribution before averaging (for inspection and tests).
double focal_term(double target, double pred);

struct GaussianComponent {
  double weight = 1.0;
  Vec2d mean = Vec2d::Zero();
  Eigen::Matrix2d covariance = Eigen::Matrix2d::Identity() * kTargetSigma * kTargetSigma;
};

/// Mixture of peak-normalized Gaussians: each component contributes
/// weight * exp(-d^T C^-1 d / 2), so a lone component peaks at its weight.
struct AnalyticField {
  std::vector<GaussianComponent> components;

  [[nodiscard]] double operator()(const Vec2d& p) const;
};

std::vector<double> eval_field(const AnalyticField& field, const std::vector<Vec2d>& points);

/// Dense evaluation over the whole grid, indexed [i * n + j].
std::vector<double> eval_dense(const AnalyticField& field, const GridSpec& grid);

/// Random mixture for oracle experiments: 1..max_components components with
/// weights summing to 1, means inside +-mean_extent, and axis-aligned then
/// rotated covariances with standard deviations in [sigma_lo, sigma_hi].
AnalyticField random_mixture(Rng& rng, int max_components = 3, double mean_extent = 70.0, double sigma_lo = 1.0,
                             double sigma_hi = 3.0, double min_separation = 0.0);

}  // namespace scenecast::field
