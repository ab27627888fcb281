#include "scenecast/field/field.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include <Eigen/LU>

namespace scenecast::field {

int GridSpec::cells_per_side() const {
  if (!(range > 0) || !(resolution > 0)) throw std::invalid_argument("grid range and resolution must be positive");
  const double n = range / resolution;
  const double rn = std::round(n);
  if (std::abs(n - rn) > 1e-9 * rn)
    throw std::invalid_argument("grid range " + std::to_string(range) + " is not a multiple of resolution " +
                                std::to_string(resolution));
  return static_cast<int>(rn);
}

std::optional<std::pair<int, int>> GridSpec::cell_of(const Vec2d& p) const {
  const int n = cells_per_side();
  const int i = static_cast<int>(std::floor((p.x() + range / 2) / resolution));
  const int j = static_cast<int>(std::floor((p.y() + range / 2) / resolution));
  if (i < 0 || j < 0 || i >= n || j >= n) return std::nullopt;
  return std::make_pair(i, j);
}

Matrix target_values(const Vec2d& endpoint, const std::vector<Vec2d>& centers, double cell_size, double sigma) {
  Matrix y(static_cast<Eigen::Index>(centers.size()), 1);
  const double half = cell_size / 2;
  for (std::size_t p = 0; p < centers.size(); ++p) {
    const Vec2d d = endpoint - centers[p];
    // Half-open cell [c - h, c + h) so exactly one cell of a tiling contains the endpoint.
    const bool inside = d.x() >= -half && d.x() < half && d.y() >= -half && d.y() < half;
    y(static_cast<Eigen::Index>(p), 0) = inside ? 1.0 : target_value(endpoint, centers[p], sigma);
  }
  return y;
}

namespace {

constexpr double kHi = 1.0 - kProbabilityClamp;

/// Value and derivative of one cell's loss term w.r.t. the clamped prediction.
std::pair<double, double> focal_value_grad(double y, double p) {
  if (y == 1.0) {
    const double q = 1.0 - p;
    return {-q * q * std::log(p), 2.0 * q * std::log(p) - q * q / p};
  }
  const double w = std::pow(1.0 - y, 4);
  const double d = y - p;
  const double l = std::log(1.0 - p);
  return {-d * d * w * l, 2.0 * d * w * l + d * d * w / (1.0 - p)};
}

void check_probability(double p) {
  if (!(p >= 0.0 && p <= 1.0))
    throw std::domain_error("focal_loss: prediction " + std::to_string(p) + " outside [0, 1]");
}

}  // namespace

double focal_term(double target, double pred) {
  check_probability(pred);
  return focal_value_grad(target, std::clamp(pred, kProbabilityClamp, kHi)).first;
}

nn::Var focal_loss(const Matrix& target, nn::Var pred) {
  const Matrix& p = pred.value();
  if (target.rows() != p.rows() || target.cols() != p.cols())
    throw nn::ShapeError("focal_loss: target " + nn::shape_string(target) + " vs prediction " + nn::shape_string(p));
  if (p.size() == 0) throw nn::ShapeError("focal_loss: empty input");
  const double inv_n = 1.0 / static_cast<double>(p.size());
  Matrix grad(p.rows(), p.cols());
  double total = 0.0;
  for (Eigen::Index r = 0; r < p.rows(); ++r) {
    for (Eigen::Index c = 0; c < p.cols(); ++c) {
      const double raw = p(r, c);
      check_probability(raw);
      const double clamped = std::clamp(raw, kProbabilityClamp, kHi);
      const auto [v, g] = focal_value_grad(target(r, c), clamped);
      total += v;
      grad(r, c) = (raw == clamped) ? g * inv_n : 0.0;
    }
  }
  Matrix out(1, 1);
  out(0, 0) = total * inv_n;
  return pred.graph()->record(std::move(out), {pred}, [pred, grad = std::move(grad)](nn::Graph& g, const Matrix& og) {
    g.accumulate(pred, grad * og(0, 0));
  });
}

double AnalyticField::operator()(const Vec2d& p) const {
  double v = 0.0;
  for (const auto& c : components) {
    const Vec2d d = p - c.mean;
    v += c.weight * std::exp(-0.5 * d.dot(c.covariance.inverse() * d));
  }
  return v;
}

std::vector<double> eval_field(const AnalyticField& field, const std::vector<Vec2d>& points) {
  std::vector<Eigen::Matrix2d> inv;
  for (const auto& c : field.components) inv.push_back(c.covariance.inverse());
  std::vector<double> out(points.size(), 0.0);
  for (std::size_t p = 0; p < points.size(); ++p) {
    double v = 0.0;
    for (std::size_t k = 0; k < inv.size(); ++k) {
      const Vec2d d = points[p] - field.components[k].mean;
      v += field.components[k].weight * std::exp(-0.5 * d.dot(inv[k] * d));
    }
    out[p] = v;
  }
  return out;
}

std::vector<double> eval_dense(const AnalyticField& field, const GridSpec& grid) {
  const int n = grid.cells_per_side();
  std::vector<Vec2d> pts;
  pts.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) pts.push_back(grid.center(i, j));
  return eval_field(field, pts);
}

AnalyticField random_mixture(Rng& rng, int max_components, double mean_extent, double sigma_lo, double sigma_hi,
                             double min_separation) {
  AnalyticField f;
  const int n = rng.uniform_int(1, max_components);
  double total = 0.0;
  for (int k = 0; k < n; ++k) {
    GaussianComponent c;
    for (int attempt = 0; attempt < 100; ++attempt) {
      c.mean = Vec2d(rng.uniform(-mean_extent, mean_extent), rng.uniform(-mean_extent, mean_extent));
      bool ok = true;
      for (const auto& o : f.components) ok = ok && (o.mean - c.mean).norm() >= min_separation;
      if (ok) break;
    }
    const double sx = rng.uniform(sigma_lo, sigma_hi);
    const double sy = rng.uniform(sigma_lo, sigma_hi);
    const double a = rng.uniform(0.0, M_PI);
    Eigen::Matrix2d r;
    r << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
    c.covariance = r * Eigen::Vector2d(sx * sx, sy * sy).asDiagonal() * r.transpose();
    c.weight = rng.uniform(0.2, 1.0);
    total += c.weight;
    f.components.push_back(c);
  }
  for (auto& c : f.components) c.weight /= total;
  return f;
}

}  // namespace scenecast::field
