#pragma once

// Point-in-convex-hull oracle for the recombiner's convex-combination property.

#include <algorithm>
#include <vector>

#include "scenecast/nn/tensor.hpp"

namespace scenecast::testing {

inline double cross(const Vec2d& o, const Vec2d& a, const Vec2d& b) {
  return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
}

/// Andrew's monotone chain, counter-clockwise, collinear points dropped.
inline std::vector<Vec2d> convex_hull(std::vector<Vec2d> pts) {
  std::sort(pts.begin(), pts.end(), [](const Vec2d& a, const Vec2d& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;
  std::vector<Vec2d> h(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross(h[k - 2], h[k - 1], p) <= 0) --k;
    h[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(h[k - 2], h[k - 1], pts[i]) <= 0) --k;
    h[k++] = pts[i];
  }
  h.resize(k - 1);
  return h;
}

inline double segment_distance(const Vec2d& p, const Vec2d& a, const Vec2d& b) {
  const Vec2d ab = b - a;
  const double len2 = ab.squaredNorm();
  const double t = len2 == 0 ? 0.0 : std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

/// True if p lies in conv(pts) up to `tol` meters.
inline bool in_convex_hull(const Vec2d& p, const std::vector<Vec2d>& pts, double tol = 1e-9) {
  const auto h = convex_hull(pts);
  if (h.size() == 1) return (p - h[0]).norm() <= tol;
  if (h.size() == 2) return segment_distance(p, h[0], h[1]) <= tol;
  for (std::size_t i = 0; i < h.size(); ++i) {
    const Vec2d& a = h[i];
    const Vec2d& b = h[(i + 1) % h.size()];
    if (cross(a, b, p) / (b - a).norm() < -tol) return false;
  }
  return true;
}

}  // namespace scenecast::testing
