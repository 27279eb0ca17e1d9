#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "cldnav/geometry.hpp"

namespace cldnav::testing {

inline double uniform01(std::mt19937_64& rng) {
  return std::ldexp(static_cast<double>(rng() >> 11), -53);
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

// Monotone-chain convex hull, CCW without the closing point.
inline std::vector<Vec2> convex_hull(std::vector<Vec2> pts) {
  std::sort(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  auto cross = [](const Vec2& o, const Vec2& a, const Vec2& b) {
    return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
  };
  std::vector<Vec2> hull(2 * pts.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 1e-12) --k;
    hull[k++] = pts[i];
  }
  const std::size_t lower = k + 1;
  for (std::size_t i = pts.size() - 1; i-- > 0;) {
    while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 1e-12) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

// Random convex polygon with 5-10 vertices near `center`.
inline ConvexPolytope random_polygon(std::mt19937_64& rng, const Vec2& center,
                                     double radius = 1.5) {
  while (true) {
    const int n_pts = 5 + static_cast<int>(uniform01(rng) * 6.0);
    std::vector<Vec2> pts;
    for (int i = 0; i < n_pts + 4; ++i) {
      pts.emplace_back(center.x() + uniform(rng, -radius, radius),
                       center.y() + uniform(rng, -radius, radius));
    }
    const std::vector<Vec2> hull = convex_hull(pts);
    if (hull.size() < 5 || hull.size() > 10) continue;
    try {
      return ConvexPolytope::from_vertices(hull);
    } catch (...) {
      continue;
    }
  }
}

// Exact distance from a point to a convex polygon (0 inside).
inline double point_to_polygon(const Vec2& p, const ConvexPolytope& poly) {
  if (poly.contains(p)) return 0.0;
  const auto& v = poly.vertices();
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Vec2& a = v[i];
    const Vec2& b = v[(i + 1) % v.size()];
    const Vec2 ab = b - a;
    double t = (p - a).dot(ab) / ab.squaredNorm();
    t = std::clamp(t, 0.0, 1.0);
    best = std::min(best, (p - (a + t * ab)).norm());
  }
  return best;
}

// Brute-force oracle: samples both boundaries densely (vertices included)
// and takes exact point-to-polygon distances from each side.
inline double boundary_sampling_distance(const ConvexPolytope& a, const ConvexPolytope& b,
                                         int samples_per_boundary = 10000) {
  auto one_side = [&](const ConvexPolytope& from, const ConvexPolytope& to) {
    const auto& v = from.vertices();
    std::vector<double> edge_len(v.size());
    double perimeter = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      edge_len[i] = (v[(i + 1) % v.size()] - v[i]).norm();
      perimeter += edge_len[i];
    }
    double best = std::numeric_limits<double>::infinity();
    for (const auto& p : v) best = std::min(best, point_to_polygon(p, to));
    const double spacing = perimeter / samples_per_boundary;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const int n = std::max(1, static_cast<int>(edge_len[i] / spacing));
      for (int j = 0; j <= n; ++j) {
        const Vec2 p = v[i] + (static_cast<double>(j) / n) * (v[(i + 1) % v.size()] - v[i]);
        best = std::min(best, point_to_polygon(p, to));
      }
    }
    return best;
  };
  return std::min(one_side(a, b), one_side(b, a));
}

}  // namespace cldnav::testing
