#pragma once

// Convex polygon clipping and areas.

#include "g23/lattice.hpp"

#include <span>
#include <vector>

namespace g23::polygon {

/// Signed shoelace area; positive for counter-clockwise vertex order.
inline double signed_area(std::span<const Vec2> poly) {
  double a = 0.0;
  const std::size_t n = poly.size();
  for (std::size_t k = 0; k < n; ++k) {
    const Vec2& p = poly[k];
    const Vec2& q = poly[(k + 1) % n];
    a += p.x() * q.y() - q.x() * p.y();
  }
  return 0.5 * a;
}

inline double area(std::span<const Vec2> poly) { return std::abs(signed_area(poly)); }

/// Intersection of `subject` with the convex counter-clockwise polygon `clip`
/// (Sutherland-Hodgman). The subject may have either orientation.
inline std::vector<Vec2> clip_convex(std::span<const Vec2> subject, std::span<const Vec2> clip) {
  std::vector<Vec2> out(subject.begin(), subject.end());
  const std::size_t m = clip.size();
  for (std::size_t e = 0; e < m && !out.empty(); ++e) {
    const Vec2& a = clip[e];
    const Vec2& b = clip[(e + 1) % m];
    const Vec2 edge = b - a;
    auto side = [&](const Vec2& p) { return edge.x() * (p.y() - a.y()) - edge.y() * (p.x() - a.x()); };

    std::vector<Vec2> in = std::move(out);
    out.clear();
    const std::size_t n = in.size();
    for (std::size_t k = 0; k < n; ++k) {
      const Vec2& p = in[k];
      const Vec2& q = in[(k + 1) % n];
      const double sp = side(p);
      const double sq = side(q);
      if (sp >= 0.0) out.push_back(p);
      if ((sp >= 0.0) != (sq >= 0.0)) {
        const double t = sp / (sp - sq);
        out.push_back(p + t * (q - p));
      }
    }
  }
  return out;
}

/// Area of the intersection of two convex polygons (clip must be CCW).
inline double intersection_area(std::span<const Vec2> subject, std::span<const Vec2> clip) {
  const auto poly = clip_convex(subject, clip);
  if (poly.size() < 3) return 0.0;
  return area(poly);
}

}  // namespace g23::polygon
