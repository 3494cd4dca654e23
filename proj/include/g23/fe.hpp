#pragma once

// P1/P2 Lagrange elements on triangles and triangle quadrature rules.

#include "g23/lattice.hpp"

#include <array>
#include <span>
#include <vector>

namespace g23::fe {

struct QuadraturePoint {
  std::array<double, 3> bary;
  double weight;  // fraction of the element area
};

/// Quadrature on a triangle in barycentric coordinates; weights sum to 1 and
/// are scaled by the element area at use.
struct QuadratureRule {
  std::vector<QuadraturePoint> points;
  int degree = 0;
};

inline QuadratureRule barycentre_rule() { return {{{{1.0 / 3, 1.0 / 3, 1.0 / 3}, 1.0}}, 1}; }

/// Interior three-point rule, exact for quadratics.
inline QuadratureRule three_point_rule() {
  const double a = 2.0 / 3, b = 1.0 / 6;
  return {{{{a, b, b}, 1.0 / 3}, {{b, a, b}, 1.0 / 3}, {{b, b, a}, 1.0 / 3}}, 2};
}

/// Symmetric six-point rule, exact for polynomials of degree 4.
inline QuadratureRule six_point_rule() {
  const double w1 = 0.223381589678011466, a1 = 0.445948490915964886, b1 = 0.108103018168070227;
  const double w2 = 0.109951743655321868, a2 = 0.091576213509770743, b2 = 0.816847572980458514;
  return {{{{b1, a1, a1}, w1},
           {{a1, b1, a1}, w1},
           {{a1, a1, b1}, w1},
           {{b2, a2, a2}, w2},
           {{a2, b2, a2}, w2},
           {{a2, a2, b2}, w2}},
          4};
}

/// Affine triangle geometry: signed area and constant barycentric gradients.
struct TriangleGeometry {
  double area = 0.0;
  std::array<Vec2, 3> grad_lambda;
  std::array<Vec2, 3> vertex;

  TriangleGeometry() = default;
  TriangleGeometry(const Vec2& p0, const Vec2& p1, const Vec2& p2) : vertex{p0, p1, p2} {
    const double det = (p1.x() - p0.x()) * (p2.y() - p0.y()) - (p2.x() - p0.x()) * (p1.y() - p0.y());
    area = 0.5 * det;
    for (int i = 0; i < 3; ++i) {
      const Vec2& a = vertex[(i + 1) % 3];
      const Vec2& b = vertex[(i + 2) % 3];
      grad_lambda[i] = Vec2(a.y() - b.y(), b.x() - a.x()) / det;
    }
  }

  Vec2 point(const std::array<double, 3>& bary) const {
    return bary[0] * vertex[0] + bary[1] * vertex[1] + bary[2] * vertex[2];
  }
};

/// Local P2 numbering: vertices 0,1,2 then edge midpoints (0,1), (1,2), (2,0).
inline constexpr std::array<std::array<int, 2>, 3> kP2Edges{{{0, 1}, {1, 2}, {2, 0}}};

inline std::array<double, 6> p2_values(const std::array<double, 3>& l) {
  return {l[0] * (2 * l[0] - 1), l[1] * (2 * l[1] - 1), l[2] * (2 * l[2] - 1),
          4 * l[0] * l[1],       4 * l[1] * l[2],       4 * l[2] * l[0]};
}

inline std::array<Vec2, 6> p2_gradients(const TriangleGeometry& T, const std::array<double, 3>& l) {
  const auto& g = T.grad_lambda;
  return {(4 * l[0] - 1) * g[0],          (4 * l[1] - 1) * g[1],          (4 * l[2] - 1) * g[2],
          4 * (l[1] * g[0] + l[0] * g[1]), 4 * (l[2] * g[1] + l[1] * g[2]), 4 * (l[0] * g[2] + l[2] * g[0])};
}

}  // namespace g23::fe
