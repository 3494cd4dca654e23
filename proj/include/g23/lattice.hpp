#pragma once

// Triangular lattice geometry: positions, the six nearest-neighbour
// directions, finite-difference stencils, the canonical triangulation and
// Voronoi hexagons.

#include <Eigen/Core>

#include <array>
#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace g23 {

using Vec2 = Eigen::Vector2d;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kSqrt3 = 1.73205080756887729353;
/// Area of the lattice unit cell (and of every Voronoi hexagon).
inline constexpr double kCellVolume = kSqrt3 / 2.0;
/// Area of a unit lattice triangle.
inline constexpr double kTriangleArea = kSqrt3 / 4.0;

/// Integer coefficients of a lattice site with respect to the generator
/// columns (1,0) and (1/2, sqrt(3)/2).
struct LatticeIndex {
  int i = 0;
  int j = 0;

  constexpr LatticeIndex operator+(LatticeIndex o) const { return {i + o.i, j + o.j}; }
  constexpr LatticeIndex operator-(LatticeIndex o) const { return {i - o.i, j - o.j}; }
  constexpr LatticeIndex operator-() const { return {-i, -j}; }
  constexpr LatticeIndex operator*(int s) const { return {s * i, s * j}; }
  constexpr auto operator<=>(const LatticeIndex&) const = default;
};

struct LatticeIndexHash {
  std::size_t operator()(LatticeIndex l) const noexcept {
    const auto a = static_cast<std::uint64_t>(static_cast<std::uint32_t>(l.i));
    const auto b = static_cast<std::uint64_t>(static_cast<std::uint32_t>(l.j));
    return std::hash<std::uint64_t>{}((a << 32) ^ b);
  }
};

template <class T>
using SiteMap = std::unordered_map<LatticeIndex, T, LatticeIndexHash>;

/// Nearest-neighbour direction a_k, k in 1..6. Arithmetic wraps modulo 6
/// with representatives 1..6.
class Direction {
 public:
  explicit Direction(int k) : k_(k) {
    if (k < 1 || k > 6) {
      throw std::invalid_argument("direction index must be in 1..6, got " + std::to_string(k));
    }
  }

  static Direction wrapped(int k) { return Direction(((k - 1) % 6 + 6) % 6 + 1); }

  int index() const { return k_; }
  Direction next() const { return wrapped(k_ + 1); }
  Direction prev() const { return wrapped(k_ - 1); }
  Direction opposite() const { return wrapped(k_ + 3); }

  friend bool operator==(Direction, Direction) = default;

 private:
  int k_;
};

/// The six neighbour offsets in lattice coordinates, a_1..a_6 at slots 0..5.
inline constexpr std::array<LatticeIndex, 6> kNeighbourOffsets{{
    {1, 0}, {0, 1}, {-1, 1}, {-1, 0}, {0, -1}, {1, -1}}};

inline LatticeIndex offset(Direction k) { return kNeighbourOffsets[k.index() - 1]; }

inline Vec2 position(LatticeIndex l) {
  return {l.i + 0.5 * l.j, 0.5 * kSqrt3 * l.j};
}

inline Vec2 direction_vector(Direction k) { return position(offset(k)); }
inline Vec2 direction_vector(int k) { return direction_vector(Direction(k)); }

/// Hexagonal ring index of a site: 0 at the origin, n on the ring whose
/// corners are n*a_k.
inline int hexnorm(LatticeIndex l) {
  return (std::abs(l.i) + std::abs(l.j) + std::abs(l.i + l.j)) / 2;
}

/// All sites with hexnorm <= radius, ordered by ring then counter-clockwise
/// from radius*a_1.
inline std::vector<LatticeIndex> hexagon_sites(int radius) {
  std::vector<LatticeIndex> out;
  if (radius < 0) return out;
  out.push_back({0, 0});
  for (int n = 1; n <= radius; ++n) {
    for (int side = 0; side < 6; ++side) {
      const LatticeIndex corner = kNeighbourOffsets[side] * n;
      const LatticeIndex step = kNeighbourOffsets[(side + 2) % 6];
      for (int t = 0; t < n; ++t) out.push_back(corner + step * t);
    }
  }
  return out;
}

/// Sites with hexnorm exactly `radius`, counter-clockwise from radius*a_1.
inline std::vector<LatticeIndex> hexagon_ring(int radius) {
  if (radius == 0) return {{0, 0}};
  std::vector<LatticeIndex> out;
  out.reserve(6 * static_cast<std::size_t>(radius));
  for (int side = 0; side < 6; ++side) {
    const LatticeIndex corner = kNeighbourOffsets[side] * radius;
    const LatticeIndex step = kNeighbourOffsets[(side + 2) % 6];
    for (int t = 0; t < radius; ++t) out.push_back(corner + step * t);
  }
  return out;
}

/// Anti-plane finite differences (D_1 u, ..., D_6 u); slot j-1 holds D_j.
using Stencil = std::array<double, 6>;

class LookupError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Site-value lookup: returns the displacement at a site or nullopt when the
/// site is unknown to the caller.
using SiteLookup = std::function<std::optional<double>(LatticeIndex)>;

inline Stencil stencil(const SiteLookup& u, LatticeIndex l) {
  const auto centre = u(l);
  if (!centre) throw LookupError("no value at the stencil centre");
  Stencil g{};
  for (int k = 0; k < 6; ++k) {
    const auto v = u(l + kNeighbourOffsets[k]);
    if (!v) throw LookupError("no value at neighbour " + std::to_string(k + 1));
    g[k] = *v - *centre;
  }
  return g;
}

/// Stencil of the homogeneous displacement x -> F.x (independent of the site).
inline Stencil homogeneous_stencil(const Vec2& F) {
  Stencil g{};
  for (int k = 0; k < 6; ++k) g[k] = F.dot(position(kNeighbourOffsets[k]));
  return g;
}

using Triangle = std::array<std::size_t, 3>;

/// Unit triangles of the lattice with all three vertices in `sites`, as index
/// triples into `sites`, counter-clockwise. Each triangle is anchored at its
/// lowest vertex l: the upward (l, l+a1, l+a2) is emitted before the downward
/// (l, l+a2, l+a3).
inline std::vector<Triangle> canonical_triangulation(const std::vector<LatticeIndex>& sites) {
  SiteMap<std::size_t> where;
  where.reserve(sites.size());
  for (std::size_t n = 0; n < sites.size(); ++n) where.emplace(sites[n], n);

  auto find = [&](LatticeIndex l) -> std::optional<std::size_t> {
    auto it = where.find(l);
    if (it == where.end()) return std::nullopt;
    return it->second;
  };

  std::vector<Triangle> out;
  const LatticeIndex a1{1, 0}, a2{0, 1}, a3{-1, 1};
  for (std::size_t n = 0; n < sites.size(); ++n) {
    const LatticeIndex l = sites[n];
    const auto v1 = find(l + a1);
    const auto v2 = find(l + a2);
    const auto v3 = find(l + a3);
    if (v1 && v2) out.push_back({n, *v1, *v2});
    if (v2 && v3) out.push_back({n, *v2, *v3});
  }
  return out;
}

/// Voronoi cell of a site: the regular hexagon with vertices at distance
/// 1/sqrt(3) in the directions bisecting consecutive a_k, counter-clockwise,
/// starting between a_1 and a_2.
inline std::array<Vec2, 6> voronoi_hexagon(LatticeIndex l) {
  const Vec2 c = position(l);
  std::array<Vec2, 6> out;
  for (int k = 0; k < 6; ++k) {
    const Vec2 a = position(kNeighbourOffsets[k]);
    const Vec2 b = position(kNeighbourOffsets[(k + 1) % 6]);
    out[k] = c + (a + b) / 3.0;
  }
  return out;
}

}  // namespace g23
