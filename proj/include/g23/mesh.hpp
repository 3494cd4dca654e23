#pragma once

// Graded hexagonal finite-element meshes. The lattice hexagon covering the
// atomistic and interface sites (plus buffer rings) is triangulated
// canonically; outside it hexagonal rings of nodes coarsen radially like
// h(r) = (r/K)^beta until the hexagon inradius reaches N = ceil(K^{5/2}).

#include "g23/geometry.hpp"
#include "g23/lattice.hpp"

#include <boost/geometry.hpp>
#include <boost/geometry/index/rtree.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace g23 {

class StructuralError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ElementKind { Atomistic, Interface, Continuum };
enum class Order { P1, P2 };

inline const char* to_string(Order o) { return o == Order::P1 ? "P1" : "P2"; }

struct Element {
  std::array<int, 3> v{};
  ElementKind kind = ElementKind::Continuum;
};

/// One hexagonal node ring: corner radius, nodes per hexagon side and the
/// node id range [first_node, first_node + 6 * per_side).
struct Ring {
  double radius = 0.0;
  int per_side = 0;
  int first_node = 0;
};

struct Mesh {
  std::vector<Vec2> nodes;
  std::vector<Element> elements;
  /// Ring 0 is the boundary of the lattice hexagon; graded rings follow.
  std::vector<Ring> rings;
  /// Radial layer per node: hexnorm for lattice nodes, lattice radius + j
  /// for nodes on graded ring j.
  std::vector<int> layer;
  /// Nodes on the outer boundary (clamped).
  std::vector<bool> boundary;
  std::vector<std::optional<LatticeIndex>> node_site;
  SiteMap<int> site_node;

  int K = 0;
  /// Target inradius ceil(K^{5/2}).
  int N = 0;
  double beta = 0.0;
  Order order = Order::P1;
  /// Side length (hexnorm) of the canonically triangulated lattice hexagon.
  int lattice_radius = 0;
  /// True for coupled meshes (atomistic core of side K inside a continuum);
  /// false for the fully atomistic comparison domain.
  bool coupled = false;

  std::size_t node_count() const { return nodes.size(); }
  std::size_t element_count() const { return elements.size(); }

  /// Interpolation order used on an element.
  Order element_order(std::size_t e) const {
    return elements[e].kind == ElementKind::Continuum ? order : Order::P1;
  }

  double area(std::size_t e) const {
    const auto& t = elements[e].v;
    const Vec2 a = nodes[t[1]] - nodes[t[0]];
    const Vec2 b = nodes[t[2]] - nodes[t[0]];
    return 0.5 * (a.x() * b.y() - a.y() * b.x());
  }

  double diameter(std::size_t e) const {
    const auto& t = elements[e].v;
    double d = 0.0;
    for (int k = 0; k < 3; ++k) d = std::max(d, (nodes[t[k]] - nodes[t[(k + 1) % 3]]).norm());
    return d;
  }

  /// Inradius of the outer hexagon (the largest centred ball inside the domain).
  double inradius() const { return rings.empty() ? 0.0 : 0.5 * kSqrt3 * rings.back().radius; }

  int max_layer() const { return layer.empty() ? 0 : *std::max_element(layer.begin(), layer.end()); }

  std::optional<int> node_of(LatticeIndex l) const {
    auto it = site_node.find(l);
    if (it == site_node.end()) return std::nullopt;
    return it->second;
  }

  std::array<LatticeIndex, 3> element_sites(std::size_t e) const {
    std::array<LatticeIndex, 3> out;
    for (int k = 0; k < 3; ++k) {
      const auto& s = node_site[elements[e].v[k]];
      if (!s) throw StructuralError("element " + std::to_string(e) + " is not a lattice triangle");
      out[k] = *s;
    }
    return out;
  }

  bool is_lattice_element(std::size_t e) const {
    for (int v : elements[e].v)
      if (!node_site[v]) return false;
    return true;
  }
};

struct MeshOptions {
  /// Lattice rings of unit triangles beyond the interface before coarsening.
  int buffer_rings = 1;
  /// Upper bound on diam(T)^2 / |T| enforced during construction.
  double shape_bound = 12.0;
};

inline int target_outer_radius(int K) {
  return static_cast<int>(std::ceil(std::pow(static_cast<double>(K), 2.5) - 1e-9));
}

/// max_T diam(T)^2 / |T|.
inline double shape_regularity(const Mesh& m) {
  double worst = 0.0;
  for (std::size_t e = 0; e < m.element_count(); ++e) {
    const double a = m.area(e);
    if (!(a > 0.0)) throw StructuralError("element " + std::to_string(e) + " has non-positive area");
    const double d = m.diameter(e);
    worst = std::max(worst, d * d / a);
  }
  return worst;
}

namespace detail {

inline void add_lattice_hexagon(Mesh& m, int radius, const Decomposition* d) {
  const auto sites = hexagon_sites(radius);
  m.nodes.reserve(sites.size());
  for (const LatticeIndex& l : sites) {
    m.site_node.emplace(l, static_cast<int>(m.nodes.size()));
    m.nodes.push_back(position(l));
    m.node_site.emplace_back(l);
    m.layer.push_back(hexnorm(l));
  }
  for (const Triangle& t : canonical_triangulation(sites)) {
    Element el;
    bool any_interface = false, all_atomistic = true;
    for (int k = 0; k < 3; ++k) {
      el.v[k] = static_cast<int>(t[k]);
      if (d) {
        const SiteLabel lab = d->label(sites[t[k]]);
        any_interface |= lab == SiteLabel::Interface;
        all_atomistic &= lab == SiteLabel::Atomistic;
      }
    }
    el.kind = !d                ? ElementKind::Atomistic
              : any_interface   ? ElementKind::Interface
              : all_atomistic   ? ElementKind::Atomistic
                                : ElementKind::Continuum;
    m.elements.push_back(el);
  }
  Ring r0;
  r0.radius = radius;
  r0.per_side = radius;
  r0.first_node = -1;  // lattice ring nodes are not contiguous
  m.rings.push_back(r0);
}

/// Node ids of a ring in counter-clockwise order starting at the a_1 corner.
inline std::vector<int> ring_nodes(const Mesh& m, std::size_t j) {
  const Ring& r = m.rings[j];
  std::vector<int> ids;
  if (r.first_node < 0) {
    for (const LatticeIndex& l : hexagon_ring(r.per_side)) ids.push_back(m.site_node.at(l));
  } else {
    for (int k = 0; k < 6 * r.per_side; ++k) ids.push_back(r.first_node + k);
  }
  return ids;
}

inline void push_oriented(Mesh& m, int a, int b, int c) {
  Element el;
  el.v = {a, b, c};
  el.kind = ElementKind::Continuum;
  m.elements.push_back(el);
  if (m.area(m.elements.size() - 1) < 0.0) std::swap(m.elements.back().v[1], m.elements.back().v[2]);
}

/// Triangulates the band between two consecutive rings side by side with a
/// monotone two-pointer merge.
inline void triangulate_band(Mesh& m, const std::vector<int>& inner, int m_in, const std::vector<int>& outer,
                             int m_out) {
  const int n_in = 6 * m_in, n_out = 6 * m_out;
  for (int side = 0; side < 6; ++side) {
    auto in = [&](int t) { return inner[(side * m_in + t) % n_in]; };
    auto out = [&](int s) { return outer[(side * m_out + s) % n_out]; };
    int t = 0, s = 0;
    while (t < m_in || s < m_out) {
      const bool advance_inner =
          s == m_out || (t < m_in && (t + 1) * m_out < (s + 1) * m_in);
      if (advance_inner) {
        push_oriented(m, in(t), out(s), in(t + 1));
        ++t;
      } else {
        push_oriented(m, in(t), out(s), out(s + 1));
        ++s;
      }
    }
  }
}

}  // namespace detail

/// Graded hexagonal mesh around a hexagonal atomistic region of side K.
inline Mesh build_graded_mesh(int K, double beta, Order order, const MeshOptions& opt = {}) {
  if (K < 2) throw std::invalid_argument("build_graded_mesh: K must be >= 2");
  if (!(beta > 1.0 && beta < 1.5)) throw std::invalid_argument("build_graded_mesh: beta must lie in (1, 3/2)");
  if (opt.buffer_rings < 1) throw std::invalid_argument("build_graded_mesh: at least one buffer ring is required");

  const Decomposition d = decompose(K);
  Mesh m;
  m.K = K;
  m.N = target_outer_radius(K);
  m.beta = beta;
  m.order = order;
  m.coupled = true;
  m.lattice_radius = K + 1 + opt.buffer_rings;
  detail::add_lattice_hexagon(m, m.lattice_radius, &d);

  double r = m.lattice_radius;
  double h_prev = 1.0;
  int m_prev = m.lattice_radius;
  std::vector<int> inner = detail::ring_nodes(m, 0);
  while (0.5 * kSqrt3 * r < m.N) {
    double h = std::max(1.0, std::pow(r / K, beta));
    h = std::min(h, 2.0 * h_prev);
    const double r_new = r + h;
    int per_side = std::max(1, static_cast<int>(std::lround(r_new / h)));
    per_side = std::min(per_side, m_prev);

    Ring ring;
    ring.radius = r_new;
    ring.per_side = per_side;
    ring.first_node = static_cast<int>(m.nodes.size());
    const int layer = m.lattice_radius + static_cast<int>(m.rings.size());
    for (int side = 0; side < 6; ++side) {
      const Vec2 c0 = r_new * position(kNeighbourOffsets[side]);
      const Vec2 c1 = r_new * position(kNeighbourOffsets[(side + 1) % 6]);
      for (int t = 0; t < per_side; ++t) {
        m.nodes.push_back(c0 + (static_cast<double>(t) / per_side) * (c1 - c0));
        m.node_site.emplace_back(std::nullopt);
        m.layer.push_back(layer);
      }
    }
    m.rings.push_back(ring);
    const std::size_t first_element = m.elements.size();
    const std::vector<int> outer = detail::ring_nodes(m, m.rings.size() - 1);
    detail::triangulate_band(m, inner, m_prev, outer, per_side);

    for (std::size_t e = first_element; e < m.elements.size(); ++e) {
      const double a = m.area(e);
      const double dd = m.diameter(e);
      if (!(a > 0.0) || dd * dd / a > opt.shape_bound) {
        std::ostringstream msg;
        msg << "build_graded_mesh: ring " << m.rings.size() - 1 << " (radius " << r_new
            << ") violates the shape-regularity bound " << opt.shape_bound;
        throw StructuralError(msg.str());
      }
    }
    inner = outer;
    r = r_new;
    h_prev = h;
    m_prev = per_side;
  }

  m.boundary.assign(m.nodes.size(), false);
  for (int id : detail::ring_nodes(m, m.rings.size() - 1)) m.boundary[id] = true;
  return m;
}

/// Fully atomistic comparison domain: the canonical triangulation of the
/// smallest lattice hexagon with inradius >= N(K), clamped on its outer ring.
inline Mesh build_lattice_mesh(int K, std::optional<int> outer_radius = std::nullopt) {
  if (K < 1) throw std::invalid_argument("build_lattice_mesh: K must be >= 1");
  Mesh m;
  m.K = K;
  m.N = outer_radius.value_or(target_outer_radius(K));
  m.order = Order::P1;
  m.lattice_radius = static_cast<int>(std::ceil(2.0 * m.N / kSqrt3 - 1e-9));
  detail::add_lattice_hexagon(m, m.lattice_radius, nullptr);
  m.boundary.assign(m.nodes.size(), false);
  for (int id : detail::ring_nodes(m, 0)) m.boundary[id] = true;
  return m;
}

namespace bg = boost::geometry;

/// Point location over element bounding boxes. Returns the lowest-id element
/// whose closed hull contains the point.
class PointLocator {
  using BPoint = bg::model::point<double, 2, bg::cs::cartesian>;
  using Box = bg::model::box<BPoint>;
  using Value = std::pair<Box, int>;

 public:
  explicit PointLocator(const Mesh& m) : mesh_(&m) {
    std::vector<Value> boxes;
    boxes.reserve(m.element_count());
    for (std::size_t e = 0; e < m.element_count(); ++e) {
      const auto& t = m.elements[e].v;
      double x0 = m.nodes[t[0]].x(), x1 = x0, y0 = m.nodes[t[0]].y(), y1 = y0;
      for (int k = 1; k < 3; ++k) {
        x0 = std::min(x0, m.nodes[t[k]].x());
        x1 = std::max(x1, m.nodes[t[k]].x());
        y0 = std::min(y0, m.nodes[t[k]].y());
        y1 = std::max(y1, m.nodes[t[k]].y());
      }
      const double pad = 1e-9 * (1.0 + std::max(x1 - x0, y1 - y0));
      boxes.emplace_back(Box(BPoint(x0 - pad, y0 - pad), BPoint(x1 + pad, y1 + pad)), static_cast<int>(e));
    }
    tree_ = Tree(boxes.begin(), boxes.end());
  }

  /// Barycentric coordinates of x in element e.
  std::array<double, 3> barycentric(std::size_t e, const Vec2& x) const {
    const auto& t = mesh_->elements[e].v;
    const Vec2& p0 = mesh_->nodes[t[0]];
    const Vec2& p1 = mesh_->nodes[t[1]];
    const Vec2& p2 = mesh_->nodes[t[2]];
    const double det = (p1.x() - p0.x()) * (p2.y() - p0.y()) - (p2.x() - p0.x()) * (p1.y() - p0.y());
    const double l1 = ((x.x() - p0.x()) * (p2.y() - p0.y()) - (p2.x() - p0.x()) * (x.y() - p0.y())) / det;
    const double l2 = ((p1.x() - p0.x()) * (x.y() - p0.y()) - (x.x() - p0.x()) * (p1.y() - p0.y())) / det;
    return {1.0 - l1 - l2, l1, l2};
  }

  std::optional<int> locate(const Vec2& x) const {
    std::optional<int> best;
    const BPoint q(x.x(), x.y());
    for (auto it = tree_.qbegin(bg::index::intersects(q)); it != tree_.qend(); ++it) {
      const int e = it->second;
      if (best && *best < e) continue;
      const auto lam = barycentric(e, x);
      if (lam[0] >= -kTol && lam[1] >= -kTol && lam[2] >= -kTol) best = e;
    }
    return best;
  }

 private:
  static constexpr double kTol = 1e-12;
  using Tree = bg::index::rtree<Value, bg::index::quadratic<16>>;
  const Mesh* mesh_;
  Tree tree_;
};

inline std::optional<int> locate_point(const Mesh& m, const Vec2& x) { return PointLocator(m).locate(x); }

inline const char* kind_name(const Mesh& m, const Element& el) {
  switch (el.kind) {
    case ElementKind::Atomistic: return "P1Atom";
    case ElementKind::Interface: return "P1Interface";
    case ElementKind::Continuum: return m.order == Order::P2 ? "P2Continuum" : "P1Continuum";
  }
  return "?";
}

/// Mesh dump for plotting: nodes, elements with kinds, rings and the node
/// ids carrying atomistic and interface sites.
inline nlohmann::json to_json(const Mesh& m) {
  nlohmann::json nodes = nlohmann::json::array(), elements = nlohmann::json::array(),
                 rings = nlohmann::json::array(), atom_nodes = nlohmann::json::array(),
                 interface_nodes = nlohmann::json::array();
  for (const Vec2& p : m.nodes) nodes.push_back({p.x(), p.y()});
  for (const Element& el : m.elements) elements.push_back({el.v[0], el.v[1], el.v[2], kind_name(m, el)});
  for (const Ring& r : m.rings) rings.push_back({{"radius", r.radius}, {"nodes", 6 * r.per_side}});
  for (std::size_t n = 0; n < m.node_count(); ++n) {
    if (!m.node_site[n]) continue;
    const int h = hexnorm(*m.node_site[n]);
    if (!m.coupled || h <= m.K) atom_nodes.push_back(n);
    else if (h == m.K + 1) interface_nodes.push_back(n);
  }
  return {{"K", m.K},           {"N", m.N},         {"beta", m.beta},
          {"order", to_string(m.order)},            {"nodes", nodes},
          {"elements", elements}, {"rings", rings},  {"atomistic_nodes", atom_nodes},
          {"interface_nodes", interface_nodes}};
}

}  // namespace g23
