#pragma once

// Degrees of freedom: vertex values everywhere, edge midpoints on P2
// continuum edges, ghost midpoints on edges shared by a P1 and a P2
// element (tied to the endpoint average), and the homogeneous Dirichlet clamp
// on the outer boundary.

#include "g23/fe.hpp"
#include "g23/mesh.hpp"

#include <Eigen/Core>

#include <array>
#include <map>
#include <utility>
#include <vector>

namespace g23 {

/// A local element degree of freedom: either a global dof, or (for ghost
/// midpoints) the average of two vertex dofs.
struct LocalDof {
  int dof = -1;
  int ghost_a = -1;
  int ghost_b = -1;

  bool is_ghost() const { return dof < 0; }
};

struct DofMap {
  int n_nodes = 0;
  /// Vertex dofs [0, n_nodes) followed by midpoint dofs.
  int n_dofs = 0;
  /// Per element, 3 (P1) or 6 (P2) local dofs.
  std::vector<std::vector<LocalDof>> local;
  std::vector<bool> dirichlet;
  std::vector<int> free_index;  // dof -> free slot or -1
  std::vector<int> free_dofs;   // free slot -> dof
  std::vector<Vec2> position;
  std::vector<int> layer;
  /// Endpoint node pairs of ghost edges.
  std::vector<std::array<int, 2>> ghost_edges;

  int n_free() const { return static_cast<int>(free_dofs.size()); }
  int n_midpoints() const { return n_dofs - n_nodes; }

  Eigen::VectorXd expand(const Eigen::VectorXd& free, const Eigen::VectorXd& clamp_values) const {
    Eigen::VectorXd full = clamp_values;
    for (int k = 0; k < n_free(); ++k) full[free_dofs[k]] = free[k];
    return full;
  }
  Eigen::VectorXd expand(const Eigen::VectorXd& free) const {
    return expand(free, Eigen::VectorXd::Zero(n_dofs));
  }
  Eigen::VectorXd restrict(const Eigen::VectorXd& full) const {
    Eigen::VectorXd free(n_free());
    for (int k = 0; k < n_free(); ++k) free[k] = full[free_dofs[k]];
    return free;
  }

  /// Value of local dof `a` from a full dof vector.
  double value(const LocalDof& a, const Eigen::VectorXd& full) const {
    return a.is_ghost() ? 0.5 * (full[a.ghost_a] + full[a.ghost_b]) : full[a.dof];
  }
  /// Scatters a local contribution into a full-length accumulator.
  void scatter(const LocalDof& a, double c, Eigen::VectorXd& full) const {
    if (a.is_ghost()) {
      full[a.ghost_a] += 0.5 * c;
      full[a.ghost_b] += 0.5 * c;
    } else {
      full[a.dof] += c;
    }
  }

  /// Full dof vector interpolating a function given at dof positions. Ghost
  /// midpoints are not represented; callers interpolating affine functions
  /// get the exact interpolant.
  template <class F>
  Eigen::VectorXd interpolate(F&& f) const {
    Eigen::VectorXd full(n_dofs);
    for (int d = 0; d < n_dofs; ++d) full[d] = f(position[d]);
    return full;
  }
};

/// Edge multiplicities keyed by sorted endpoint pairs.
inline std::map<std::pair<int, int>, int> edge_multiplicity(const Mesh& m) {
  std::map<std::pair<int, int>, int> count;
  for (const Element& el : m.elements) {
    for (const auto& [a, b] : fe::kP2Edges) {
      const int u = el.v[a], v = el.v[b];
      ++count[{std::min(u, v), std::max(u, v)}];
    }
  }
  return count;
}

/// Conforming: every edge is shared by at most two elements, and edges with
/// one element lie on the boundary.
inline bool is_conforming(const Mesh& m) {
  for (const auto& [e, c] : edge_multiplicity(m)) {
    if (c > 2) return false;
    if (c == 1 && !(m.boundary[e.first] && m.boundary[e.second])) return false;
  }
  return true;
}

inline DofMap enumerate_dofs(const Mesh& m) {
  if (m.boundary.size() != m.node_count()) throw StructuralError("enumerate_dofs: boundary flags missing");
  if (!is_conforming(m)) throw StructuralError("enumerate_dofs: mesh is not conforming");

  DofMap d;
  d.n_nodes = static_cast<int>(m.node_count());
  d.n_dofs = d.n_nodes;
  d.position = m.nodes;
  d.layer = m.layer;
  d.dirichlet.assign(m.boundary.begin(), m.boundary.end());

  // An edge carries a midpoint dof if it belongs to a P2 element and to no P1
  // element; P2 edges touching a P1 element are ghosts.
  std::map<std::pair<int, int>, std::pair<bool, bool>> edge_use;  // (has P1, has P2)
  for (std::size_t e = 0; e < m.element_count(); ++e) {
    const bool p2 = m.element_order(e) == Order::P2;
    for (const auto& [a, b] : fe::kP2Edges) {
      const int u = m.elements[e].v[a], v = m.elements[e].v[b];
      auto& use = edge_use[{std::min(u, v), std::max(u, v)}];
      (p2 ? use.second : use.first) = true;
    }
  }

  const auto multiplicity = edge_multiplicity(m);
  std::map<std::pair<int, int>, int> midpoint;
  for (const auto& [edge, use] : edge_use) {
    if (!use.second) continue;
    if (use.first) {
      d.ghost_edges.push_back({edge.first, edge.second});
      continue;
    }
    midpoint.emplace(edge, d.n_dofs++);
    d.position.push_back(0.5 * (m.nodes[edge.first] + m.nodes[edge.second]));
    d.layer.push_back(std::max(m.layer[edge.first], m.layer[edge.second]));
    // Boundary edges have a single incident element.
    d.dirichlet.push_back(multiplicity.at(edge) == 1);
  }

  d.local.resize(m.element_count());
  for (std::size_t e = 0; e < m.element_count(); ++e) {
    const auto& v = m.elements[e].v;
    auto& loc = d.local[e];
    for (int k = 0; k < 3; ++k) loc.push_back({v[k], -1, -1});
    if (m.element_order(e) != Order::P2) continue;
    for (const auto& [a, b] : fe::kP2Edges) {
      const std::pair<int, int> key{std::min(v[a], v[b]), std::max(v[a], v[b])};
      auto it = midpoint.find(key);
      if (it != midpoint.end()) loc.push_back({it->second, -1, -1});
      else loc.push_back({-1, v[a], v[b]});
    }
  }

  d.free_index.assign(d.n_dofs, -1);
  for (int k = 0; k < d.n_dofs; ++k) {
    if (d.dirichlet[k]) continue;
    d.free_index[k] = static_cast<int>(d.free_dofs.size());
    d.free_dofs.push_back(k);
  }
  return d;
}

}  // namespace g23
