#pragma once

// Coupled G23 energy (atomistic sites + reconstructed interface sites +
// Cauchy-Born quadrature over the continuum region), the fully atomistic
// energy on a clamped lattice domain, and the di-pole external potential.

#include "g23/dofs.hpp"
#include "g23/fe.hpp"
#include "g23/geometry.hpp"
#include "g23/mesh.hpp"
#include "g23/potential.hpp"

#include <Eigen/Core>

#include <array>
#include <cmath>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

namespace g23 {

struct EnergyBreakdown {
  double atomistic = 0.0;
  double interface = 0.0;
  double continuum = 0.0;
  double external = 0.0;

  double total() const { return atomistic + interface + continuum - external; }
};

struct ModelOptions {
  PotentialParams params;
  /// Use lambda = 1 at the interface (no reconstruction). Negative control.
  bool unit_lambda = false;
  /// Integrate P2 elements with the barycentre rule. Ablation only.
  bool one_point_p2 = false;
  /// Include the di-pole f in the objective.
  bool external = true;
};

/// Energy of u: sum over all sites with hexnorm <= clamp_radius + 1 of
/// V(Du); u must vanish outside the clamp radius so that no other site
/// contributes.
template <SitePotential P>
double energy_atomistic(const std::function<double(LatticeIndex)>& u, int clamp_radius, const P& pot) {
  double e = 0.0;
  for (const LatticeIndex& l : hexagon_sites(clamp_radius + 1)) {
    const double c = u(l);
    Stencil g{};
    for (int k = 0; k < 6; ++k) g[k] = u(l + kNeighbourOffsets[k]) - c;
    e += pot.energy(g);
  }
  return e;
}

inline double energy_atomistic(const std::function<double(LatticeIndex)>& u, int clamp_radius) {
  return energy_atomistic(u, clamp_radius, ToyEam{});
}

/// Total energy and gradient of an energy functional of mesh dofs.
template <SitePotential P>
class EnergyModel {
 public:
  struct SiteTerm {
    int centre = -1;
    std::array<int, 6> neighbour{};  // -1: outside the domain, value 0
    bool interface = false;
    std::array<double, 6> lambda{1, 1, 1, 1, 1, 1};
    LatticeIndex site;
  };

  struct ElementTerm {
    int element = -1;
    fe::TriangleGeometry geometry;
    /// Integration volume: |T|, or |T cap Omega^c| on interface triangles.
    double volume = 0.0;
    bool p2 = false;
  };

  EnergyModel(const Mesh& mesh, const DofMap& dofs, P pot, ModelOptions opt)
      : mesh_(&mesh), dofs_(&dofs), pot_(std::move(pot)), opt_(opt), clamp_(Eigen::VectorXd::Zero(dofs.n_dofs)) {
    opt_.params.validate();
    p2_rule_ = opt_.one_point_p2 ? fe::barycentre_rule() : fe::six_point_rule();
  }

  const Mesh& mesh() const { return *mesh_; }
  const DofMap& dofs() const { return *dofs_; }
  const P& potential() const { return pot_; }
  const ModelOptions& options() const { return opt_; }
  const std::vector<SiteTerm>& site_terms() const { return sites_; }
  const std::vector<ElementTerm>& element_terms() const { return elements_; }
  const fe::QuadratureRule& p2_rule() const { return p2_rule_; }

  void add_site(SiteTerm t) { sites_.push_back(t); }
  void add_element(ElementTerm t) { elements_.push_back(std::move(t)); }
  void set_dipole(std::optional<int> origin, std::optional<int> right) {
    dipole_origin_ = origin;
    dipole_right_ = right;
  }

  /// Values imposed on Dirichlet dofs (zero unless overridden, e.g. for
  /// homogeneous patch tests).
  void set_clamp_values(Eigen::VectorXd full) { clamp_ = std::move(full); }
  const Eigen::VectorXd& clamp_values() const { return clamp_; }

  Stencil differences(const SiteTerm& t, const Eigen::VectorXd& full) const {
    const double c = full[t.centre];
    Stencil g{};
    for (int k = 0; k < 6; ++k) g[k] = (t.neighbour[k] < 0 ? 0.0 : full[t.neighbour[k]]) - c;
    return t.interface ? reconstruct(t.lambda, g) : g;
  }

  double site_energy(const SiteTerm& t, const Eigen::VectorXd& full) const { return pot_.energy(differences(t, full)); }

  /// f(u) = m (u(0,0) - u(1,0)).
  double external_value(const Eigen::VectorXd& full) const {
    if (!opt_.external) return 0.0;
    double v = 0.0;
    if (dipole_origin_) v += full[*dipole_origin_];
    if (dipole_right_) v -= full[*dipole_right_];
    return opt_.params.force_magnitude * v;
  }

  /// Nonzero entries of the gradient of f.
  std::vector<std::pair<int, double>> external_gradient() const {
    std::vector<std::pair<int, double>> g;
    if (!opt_.external) return g;
    if (dipole_origin_) g.emplace_back(*dipole_origin_, opt_.params.force_magnitude);
    if (dipole_right_) g.emplace_back(*dipole_right_, -opt_.params.force_magnitude);
    return g;
  }

  Vec2 element_gradient(const ElementTerm& t, const Eigen::VectorXd& full, const std::array<double, 3>& bary) const {
    const auto& loc = dofs_->local[t.element];
    Vec2 grad = Vec2::Zero();
    if (!t.p2) {
      for (int a = 0; a < 3; ++a) grad += dofs_->value(loc[a], full) * t.geometry.grad_lambda[a];
      return grad;
    }
    const auto dphi = fe::p2_gradients(t.geometry, bary);
    for (int a = 0; a < 6; ++a) grad += dofs_->value(loc[a], full) * dphi[a];
    return grad;
  }

  EnergyBreakdown energy(const Eigen::VectorXd& full) const {
    check_size(full);
    EnergyBreakdown e;
    for (const SiteTerm& t : sites_) (t.interface ? e.interface : e.atomistic) += site_energy(t, full);
    for (const ElementTerm& t : elements_) {
      if (!t.p2) {
        e.continuum += t.volume * cb_density(pot_, element_gradient(t, full, {1.0 / 3, 1.0 / 3, 1.0 / 3}));
        continue;
      }
      double w = 0.0;
      for (const auto& q : p2_rule_.points) w += q.weight * cb_density(pot_, element_gradient(t, full, q.bary));
      e.continuum += t.volume * w;
    }
    e.external = external_value(full);
    return e;
  }

  /// Gradient of total() with respect to every dof (Dirichlet dofs included).
  Eigen::VectorXd gradient(const Eigen::VectorXd& full) const {
    check_size(full);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(dofs_->n_dofs);
    for (const SiteTerm& t : sites_) {
      const double c = full[t.centre];
      Stencil diff{};
      for (int k = 0; k < 6; ++k) diff[k] = (t.neighbour[k] < 0 ? 0.0 : full[t.neighbour[k]]) - c;
      Stencil dV = pot_.gradient(t.interface ? reconstruct(t.lambda, diff) : diff);
      if (t.interface) dV = reconstruct_transpose(t.lambda, dV);
      for (int k = 0; k < 6; ++k) {
        if (t.neighbour[k] >= 0) g[t.neighbour[k]] += dV[k];
        g[t.centre] -= dV[k];
      }
    }
    for (const ElementTerm& t : elements_) {
      const auto& loc = dofs_->local[t.element];
      if (!t.p2) {
        const Vec2 s = t.volume * cb_stress(pot_, element_gradient(t, full, {1.0 / 3, 1.0 / 3, 1.0 / 3}));
        for (int a = 0; a < 3; ++a) dofs_->scatter(loc[a], s.dot(t.geometry.grad_lambda[a]), g);
        continue;
      }
      std::array<double, 6> acc{};
      for (const auto& q : p2_rule_.points) {
        const auto dphi = fe::p2_gradients(t.geometry, q.bary);
        Vec2 grad = Vec2::Zero();
        for (int a = 0; a < 6; ++a) grad += dofs_->value(loc[a], full) * dphi[a];
        const Vec2 s = (q.weight * t.volume) * cb_stress(pot_, grad);
        for (int a = 0; a < 6; ++a) acc[a] += s.dot(dphi[a]);
      }
      for (int a = 0; a < 6; ++a) dofs_->scatter(loc[a], acc[a], g);
    }
    for (const auto& [d, v] : external_gradient()) g[d] -= v;
    return g;
  }

  // Free-dof view used by the solver.
  int size() const { return dofs_->n_free(); }
  Eigen::VectorXd expand(const Eigen::VectorXd& x) const { return dofs_->expand(x, clamp_); }
  double objective(const Eigen::VectorXd& x) const { return energy(expand(x)).total(); }
  Eigen::VectorXd objective_gradient(const Eigen::VectorXd& x) const { return dofs_->restrict(gradient(expand(x))); }

 private:
  void check_size(const Eigen::VectorXd& full) const {
    if (full.size() != dofs_->n_dofs) throw StructuralError("state vector does not match the dof map");
  }

  const Mesh* mesh_;
  const DofMap* dofs_;
  P pot_;
  ModelOptions opt_;
  fe::QuadratureRule p2_rule_;
  Eigen::VectorXd clamp_;
  std::vector<SiteTerm> sites_;
  std::vector<ElementTerm> elements_;
  std::optional<int> dipole_origin_, dipole_right_;
};

namespace detail {

template <SitePotential P>
void attach_dipole(EnergyModel<P>& model, const Mesh& mesh) {
  model.set_dipole(mesh.node_of({0, 0}), mesh.node_of({1, 0}));
}

}  // namespace detail

/// G23 coupled energy on a graded mesh. P2 continuum elements are
/// integrated with the degree-4 rule, P1 elements exactly with one point;
/// interface triangles only count their part outside the Voronoi cells of
/// atomistic and interface sites.
template <SitePotential P = ToyEam>
EnergyModel<P> make_g23_model(const Mesh& mesh, const DofMap& dofs, const Decomposition& d, P pot = {},
                              ModelOptions opt = {}) {
  EnergyModel<P> model(mesh, dofs, std::move(pot), opt);
  const ReconstructionCoeffs coeffs = opt.unit_lambda ? ReconstructionCoeffs::unit(d) : ReconstructionCoeffs::g23(d);

  auto node = [&](LatticeIndex l) {
    const auto n = mesh.node_of(l);
    if (!n) throw StructuralError("lattice site missing from the mesh");
    return *n;
  };
  auto add_sites = [&](const std::vector<LatticeIndex>& sites, bool interface) {
    for (const LatticeIndex& l : sites) {
      typename EnergyModel<P>::SiteTerm t;
      t.site = l;
      t.centre = node(l);
      for (int k = 0; k < 6; ++k) t.neighbour[k] = node(l + kNeighbourOffsets[k]);
      t.interface = interface;
      if (interface) t.lambda = coeffs.at(l);
      model.add_site(t);
    }
  };
  add_sites(d.atomistic(), false);
  add_sites(d.interface(), true);

  for (std::size_t e = 0; e < mesh.element_count(); ++e) {
    const auto& v = mesh.elements[e].v;
    typename EnergyModel<P>::ElementTerm t{static_cast<int>(e),
                                          fe::TriangleGeometry(mesh.nodes[v[0]], mesh.nodes[v[1]], mesh.nodes[v[2]])};
    t.p2 = mesh.element_order(e) == Order::P2;
    t.volume = mesh.is_lattice_element(e) ? effective_volume(mesh.element_sites(e), d) : t.geometry.area;
    if (t.volume <= 0.0) continue;
    if (t.p2 && std::abs(t.volume - t.geometry.area) > 1e-12 * t.geometry.area) {
      throw StructuralError("P2 element overlaps a Voronoi cell of the atomistic region");
    }
    model.add_element(std::move(t));
  }
  detail::attach_dipole(model, mesh);
  return model;
}

/// Fully atomistic energy on a lattice mesh; sites outside the mesh are
/// clamped to zero.
template <SitePotential P = ToyEam>
EnergyModel<P> make_atomistic_model(const Mesh& mesh, const DofMap& dofs, P pot = {}, ModelOptions opt = {}) {
  EnergyModel<P> model(mesh, dofs, std::move(pot), opt);
  for (std::size_t n = 0; n < mesh.node_count(); ++n) {
    if (!mesh.node_site[n]) throw StructuralError("atomistic model requires a lattice mesh");
    typename EnergyModel<P>::SiteTerm t;
    t.site = *mesh.node_site[n];
    t.centre = static_cast<int>(n);
    for (int k = 0; k < 6; ++k) t.neighbour[k] = mesh.node_of(t.site + kNeighbourOffsets[k]).value_or(-1);
    model.add_site(t);
  }
  detail::attach_dipole(model, mesh);
  return model;
}

/// Central-difference Hessian-vector product of the objective over free dofs.
template <class Model>
Eigen::VectorXd hessian_vec(const Model& model, const Eigen::VectorXd& x, const Eigen::VectorXd& v,
                            double eps = 1e-5) {
  const double scale = v.lpNorm<Eigen::Infinity>();
  if (scale == 0.0) return Eigen::VectorXd::Zero(v.size());
  const double h = eps * (1.0 + x.lpNorm<Eigen::Infinity>()) / scale;
  return (model.objective_gradient(x + h * v) - model.objective_gradient(x - h * v)) / (2.0 * h);
}

}  // namespace g23
