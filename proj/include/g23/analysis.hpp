#pragma once

// Error measures against a reference solution, ghost-force norms, decay
// exponents and log-log slope fits.

#include "g23/dofs.hpp"
#include "g23/fe.hpp"
#include "g23/geometry.hpp"
#include "g23/mesh.hpp"
#include "g23/model.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace g23 {

/// A finite-element function: full dof values on a mesh, extended by zero
/// outside the mesh.
class Field {
 public:
  Field(const Mesh& mesh, const DofMap& dofs, Eigen::VectorXd values)
      : mesh_(&mesh), dofs_(&dofs), values_(std::move(values)), locator_(mesh) {
    if (values_.size() != dofs.n_dofs) throw StructuralError("field values do not match the dof map");
  }

  const Mesh& mesh() const { return *mesh_; }
  const DofMap& dofs() const { return *dofs_; }
  const Eigen::VectorXd& values() const { return values_; }
  const PointLocator& locator() const { return locator_; }

  /// Gradient on element e at x (x need not lie in e; the element
  /// polynomial is evaluated).
  Vec2 gradient_in(std::size_t e, const Vec2& x) const {
    const auto& v = mesh_->elements[e].v;
    const fe::TriangleGeometry T(mesh_->nodes[v[0]], mesh_->nodes[v[1]], mesh_->nodes[v[2]]);
    const auto& loc = dofs_->local[e];
    Vec2 g = Vec2::Zero();
    if (loc.size() == 3) {
      for (int a = 0; a < 3; ++a) g += dofs_->value(loc[a], values_) * T.grad_lambda[a];
      return g;
    }
    const auto bary = locator_.barycentric(e, x);
    const auto dphi = fe::p2_gradients(T, bary);
    for (int a = 0; a < 6; ++a) g += dofs_->value(loc[a], values_) * dphi[a];
    return g;
  }

  /// Gradient at x; zero outside the mesh.
  Vec2 gradient(const Vec2& x) const {
    const auto e = locator_.locate(x);
    return e ? gradient_in(*e, x) : Vec2::Zero();
  }

 private:
  const Mesh* mesh_;
  const DofMap* dofs_;
  Eigen::VectorXd values_;
  PointLocator locator_;
};

/// || grad u_ref - grad u ||_{L^2} integrated over the reference mesh: each
/// reference element is split into four congruent triangles carrying the
/// interior three-point rule.
inline double h1_error(const Field& u, const Field& ref) {
  const auto rule = fe::three_point_rule();
  const bool same_mesh = &u.mesh() == &ref.mesh();
  const Mesh& rm = ref.mesh();
  double sum = 0.0;
  for (std::size_t e = 0; e < rm.element_count(); ++e) {
    const auto& v = rm.elements[e].v;
    const Vec2 p0 = rm.nodes[v[0]], p1 = rm.nodes[v[1]], p2 = rm.nodes[v[2]];
    const Vec2 m01 = 0.5 * (p0 + p1), m12 = 0.5 * (p1 + p2), m20 = 0.5 * (p2 + p0);
    const std::array<std::array<Vec2, 3>, 4> sub{{{p0, m01, m20}, {m01, p1, m12}, {m20, m12, p2}, {m12, m20, m01}}};
    const double quarter = 0.25 * std::abs(rm.area(e));
    for (const auto& s : sub) {
      for (const auto& q : rule.points) {
        const Vec2 x = q.bary[0] * s[0] + q.bary[1] * s[1] + q.bary[2] * s[2];
        const Vec2 gu = same_mesh ? u.gradient_in(e, x) : u.gradient(x);
        sum += q.weight * quarter * (ref.gradient_in(e, x) - gu).squaredNorm();
      }
    }
  }
  return std::sqrt(sum);
}

/// |objective(a) - objective(b)| of two converged runs.
inline double energy_error(double objective, double reference_objective) {
  return std::abs(objective - reference_objective);
}

enum class Method { Atomistic, G23P1, G23P2 };

inline const char* to_string(Method m) {
  switch (m) {
    case Method::Atomistic: return "atomistic";
    case Method::G23P1: return "g23-p1";
    case Method::G23P2: return "g23-p2";
  }
  return "?";
}

inline Method parse_method(const std::string& s) {
  if (s == "atomistic") return Method::Atomistic;
  if (s == "g23-p1") return Method::G23P1;
  if (s == "g23-p2") return Method::G23P2;
  throw std::invalid_argument("unknown method '" + s + "' (expected atomistic, g23-p1 or g23-p2)");
}

/// One row of a convergence study.
struct RunRecord {
  Method method = Method::G23P2;
  int K = 0;
  int N = 0;
  int dofs = 0;
  int natoms = 0;
  double err_h1 = 0.0;
  double err_energy = 0.0;
  int iterations = 0;
  double wall_seconds = 0.0;
  bool converged = false;
};

inline int atomistic_site_count(int K) { return 3 * K * K + 3 * K + 1; }

/// max |gradient of the coupled energy at u_F| over free dofs at least two
/// layers inside the outer boundary. The boundary is not clamped: every dof
/// carries the value of u_F.
template <SitePotential P = ToyEam>
double ghost_force_norm(const Vec2& F, int K, double beta = 1.4, Order order = Order::P2, bool unit_lambda = false,
                        P pot = {}) {
  if (F.norm() > 0.5 + 1e-12) throw std::invalid_argument("ghost_force_norm: |F| must not exceed 0.5");
  const Mesh mesh = build_graded_mesh(K, beta, order);
  const DofMap dofs = enumerate_dofs(mesh);
  const Decomposition d = decompose(K);
  ModelOptions opt;
  opt.external = false;
  opt.unit_lambda = unit_lambda;
  const auto model = make_g23_model(mesh, dofs, d, std::move(pot), opt);
  const Eigen::VectorXd uF = dofs.interpolate([&](const Vec2& x) { return F.dot(x); });
  const Eigen::VectorXd g = model.gradient(uF);
  const int inner = mesh.max_layer() - 2;
  double worst = 0.0;
  for (int k = 0; k < dofs.n_free(); ++k) {
    const int dof = dofs.free_dofs[k];
    if (dofs.layer[dof] <= inner) worst = std::max(worst, std::abs(g[dof]));
  }
  return worst;
}

/// |Du(l)| (Euclidean norm of the six differences) at every atomistic site
/// of a coupled or atomistic solution.
template <class Model>
std::vector<std::pair<LatticeIndex, double>> stencil_norms(const Model& model, const Eigen::VectorXd& full, int K) {
  std::vector<std::pair<LatticeIndex, double>> out;
  const Mesh& mesh = model.mesh();
  for (const LatticeIndex& l : hexagon_sites(K)) {
    const auto c = mesh.node_of(l);
    if (!c) continue;
    double s = 0.0;
    for (const LatticeIndex& a : kNeighbourOffsets) {
      const auto nb = mesh.node_of(l + a);
      const double d = (nb ? full[*nb] : 0.0) - full[*c];
      s += d * d;
    }
    out.emplace_back(l, std::sqrt(s));
  }
  return out;
}

/// Least-squares slope of log y against log x.
inline double slope_fit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw std::invalid_argument("slope_fit: size mismatch");
  if (x.size() < 3) throw std::invalid_argument("slope_fit: at least 3 points required");
  const std::size_t n = x.size();
  double mx = 0, my = 0;
  std::vector<double> lx(n), ly(n);
  for (std::size_t k = 0; k < n; ++k) {
    if (!(x[k] > 0.0) || !(y[k] > 0.0)) throw std::invalid_argument("slope_fit: values must be positive");
    lx[k] = std::log(x[k]);
    ly[k] = std::log(y[k]);
    mx += lx[k];
    my += ly[k];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < n; ++k) {
    sxx += (lx[k] - mx) * (lx[k] - mx);
    sxy += (lx[k] - mx) * (ly[k] - my);
  }
  if (sxx < 1e-300) throw std::invalid_argument("slope_fit: x values must be distinct");
  return sxy / sxx;
}

/// Decay exponent of |Du| over the annulus K/4 <= |l| < K: the maximum of
/// |Du| over each unit-width shell [r, r+1) is fitted against r in log-log.
inline double decay_exponent(const std::vector<std::pair<LatticeIndex, double>>& du, int K) {
  const int r0 = static_cast<int>(std::ceil(K / 4.0));
  std::map<int, double> shell_max;
  for (const auto& [l, v] : du) {
    const double r = position(l).norm();
    const int shell = static_cast<int>(std::floor(r + 1e-12));
    if (shell < r0 || shell >= K || shell < 1) continue;
    auto [it, inserted] = shell_max.emplace(shell, v);
    if (!inserted) it->second = std::max(it->second, v);
  }
  std::vector<double> x, y;
  for (const auto& [r, v] : shell_max) {
    if (v <= 0.0) continue;
    x.push_back(r);
    y.push_back(v);
  }
  if (x.size() < 2) throw std::invalid_argument("decay_exponent: fit window is empty");
  if (x.size() == 2) return (std::log(y[1]) - std::log(y[0])) / (std::log(x[1]) - std::log(x[0]));
  return slope_fit(x, y);
}

enum class Axis { Natoms, Dofs };
enum class ErrorKind { H1, Energy };

/// Slope over converged records of one method.
inline double slope_fit(const std::vector<RunRecord>& records, Axis x_axis, ErrorKind y_axis) {
  std::vector<double> x, y;
  for (const RunRecord& r : records) {
    if (!r.converged) continue;
    x.push_back(x_axis == Axis::Natoms ? r.natoms : r.dofs);
    y.push_back(y_axis == ErrorKind::H1 ? r.err_h1 : r.err_energy);
  }
  return slope_fit(x, y);
}

}  // namespace g23
