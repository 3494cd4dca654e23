#pragma once

// Energy minimisation by steepest descent preconditioned with the
// finite-element Laplacian, and a smallest generalized eigenvalue estimator
// for the stability check.

#include "g23/dofs.hpp"
#include "g23/fe.hpp"
#include "g23/mesh.hpp"
#include "g23/model.hpp"
#include "g23/potential.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace g23 {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Stiffness of (grad v, grad w) over every dof of the space, ghost
/// midpoints eliminated.
inline SparseMatrix assemble_laplacian_full(const Mesh& m, const DofMap& dofs) {
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(m.element_count() * 36);
  const auto rule = fe::three_point_rule();  // grad phi . grad phi is quadratic on P2
  for (std::size_t e = 0; e < m.element_count(); ++e) {
    const auto& v = m.elements[e].v;
    const fe::TriangleGeometry T(m.nodes[v[0]], m.nodes[v[1]], m.nodes[v[2]]);
    const auto& loc = dofs.local[e];
    const int n = static_cast<int>(loc.size());
    Eigen::MatrixXd Ke = Eigen::MatrixXd::Zero(n, n);
    if (n == 3) {
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) Ke(a, b) = T.area * T.grad_lambda[a].dot(T.grad_lambda[b]);
    } else {
      for (const auto& q : rule.points) {
        const auto dphi = fe::p2_gradients(T, q.bary);
        for (int a = 0; a < 6; ++a)
          for (int b = 0; b < 6; ++b) Ke(a, b) += q.weight * T.area * dphi[a].dot(dphi[b]);
      }
    }
    // Route ghost entries to the adjacent vertex dofs with weight 1/2.
    auto targets = [&](const LocalDof& d) {
      std::vector<std::pair<int, double>> t;
      if (d.is_ghost()) t = {{d.ghost_a, 0.5}, {d.ghost_b, 0.5}};
      else t = {{d.dof, 1.0}};
      return t;
    };
    for (int a = 0; a < n; ++a)
      for (const auto& [ia, wa] : targets(loc[a]))
        for (int b = 0; b < n; ++b)
          for (const auto& [ib, wb] : targets(loc[b])) trip.emplace_back(ia, ib, wa * wb * Ke(a, b));
  }
  SparseMatrix L(dofs.n_dofs, dofs.n_dofs);
  L.setFromTriplets(trip.begin(), trip.end());
  return L;
}

/// Laplacian restricted to the free dofs.
inline SparseMatrix assemble_laplacian(const Mesh& m, const DofMap& dofs) {
  if (dofs.n_free() == dofs.n_dofs) throw StructuralError("assemble_laplacian: no Dirichlet dof, operator is singular");
  const SparseMatrix full = assemble_laplacian_full(m, dofs);
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(full.nonZeros());
  for (int c = 0; c < full.outerSize(); ++c) {
    const int jc = dofs.free_index[c];
    if (jc < 0) continue;
    for (SparseMatrix::InnerIterator it(full, c); it; ++it) {
      const int ir = dofs.free_index[it.row()];
      if (ir >= 0) trip.emplace_back(ir, jc, it.value());
    }
  }
  SparseMatrix L(dofs.n_free(), dofs.n_free());
  L.setFromTriplets(trip.begin(), trip.end());
  return L;
}

/// Sparse LDL^T factorisation of the free-dof Laplacian, computed once.
class LaplacianPreconditioner {
 public:
  explicit LaplacianPreconditioner(SparseMatrix L) : L_(std::move(L)) {
    ldlt_.compute(L_);
    if (ldlt_.info() != Eigen::Success) throw StructuralError("Laplacian factorisation failed");
    for (int k = 0; k < ldlt_.vectorD().size(); ++k)
      if (!(ldlt_.vectorD()[k] > 0.0)) throw StructuralError("Laplacian is not positive definite");
  }
  LaplacianPreconditioner(const Mesh& m, const DofMap& dofs) : LaplacianPreconditioner(assemble_laplacian(m, dofs)) {}

  Eigen::VectorXd solve(const Eigen::VectorXd& b) const { return ldlt_.solve(b); }
  const SparseMatrix& matrix() const { return L_; }
  int size() const { return static_cast<int>(L_.rows()); }

 private:
  SparseMatrix L_;
  Eigen::SimplicialLDLT<SparseMatrix> ldlt_;
};

struct SolverConfig {
  /// Fixed step, in units of the inverse linearised Cauchy-Born modulus.
  double step = 0.5;
  /// Stop when sqrt(g^T L^{-1} g) <= tol.
  double tol = 1e-8;
  int max_iter = 50000;
  /// Preconditioner scale; <= 0 means the linearised modulus of the potential.
  double modulus = 0.0;
  bool record_trace = true;

  void validate() const {
    if (!(step > 0.0)) throw std::invalid_argument("solver step must be positive");
    if (!(tol > 0.0)) throw std::invalid_argument("solver tolerance must be positive");
    if (max_iter < 0) throw std::invalid_argument("max_iter must be non-negative");
  }
};

struct SolveReport {
  int iterations = 0;
  double residual_norm = 0.0;
  bool converged = false;
  int step_halvings = 0;
  std::vector<int> halving_iterations;
  double final_step = 0.0;
  double objective = 0.0;
  std::vector<double> trace;
  double wall_seconds = 0.0;
};

/// Steepest descent u <- u - (step / modulus) L^{-1} g. A trial step that
/// increases the objective is rejected and the step halved.
template <class Problem>
std::pair<Eigen::VectorXd, SolveReport> minimize(const Problem& problem, const LaplacianPreconditioner& precond,
                                                 Eigen::VectorXd u, const SolverConfig& cfg, double modulus) {
  cfg.validate();
  if (!(modulus > 0.0)) throw std::invalid_argument("minimize: modulus must be positive");
  const auto t0 = std::chrono::steady_clock::now();
  SolveReport rep;
  double step = cfg.step;
  double value = problem.objective(u);
  if (cfg.record_trace) rep.trace.push_back(value);

  int it = 0;
  for (;; ++it) {
    const Eigen::VectorXd g = problem.objective_gradient(u);
    const Eigen::VectorXd z = precond.solve(g);
    rep.residual_norm = std::sqrt(std::max(0.0, g.dot(z)));
    if (rep.residual_norm <= cfg.tol) {
      rep.converged = true;
      break;
    }
    if (it >= cfg.max_iter) break;

    for (;;) {
      Eigen::VectorXd trial = u - (step / modulus) * z;
      const double tv = problem.objective(trial);
      if (std::isfinite(tv) && tv <= value + 1e-12 * (1.0 + std::abs(value))) {
        u = std::move(trial);
        value = tv;
        break;
      }
      step *= 0.5;
      ++rep.step_halvings;
      rep.halving_iterations.push_back(it);
      if (step < 1e-14 * cfg.step) break;
    }
    if (step < 1e-14 * cfg.step) break;
    if (cfg.record_trace) rep.trace.push_back(value);
  }
  rep.iterations = it;
  rep.final_step = step;
  rep.objective = value;
  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {std::move(u), rep};
}

/// Minimises a model's objective from zero.
template <SitePotential P>
std::pair<Eigen::VectorXd, SolveReport> minimize(const EnergyModel<P>& model, const SolverConfig& cfg,
                                                 const LaplacianPreconditioner* precond = nullptr) {
  const double modulus = cfg.modulus > 0.0 ? cfg.modulus : linear_modulus(model.potential());
  std::optional<LaplacianPreconditioner> own;
  if (!precond) precond = &own.emplace(model.mesh(), model.dofs());
  return minimize(model, *precond, Eigen::VectorXd::Zero(model.size()), cfg, modulus);
}

struct EigenEstimate {
  double value = 0.0;
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Smallest eigenvalue of H x = lambda L x by Lanczos in the L-inner product
/// with full reorthogonalisation. `apply_H` maps a free-dof vector to H v.
template <class HOp>
EigenEstimate smallest_generalized_eigenvalue(HOp&& apply_H, const LaplacianPreconditioner& L, int max_iter = 200,
                                              double tol = 1e-9, std::uint64_t seed = 1) {
  const int n = L.size();
  const SparseMatrix& Lm = L.matrix();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Eigen::VectorXd q(n);
  for (int k = 0; k < n; ++k) q[k] = dist(rng);
  q /= std::sqrt(q.dot(Lm * q));

  const int m_max = std::min(max_iter, n);
  Eigen::MatrixXd Q(n, m_max), LQ(n, m_max);
  std::vector<double> alpha, beta;
  EigenEstimate est;
  for (int k = 0; k < m_max; ++k) {
    Q.col(k) = q;
    LQ.col(k) = Lm * q;
    Eigen::VectorXd w = L.solve(apply_H(q));
    const double a = LQ.col(k).dot(w);
    alpha.push_back(a);
    for (int pass = 0; pass < 2; ++pass) w -= Q.leftCols(k + 1) * (LQ.leftCols(k + 1).transpose() * w);
    const double b = std::sqrt(std::max(0.0, w.dot(Lm * w)));

    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(k + 1, k + 1);
    for (int i = 0; i <= k; ++i) {
      T(i, i) = alpha[i];
      if (i < k) T(i, i + 1) = T(i + 1, i) = beta[i];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
    est.value = es.eigenvalues()[0];
    est.residual = std::abs(b * es.eigenvectors()(k, 0));
    est.iterations = k + 1;
    if (est.residual <= tol * std::max(1.0, std::abs(est.value)) || b < 1e-14) {
      est.converged = true;
      break;
    }
    beta.push_back(b);
    q = w / b;
  }
  return est;
}

/// Smallest eigenvalue of the model Hessian at u = 0 relative to the
/// Laplacian; positive values certify stability of the homogeneous lattice.
template <SitePotential P>
EigenEstimate stability_lambda_min(const EnergyModel<P>& model, int max_iter = 200) {
  const LaplacianPreconditioner L(model.mesh(), model.dofs());
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(model.size());
  return smallest_generalized_eigenvalue([&](const Eigen::VectorXd& v) { return hessian_vec(model, zero, v); }, L,
                                         max_iter);
}

}  // namespace g23
