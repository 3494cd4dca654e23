#include "g23/checks.hpp"
#include "g23/solver.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace g23;

namespace {

Mesh single_triangle() {
  Mesh m;
  m.nodes = {Vec2(0, 0), Vec2(1, 0), Vec2(0.5, 0.5 * kSqrt3)};
  m.elements = {Element{{0, 1, 2}, ElementKind::Continuum}};
  m.boundary = {true, true, false};
  m.layer = {0, 0, 0};
  m.node_site.assign(3, std::nullopt);
  m.order = Order::P1;
  return m;
}

// One free vertex; built by hand because the open edges at the free vertex
// are not boundary edges.
DofMap single_triangle_dofs(const Mesh& m) {
  DofMap d;
  d.n_nodes = d.n_dofs = 3;
  d.local = {{LocalDof{0}, LocalDof{1}, LocalDof{2}}};
  d.dirichlet = {true, true, false};
  d.free_index = {-1, -1, 0};
  d.free_dofs = {2};
  d.position = m.nodes;
  d.layer = m.layer;
  return d;
}

double cot(const Vec2& a, const Vec2& b) { return a.dot(b) / std::abs(a.x() * b.y() - a.y() * b.x()); }

// P1 stiffness from the cotangent formula.
Eigen::MatrixXd cotangent_laplacian(const Mesh& m) {
  const int n = static_cast<int>(m.node_count());
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
  for (const Element& el : m.elements) {
    for (int k = 0; k < 3; ++k) {
      const int i = el.v[(k + 1) % 3], j = el.v[(k + 2) % 3], o = el.v[k];
      const double w = 0.5 * cot(m.nodes[i] - m.nodes[o], m.nodes[j] - m.nodes[o]);
      L(i, j) -= w;
      L(j, i) -= w;
      L(i, i) += w;
      L(j, j) += w;
    }
  }
  return L;
}

}  // namespace

TEST(Laplacian, SingleTriangle) {
  const Mesh m = single_triangle();
  const DofMap d = single_triangle_dofs(m);
  const SparseMatrix L = assemble_laplacian(m, d);
  ASSERT_EQ(L.rows(), 1);
  EXPECT_NEAR(L.coeff(0, 0), 1.0 / kSqrt3, 1e-14);
}

TEST(Laplacian, MatchesCotangentFormula) {
  const Mesh m = build_graded_mesh(3, 1.4, Order::P1);
  const DofMap d = enumerate_dofs(m);
  const Eigen::MatrixXd L(assemble_laplacian_full(m, d));
  EXPECT_LT((L - cotangent_laplacian(m)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Laplacian, KernelSymmetryAndDefiniteness) {
  for (Order o : {Order::P1, Order::P2}) {
    const Mesh m = build_graded_mesh(3, 1.4, o);
    const DofMap d = enumerate_dofs(m);
    const SparseMatrix full = assemble_laplacian_full(m, d);
    EXPECT_LT((full * Eigen::VectorXd::Ones(d.n_dofs)).lpNorm<Eigen::Infinity>(), 1e-11);
    EXPECT_LT(Eigen::MatrixXd(full - SparseMatrix(full.transpose())).cwiseAbs().maxCoeff(), 1e-13);
    const SparseMatrix L = assemble_laplacian(m, d);
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g;
    for (int t = 0; t < 10; ++t) {
      Eigen::VectorXd x(L.rows());
      for (auto& v : x) v = g(rng);
      EXPECT_GT(x.dot(L * x), 0.0);
    }
  }
}

TEST(Laplacian, P2AffineEnergy) {
  // (grad u_F, grad u_F) = |F|^2 |Omega|.
  const Mesh m = build_graded_mesh(3, 1.4, Order::P2);
  const DofMap d = enumerate_dofs(m);
  const SparseMatrix full = assemble_laplacian_full(m, d);
  const Vec2 F(0.4, -1.3);
  const Eigen::VectorXd u = d.interpolate([&](const Vec2& x) { return F.dot(x); });
  const double R = m.rings.back().radius;
  const double area = 1.5 * kSqrt3 * R * R;
  EXPECT_NEAR(u.dot(full * u), F.squaredNorm() * area, 1e-9 * area);
}

TEST(Laplacian, SingularWithoutClamp) {
  const Mesh m = single_triangle();
  DofMap d = single_triangle_dofs(m);
  d.dirichlet.assign(d.n_dofs, false);
  d.free_dofs = {0, 1, 2};
  d.free_index = {0, 1, 2};
  EXPECT_THROW(assemble_laplacian(m, d), StructuralError);
}

TEST(Preconditioner, SolvesAccurately) {
  const Mesh m = build_graded_mesh(4, 1.4, Order::P2);
  const DofMap d = enumerate_dofs(m);
  const LaplacianPreconditioner P(m, d);
  const Eigen::VectorXd b = Eigen::VectorXd::Random(P.size());
  const Eigen::VectorXd x = P.solve(b);
  EXPECT_LE((P.matrix() * x - b).norm(), 1e-10 * b.norm());
}

TEST(Minimize, ZeroForcingConvergesImmediately) {
  const Mesh m = build_graded_mesh(3, 1.4, Order::P2);
  const DofMap d = enumerate_dofs(m);
  ModelOptions opt;
  opt.external = false;
  const auto model = make_g23_model(m, d, decompose(3), ToyEam{}, opt);
  const auto [u, rep] = minimize(model, SolverConfig{});
  EXPECT_TRUE(rep.converged);
  EXPECT_EQ(rep.iterations, 0);
  EXPECT_EQ(u.norm(), 0.0);
}

TEST(Minimize, ConvergesWithMonotoneTrace) {
  for (Order o : {Order::P1, Order::P2}) {
    const Mesh m = build_graded_mesh(4, 1.4, o);
    const DofMap d = enumerate_dofs(m);
    const auto model = make_g23_model(m, d, decompose(4));
    const auto [u, rep] = minimize(model, SolverConfig{});
    EXPECT_TRUE(rep.converged);
    EXPECT_LE(rep.residual_norm, 1e-8);
    EXPECT_LT(rep.objective, 0.0);
    ASSERT_EQ(rep.trace.size(), static_cast<std::size_t>(rep.iterations + 1));
    for (std::size_t k = 1; k < rep.trace.size(); ++k)
      EXPECT_LE(rep.trace[k], rep.trace[k - 1] + 1e-12 * (1 + std::abs(rep.trace[k - 1])));
    EXPECT_NEAR(model.objective(u), rep.objective, 1e-14);
    // Stationarity in the dual norm.
    const LaplacianPreconditioner P(m, d);
    const Eigen::VectorXd g = model.objective_gradient(u);
    EXPECT_LE(std::sqrt(g.dot(P.solve(g))), 1e-8);
  }
}

TEST(Minimize, HalvesAnOversizedStep) {
  const Mesh m = build_graded_mesh(3, 1.4, Order::P1);
  const DofMap d = enumerate_dofs(m);
  const auto model = make_g23_model(m, d, decompose(3));
  SolverConfig cfg;
  cfg.step = 64.0;
  const auto [u, rep] = minimize(model, cfg);
  EXPECT_TRUE(rep.converged);
  EXPECT_GT(rep.step_halvings, 0);
  EXPECT_EQ(rep.halving_iterations.size(), static_cast<std::size_t>(rep.step_halvings));
  EXPECT_LT(rep.final_step, cfg.step);
}

TEST(Minimize, IterationCapReportsNonConvergence) {
  const Mesh m = build_graded_mesh(3, 1.4, Order::P1);
  const DofMap d = enumerate_dofs(m);
  const auto model = make_g23_model(m, d, decompose(3));
  SolverConfig cfg;
  cfg.max_iter = 3;
  const auto [u, rep] = minimize(model, cfg);
  EXPECT_FALSE(rep.converged);
  EXPECT_EQ(rep.iterations, 3);
}

TEST(SolverConfig, Validation) {
  SolverConfig c;
  c.step = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.tol = -1;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.max_iter = -1;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(Eigen, ScaledLaplacianHasEigenvalueC) {
  const Mesh m = build_graded_mesh(3, 1.4, Order::P2);
  const DofMap d = enumerate_dofs(m);
  const LaplacianPreconditioner P(m, d);
  const double c = 3.7;
  const auto est = smallest_generalized_eigenvalue([&](const Eigen::VectorXd& v) { return Eigen::VectorXd(c * (P.matrix() * v)); }, P);
  EXPECT_TRUE(est.converged);
  EXPECT_NEAR(est.value, c, 1e-9 * c);
}

TEST(Eigen, StabilityMatchesDenseSolve) {
  for (Order o : {Order::P1, Order::P2}) {
    const Mesh m = build_graded_mesh(2, 1.4, o);
    const DofMap d = enumerate_dofs(m);
    const auto model = make_g23_model(m, d, decompose(2));
    const auto est = stability_lambda_min(model);
    EXPECT_TRUE(est.converged);
    EXPECT_GT(est.value, 0.0);
    const double dense = dense_lambda_min(model);
    EXPECT_NEAR(est.value, dense, 1e-6 * dense);
  }
}

TEST(Eigen, StabilityPositiveAtK4) {
  const Mesh m = build_graded_mesh(4, 1.4, Order::P2);
  const DofMap d = enumerate_dofs(m);
  const auto est = stability_lambda_min(make_g23_model(m, d, decompose(4)));
  EXPECT_TRUE(est.converged);
  EXPECT_GT(est.value, 0.0);
  // Bounded by the linearised modulus (the Rayleigh quotient of smooth modes).
  EXPECT_LE(est.value, linear_modulus(ToyEam{}) * (1 + 1e-6));
}
