#include "g23/analysis.hpp"
#include "g23/checks.hpp"
#include "g23/model.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace g23;

namespace {

struct Problem {
  Mesh mesh;
  DofMap dofs;
  Decomposition d;
  Problem(int K, Order o) : mesh(build_graded_mesh(K, 1.4, o)), dofs(enumerate_dofs(mesh)), d(decompose(K)) {}
};

Eigen::VectorXd random_free(int n, std::uint64_t seed, double amp) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-amp, amp);
  Eigen::VectorXd x(n);
  for (int k = 0; k < n; ++k) x[k] = u(rng);
  return x;
}

// Coupled energy of a P1 state written out from the definitions: site
// energies with lambda from the hex norm, and for each element the constant
// gradient solved from its vertex values times |T| less one third of |T| per
// resolved lattice vertex.
double p1_energy_oracle(const Mesh& m, const Eigen::VectorXd& full, int K) {
  const ToyEam V;
  auto value = [&](LatticeIndex l) { return full[m.site_node.at(l)]; };
  double e = 0.0;
  for (const LatticeIndex& l : hexagon_sites(K + 1)) {
    Stencil g{};
    for (int k = 0; k < 6; ++k) g[k] = value(l + kNeighbourOffsets[k]) - value(l);
    if (hexnorm(l) == K + 1) {
      Stencil r{};
      for (int j = 0; j < 6; ++j) {
        const double lam = hexnorm(l + kNeighbourOffsets[j]) > K + 1 ? 2.0 / 3.0 : 1.0;
        r[j] = (1 - lam) * g[(j + 5) % 6] + lam * g[j] + (1 - lam) * g[(j + 1) % 6];
      }
      g = r;
    }
    e += V.energy(g);
  }
  for (std::size_t t = 0; t < m.element_count(); ++t) {
    const auto& v = m.elements[t].v;
    Eigen::Matrix2d A;
    A.row(0) = (m.nodes[v[1]] - m.nodes[v[0]]).transpose();
    A.row(1) = (m.nodes[v[2]] - m.nodes[v[0]]).transpose();
    const Eigen::Vector2d b(full[v[1]] - full[v[0]], full[v[2]] - full[v[0]]);
    const Vec2 F = A.fullPivLu().solve(b);
    int resolved = 0;
    for (int w : v) resolved += m.node_site[w] && hexnorm(*m.node_site[w]) <= K + 1;
    const double vol = std::abs(m.area(t)) * (1.0 - resolved / 3.0);
    e += vol * V.energy(homogeneous_stencil(F)) / (kSqrt3 / 2);
  }
  return e - 10.0 * (value({0, 0}) - value({1, 0}));
}

}  // namespace

TEST(EnergyModel, InterfaceEnergiesArePatchConsistent) {
  for (const Vec2& F : random_gradients(42, 10, 0.3)) {
    EXPECT_LE(interface_energy_defect(F, 4), 1e-12);
    EXPECT_LE(interface_energy_defect(F, 4, true), 1e-12);
  }
}

TEST(EnergyModel, GhostForceFree) {
  EXPECT_EQ(ghost_force_norm(Vec2(0, 0), 4), 0.0);
  EXPECT_LE(ghost_force_norm(Vec2(0.2, 0.1), 4), 1e-10);
  EXPECT_LE(ghost_force_norm(Vec2(0.2, 0.1), 4, 1.4, Order::P1), 1e-10);
  for (const Vec2& F : random_gradients(3, 10, 0.3)) EXPECT_LE(ghost_force_norm(F, 5), 1e-10);
  EXPECT_GE(ghost_force_norm(Vec2(0.2, 0.1), 4, 1.4, Order::P2, true), 1e-4);
  EXPECT_THROW(ghost_force_norm(Vec2(0.6, 0), 4), std::invalid_argument);
}

TEST(EnergyModel, HomogeneousEnergyIsCauchyBornTimesArea) {
  for (Order o : {Order::P1, Order::P2}) {
    Problem s(3, o);
    ModelOptions opt;
    opt.external = false;
    const auto model = make_g23_model(s.mesh, s.dofs, s.d, ToyEam{}, opt);
    const Vec2 F(0.17, -0.08);
    const Eigen::VectorXd uF = s.dofs.interpolate([&](const Vec2& x) { return F.dot(x); });
    const double R = s.mesh.rings.back().radius;
    const double expect = cb_density(F) * 1.5 * kSqrt3 * R * R;
    EXPECT_NEAR(model.energy(uF).total(), expect, 1e-10 * expect);
  }
}

TEST(EnergyModel, MatchesIndependentP1Oracle) {
  for (int K : {2, 3}) {
    Problem s(K, Order::P1);
    const auto model = make_g23_model(s.mesh, s.dofs, s.d);
    const Eigen::VectorXd full = model.expand(random_free(model.size(), K, 0.2));
    EXPECT_NEAR(model.energy(full).total(), p1_energy_oracle(s.mesh, full, K), 1e-10);
  }
}

TEST(EnergyModel, GradientMatchesFiniteDifferences) {
  for (int K : {2, 3})
    for (Order o : {Order::P1, Order::P2}) {
      Problem s(K, o);
      const auto model = make_g23_model(s.mesh, s.dofs, s.d);
      EXPECT_LE(gradient_fd_error(model, 10 + K), 1e-6) << K << " " << to_string(o);
    }
}

TEST(EnergyModel, OnePointQuadratureGradientStillConsistent) {
  Problem s(3, Order::P2);
  ModelOptions opt;
  opt.one_point_p2 = true;
  const auto model = make_g23_model(s.mesh, s.dofs, s.d, ToyEam{}, opt);
  EXPECT_LE(gradient_fd_error(model, 5), 1e-6);
  const auto exact = make_g23_model(s.mesh, s.dofs, s.d);
  const Eigen::VectorXd x = random_free(model.size(), 1, 0.2);
  EXPECT_GT(std::abs(model.objective(x) - exact.objective(x)), 1e-8);
}

TEST(EnergyModel, ExternalDipole) {
  Problem s(2, Order::P1);
  const auto model = make_g23_model(s.mesh, s.dofs, s.d);
  Eigen::VectorXd full = Eigen::VectorXd::Zero(s.dofs.n_dofs);
  const int o = s.mesh.site_node.at({0, 0}), r = s.mesh.site_node.at({1, 0});
  full[o] = 1.0;
  EXPECT_DOUBLE_EQ(model.external_value(full), 10.0);
  full[r] = 1.0;
  EXPECT_DOUBLE_EQ(model.external_value(full), 0.0);
  const auto g = model.external_gradient();
  ASSERT_EQ(g.size(), 2u);
  EXPECT_EQ(g[0], (std::pair<int, double>{o, 10.0}));
  EXPECT_EQ(g[1], (std::pair<int, double>{r, -10.0}));
  // The gradient of the objective at 0 is -grad f.
  const Eigen::VectorXd g0 = model.gradient(Eigen::VectorXd::Zero(s.dofs.n_dofs));
  EXPECT_NEAR(g0[o], -10.0, 1e-12);
  EXPECT_NEAR(g0[r], 10.0, 1e-12);
  EXPECT_NEAR(g0.norm(), std::sqrt(200.0), 1e-12);
}

TEST(EnergyModel, TranslationInvariance) {
  Problem s(3, Order::P2);
  ModelOptions opt;
  opt.external = false;
  const auto model = make_g23_model(s.mesh, s.dofs, s.d, ToyEam{}, opt);
  const Eigen::VectorXd full = model.expand(random_free(model.size(), 2, 0.3));
  const Eigen::VectorXd shifted = full.array() + 0.731;
  EXPECT_NEAR(model.energy(full).total(), model.energy(shifted).total(), 1e-11);
  EXPECT_LT((model.gradient(full) - model.gradient(shifted)).lpNorm<Eigen::Infinity>(), 1e-11);
  // Constants are in the kernel of the full gradient.
  EXPECT_NEAR(model.gradient(full).sum(), 0.0, 1e-10);
}

TEST(EnergyModel, HessianVecOnQuadraticPotential) {
  Problem s(2, Order::P2);
  const auto model = make_g23_model(s.mesh, s.dofs, s.d, QuadraticPotential{2.0});
  const int n = model.size();
  const Eigen::VectorXd x = random_free(n, 1, 0.5), v = random_free(n, 2, 1.0), w = random_free(n, 3, 1.0);
  // The gradient is affine, so H v = g(x + v) - g(x).
  const Eigen::VectorXd Hv = hessian_vec(model, x, v);
  const Eigen::VectorXd exact = model.objective_gradient(x + v) - model.objective_gradient(x);
  EXPECT_LT((Hv - exact).lpNorm<Eigen::Infinity>(), 1e-8 * (1 + exact.lpNorm<Eigen::Infinity>()));
  EXPECT_NEAR(w.dot(Hv), v.dot(hessian_vec(model, x, w)), 1e-7 * (1 + std::abs(w.dot(Hv))));
  EXPECT_EQ(hessian_vec(model, x, Eigen::VectorXd::Zero(n)).norm(), 0.0);
}

TEST(EnergyModel, AtomisticMatchesDirectSum) {
  const Mesh m = build_lattice_mesh(2, 5);
  const DofMap d = enumerate_dofs(m);
  ModelOptions opt;
  opt.external = false;
  const auto model = make_atomistic_model(m, d, ToyEam{}, opt);
  const Eigen::VectorXd full = model.expand(random_free(model.size(), 4, 0.3));
  const auto u = [&](LatticeIndex l) {
    const auto n = m.node_of(l);
    return n ? full[*n] : 0.0;
  };
  EXPECT_NEAR(model.energy(full).total(), energy_atomistic(u, m.lattice_radius), 1e-11);
  EXPECT_LE(gradient_fd_error(model, 9), 1e-6);
}

TEST(EnergyModel, RejectsWrongStateSize) {
  Problem s(2, Order::P1);
  const auto model = make_g23_model(s.mesh, s.dofs, s.d);
  EXPECT_THROW(model.energy(Eigen::VectorXd::Zero(3)), StructuralError);
}
