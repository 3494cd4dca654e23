#pragma once

// Built-in verification suite run by `g23_cli --check`: patch tests,
// gradient checks, the geometry oracle, (A0), mesh quality and the
// stability certificate, all at small K.

#include "g23/analysis.hpp"
#include "g23/dofs.hpp"
#include "g23/geometry.hpp"
#include "g23/mesh.hpp"
#include "g23/model.hpp"
#include "g23/solver.hpp"

#include <Eigen/Eigenvalues>

#include <cstdint>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace g23 {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct CheckReport {
  std::vector<CheckResult> results;

  bool pass() const {
    for (const auto& r : results)
      if (!r.pass) return false;
    return true;
  }
};

struct CheckOptions {
  std::uint64_t seed = 0;
  /// Substitute lambda = 1 in the coupled model (negative control).
  bool unit_lambda = false;
  /// One-point quadrature on P2 elements (ablation).
  bool one_point_p2 = false;
};

/// `count` deformation gradients with |F| <= radius, uniform in the disc.
inline std::vector<Vec2> random_gradients(std::uint64_t seed, int count, double radius) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Vec2> out;
  for (int k = 0; k < count; ++k) {
    const double r = radius * std::sqrt(u(rng)), t = 2.0 * kPi * u(rng);
    out.emplace_back(r * std::cos(t), r * std::sin(t));
  }
  return out;
}

/// max over interface sites of |V(R D u_F) - V(F a)|.
inline double interface_energy_defect(const Vec2& F, int K, bool unit_lambda = false) {
  const Mesh mesh = build_graded_mesh(K, 1.4, Order::P2);
  const DofMap dofs = enumerate_dofs(mesh);
  ModelOptions opt;
  opt.unit_lambda = unit_lambda;
  const auto model = make_g23_model(mesh, dofs, decompose(K), ToyEam{}, opt);
  const Eigen::VectorXd uF = dofs.interpolate([&](const Vec2& x) { return F.dot(x); });
  const double target = ToyEam{}.energy(homogeneous_stencil(F));
  double worst = 0.0;
  for (const auto& t : model.site_terms())
    if (t.interface) worst = std::max(worst, std::abs(model.site_energy(t, uF) - target));
  return worst;
}

/// max_k |g_k - central difference_k| / max(1, |g|_inf) at a random free
/// state of amplitude `amp`.
template <class Model>
double gradient_fd_error(const Model& model, std::uint64_t seed, double amp = 0.1, double h = 1e-6) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-amp, amp);
  Eigen::VectorXd x(model.size());
  for (int k = 0; k < x.size(); ++k) x[k] = u(rng);
  const Eigen::VectorXd g = model.objective_gradient(x);
  double worst = 0.0;
  Eigen::VectorXd y = x;
  for (int k = 0; k < x.size(); ++k) {
    y[k] = x[k] + h;
    const double ep = model.objective(y);
    y[k] = x[k] - h;
    const double em = model.objective(y);
    y[k] = x[k];
    worst = std::max(worst, std::abs(g[k] - (ep - em) / (2.0 * h)));
  }
  return worst / std::max(1.0, g.lpNorm<Eigen::Infinity>());
}

/// Dense smallest eigenvalue of the finite-difference Hessian against the
/// free-dof Laplacian.
template <class Model>
double dense_lambda_min(const Model& model) {
  const LaplacianPreconditioner L(model.mesh(), model.dofs());
  const int n = L.size();
  Eigen::MatrixXd H(n, n);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(n);
  for (int k = 0; k < n; ++k) H.col(k) = hessian_vec(model, zero, Eigen::VectorXd::Unit(n, k));
  H = 0.5 * (H + H.transpose()).eval();
  const Eigen::MatrixXd Ld(L.matrix());
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(H, Ld);
  return es.eigenvalues()[0];
}

inline CheckReport run_checks(const CheckOptions& opt = {}) {
  CheckReport rep;
  auto add = [&](std::string name, bool pass, const std::string& detail) {
    rep.results.push_back({std::move(name), pass, detail});
  };
  auto sci = [](double v) {
    std::ostringstream s;
    s.precision(3);
    s << std::scientific << v;
    return s.str();
  };
  ModelOptions mopt;
  mopt.unit_lambda = opt.unit_lambda;
  mopt.one_point_p2 = opt.one_point_p2;
  const auto gradients = random_gradients(opt.seed, 10, 0.3);

  {
    double worst = 0.0;
    for (const Vec2& F : gradients) worst = std::max(worst, interface_energy_defect(F, 4, opt.unit_lambda));
    add("energy patch test", worst <= 1e-12, "max |V(RDu_F) - V(Fa)| = " + sci(worst));
  }
  {
    double worst = 0.0;
    for (const Vec2& F : gradients) worst = std::max(worst, ghost_force_norm(F, 4, 1.4, Order::P2, opt.unit_lambda));
    add("force patch test", worst <= 1e-10, "max interior ghost force = " + sci(worst));
    const double control = ghost_force_norm(Vec2(0.2, 0.1), 4, 1.4, Order::P2, true);
    add("force patch negative control", control >= 1e-4, "lambda = 1 ghost force = " + sci(control));
  }
  {
    double worst = 0.0;
    for (int K : {2, 3})
      for (Order o : {Order::P1, Order::P2}) {
        const Mesh mesh = build_graded_mesh(K, 1.4, o);
        const DofMap dofs = enumerate_dofs(mesh);
        const auto model = make_g23_model(mesh, dofs, decompose(K), ToyEam{}, mopt);
        worst = std::max(worst, gradient_fd_error(model, opt.seed + K));
      }
    add("gradient vs finite differences", worst <= 1e-6, "max relative error = " + sci(worst));
  }
  {
    const Decomposition d = decompose(2);
    const double all = effective_volume({LatticeIndex{0, 0}, {1, 0}, {0, 1}}, d);
    const double one = effective_volume({LatticeIndex{3, 0}, {4, 0}, {3, 1}}, d);
    const double none = effective_volume({LatticeIndex{10, 0}, {11, 0}, {10, 1}}, d);
    const bool pass = std::abs(all) <= 1e-12 && std::abs(one - kSqrt3 / 6) <= 1e-12 &&
                      std::abs(none - kSqrt3 / 4) <= 1e-12;
    add("effective volume oracle", pass, "0 / sqrt3/6 / sqrt3/4 -> " + sci(all) + " / " + sci(one) + " / " + sci(none));
  }
  {
    bool pass = true;
    for (int K = 1; K <= 10; ++K) pass &= validate_A0(decompose(K)).pass;
    add("interface assumption A0", pass, "K = 1..10");
  }
  {
    bool pass = true;
    double worst = 0.0;
    std::vector<double> Ks, n;
    for (int K : {4, 8, 16}) {
      const Mesh mesh = build_graded_mesh(K, 1.4, Order::P2);
      worst = std::max(worst, shape_regularity(mesh));
      pass &= mesh.inradius() >= mesh.N && is_conforming(mesh);
      Ks.push_back(K);
      n.push_back(enumerate_dofs(mesh).n_free());
    }
    const double slope = slope_fit(Ks, n);
    pass &= worst <= 12.0 && std::abs(slope - 2.0) <= 0.2;
    add("mesh quality", pass, "shape " + sci(worst) + ", dof slope " + sci(slope));
  }
  {
    bool pass = true;
    std::ostringstream detail;
    for (int K : {2, 4}) {
      const Mesh mesh = build_graded_mesh(K, 1.4, Order::P2);
      const DofMap dofs = enumerate_dofs(mesh);
      const auto model = make_g23_model(mesh, dofs, decompose(K), ToyEam{}, mopt);
      const auto est = stability_lambda_min(model);
      pass &= est.converged && est.value > 0.0;
      detail << "K=" << K << " lambda_min " << sci(est.value) << "; ";
      if (K == 2) {
        const double dense = dense_lambda_min(model);
        const double rel = std::abs(est.value - dense) / std::abs(dense);
        pass &= rel <= 1e-6;
        detail << "dense rel diff " << sci(rel) << "; ";
      }
    }
    add("stability certificate", pass, detail.str());
  }
  return rep;
}

}  // namespace g23
