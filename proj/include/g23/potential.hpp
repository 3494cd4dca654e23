#pragma once

// Nearest-neighbour many-body site potentials and the Cauchy-Born energy
// density they induce.

#include "g23/lattice.hpp"

#include <cmath>
#include <concepts>
#include <stdexcept>

namespace g23 {

/// A site energy V(Du) of the six nearest-neighbour differences together
/// with its partial derivatives dV/dg_j.
template <class P>
concept SitePotential = requires(const P& p, const Stencil& g) {
  { p.energy(g) } -> std::convertible_to<double>;
  { p.gradient(g) } -> std::convertible_to<Stencil>;
};

/// Anti-plane embedded-atom toy model V(g) = G(sum_j rho(g_j)) with
/// G(s) = s + s^2/2 and rho(r) = sin^2(pi r).
struct ToyEam {
  static double embedding(double s) { return s + 0.5 * s * s; }
  static double embedding_derivative(double s) { return 1.0 + s; }
  static double density(double r) {
    const double s = std::sin(kPi * r);
    return s * s;
  }
  static double density_derivative(double r) { return kPi * std::sin(2.0 * kPi * r); }

  double energy(const Stencil& g) const {
    double s = 0.0;
    for (double gj : g) s += density(gj);
    return embedding(s);
  }

  Stencil gradient(const Stencil& g) const {
    double s = 0.0;
    for (double gj : g) s += density(gj);
    const double dG = embedding_derivative(s);
    Stencil out{};
    for (int j = 0; j < 6; ++j) out[j] = dG * density_derivative(g[j]);
    return out;
  }
};

/// V(g) = (stiffness/2) sum_j g_j^2. Used as a surrogate with an exactly
/// linear gradient.
struct QuadraticPotential {
  double stiffness = 1.0;

  double energy(const Stencil& g) const {
    double s = 0.0;
    for (double gj : g) s += gj * gj;
    return 0.5 * stiffness * s;
  }
  Stencil gradient(const Stencil& g) const {
    Stencil out{};
    for (int j = 0; j < 6; ++j) out[j] = stiffness * g[j];
    return out;
  }
};

static_assert(SitePotential<ToyEam>);
static_assert(SitePotential<QuadraticPotential>);

struct PotentialParams {
  /// Strength of the elastic di-pole f(u) = m (u(0,0) - u(1,0)).
  double force_magnitude = 10.0;

  void validate() const {
    if (!std::isfinite(force_magnitude)) throw std::invalid_argument("force_magnitude must be finite");
  }
};

inline double site_energy(const Stencil& g) { return ToyEam{}.energy(g); }
inline Stencil site_gradient(const Stencil& g) { return ToyEam{}.gradient(g); }

/// W(F) = V(F a) / Omega_0.
template <SitePotential P>
double cb_density(const P& pot, const Vec2& F) {
  return pot.energy(homogeneous_stencil(F)) / kCellVolume;
}

/// dW/dF = (1/Omega_0) sum_j dV/dg_j (F a) a_j.
template <SitePotential P>
Vec2 cb_stress(const P& pot, const Vec2& F) {
  const Stencil dV = pot.gradient(homogeneous_stencil(F));
  Vec2 s = Vec2::Zero();
  for (int j = 0; j < 6; ++j) s += dV[j] * position(kNeighbourOffsets[j]);
  return s / kCellVolume;
}

inline double cb_density(const Vec2& F) { return cb_density(ToyEam{}, F); }
inline Vec2 cb_stress(const Vec2& F) { return cb_stress(ToyEam{}, F); }

/// Linearised Cauchy-Born modulus d^2W/dF_1^2 at F = 0 (the lattice is
/// isotropic, so this is the full tangent at the reference state). Central
/// second difference of the stress.
template <SitePotential P>
double linear_modulus(const P& pot, double step = 1e-5) {
  const Vec2 e1(step, 0.0);
  return (cb_stress(pot, e1).x() - cb_stress(pot, Vec2(-e1)).x()) / (2.0 * step);
}

}  // namespace g23
