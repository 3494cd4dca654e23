#pragma once

// Atomistic / interface / continuum decomposition of the lattice, the
// interface reconstruction operator and effective continuum volumes of
// lattice triangles.

#include "g23/lattice.hpp"
#include "g23/polygon.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <stdexcept>
#include <string>
#include <vector>

namespace g23 {

enum class SiteLabel { Atomistic, Interface, Continuum };

inline const char* to_string(SiteLabel l) {
  switch (l) {
    case SiteLabel::Atomistic: return "atomistic";
    case SiteLabel::Interface: return "interface";
    case SiteLabel::Continuum: return "continuum";
  }
  return "?";
}

/// Region labels for lattice sites. Sites absent from the label table are
/// continuum sites.
class Decomposition {
 public:
  Decomposition() = default;
  Decomposition(int K, SiteMap<SiteLabel> labels) : K_(K), labels_(std::move(labels)) {}

  int K() const { return K_; }

  SiteLabel label(LatticeIndex l) const {
    auto it = labels_.find(l);
    return it == labels_.end() ? SiteLabel::Continuum : it->second;
  }
  bool is_atomistic(LatticeIndex l) const { return label(l) == SiteLabel::Atomistic; }
  bool is_interface(LatticeIndex l) const { return label(l) == SiteLabel::Interface; }
  bool is_continuum(LatticeIndex l) const { return label(l) == SiteLabel::Continuum; }
  /// Member of A u I, i.e. a site whose Voronoi cell is removed from the continuum.
  bool is_resolved(LatticeIndex l) const { return label(l) != SiteLabel::Continuum; }

  /// Labelled sites with the given label, in lexicographic order.
  std::vector<LatticeIndex> sites(SiteLabel which) const {
    std::vector<LatticeIndex> out;
    for (const auto& [l, lab] : labels_)
      if (lab == which) out.push_back(l);
    std::sort(out.begin(), out.end());
    return out;
  }
  std::vector<LatticeIndex> atomistic() const { return sites(SiteLabel::Atomistic); }
  std::vector<LatticeIndex> interface() const { return sites(SiteLabel::Interface); }
  std::vector<LatticeIndex> continuum() const { return sites(SiteLabel::Continuum); }

  const SiteMap<SiteLabel>& labels() const { return labels_; }

 private:
  int K_ = 0;
  SiteMap<SiteLabel> labels_;
};

struct A0Report {
  bool pass = true;
  std::vector<LatticeIndex> offending;
};

/// Every interface site must have exactly two interface neighbours and at
/// least one continuum neighbour.
inline A0Report validate_A0(const Decomposition& d) {
  A0Report r;
  for (const LatticeIndex& l : d.interface()) {
    int n_interface = 0, n_continuum = 0;
    for (const LatticeIndex& a : kNeighbourOffsets) {
      const SiteLabel lab = d.label(l + a);
      n_interface += lab == SiteLabel::Interface;
      n_continuum += lab == SiteLabel::Continuum;
    }
    if (n_interface != 2 || n_continuum < 1) r.offending.push_back(l);
  }
  r.pass = r.offending.empty();
  return r;
}

/// Hexagonal atomistic region of side K, one interface ring and one ring of
/// labelled continuum sites (the remaining lattice is continuum implicitly).
inline Decomposition decompose(int K) {
  if (K < 1) throw std::invalid_argument("decompose: K must be >= 1, got " + std::to_string(K));
  SiteMap<SiteLabel> labels;
  for (const LatticeIndex& l : hexagon_sites(K + 2)) {
    const int n = hexnorm(l);
    labels.emplace(l, n <= K ? SiteLabel::Atomistic : n == K + 1 ? SiteLabel::Interface : SiteLabel::Continuum);
  }
  Decomposition d(K, std::move(labels));
  if (const auto rep = validate_A0(d); !rep.pass) {
    throw std::logic_error("decompose: interface violates (A0) at " + std::to_string(rep.offending.size()) + " sites");
  }
  return d;
}

/// Reconstruction coefficients lambda_{l,k} for the interface sites.
class ReconstructionCoeffs {
 public:
  /// lambda = 2/3 on continuum-pointing bonds, 1 otherwise.
  static ReconstructionCoeffs g23(const Decomposition& d) {
    ReconstructionCoeffs c;
    for (const LatticeIndex& l : d.interface()) {
      std::array<double, 6> lam{};
      for (int k = 0; k < 6; ++k) lam[k] = d.is_continuum(l + kNeighbourOffsets[k]) ? 2.0 / 3.0 : 1.0;
      c.table_.emplace(l, lam);
    }
    return c;
  }

  /// lambda = 1 everywhere: no reconstruction. Not patch-test consistent.
  static ReconstructionCoeffs unit(const Decomposition& d) {
    ReconstructionCoeffs c;
    for (const LatticeIndex& l : d.interface()) c.table_.emplace(l, std::array<double, 6>{1, 1, 1, 1, 1, 1});
    return c;
  }

  bool contains(LatticeIndex l) const { return table_.contains(l); }

  /// Coefficients at an interface site; slot k-1 holds lambda_{l,k}.
  const std::array<double, 6>& at(LatticeIndex l) const {
    auto it = table_.find(l);
    if (it == table_.end()) throw std::invalid_argument("reconstruction requested at a non-interface site");
    return it->second;
  }

  void set(LatticeIndex l, const std::array<double, 6>& lam) { table_[l] = lam; }

 private:
  SiteMap<std::array<double, 6>> table_;
};

/// (R g)_j = (1 - lambda_j) g_{j-1} + lambda_j g_j + (1 - lambda_j) g_{j+1},
/// indices modulo 6.
inline Stencil reconstruct(const std::array<double, 6>& lambda, const Stencil& g) {
  Stencil out{};
  for (int j = 0; j < 6; ++j) {
    const double mix = 1.0 - lambda[j];
    out[j] = mix * g[(j + 5) % 6] + lambda[j] * g[j] + mix * g[(j + 1) % 6];
  }
  return out;
}

inline Stencil reconstruct(LatticeIndex l, const Stencil& g, const ReconstructionCoeffs& c) {
  return reconstruct(c.at(l), g);
}

/// Transpose of reconstruct: maps dV/d(Rg) back to dV/dg.
inline Stencil reconstruct_transpose(const std::array<double, 6>& lambda, const Stencil& dR) {
  Stencil out{};
  for (int j = 0; j < 6; ++j) {
    const double mix = 1.0 - lambda[j];
    out[(j + 5) % 6] += mix * dR[j];
    out[j] += lambda[j] * dR[j];
    out[(j + 1) % 6] += mix * dR[j];
  }
  return out;
}

/// |T \ union of Voronoi cells of resolved vertices of T|. Voronoi cells of
/// non-incident sites cannot reach a unit triangle, so only the vertices
/// need to be clipped against.
inline double effective_volume(const std::array<LatticeIndex, 3>& T, const Decomposition& d) {
  const std::array<Vec2, 3> tri{position(T[0]), position(T[1]), position(T[2])};
  const double full = polygon::area(tri);
  double covered = 0.0;
  for (const LatticeIndex& v : T) {
    if (!d.is_resolved(v)) continue;
    const auto hex = voronoi_hexagon(v);
    covered += polygon::intersection_area(tri, hex);
  }
  double vol = full - covered;
  if (vol < 1e-14) vol = 0.0;
  return std::min(vol, full);
}

inline nlohmann::json to_json(const Decomposition& d) {
  auto list = [&](SiteLabel which) {
    nlohmann::json arr = nlohmann::json::array();
    for (const LatticeIndex& l : d.sites(which)) arr.push_back({l.i, l.j});
    return arr;
  };
  return {{"K", d.K()},
          {"atomistic", list(SiteLabel::Atomistic)},
          {"interface", list(SiteLabel::Interface)},
          {"continuum", list(SiteLabel::Continuum)}};
}

}  // namespace g23
