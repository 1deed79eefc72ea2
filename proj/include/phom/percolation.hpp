#pragma once

// I.i.d. random conductances on the edges of a cube, and the mask operations
// restricting them to the maximal cluster.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "phom/cluster_labels.hpp"
#include "phom/lattice.hpp"

namespace phom {

enum class LawKind { bernoulli, uniform };

inline std::string to_string(LawKind k) { return k == LawKind::bernoulli ? "bernoulli" : "uniform"; }

inline LawKind parse_law(const std::string& s) {
  if (s == "bernoulli") return LawKind::bernoulli;
  if (s == "uniform") return LawKind::uniform;
  throw InvalidArgument("unknown conductance law '" + s + "'");
}

struct PercolationLaw {
  double p_open = 1.0;
  /// Ellipticity: open conductances lie in [1/lambda_ell, 1].
  double lambda_ell = 2.0;
  LawKind kind = LawKind::bernoulli;

  /// True when p_open is at or below the bond-percolation threshold (or a
  /// conservative estimate of it in d = 3).
  bool looks_subcritical(int dim) const { return dim == 2 ? p_open <= 0.5 : p_open <= 0.2488; }

  void validate() const {
    if (!(p_open >= 0.0 && p_open <= 1.0)) throw InvalidArgument("p_open must lie in [0, 1]");
    if (!(lambda_ell >= 1.0)) throw InvalidArgument("lambda_ell must be >= 1");
  }
};

namespace detail {
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Counter-based hash of (seed, lower endpoint, axis, stream) to [0, 1).
inline double edge_uniform(std::uint64_t seed, const Point& x, int axis, std::uint64_t stream) {
  std::uint64_t h = mix64(seed);
  for (int j = 0; j < kMaxDim; ++j) h = mix64(h ^ static_cast<std::uint64_t>(x[j]));
  h = mix64(h ^ (static_cast<std::uint64_t>(axis) << 8 | stream));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}
}  // namespace detail

/// Conductances a(x, x + e_j) stored per direction in the lattice layout;
/// entries for edges leaving the cube are 0.
struct ConductanceField {
  CubeDomain domain;
  PercolationLaw law;
  std::uint64_t seed = 0;
  std::array<std::vector<double>, kMaxDim> values;

  ConductanceField() = default;
  ConductanceField(const CubeDomain& dom, double fill) : domain(dom) {
    for (int j = 0; j < dom.dim(); ++j) {
      values[j].assign(dom.size(), 0.0);
      for (std::size_t x = 0; x < dom.size(); ++x)
        if (dom.has_neighbor(x, j, +1)) values[j][x] = fill;
    }
  }

  double operator()(std::size_t x, int axis) const { return values[axis][x]; }

  /// a(x, y) for neighbours x ~ y.
  double between(std::size_t x, std::size_t y) const {
    for (int j = 0; j < domain.dim(); ++j) {
      const auto s = static_cast<std::size_t>(domain.stride(j));
      if (y == x + s && domain.has_neighbor(x, j, +1)) return values[j][x];
      if (x == y + s && domain.has_neighbor(y, j, +1)) return values[j][y];
    }
    return 0.0;
  }

  void set(std::size_t x, int axis, double v) {
    if (!domain.has_neighbor(x, axis, +1)) throw InvalidArgument("edge leaves the domain");
    values[axis][x] = v;
  }

  /// Whether any open edge touches x.
  bool has_open_edge(std::size_t x) const {
    for (int j = 0; j < domain.dim(); ++j) {
      if (values[j][x] > 0.0) return true;
      if (domain.has_neighbor(x, j, -1) && values[j][x - static_cast<std::size_t>(domain.stride(j))] > 0.0)
        return true;
    }
    return false;
  }

  std::size_t edge_count() const {
    std::size_t n = 0;
    for (int j = 0; j < domain.dim(); ++j)
      for (std::size_t x = 0; x < domain.size(); ++x) n += domain.has_neighbor(x, j, +1);
    return n;
  }

  std::size_t open_edge_count() const {
    std::size_t n = 0;
    for (int j = 0; j < domain.dim(); ++j)
      for (double v : values[j]) n += v > 0.0;
    return n;
  }
};

/// Draws every edge independently from `law`. The value on edge (x, x + e_j) is
/// a pure function of (seed, x, j) in global coordinates, so a sub-cube sampled
/// with the same seed agrees with its parent cube.
inline ConductanceField sample(const CubeDomain& dom, const PercolationLaw& law, std::uint64_t seed) {
  law.validate();
  ConductanceField a(dom, 0.0);
  a.law = law;
  a.seed = seed;
  for (int j = 0; j < dom.dim(); ++j) {
    auto& out = a.values[j];
    parallel_for(0, dom.size(), [&](std::size_t x) {
      if (!dom.has_neighbor(x, j, +1)) return;
      const Point g = dom.coords(x);
      if (detail::edge_uniform(seed, g, j, 0) >= law.p_open) return;
      if (law.kind == LawKind::bernoulli) {
        out[x] = 1.0;
      } else {
        const double lo = 1.0 / law.lambda_ell;
        out[x] = lo + (1.0 - lo) * detail::edge_uniform(seed, g, j, 1);
      }
    });
  }
  return a;
}

enum class ClusterChoice {
  maximal,
  /// The finite-volume stand-in for the infinite cluster: C_* of the full cube.
  infinite_proxy
};

/// a_{C,m}(x, y) = a(x, y) when both endpoints lie in C_*, else 0.
inline ConductanceField mask_to_cluster(const ConductanceField& a, const ClusterLabels& labels,
                                        ClusterChoice = ClusterChoice::maximal) {
  require_same_domain(a.domain, labels.domain);
  ConductanceField out = a;
  const CubeDomain& dom = a.domain;
  for (int j = 0; j < dom.dim(); ++j) {
    const auto s = static_cast<std::size_t>(dom.stride(j));
    for (std::size_t x = 0; x < dom.size(); ++x)
      if (dom.has_neighbor(x, j, +1) && !(labels.in_maximal(x) && labels.in_maximal(x + s))) out.values[j][x] = 0.0;
  }
  return out;
}

/// lambda on C_*, 0 elsewhere.
inline ScalarField field_lambda(const ClusterLabels& labels, double lambda) {
  ScalarField f(labels.domain);
  for (std::size_t x = 0; x < f.size(); ++x) f[x] = labels.in_maximal(x) ? lambda : 0.0;
  return f;
}

/// Boundary-layer width: log^{1/2}(1 + 1/lambda) in d = 2 and 1 in d = 3.
inline double boundary_layer_width(double lambda, int dim) {
  return dim == 2 ? std::sqrt(std::log1p(1.0 / lambda)) : 1.0;
}

/// The layer width rounded up to a lattice length >= 1.
inline std::int64_t boundary_layer_cells(double lambda, int dim) {
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(boundary_layer_width(lambda, dim) - 1e-12)));
}

}  // namespace phom
