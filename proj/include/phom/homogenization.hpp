#pragma once

// Effective conductance, localized correctors, the modified corrector and
// two-scale expansion, and the centered-flux diagnostics (spatial averages and
// truncated flux-corrector gradients).

#include <array>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "phom/cluster.hpp"
#include "phom/elliptic.hpp"
#include "phom/lattice.hpp"
#include "phom/percolation.hpp"

namespace phom {

/// Solution of -div a grad (phi + l_p) = 0 on the interior of the cluster
/// carried by `a_cluster`, phi = 0 on the boundary and off the cluster.
inline std::pair<ScalarField, SolveReport> localized_corrector(const ConductanceField& a_cluster,
                                                               const std::array<double, kMaxDim>& p, double tol = 1e-10) {
  const CubeDomain& dom = a_cluster.domain;
  const ScalarField lp = linear_function(dom, p);
  ScalarField rhs = divergence_form(a_cluster, lp);
  for (auto& v : rhs.values) v = -v;
  CgOptions opt;
  opt.tol = tol;
  opt.max_iter = static_cast<int>(200 * dom.side());
  auto [phi, rep] = cg_solve(OperatorSpec::heterogeneous(a_cluster), rhs, opt);
  if (!rep.converged) throw NumericalError("corrector solve did not converge");
  return {phi, rep};
}

/// <grad v, a grad v> summed over edges, each unoriented edge once.
inline double edge_energy(const ConductanceField& a, const ScalarField& v) {
  const EdgeField g = gradient(v);
  double acc = 0.0;
  for (int j = 0; j < a.domain.dim(); ++j)
    for (std::size_t x = 0; x < a.domain.size(); ++x) acc += a.values[j][x] * g.dir[j][x] * g.dir[j][x];
  return acc;
}

/// nu(cube, p) = min over v in l_p + C_0 of (1/2)|cube|^{-1} <grad v, a_C grad v>,
/// with a_C the conductance restricted to the maximal cluster; other
/// components carry no energy.
inline double dirichlet_energy(const ConductanceField& a, const ClusterLabels& labels,
                               const std::array<double, kMaxDim>& p, double tol = 1e-10) {
  if (labels.maximal_id == kNoCluster) throw InvalidArgument("empty cluster");
  const ConductanceField ac = mask_to_cluster(a, labels);
  const ScalarField phi = localized_corrector(ac, p, tol).first;
  ScalarField v = linear_function(a.domain, p);
  for (std::size_t x = 0; x < v.size(); ++x) v[x] += phi[x];
  return 0.5 * edge_energy(ac, v) / static_cast<double>(a.domain.size());
}

/// |cube|^{-1} sum_x a_C(x, x + e_k) (D_k phi_p(x) + p_k): the k-th component
/// of the finite-volume mean flux.
inline double mean_flux(const ConductanceField& a_cluster, const ScalarField& phi, const std::array<double, kMaxDim>& p,
                        int k) {
  const ScalarField dk = finite_difference(phi, k);
  double acc = 0.0;
  for (std::size_t x = 0; x < phi.size(); ++x) acc += a_cluster.values[k][x] * (dk[x] + p[k]);
  return acc / static_cast<double>(phi.size());
}

struct EffectiveTensor {
  double abar = 0.0;
  double stderr_ = 0.0;
  /// Energy estimate 2 nu(cube, e_k) per direction.
  std::array<double, kMaxDim> energy{};
  /// Mean-flux estimate per direction on the same samples.
  std::array<double, kMaxDim> flux{};
  double abar_flux = 0.0;
  double isotropy_gap = 0.0;
  int dim = 2;
  int m_used = 0;
  int samples_used = 0;
  std::vector<std::uint64_t> seeds_used;
  /// Per used sample, per direction.
  std::vector<std::array<double, kMaxDim>> sample_energy, sample_flux;
};

/// Monte-Carlo estimate of abar = 2 nu averaged over seeds and directions.
/// Samples whose cube has no crossing cluster are skipped with a warning.
inline EffectiveTensor effective_conductance(const PercolationLaw& law, int dim, int m,
                                             const std::vector<std::uint64_t>& seeds, double tol = 1e-10,
                                             std::ostream* warn = &std::cerr) {
  if (m < 1) throw InvalidArgument("m must be >= 1");
  if (seeds.empty()) throw InvalidArgument("at least one sample is required");
  const CubeDomain dom(dim, m);
  EffectiveTensor out;
  out.dim = dim;
  out.m_used = m;
  std::vector<double> per_sample;
  for (std::uint64_t seed : seeds) {
    const ConductanceField a = sample(dom, law, seed);
    const ClusterLabels labels = union_find_clusters(a);
    if (!labels.maximal_is_crossing) {
      if (warn) *warn << "warning: seed " << seed << " has no crossing cluster; skipped\n";
      continue;
    }
    const ConductanceField ac = mask_to_cluster(a, labels);
    std::array<double, kMaxDim> en{}, fl{};
    double mean = 0.0;
    for (int k = 0; k < dim; ++k) {
      const auto p = unit_vector(k);
      const ScalarField phi = localized_corrector(ac, p, tol).first;
      ScalarField v = linear_function(dom, p);
      for (std::size_t x = 0; x < v.size(); ++x) v[x] += phi[x];
      en[k] = edge_energy(ac, v) / static_cast<double>(dom.size());
      fl[k] = mean_flux(ac, phi, p, k);
      mean += en[k] / dim;
    }
    per_sample.push_back(mean);
    out.sample_energy.push_back(en);
    out.sample_flux.push_back(fl);
    out.seeds_used.push_back(seed);
  }
  const auto n = static_cast<int>(per_sample.size());
  if (n == 0) throw InvalidArgument("no usable samples (subcritical-looking)");
  out.samples_used = n;
  for (int s = 0; s < n; ++s) {
    for (int k = 0; k < dim; ++k) {
      out.energy[k] += out.sample_energy[s][k] / n;
      out.flux[k] += out.sample_flux[s][k] / n;
    }
    out.abar += per_sample[s] / n;
  }
  for (int k = 0; k < dim; ++k) out.abar_flux += out.flux[k] / dim;
  if (n > 1) {
    double var = 0.0;
    for (double v : per_sample) var += (v - out.abar) * (v - out.abar);
    out.stderr_ = std::sqrt(var / (n - 1) / n);
  }
  out.isotropy_gap = std::abs(out.energy[0] - out.energy[1]);
  return out;
}

// -- Modified corrector and two-scale expansion --------------------------------

/// Discrete mollifier eta: weight 1/2 at the vertex and 1/(4d) at each of its
/// 2d neighbours (zero extension).
inline ScalarField eta_mollify(const ScalarField& u) {
  const CubeDomain& dom = u.domain;
  const double w = 1.0 / (4.0 * dom.dim());
  ScalarField out(dom);
  parallel_for(0, dom.size(), [&](std::size_t x) {
    double acc = 0.5 * u[x];
    for (int j = 0; j < dom.dim(); ++j) {
      const auto st = static_cast<std::size_t>(dom.stride(j));
      if (dom.has_neighbor(x, j, +1)) acc += w * u[x + st];
      if (dom.has_neighbor(x, j, -1)) acc += w * u[x - st];
    }
    out[x] = acc;
  });
  return out;
}

/// [phi]^eta_P * Phi_{1/lambda}: boundary-zero coarsening, eta, then the heat
/// kernel of scale 1/lambda.
inline ScalarField mollified_coarsening(const ScalarField& phi, const Partition& partition, double lambda) {
  if (!(lambda > 0.0)) throw InvalidArgument("lambda must be positive");
  return heat_kernel_convolve(eta_mollify(coarsen(phi, partition, CoarsenVariant::boundary_zero)), 1.0 / lambda);
}

/// phi^(lambda) = phi - [phi]^eta_P * Phi_{1/lambda}.
inline ScalarField modified_corrector(const ScalarField& phi, const Partition& partition, double lambda) {
  const ScalarField moll = mollified_coarsening(phi, partition, lambda);
  ScalarField out = phi;
  for (std::size_t x = 0; x < out.size(); ++x) out[x] -= moll[x];
  return out;
}

/// Upsilon = min(1, max(0, (dist(x, boundary) - l) / l)), l = boundary_layer_cells.
inline ScalarField cutoff(const CubeDomain& dom, double lambda) {
  const auto ell = static_cast<double>(boundary_layer_cells(lambda, dom.dim()));
  ScalarField out(dom);
  for (std::size_t x = 0; x < dom.size(); ++x) {
    const auto dist = static_cast<double>(dom.dist_to_boundary(x));
    out[x] = std::min(1.0, std::max(0.0, (dist - ell) / ell));
  }
  return out;
}

/// Whether the cutoff's transition layer reaches the centre of the cube.
inline bool cutoff_swallows_domain(const CubeDomain& dom, double lambda) {
  return 2.0 * static_cast<double>(boundary_layer_cells(lambda, dom.dim())) >= static_cast<double>(dom.side()) / 2.0;
}

struct CorrectorSet {
  std::array<ScalarField, kMaxDim> phi;
  std::array<ScalarField, kMaxDim> modified;
  double lambda = 0.0;
  std::int64_t ell = 1;
  std::uint64_t seed = 0;
  int dim = 2;
};

inline CorrectorSet build_correctors(const ConductanceField& a, const ClusterLabels& labels, const Partition& partition,
                                     double lambda, double tol = 1e-10) {
  const ConductanceField ac = mask_to_cluster(a, labels);
  CorrectorSet set;
  set.lambda = lambda;
  set.ell = boundary_layer_cells(lambda, a.domain.dim());
  set.seed = a.seed;
  set.dim = a.domain.dim();
  for (int k = 0; k < set.dim; ++k) {
    set.phi[k] = localized_corrector(ac, unit_vector(k), tol).first;
    set.modified[k] = modified_corrector(set.phi[k], partition, lambda);
  }
  return set;
}

/// w = vbar + sum_k (Upsilon D_k vbar) phi^(lambda)_k.
inline ScalarField two_scale_expansion(const ScalarField& vbar, const CorrectorSet& set, const ScalarField& upsilon) {
  require_same_domain(vbar.domain, upsilon.domain);
  ScalarField w = vbar;
  for (int k = 0; k < set.dim; ++k) {
    require_same_domain(vbar.domain, set.modified[k].domain);
    const ScalarField dk = finite_difference(vbar, k);
    for (std::size_t x = 0; x < w.size(); ++x) w[x] += upsilon[x] * dk[x] * set.modified[k][x];
  }
  return w;
}

struct TwoScaleReport {
  /// ||grad(w - v) 1_{a != 0}|| over edges of the maximal cluster.
  double error = 0.0;
  /// ||grad vbar||_{L^2(cube)}.
  double grad_vbar = 0.0;
  /// ||Laplacian vbar||_{L^2(int cube)}.
  double lap_vbar = 0.0;
  /// ||grad vbar||^{1/2} ||Laplacian vbar||^{1/2}.
  double mixed = 0.0;
  /// 3^{-m/2} l^{-1/2} + mu.
  double boundary_factor = 0.0;
};

inline TwoScaleReport two_scale_error(const ScalarField& v, const ScalarField& vbar, const ScalarField& w,
                                      const ConductanceField& a, const ClusterLabels& labels, double lambda,
                                      double mu = 0.0) {
  require_same_domain(v.domain, w.domain);
  require_same_domain(v.domain, vbar.domain);
  const CubeDomain& dom = v.domain;
  ScalarField diff = w;
  for (std::size_t x = 0; x < diff.size(); ++x) diff[x] -= v[x];
  const EdgeField g = gradient(diff);
  TwoScaleReport rep;
  rep.error = edge_norm_l2(g, [&](std::size_t x, int j) {
    return a.values[j][x] != 0.0 && labels.in_maximal(x) &&
           labels.in_maximal(x + static_cast<std::size_t>(dom.stride(j)));
  });
  rep.grad_vbar = edge_norm_l2(gradient(vbar));
  const ScalarField lap = constant_laplacian(1.0, vbar);
  rep.lap_vbar = norm_l2(lap, interior_boundary(dom).first);
  rep.mixed = std::sqrt(rep.grad_vbar * rep.lap_vbar);
  rep.boundary_factor = std::pow(3.0, -0.5 * dom.level()) /
                            std::sqrt(static_cast<double>(boundary_layer_cells(lambda, dom.dim()))) +
                        mu;
  return rep;
}

// -- Centered flux --------------------------------------------------------------

/// g_p(x)_j = a_C(x, x + e_j)(D_j phi_p(x) + p_j) - abar p_j.
inline VectorField centered_flux(const ConductanceField& a, const ClusterLabels& labels, const ScalarField& phi,
                                 double abar, const std::array<double, kMaxDim>& p) {
  require_same_domain(a.domain, phi.domain);
  const ConductanceField ac = mask_to_cluster(a, labels);
  VectorField g(a.domain);
  for (int j = 0; j < a.domain.dim(); ++j) {
    const ScalarField dj = finite_difference(phi, j);
    for (std::size_t x = 0; x < phi.size(); ++x) g.comp[j][x] = ac.values[j][x] * (dj[x] + p[j]) - abar * p[j];
  }
  return g;
}

/// Average of g over the vertices in `region` (all vertices when empty).
inline std::array<double, kMaxDim> vector_average(const VectorField& g, const VertexMask& region = {}) {
  std::array<double, kMaxDim> avg{};
  std::size_t n = 0;
  for (std::size_t x = 0; x < g.domain.size(); ++x) {
    if (!region.empty() && !region[x]) continue;
    ++n;
    for (int j = 0; j < g.domain.dim(); ++j) avg[j] += g.comp[j][x];
  }
  for (auto& v : avg) v = n ? v / static_cast<double>(n) : 0.0;
  return avg;
}

/// A kernel for spatial averages: either the heat kernel of scale R or a
/// custom centred table (side 2r + 1 per axis, e_1 fastest).
struct SpatialKernel {
  double scale = 1.0;
  std::int64_t radius = 0;
  std::vector<double> table;

  static SpatialKernel heat(double R, int dim) {
    SpatialKernel k;
    k.scale = R;
    k.radius = heat_kernel_radius(R);
    const std::vector<double> prof = heat_kernel_1d(R);
    const auto w = static_cast<std::size_t>(2 * k.radius + 1);
    k.table.assign(dim == 3 ? w * w * w : w * w, 0.0);
    for (std::size_t c = 0; c < (dim == 3 ? w : 1); ++c)
      for (std::size_t b = 0; b < w; ++b)
        for (std::size_t a = 0; a < w; ++a) k.table[a + w * b + w * w * c] = prof[a] * prof[b] * (dim == 3 ? prof[c] : 1.0);
    return k;
  }

  static SpatialKernel custom(std::int64_t radius, std::vector<double> table) {
    SpatialKernel k;
    k.radius = radius;
    k.scale = static_cast<double>(radius) / 6.0;
    k.table = std::move(table);
    return k;
  }
};

/// (K * [g])(x) at each probe (index coordinates), using the lattice values of
/// the kernel. Probes must be at least the kernel radius away from the boundary.
inline std::vector<std::array<double, kMaxDim>> flux_spatial_average(const VectorField& g, const SpatialKernel& k,
                                                                     const std::vector<Point>& probes) {
  const CubeDomain& dom = g.domain;
  const int d = dom.dim();
  const std::int64_t r = k.radius;
  const std::int64_t w = 2 * r + 1;
  std::vector<std::array<double, kMaxDim>> out;
  for (const Point& c : probes) {
    for (int j = 0; j < d; ++j)
      if (c[j] - r < 0 || c[j] + r >= dom.side()) throw InvalidArgument("probe too close to the boundary");
    std::array<double, kMaxDim> acc{};
    const std::int64_t nz = d == 3 ? w : 1;
    for (std::int64_t oz = 0; oz < nz; ++oz)
      for (std::int64_t oy = 0; oy < w; ++oy)
        for (std::int64_t ox = 0; ox < w; ++ox) {
          const double kv = k.table[static_cast<std::size_t>(ox + w * oy + w * w * oz)];
          const std::size_t y = dom.index({c[0] + ox - r, c[1] + oy - r, d == 3 ? c[2] + oz - r : 0});
          for (int j = 0; j < d; ++j) acc[j] += kv * g.comp[j][y];
        }
    out.push_back(acc);
  }
  return out;
}

/// G x G probes evenly spread over the region at distance >= radius from the
/// boundary (d = 3: in the central slice).
inline std::vector<Point> probe_grid(const CubeDomain& dom, std::int64_t radius, int G) {
  const std::int64_t lo = radius, hi = dom.side() - 1 - radius;
  if (hi < lo || G < 1) throw InvalidArgument("probe region is empty");
  std::vector<std::int64_t> ticks;
  for (int i = 0; i < G; ++i)
    ticks.push_back(G == 1 ? (lo + hi) / 2 : lo + (hi - lo) * i / (G - 1));
  std::vector<Point> out;
  for (auto y : ticks)
    for (auto x : ticks) out.push_back({x, y, dom.dim() == 3 ? dom.side() / 2 : 0});
  return out;
}

/// One step of the lazy walk semigroup: stay with probability 1/2, move to each
/// neighbour with 1/(4d); mass leaving the cube is lost.
inline ScalarField lazy_walk_step(const ScalarField& f) { return eta_mollify(f); }

struct FluxCorrectorGradient {
  int dim = 2;
  /// values[(i * d + j) * d + k] = D_k S_ij.
  std::vector<ScalarField> values;
  /// H_i = (1/4d) sum_t P_t g_i, kept to evaluate D*.S.
  std::array<ScalarField, kMaxDim> potential;
  int terms = 0;
  double last_term_max = 0.0;
  bool stopped_early = false;

  const ScalarField& at(int i, int j, int k) const { return values[static_cast<std::size_t>((i * dim + j) * dim + k)]; }
};

/// Partial sums over t = 0..T_max of (1/4d)(D_k D_j P_t g_i - D_k D_i P_t g_j),
/// stopping early once a summand's max-abs falls below tol (tol <= 0: never).
inline FluxCorrectorGradient flux_corrector_gradient(const VectorField& g, int t_max, double tol = 0.0) {
  if (t_max < 1) throw InvalidArgument("T_max must be >= 1");
  const CubeDomain& dom = g.domain;
  const int d = dom.dim();
  FluxCorrectorGradient out;
  out.dim = d;
  std::array<ScalarField, kMaxDim> pt, h;
  for (int i = 0; i < d; ++i) {
    pt[i] = ScalarField(dom);
    pt[i].values = g.comp[i];
    h[i] = ScalarField(dom);
  }
  const double scale = 1.0 / (4.0 * d);
  for (int t = 0; t <= t_max; ++t) {
    for (int i = 0; i < d; ++i)
      for (std::size_t x = 0; x < dom.size(); ++x) h[i][x] += scale * pt[i][x];
    out.terms = t + 1;
    if (tol > 0.0) {
      // D_k D_j P_t g_i for the stopping test.
      std::vector<std::vector<ScalarField>> dd(d);
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) dd[i].push_back(finite_difference(pt[i], j));
      double mx = 0.0;
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
          for (int k = 0; k < d; ++k) {
            const ScalarField a = finite_difference(dd[i][j], k), b = finite_difference(dd[j][i], k);
            for (std::size_t x = 0; x < dom.size(); ++x) mx = std::max(mx, scale * std::abs(a[x] - b[x]));
          }
      out.last_term_max = mx;
      if (mx < tol) {
        out.stopped_early = true;
        break;
      }
    }
    if (t < t_max)
      for (int i = 0; i < d; ++i) pt[i] = lazy_walk_step(pt[i]);
  }
  out.values.assign(static_cast<std::size_t>(d * d * d), ScalarField(dom));
  std::vector<std::vector<ScalarField>> dh(d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) dh[i].push_back(finite_difference(h[i], j));
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k) {
        const ScalarField a = finite_difference(dh[i][j], k), b = finite_difference(dh[j][i], k);
        ScalarField& o = out.values[static_cast<std::size_t>((i * d + j) * d + k)];
        for (std::size_t x = 0; x < dom.size(); ++x) o[x] = a[x] - b[x];
      }
  for (int i = 0; i < d; ++i) out.potential[i] = std::move(h[i]);
  return out;
}

/// sum_j D*_j S_ij - g_i on `window`, relative to ||g||_{L^2(window)}, with
/// S_ij = D_j H_i - D_i H_j from the truncated potential.
inline double flux_corrector_residual(const FluxCorrectorGradient& s, const VectorField& g, const VertexMask& window) {
  const CubeDomain& dom = g.domain;
  const int d = dom.dim();
  double num = 0.0, den = 0.0;
  std::vector<ScalarField> div(static_cast<std::size_t>(d), ScalarField(dom));
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      const ScalarField a = finite_difference(s.potential[i], j), b = finite_difference(s.potential[j], i);
      ScalarField sij(dom);
      for (std::size_t x = 0; x < dom.size(); ++x) sij[x] = a[x] - b[x];
      const ScalarField dj = finite_difference_adjoint(sij, j);
      for (std::size_t x = 0; x < dom.size(); ++x) div[i][x] += dj[x];
    }
  for (int i = 0; i < d; ++i)
    for (std::size_t x = 0; x < dom.size(); ++x) {
      if (!window[x]) continue;
      const double r = div[i][x] - g.comp[i][x];
      num += r * r;
      den += g.comp[i][x] * g.comp[i][x];
    }
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

/// Central cube window of the given side.
inline VertexMask central_window(const CubeDomain& dom, std::int64_t side) {
  VertexMask w(dom.size(), 0);
  const std::int64_t lo = (dom.side() - side) / 2;
  for (std::size_t x = 0; x < dom.size(); ++x) {
    const Point ic = dom.index_coords(x);
    bool in = true;
    for (int j = 0; j < dom.dim(); ++j) in = in && ic[j] >= lo && ic[j] < lo + side;
    w[x] = in;
  }
  return w;
}

}  // namespace phom
