#pragma once

// Cube domains of Z^d (d = 2, 3), dense fields over them, and the two discrete
// calculus systems: the edge gradient / divergence pair (grad, div) and the
// finite differences D_j with their conjugates D*_j.
//
// Layout: a vertex with index coordinates (i_1, ..., i_d), 0 <= i_j < 3^m, is
// stored at i_1 + N i_2 + N^2 i_3 (e_1 fastest). Edge and vector fields hold one
// such array per direction; the entry of direction j at x is the value on the
// edge (x, x + e_j), or the j-th component at x.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "phom/errors.hpp"
#include "phom/parallel.hpp"

namespace phom {

inline constexpr int kMaxDim = 3;

/// Lattice point or index triple; unused trailing coordinates are 0.
using Point = std::array<std::int64_t, kMaxDim>;
using VertexMask = std::vector<std::uint8_t>;

inline std::int64_t pow3(int n) {
  std::int64_t r = 1;
  for (int i = 0; i < n; ++i) r *= 3;
  return r;
}

/// The cube center + (-3^m/2, 3^m/2)^d intersected with Z^d.
class CubeDomain {
 public:
  CubeDomain() = default;
  CubeDomain(int dim, int level, Point center = {}) : dim_(dim), level_(level), center_(center) {
    if (dim < 2 || dim > 3) throw InvalidArgument("dimension must be 2 or 3");
    if (level < 1 || level > 8) throw InvalidArgument("cube level must be in [1, 8]");
    side_ = pow3(level);
    size_ = 1;
    for (int j = 0; j < dim; ++j) {
      stride_[j] = static_cast<std::int64_t>(size_);
      size_ *= static_cast<std::size_t>(side_);
    }
  }

  int dim() const { return dim_; }
  int level() const { return level_; }
  std::int64_t side() const { return side_; }
  std::size_t size() const { return size_; }
  const Point& center() const { return center_; }
  std::int64_t stride(int axis) const { return stride_[axis]; }

  Point index_coords(std::size_t idx) const {
    Point ic{};
    auto rest = static_cast<std::int64_t>(idx);
    for (int j = 0; j < dim_; ++j) {
      ic[j] = rest % side_;
      rest /= side_;
    }
    return ic;
  }

  std::size_t index(const Point& ic) const {
    std::int64_t idx = 0;
    for (int j = 0; j < dim_; ++j) idx += ic[j] * stride_[j];
    return static_cast<std::size_t>(idx);
  }

  bool contains_index_coords(const Point& ic) const {
    for (int j = 0; j < dim_; ++j)
      if (ic[j] < 0 || ic[j] >= side_) return false;
    return true;
  }

  /// Global lattice coordinates of a vertex.
  Point coords(std::size_t idx) const {
    Point x = index_coords(idx);
    const std::int64_t half = (side_ - 1) / 2;
    for (int j = 0; j < dim_; ++j) x[j] += center_[j] - half;
    return x;
  }

  std::int64_t coord(std::size_t idx, int axis) const {
    return (static_cast<std::int64_t>(idx) / stride_[axis]) % side_;
  }

  /// Whether x + dir * e_axis lies in the domain (dir = +1 or -1).
  bool has_neighbor(std::size_t idx, int axis, int dir) const {
    const std::int64_t c = coord(idx, axis);
    return dir > 0 ? c + 1 < side_ : c > 0;
  }

  bool is_boundary(std::size_t idx) const {
    for (int j = 0; j < dim_; ++j) {
      const std::int64_t c = coord(idx, j);
      if (c == 0 || c == side_ - 1) return true;
    }
    return false;
  }

  /// l-infinity lattice distance to the boundary set.
  std::int64_t dist_to_boundary(std::size_t idx) const {
    std::int64_t best = side_;
    for (int j = 0; j < dim_; ++j) {
      const std::int64_t c = coord(idx, j);
      best = std::min({best, c, side_ - 1 - c});
    }
    return best;
  }

  bool operator==(const CubeDomain& o) const {
    return dim_ == o.dim_ && level_ == o.level_ && center_ == o.center_;
  }
  bool operator!=(const CubeDomain& o) const { return !(*this == o); }

  std::string describe() const {
    return "d=" + std::to_string(dim_) + " m=" + std::to_string(level_);
  }

 private:
  int dim_ = 2;
  int level_ = 1;
  Point center_{};
  std::int64_t side_ = 3;
  std::size_t size_ = 9;
  std::array<std::int64_t, kMaxDim> stride_{1, 0, 0};
};

inline void require_same_domain(const CubeDomain& a, const CubeDomain& b) {
  if (a != b) throw DomainMismatch(a.describe() + " vs " + b.describe());
}

/// A triadic cube z + box_n, z in 3^n Z^d. `base` holds index coordinates of its
/// lowest corner inside the enclosing domain (multiples of 3^n).
struct TriadicCube {
  int level = 0;
  Point base{};

  std::int64_t size() const { return pow3(level); }

  TriadicCube predecessor() const {
    TriadicCube p{level + 1, base};
    const std::int64_t s = pow3(level + 1);
    for (auto& b : p.base) b = (b / s) * s;
    return p;
  }

  bool contains(const Point& ic, int dim) const {
    const std::int64_t s = size();
    for (int j = 0; j < dim; ++j)
      if (ic[j] < base[j] || ic[j] >= base[j] + s) return false;
    return true;
  }

  bool operator==(const TriadicCube& o) const { return level == o.level && base == o.base; }
};

/// The triadic cube of level n containing the vertex with index coordinates ic.
inline TriadicCube triadic_cube_at(const Point& ic, int level) {
  TriadicCube c{level, {}};
  const std::int64_t s = pow3(level);
  for (int j = 0; j < kMaxDim; ++j) c.base[j] = (ic[j] / s) * s;
  return c;
}

// -- Fields ------------------------------------------------------------------

struct ScalarField {
  CubeDomain domain;
  std::vector<double> values;

  ScalarField() = default;
  explicit ScalarField(const CubeDomain& dom, double fill = 0.0) : domain(dom), values(dom.size(), fill) {}

  std::size_t size() const { return values.size(); }
  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }
};

/// Anti-symmetric field on oriented edges; dir[j][x] = F(x, x + e_j), and
/// F(x + e_j, x) = -F(x, x + e_j). Entries whose edge leaves the domain are 0.
struct EdgeField {
  CubeDomain domain;
  std::array<std::vector<double>, kMaxDim> dir;

  EdgeField() = default;
  explicit EdgeField(const CubeDomain& dom) : domain(dom) {
    for (int j = 0; j < dom.dim(); ++j) dir[j].assign(dom.size(), 0.0);
  }

  /// F(x, y) for neighbours x ~ y (both indices in the domain).
  double oriented(std::size_t x, std::size_t y) const {
    for (int j = 0; j < domain.dim(); ++j) {
      const auto s = static_cast<std::size_t>(domain.stride(j));
      if (y == x + s && domain.has_neighbor(x, j, +1)) return dir[j][x];
      if (x == y + s && domain.has_neighbor(y, j, +1)) return -dir[j][y];
    }
    throw InvalidArgument("vertices are not neighbours");
  }
};

/// R^d-valued field on vertices; comp[j][x] is the j-th component at x.
struct VectorField {
  CubeDomain domain;
  std::array<std::vector<double>, kMaxDim> comp;

  VectorField() = default;
  explicit VectorField(const CubeDomain& dom) : domain(dom) {
    for (int j = 0; j < dom.dim(); ++j) comp[j].assign(dom.size(), 0.0);
  }
};

/// l_p(x) = p . x in global coordinates.
inline ScalarField linear_function(const CubeDomain& dom, const std::array<double, kMaxDim>& p) {
  ScalarField u(dom);
  for (std::size_t i = 0; i < dom.size(); ++i) {
    const Point x = dom.coords(i);
    double v = 0.0;
    for (int j = 0; j < dom.dim(); ++j) v += p[j] * static_cast<double>(x[j]);
    u[i] = v;
  }
  return u;
}

inline std::array<double, kMaxDim> unit_vector(int axis) {
  std::array<double, kMaxDim> p{};
  p[axis] = 1.0;
  return p;
}

// -- Operations --------------------------------------------------------------

/// Interior (all 2d neighbours in the domain) and boundary masks.
inline std::pair<VertexMask, VertexMask> interior_boundary(const CubeDomain& dom) {
  VertexMask interior(dom.size()), boundary(dom.size());
  for (std::size_t i = 0; i < dom.size(); ++i) {
    const bool b = dom.is_boundary(i);
    boundary[i] = b;
    interior[i] = !b;
  }
  return {interior, boundary};
}

/// grad u(x, y) = u(y) - u(x) on every in-domain edge.
inline EdgeField gradient(const ScalarField& u) {
  const CubeDomain& dom = u.domain;
  EdgeField g(dom);
  for (int j = 0; j < dom.dim(); ++j) {
    const auto s = static_cast<std::size_t>(dom.stride(j));
    auto& out = g.dir[j];
    parallel_for(0, dom.size(), [&](std::size_t x) {
      out[x] = dom.has_neighbor(x, j, +1) ? u[x + s] - u[x] : 0.0;
    });
  }
  return g;
}

/// (div F)(x) = sum over in-domain neighbours y of F(x, y).
inline ScalarField divergence(const EdgeField& f) {
  const CubeDomain& dom = f.domain;
  ScalarField out(dom);
  parallel_for(0, dom.size(), [&](std::size_t x) {
    double acc = 0.0;
    for (int j = 0; j < dom.dim(); ++j) {
      const auto s = static_cast<std::size_t>(dom.stride(j));
      if (dom.has_neighbor(x, j, +1)) acc += f.dir[j][x];
      if (dom.has_neighbor(x, j, -1)) acc -= f.dir[j][x - s];
    }
    out[x] = acc;
  });
  return out;
}

/// D_j u = u(. + e_j) - u, with u extended by zero outside the domain.
inline ScalarField finite_difference(const ScalarField& u, int axis) {
  const CubeDomain& dom = u.domain;
  const auto s = static_cast<std::size_t>(dom.stride(axis));
  ScalarField out(dom);
  parallel_for(0, dom.size(), [&](std::size_t x) {
    const double fwd = dom.has_neighbor(x, axis, +1) ? u[x + s] : 0.0;
    out[x] = fwd - u[x];
  });
  return out;
}

/// D*_j u = u(. - e_j) - u, zero extension.
inline ScalarField finite_difference_adjoint(const ScalarField& u, int axis) {
  const CubeDomain& dom = u.domain;
  const auto s = static_cast<std::size_t>(dom.stride(axis));
  ScalarField out(dom);
  parallel_for(0, dom.size(), [&](std::size_t x) {
    const double bwd = dom.has_neighbor(x, axis, -1) ? u[x - s] : 0.0;
    out[x] = bwd - u[x];
  });
  return out;
}

/// Du = (D_1 u, ..., D_d u).
inline VectorField discrete_gradient(const ScalarField& u) {
  VectorField out(u.domain);
  for (int j = 0; j < u.domain.dim(); ++j) out.comp[j] = finite_difference(u, j).values;
  return out;
}

/// D* . F = sum_j D*_j F_j.
inline ScalarField divergence_adjoint(const VectorField& f) {
  const CubeDomain& dom = f.domain;
  ScalarField out(dom);
  for (int j = 0; j < dom.dim(); ++j) {
    ScalarField fj(dom);
    fj.values = f.comp[j];
    const ScalarField dj = finite_difference_adjoint(fj, j);
    for (std::size_t x = 0; x < dom.size(); ++x) out[x] += dj[x];
  }
  return out;
}

// -- Inner products and norms -----------------------------------------------
//
// Reductions run sequentially in index order so that results do not depend on
// the worker count.

/// <u, v>_V over the vertices selected by `region` (all vertices when empty).
inline double dot(const ScalarField& u, const ScalarField& v, const VertexMask& region = {}) {
  require_same_domain(u.domain, v.domain);
  double acc = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i)
    if (region.empty() || region[i]) acc += u[i] * v[i];
  return acc;
}

inline double norm_l2(const ScalarField& u, const VertexMask& region = {}) { return std::sqrt(dot(u, u, region)); }

/// ||u||_{L^p(V)} = (sum |u|^p)^{1/p}; p = infinity gives the max norm.
inline double norm_lp(const ScalarField& u, double p, const VertexMask& region = {}) {
  if (std::isinf(p)) {
    double m = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i)
      if (region.empty() || region[i]) m = std::max(m, std::abs(u[i]));
    return m;
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i)
    if (region.empty() || region[i]) acc += std::pow(std::abs(u[i]), p);
  return std::pow(acc, 1.0 / p);
}

/// Normalised norm (|V|^{-1} sum |u|^2)^{1/2}.
inline double norm_l2_avg(const ScalarField& u, const VertexMask& region = {}) {
  std::size_t count = 0;
  for (std::size_t i = 0; i < u.size(); ++i)
    if (region.empty() || region[i]) ++count;
  return count == 0 ? 0.0 : norm_l2(u, region) / std::sqrt(static_cast<double>(count));
}

/// <F, G>_V = sum over unoriented in-domain edges {x, x+e_j} accepted by
/// `keep(x, j)` of F G. Each unordered edge counts once (the 1/2-weighted sum
/// over ordered pairs).
template <class EdgePredicate>
double edge_dot(const EdgeField& f, const EdgeField& g, EdgePredicate&& keep) {
  require_same_domain(f.domain, g.domain);
  const CubeDomain& dom = f.domain;
  double acc = 0.0;
  for (int j = 0; j < dom.dim(); ++j)
    for (std::size_t x = 0; x < dom.size(); ++x)
      if (dom.has_neighbor(x, j, +1) && keep(x, j)) acc += f.dir[j][x] * g.dir[j][x];
  return acc;
}

inline double edge_dot(const EdgeField& f, const EdgeField& g) {
  return edge_dot(f, g, [](std::size_t, int) { return true; });
}

inline double edge_norm_l2(const EdgeField& f) { return std::sqrt(edge_dot(f, f)); }

template <class EdgePredicate>
double edge_norm_l2(const EdgeField& f, EdgePredicate&& keep) {
  return std::sqrt(edge_dot(f, f, std::forward<EdgePredicate>(keep)));
}

/// <F, G>_V = sum_x sum_j F_j(x) G_j(x) for vertex-based vector fields.
inline double dot(const VectorField& f, const VectorField& g, const VertexMask& region = {}) {
  require_same_domain(f.domain, g.domain);
  double acc = 0.0;
  for (std::size_t x = 0; x < f.domain.size(); ++x) {
    if (!region.empty() && !region[x]) continue;
    for (int j = 0; j < f.domain.dim(); ++j) acc += f.comp[j][x] * g.comp[j][x];
  }
  return acc;
}

inline double norm_l2(const VectorField& f, const VertexMask& region = {}) { return std::sqrt(dot(f, f, region)); }

/// ||D* D v||^2_{L^2(region)} = sum_{i,j} ||D*_i D_j v||^2.
inline double hessian_norm_sq(const ScalarField& v, const VertexMask& region = {}) {
  double acc = 0.0;
  for (int j = 0; j < v.domain.dim(); ++j) {
    const ScalarField dj = finite_difference(v, j);
    for (int i = 0; i < v.domain.dim(); ++i) {
      const ScalarField h = finite_difference_adjoint(dj, i);
      acc += dot(h, h, region);
    }
  }
  return acc;
}

/// Constant of the boundary-layer trace inequality
///   ||u 1_{dist(., boundary) <= K}||^2 <= C(d)(K + 1)(3^{-m}||u||^2 + ||u|| ||grad u||),
/// fixed by a sweep over constant, noisy, oscillating and boundary-concentrated
/// fields (largest observed ratio 3.95 in d = 2, 5.57 in d = 3).
inline double trace_constant(int dim) { return 2.0 * dim + 1.0; }

// -- Heat kernel -------------------------------------------------------------

/// Truncation radius ceil(6R) of the sampled heat kernel.
inline std::int64_t heat_kernel_radius(double scale) { return static_cast<std::int64_t>(std::ceil(6.0 * scale)); }

/// exp(-k^2 / 4R^2) on k = -r..r, r = ceil(6R), normalised to unit sum. The
/// d-dimensional kernel (4 pi R^2)^{-d/2} exp(-|x|^2 / 4R^2) truncated to the
/// box |x|_inf <= r and renormalised is the tensor product of this profile.
inline std::vector<double> heat_kernel_1d(double scale) {
  if (!(scale >= 0.5)) throw InvalidArgument("heat kernel scale must be >= 0.5");
  const std::int64_t r = heat_kernel_radius(scale);
  std::vector<double> w(static_cast<std::size_t>(2 * r + 1));
  double sum = 0.0;
  for (std::int64_t k = -r; k <= r; ++k) {
    const double v = std::exp(-static_cast<double>(k * k) / (4.0 * scale * scale));
    w[static_cast<std::size_t>(k + r)] = v;
    sum += v;
  }
  for (auto& v : w) v /= sum;
  return w;
}

/// Convolution with a separable, centred, odd-length 1-D profile applied along
/// every axis; the field is zero-extended outside the domain.
inline ScalarField convolve_separable(const ScalarField& u, const std::vector<double>& profile) {
  const CubeDomain& dom = u.domain;
  const auto r = static_cast<std::int64_t>(profile.size() / 2);
  ScalarField cur = u;
  for (int axis = 0; axis < dom.dim(); ++axis) {
    ScalarField next(dom);
    const std::int64_t s = dom.stride(axis);
    const std::int64_t n = dom.side();
    parallel_for(0, dom.size(), [&](std::size_t x) {
      const std::int64_t c = dom.coord(x, axis);
      const std::int64_t lo = std::max<std::int64_t>(-r, -c);
      const std::int64_t hi = std::min<std::int64_t>(r, n - 1 - c);
      double acc = 0.0;
      for (std::int64_t k = lo; k <= hi; ++k)
        acc += profile[static_cast<std::size_t>(k + r)] * cur[static_cast<std::size_t>(static_cast<std::int64_t>(x) + k * s)];
      next[x] = acc;
    });
    cur = std::move(next);
  }
  return cur;
}

/// u * Phi_R with Phi_R the sampled, truncated, unit-mass heat kernel.
inline ScalarField heat_kernel_convolve(const ScalarField& u, double scale) {
  return convolve_separable(u, heat_kernel_1d(scale));
}

}  // namespace phom
