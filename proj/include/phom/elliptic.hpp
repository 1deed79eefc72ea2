#pragma once

// Operators (lambda^2 - div a grad) on a cube with Dirichlet boundary rows, and
// the solvers: conjugate gradient on the heterogeneous operator, a factor-3
// Galerkin multigrid for the constant-coefficient operator, and a dense direct
// solver used as a test oracle.

#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <vector>

#include "phom/errors.hpp"
#include "phom/lattice.hpp"
#include "phom/parallel.hpp"
#include "phom/percolation.hpp"

namespace phom {

enum class OperatorKind { heterogeneous, homogenized };

/// Heterogeneous: lambda_field^2 - div a grad. Homogenized: lambda_field^2 -
/// div abar grad with abar on every in-domain edge. Boundary rows are the
/// identity.
struct OperatorSpec {
  OperatorKind kind = OperatorKind::heterogeneous;
  CubeDomain domain;
  std::shared_ptr<const ConductanceField> a;
  double abar = 1.0;
  /// Empty means lambda = 0 everywhere.
  std::vector<double> lambda;

  static OperatorSpec heterogeneous(const ConductanceField& a, const ScalarField* lambda_field = nullptr) {
    OperatorSpec s;
    s.kind = OperatorKind::heterogeneous;
    s.domain = a.domain;
    s.a = std::make_shared<const ConductanceField>(a);
    if (lambda_field) {
      require_same_domain(a.domain, lambda_field->domain);
      s.lambda = lambda_field->values;
    }
    return s;
  }

  static OperatorSpec homogenized(const CubeDomain& dom, double abar, const ScalarField* lambda_field = nullptr) {
    if (!(abar > 0.0)) throw InvalidArgument("abar must be positive");
    OperatorSpec s;
    s.kind = OperatorKind::homogenized;
    s.domain = dom;
    s.abar = abar;
    if (lambda_field) {
      require_same_domain(dom, lambda_field->domain);
      s.lambda = lambda_field->values;
    }
    return s;
  }

  /// Conductance of the edge (x, x + e_axis); 0 when it leaves the domain.
  double conductance(std::size_t x, int axis) const {
    if (kind == OperatorKind::heterogeneous) return a->values[axis][x];
    return domain.has_neighbor(x, axis, +1) ? abar : 0.0;
  }

  double lambda_sq(std::size_t x) const { return lambda.empty() ? 0.0 : lambda[x] * lambda[x]; }

  /// Unknowns of the Dirichlet problem: interior vertices, restricted for the
  /// heterogeneous kind to those with an open edge or lambda > 0.
  VertexMask active() const {
    VertexMask m(domain.size(), 0);
    for (std::size_t x = 0; x < domain.size(); ++x) {
      if (domain.is_boundary(x)) continue;
      if (kind == OperatorKind::homogenized) {
        m[x] = 1;
        continue;
      }
      m[x] = lambda_sq(x) > 0.0 || a->has_open_edge(x);
    }
    return m;
  }
};

namespace detail {
/// sum over neighbours y of c(x, y) (u(x) - u(y)), with u read through `get`.
template <class Get>
double stencil_row(const OperatorSpec& s, std::size_t x, Get&& get) {
  const CubeDomain& dom = s.domain;
  const double ux = get(x);
  double acc = 0.0;
  for (int j = 0; j < dom.dim(); ++j) {
    const auto st = static_cast<std::size_t>(dom.stride(j));
    if (dom.has_neighbor(x, j, +1)) acc += s.conductance(x, j) * (ux - get(x + st));
    if (dom.has_neighbor(x, j, -1)) acc += s.conductance(x - st, j) * (ux - get(x - st));
  }
  return acc;
}
}  // namespace detail

/// (lambda^2 - div c grad) u on interior vertices; u itself on boundary rows.
inline ScalarField apply(const OperatorSpec& spec, const ScalarField& u) {
  require_same_domain(spec.domain, u.domain);
  const CubeDomain& dom = spec.domain;
  ScalarField out(dom);
  parallel_for(0, dom.size(), [&](std::size_t x) {
    if (dom.is_boundary(x)) {
      out[x] = u[x];
      return;
    }
    out[x] = spec.lambda_sq(x) * u[x] + detail::stencil_row(spec, x, [&](std::size_t i) { return u[i]; });
  });
  return out;
}

/// -div a grad u evaluated at every vertex (neighbours outside the domain are
/// dropped); no boundary-row substitution.
inline ScalarField divergence_form(const ConductanceField& a, const ScalarField& u) {
  require_same_domain(a.domain, u.domain);
  OperatorSpec s;
  s.kind = OperatorKind::heterogeneous;
  s.domain = a.domain;
  s.a = std::shared_ptr<const ConductanceField>(&a, [](const ConductanceField*) {});
  ScalarField out(a.domain);
  parallel_for(0, a.domain.size(), [&](std::size_t x) {
    out[x] = detail::stencil_row(s, x, [&](std::size_t i) { return u[i]; });
  });
  return out;
}

/// -abar Laplacian of u at every vertex, zero extension outside the domain.
inline ScalarField constant_laplacian(double abar, const ScalarField& u) {
  const CubeDomain& dom = u.domain;
  ScalarField out(dom);
  parallel_for(0, dom.size(), [&](std::size_t x) {
    double acc = 0.0;
    for (int j = 0; j < dom.dim(); ++j) {
      const auto st = static_cast<std::size_t>(dom.stride(j));
      acc += 2.0 * u[x];
      if (dom.has_neighbor(x, j, +1)) acc -= u[x + st];
      if (dom.has_neighbor(x, j, -1)) acc -= u[x - st];
    }
    out[x] = abar * acc;
  });
  return out;
}

struct SolveReport {
  int iterations = 0;
  /// ||r|| / ||rhs|| over the unknowns.
  double final_residual = 0.0;
  bool converged = false;
  double wall_time = 0.0;
  std::vector<double> residual_history;
};

struct CgOptions {
  double tol = 1e-8;
  /// Negative: 20 * 3^m.
  int max_iter = -1;
  /// Diagonal (Jacobi) preconditioning; off by default.
  bool jacobi = false;
  /// Called with the iteration number and the current iterate.
  std::function<void(int, const ScalarField&)> observer;
};

namespace detail {
inline double masked_dot(const std::vector<double>& u, const std::vector<double>& v, const std::vector<std::size_t>& idx) {
  double acc = 0.0;
  for (std::size_t i : idx) acc += u[i] * v[i];
  return acc;
}
}  // namespace detail

/// Conjugate gradient for the operator restricted to its active unknowns, with
/// zero Dirichlet data; inactive vertices of the result are 0.
inline std::pair<ScalarField, SolveReport> cg_solve(const OperatorSpec& spec, const ScalarField& rhs,
                                                    const CgOptions& opt = {}) {
  require_same_domain(spec.domain, rhs.domain);
  const auto t0 = std::chrono::steady_clock::now();
  const CubeDomain& dom = spec.domain;
  const VertexMask act = spec.active();
  std::vector<std::size_t> idx;
  for (std::size_t x = 0; x < dom.size(); ++x)
    if (act[x]) idx.push_back(x);
  const int max_iter = opt.max_iter < 0 ? static_cast<int>(20 * dom.side()) : opt.max_iter;

  ScalarField u(dom);
  SolveReport rep;
  std::vector<double> r(dom.size(), 0.0), z(dom.size(), 0.0), p(dom.size(), 0.0), q(dom.size(), 0.0),
      diag(dom.size(), 1.0);
  for (std::size_t x : idx) r[x] = rhs[x];
  if (opt.jacobi)
    for (std::size_t x : idx) {
      double d = spec.lambda_sq(x);
      for (int j = 0; j < dom.dim(); ++j) {
        d += spec.conductance(x, j);
        if (dom.has_neighbor(x, j, -1)) d += spec.conductance(x - static_cast<std::size_t>(dom.stride(j)), j);
      }
      diag[x] = d > 0.0 ? d : 1.0;
    }
  const auto matvec = [&](const std::vector<double>& in, std::vector<double>& out) {
    parallel_for(0, idx.size(), [&](std::size_t k) {
      const std::size_t x = idx[k];
      out[x] = spec.lambda_sq(x) * in[x] +
               detail::stencil_row(spec, x, [&](std::size_t i) { return act[i] ? in[i] : 0.0; });
    });
  };

  const double bnorm = std::sqrt(detail::masked_dot(r, r, idx));
  const auto finish = [&] {
    rep.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return std::make_pair(u, rep);
  };
  if (bnorm == 0.0) {
    rep.converged = true;
    return finish();
  }
  for (std::size_t x : idx) z[x] = r[x] / diag[x];
  p = z;
  double rz = detail::masked_dot(r, z, idx);
  double rel = 1.0;
  rep.residual_history.push_back(rel);
  for (int it = 1; it <= max_iter; ++it) {
    matvec(p, q);
    const double pq = detail::masked_dot(p, q, idx);
    if (!(pq > 0.0)) {
      if (pq == 0.0 && rz == 0.0) break;
      throw NumericalError("conjugate gradient breakdown: operator not positive definite on the search space");
    }
    const double alpha = rz / pq;
    for (std::size_t x : idx) {
      u[x] += alpha * p[x];
      r[x] -= alpha * q[x];
    }
    rep.iterations = it;
    rel = std::sqrt(detail::masked_dot(r, r, idx)) / bnorm;
    rep.residual_history.push_back(rel);
    if (opt.observer) opt.observer(it, u);
    if (rel <= opt.tol) break;
    for (std::size_t x : idx) z[x] = r[x] / diag[x];
    const double rz_new = detail::masked_dot(r, z, idx);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t x : idx) p[x] = z[x] + beta * p[x];
  }
  rep.final_residual = rel;
  rep.converged = rel <= opt.tol;
  return finish();
}

// -- Sparse matrices and multigrid --------------------------------------------

struct CsrMatrix {
  std::size_t rows = 0, cols = 0;
  std::vector<std::size_t> row_ptr{0};
  std::vector<std::size_t> col;
  std::vector<double> val;

  void multiply(const std::vector<double>& x, std::vector<double>& y) const {
    y.assign(rows, 0.0);
    parallel_for(0, rows, [&](std::size_t i) {
      double acc = 0.0;
      for (std::size_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k) acc += val[k] * x[col[k]];
      y[i] = acc;
    });
  }

  std::vector<double> diagonal() const {
    std::vector<double> d(rows, 0.0);
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k)
        if (col[k] == i) d[i] += val[k];
    return d;
  }

  CsrMatrix transpose() const {
    CsrMatrix t;
    t.rows = cols;
    t.cols = rows;
    std::vector<std::size_t> count(cols + 1, 0);
    for (std::size_t c : col) ++count[c + 1];
    for (std::size_t i = 0; i < cols; ++i) count[i + 1] += count[i];
    t.row_ptr = count;
    t.col.resize(col.size());
    t.val.resize(val.size());
    std::vector<std::size_t> fill(t.row_ptr.begin(), t.row_ptr.end() - 1);
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k) {
        const std::size_t pos = fill[col[k]]++;
        t.col[pos] = i;
        t.val[pos] = val[k];
      }
    return t;
  }
};

inline CsrMatrix multiply(const CsrMatrix& a, const CsrMatrix& b) {
  if (a.cols != b.rows) throw InvalidArgument("sparse product shape mismatch");
  CsrMatrix c;
  c.rows = a.rows;
  c.cols = b.cols;
  std::map<std::size_t, double> acc;
  for (std::size_t i = 0; i < a.rows; ++i) {
    acc.clear();
    for (std::size_t k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k)
      for (std::size_t l = b.row_ptr[a.col[k]]; l < b.row_ptr[a.col[k] + 1]; ++l) acc[b.col[l]] += a.val[k] * b.val[l];
    for (const auto& [j, v] : acc) {
      if (v == 0.0) continue;
      c.col.push_back(j);
      c.val.push_back(v);
    }
    c.row_ptr.push_back(c.col.size());
  }
  return c;
}

namespace detail {
/// In-place LU with partial pivoting on a dense row-major matrix; throws when
/// a pivot vanishes.
struct DenseLu {
  std::size_t n = 0;
  std::vector<double> lu;
  std::vector<std::size_t> perm;

  explicit DenseLu(std::size_t size = 0, std::vector<double> m = {}) : n(size), lu(std::move(m)), perm(size) {
    if (n == 0) return;
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    double scale = 0.0;
    for (double v : lu) scale = std::max(scale, std::abs(v));
    for (std::size_t k = 0; k < n; ++k) {
      std::size_t piv = k;
      for (std::size_t i = k + 1; i < n; ++i)
        if (std::abs(lu[i * n + k]) > std::abs(lu[piv * n + k])) piv = i;
      if (!(std::abs(lu[piv * n + k]) > 1e-13 * scale)) throw NumericalError("singular matrix in direct solve");
      if (piv != k) {
        for (std::size_t j = 0; j < n; ++j) std::swap(lu[k * n + j], lu[piv * n + j]);
        std::swap(perm[k], perm[piv]);
      }
      for (std::size_t i = k + 1; i < n; ++i) {
        const double f = lu[i * n + k] / lu[k * n + k];
        lu[i * n + k] = f;
        if (f == 0.0) continue;
        for (std::size_t j = k + 1; j < n; ++j) lu[i * n + j] -= f * lu[k * n + j];
      }
    }
  }

  std::vector<double> solve(const std::vector<double>& b) const {
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) {
      double acc = b[perm[i]];
      for (std::size_t j = 0; j < i; ++j) acc -= lu[i * n + j] * x[j];
      x[i] = acc;
    }
    for (std::size_t i = n; i-- > 0;) {
      double acc = x[i];
      for (std::size_t j = i + 1; j < n; ++j) acc -= lu[i * n + j] * x[j];
      x[i] = acc / lu[i * n + i];
    }
    return x;
  }
};

/// Position (in finest-grid units) of node i of a grid coarsened `level` times
/// by 3: coarse nodes sit at the centres of triadic blocks.
inline double node_position(std::int64_t i, int level) { return (static_cast<double>(pow3(level)) * (2 * i + 1) - 1) / 2.0; }

/// 1-D linear interpolation weights onto fine node `fine` (grid `level`) from
/// the n coarse nodes of grid level + 1. The Dirichlet zeros at positions 0 and
/// side - 1 act as extra interpolation nodes and carry no weight.
inline std::vector<std::pair<std::int64_t, double>> interp_weights(std::int64_t fine, int level, std::int64_t coarse_n,
                                                                   std::int64_t side) {
  const double x = node_position(fine, level);
  std::int64_t k = fine / 3;
  const double ck = node_position(k, level + 1);
  if (x == ck) return {{k, 1.0}};
  std::vector<std::pair<std::int64_t, double>> w;
  const std::int64_t other = x < ck ? k - 1 : k + 1;
  double co = 0.0;
  if (other < 0) co = 0.0;
  else if (other >= coarse_n) co = static_cast<double>(side - 1);
  else co = node_position(other, level + 1);
  const double t = (x - co) / (ck - co);
  w.emplace_back(k, t);
  if (other >= 0 && other < coarse_n) w.emplace_back(other, 1.0 - t);
  return w;
}
}  // namespace detail

struct MultigridOptions {
  double tol = 1e-8;
  int max_cycles = 50;
  int pre_sweeps = 3;
  int post_sweeps = 3;
  /// Damping for the Jacobi smoother.
  double omega = 0.8;
  /// Symmetric Gauss-Seidel (forward before, backward after the coarse
  /// correction) or damped Jacobi.
  bool gauss_seidel = true;
};

/// V-cycle multigrid for the homogenized operator on the interior unknowns.
/// Levels coarsen by 3 per axis down to 3^d nodes (each coarse node at the
/// centre of a triadic block), prolongation is multilinear interpolation in
/// node positions with the boundary zeros as extra nodes, restriction is its
/// transpose, coarse operators are Galerkin products, and the smoother is
/// symmetric Gauss-Seidel by default.
class Multigrid {
 public:
  explicit Multigrid(const OperatorSpec& spec, MultigridOptions opt = {}) : spec_(spec), opt_(opt) {
    if (spec.kind != OperatorKind::homogenized) throw InvalidArgument("multigrid needs the homogenized operator");
    const CubeDomain& dom = spec.domain;
    const int d = dom.dim();
    const std::int64_t n = dom.side();
    for (std::size_t x = 0; x < dom.size(); ++x)
      if (!dom.is_boundary(x)) {
        unknowns_.push_back(x);
      }
    std::vector<std::size_t> local(dom.size(), SIZE_MAX);
    for (std::size_t k = 0; k < unknowns_.size(); ++k) local[unknowns_[k]] = k;

    CsrMatrix a0;
    a0.rows = a0.cols = unknowns_.size();
    for (std::size_t k = 0; k < unknowns_.size(); ++k) {
      const std::size_t x = unknowns_[k];
      std::map<std::size_t, double> row;
      double diag = spec.lambda_sq(x);
      for (int j = 0; j < d; ++j) {
        const auto st = static_cast<std::size_t>(dom.stride(j));
        const double up = spec.conductance(x, j), dn = spec.conductance(x - st, j);
        diag += up + dn;
        if (local[x + st] != SIZE_MAX) row[local[x + st]] -= up;
        if (local[x - st] != SIZE_MAX) row[local[x - st]] -= dn;
      }
      row[k] += diag;
      for (const auto& [c, v] : row) {
        a0.col.push_back(c);
        a0.val.push_back(v);
      }
      a0.row_ptr.push_back(a0.col.size());
    }
    levels_.push_back({a0, a0.diagonal(), {}, {}});

    // Prolongations: level l grid has side n / 3^l (level 0 restricted to the
    // interior unknowns).
    std::int64_t side = n;
    int lev = 0;
    while (side > 3) {
      const std::int64_t cs = side / 3;
      std::size_t csize = 1;
      for (int j = 0; j < d; ++j) csize *= static_cast<std::size_t>(cs);
      CsrMatrix p;
      p.cols = csize;
      const bool first = levels_.size() == 1;
      std::size_t fsize = 1;
      for (int j = 0; j < d; ++j) fsize *= static_cast<std::size_t>(side);
      for (std::size_t f = 0; f < fsize; ++f) {
        Point fc{};
        auto rest = static_cast<std::int64_t>(f);
        bool interior = true;
        for (int j = 0; j < d; ++j) {
          fc[j] = rest % side;
          rest /= side;
          interior = interior && fc[j] > 0 && fc[j] < side - 1;
        }
        if (first && !interior) continue;
        std::map<std::size_t, double> row;
        const auto wx = detail::interp_weights(fc[0], lev, cs, n);
        const auto wy = detail::interp_weights(fc[1], lev, cs, n);
        const auto wz = d == 3 ? detail::interp_weights(fc[2], lev, cs, n)
                               : std::vector<std::pair<std::int64_t, double>>{{0, 1.0}};
        for (const auto& [ix, vx] : wx)
          for (const auto& [iy, vy] : wy)
            for (const auto& [iz, vz] : wz)
              row[static_cast<std::size_t>(ix + cs * iy + cs * cs * iz)] += vx * vy * vz;
        for (const auto& [c, v] : row) {
          p.col.push_back(c);
          p.val.push_back(v);
        }
        p.row_ptr.push_back(p.col.size());
      }
      p.rows = p.row_ptr.size() - 1;
      const CsrMatrix pt = p.transpose();
      CsrMatrix ac = multiply(pt, multiply(levels_.back().a, p));
      levels_.back().p = p;
      levels_.back().pt = pt;
      levels_.push_back({ac, ac.diagonal(), {}, {}});
      side = cs;
      ++lev;
    }
    const CsrMatrix& ac = levels_.back().a;
    std::vector<double> dense(ac.rows * ac.rows, 0.0);
    for (std::size_t i = 0; i < ac.rows; ++i)
      for (std::size_t k = ac.row_ptr[i]; k < ac.row_ptr[i + 1]; ++k) dense[i * ac.rows + ac.col[k]] += ac.val[k];
    coarse_ = detail::DenseLu(ac.rows, dense);
  }

  std::size_t level_count() const { return levels_.size(); }
  const MultigridOptions& options() const { return opt_; }

  /// Solves with zero Dirichlet data; rhs is read on interior vertices only.
  std::pair<ScalarField, SolveReport> solve(const ScalarField& rhs) const {
    require_same_domain(spec_.domain, rhs.domain);
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<double> b(unknowns_.size()), x(unknowns_.size(), 0.0), r;
    for (std::size_t k = 0; k < unknowns_.size(); ++k) b[k] = rhs[unknowns_[k]];
    SolveReport rep;
    const double bnorm = norm(b);
    double rel = 0.0;
    if (bnorm > 0.0) {
      rel = 1.0;
      rep.residual_history.push_back(rel);
      for (int c = 1; c <= opt_.max_cycles; ++c) {
        vcycle(0, b, x);
        rep.iterations = c;
        residual(0, b, x, r);
        rel = norm(r) / bnorm;
        rep.residual_history.push_back(rel);
        if (rel <= opt_.tol) break;
      }
    }
    rep.final_residual = rel;
    rep.converged = rel <= opt_.tol;
    ScalarField out(spec_.domain);
    for (std::size_t k = 0; k < unknowns_.size(); ++k) out[unknowns_[k]] = x[k];
    rep.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {out, rep};
  }

 private:
  struct Level {
    CsrMatrix a;
    std::vector<double> diag;
    CsrMatrix p, pt;
  };

  static double norm(const std::vector<double>& v) {
    double acc = 0.0;
    for (double x : v) acc += x * x;
    return std::sqrt(acc);
  }

  void residual(std::size_t l, const std::vector<double>& b, const std::vector<double>& x, std::vector<double>& r) const {
    levels_[l].a.multiply(x, r);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = b[i] - r[i];
  }

  void smooth(std::size_t l, const std::vector<double>& b, std::vector<double>& x, int sweeps, bool forward) const {
    const auto& diag = levels_[l].diag;
    if (opt_.gauss_seidel) {
      const CsrMatrix& a = levels_[l].a;
      const std::size_t n = x.size();
      for (int s = 0; s < sweeps; ++s)
        for (std::size_t k = 0; k < n; ++k) {
          const std::size_t i = forward ? k : n - 1 - k;
          double acc = b[i];
          for (std::size_t q = a.row_ptr[i]; q < a.row_ptr[i + 1]; ++q)
            if (a.col[q] != i) acc -= a.val[q] * x[a.col[q]];
          x[i] = acc / diag[i];
        }
      return;
    }
    std::vector<double> r;
    for (int s = 0; s < sweeps; ++s) {
      residual(l, b, x, r);
      for (std::size_t i = 0; i < x.size(); ++i) x[i] += opt_.omega * r[i] / diag[i];
    }
  }

  void vcycle(std::size_t l, const std::vector<double>& b, std::vector<double>& x) const {
    if (l + 1 == levels_.size()) {
      x = coarse_.solve(b);
      return;
    }
    smooth(l, b, x, opt_.pre_sweeps, true);
    std::vector<double> r, rc, ec(levels_[l + 1].a.rows, 0.0), e;
    residual(l, b, x, r);
    levels_[l].pt.multiply(r, rc);
    vcycle(l + 1, rc, ec);
    levels_[l].p.multiply(ec, e);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += e[i];
    smooth(l, b, x, opt_.post_sweeps, false);
  }

  OperatorSpec spec_;
  MultigridOptions opt_;
  std::vector<std::size_t> unknowns_;
  std::vector<Level> levels_;
  detail::DenseLu coarse_;
};

/// Solves -abar Laplacian u = rhs in the interior with zero Dirichlet data.
inline std::pair<ScalarField, SolveReport> multigrid_poisson(double abar, const ScalarField& rhs, double tol = 1e-8,
                                                             int max_cycles = 50) {
  MultigridOptions opt;
  opt.tol = tol;
  opt.max_cycles = max_cycles;
  return Multigrid(OperatorSpec::homogenized(rhs.domain, abar), opt).solve(rhs);
}

/// Dense assembly on the active unknowns (interior for the homogenized kind)
/// and pivoted elimination. Test oracle; at most 10^4 vertices.
inline ScalarField dense_direct(const OperatorSpec& spec, const ScalarField& rhs) {
  require_same_domain(spec.domain, rhs.domain);
  const CubeDomain& dom = spec.domain;
  if (dom.size() > 10000) throw InvalidArgument("dense_direct is limited to 10^4 vertices");
  const VertexMask act = spec.active();
  std::vector<std::size_t> idx, local(dom.size(), SIZE_MAX);
  for (std::size_t x = 0; x < dom.size(); ++x)
    if (act[x]) {
      local[x] = idx.size();
      idx.push_back(x);
    }
  const std::size_t n = idx.size();
  ScalarField out(dom);
  if (n == 0) return out;
  std::vector<double> m(n * n, 0.0), b(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t x = idx[k];
    b[k] = rhs[x];
    m[k * n + k] += spec.lambda_sq(x);
    for (int j = 0; j < dom.dim(); ++j) {
      const auto st = static_cast<std::size_t>(dom.stride(j));
      for (int dir = -1; dir <= 1; dir += 2) {
        if (!dom.has_neighbor(x, j, dir)) continue;
        const std::size_t y = dir > 0 ? x + st : x - st;
        const double c = spec.conductance(dir > 0 ? x : y, j);
        m[k * n + k] += c;
        if (local[y] != SIZE_MAX) m[k * n + local[y]] -= c;
      }
    }
  }
  const std::vector<double> sol = detail::DenseLu(n, m).solve(b);
  for (std::size_t k = 0; k < n; ++k) out[idx[k]] = sol[k];
  return out;
}

}  // namespace phom
