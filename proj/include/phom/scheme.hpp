#pragma once

// The homogenization-preconditioned iteration: a regularized heterogeneous
// solve, a homogenized coarse correction, and a second regularized solve, with
// a driver that records residuals and contraction ratios.

#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <tuple>
#include <vector>

#include "phom/cluster.hpp"
#include "phom/elliptic.hpp"
#include "phom/lattice.hpp"
#include "phom/percolation.hpp"

namespace phom {

/// Constants of default_lambda, fixed by a calibration sweep on d = 2 samples.
inline constexpr double kLambdaScale = 12.0;
inline constexpr double kLambdaExponentS = 6.0;

/// c m^{-2(1/s + d)}, clipped into (3^{-m}, 1/2).
inline double default_lambda(int m, int dim) {
  if (m < 2) throw InvalidArgument("default_lambda needs m >= 2");
  const double raw = kLambdaScale * std::pow(static_cast<double>(m), -2.0 * (1.0 / kLambdaExponentS + dim));
  const double lo = 1.01 * std::pow(3.0, -m), hi = 0.49;
  return std::min(hi, std::max(lo, raw));
}

/// ||grad u 1_{a != 0}|| over the edges carried by `a_cluster`.
inline double cluster_h1(const ConductanceField& a_cluster, const ScalarField& u) {
  return edge_norm_l2(gradient(u), [&](std::size_t x, int j) { return a_cluster.values[j][x] != 0.0; });
}

/// The Dirichlet problem (-div a grad) u = f on the interior of C_*, u = g on
/// the boundary; `corrector` builds the localized corrector problem for l_p.
struct SchemeProblem {
  ConductanceField a_cluster;
  ClusterLabels labels;
  ScalarField f;
  ScalarField g;
  std::optional<std::array<double, kMaxDim>> corrector_p;

  static SchemeProblem general(const ConductanceField& a, const ClusterLabels& labels, const ScalarField& f,
                               const ScalarField& g) {
    require_same_domain(a.domain, f.domain);
    require_same_domain(a.domain, g.domain);
    return {mask_to_cluster(a, labels), labels, f, g, std::nullopt};
  }

  static SchemeProblem corrector(const ConductanceField& a, const ClusterLabels& labels,
                                 const std::array<double, kMaxDim>& p) {
    SchemeProblem s{mask_to_cluster(a, labels), labels, ScalarField(a.domain), ScalarField(a.domain), p};
    s.f = divergence_form(s.a_cluster, linear_function(a.domain, p));
    for (auto& v : s.f.values) v = -v;
    return s;
  }

  const CubeDomain& domain() const { return a_cluster.domain; }

  /// g on the boundary, 0 inside.
  ScalarField initial_guess() const {
    ScalarField u(domain());
    for (std::size_t x = 0; x < u.size(); ++x)
      if (domain().is_boundary(x)) u[x] = g[x];
    return u;
  }
};

struct IterationConfig {
  double lambda = 0.1;
  double abar = 1.0;
  int rounds = 8;
  double cg_tol = 1e-8;
  int cg_max_iter = -1;
  double mg_tol = 1e-8;
  int mg_max_cycles = 50;
  /// Exact solution, for energy-error tracking.
  std::optional<ScalarField> reference;
};

struct IterateResult {
  ScalarField u_hat, u1, ubar, u2;
  SolveReport cg1, mg, cg2;
  bool flagged() const { return !cg1.converged || !mg.converged || !cg2.converged; }
};

struct RoundRecord {
  double res = 0.0;
  /// res_n / res_{n-1}; NaN for the first round.
  double ratio = std::numeric_limits<double>::quiet_NaN();
  /// Cluster H^1 error against the reference; NaN without one.
  double energy_error = std::numeric_limits<double>::quiet_NaN();
  int cg1_iters = 0, mg_cycles = 0, cg2_iters = 0;
  double wall_ms = 0.0;
  bool flagged = false;
};

struct IterationTrace {
  double initial_res = 0.0;
  double initial_energy_error = std::numeric_limits<double>::quiet_NaN();
  std::vector<RoundRecord> rounds;
  bool diverged = false;
  bool stopped_early = false;
  bool lambda_in_range = true;

  std::vector<double> residuals() const {
    std::vector<double> r;
    for (const auto& rr : rounds) r.push_back(rr.res);
    return r;
  }
};

class Scheme {
 public:
  Scheme(SchemeProblem problem, IterationConfig config)
      : problem_(std::move(problem)),
        config_(std::move(config)),
        lambda_field_(field_lambda(problem_.labels, config_.lambda)),
        het_(OperatorSpec::heterogeneous(problem_.a_cluster, &lambda_field_)),
        mg_(make_multigrid()) {
    const double m = problem_.domain().level();
    lambda_in_range_ = config_.lambda > std::pow(3.0, -m) && config_.lambda < 0.5;
  }

  const SchemeProblem& problem() const { return problem_; }
  const IterationConfig& config() const { return config_; }

  /// (1/|cube|) ||f + div a grad u|| on the interior of C_*.
  double residual(const ScalarField& u) const {
    const ScalarField lu = divergence_form(problem_.a_cluster, u);
    const VertexMask act = het_.active();
    double acc = 0.0;
    for (std::size_t x = 0; x < u.size(); ++x) {
      if (!act[x] || !problem_.labels.in_maximal(x)) continue;
      const double r = problem_.f[x] - lu[x];
      acc += r * r;
    }
    return std::sqrt(acc) / static_cast<double>(u.size());
  }

  IterateResult iterate_once(const ScalarField& u0) const {
    require_same_domain(problem_.domain(), u0.domain);
    const CubeDomain& dom = problem_.domain();
    const VertexMask act = het_.active();
    CgOptions cg;
    cg.tol = config_.cg_tol;
    cg.max_iter = config_.cg_max_iter;
    IterateResult out;

    // (lambda^2 - div a grad) u1 = f + div a grad u0 on C_* minus the boundary.
    const ScalarField lu0 = divergence_form(problem_.a_cluster, u0);
    ScalarField rhs1(dom);
    for (std::size_t x = 0; x < dom.size(); ++x)
      if (act[x]) rhs1[x] = problem_.f[x] - lu0[x];
    std::tie(out.u1, out.cg1) = cg_solve(het_, rhs1, cg);

    // -abar Laplacian ubar = lambda_C^2 u1 in the interior.
    ScalarField rhs2(dom);
    for (std::size_t x = 0; x < dom.size(); ++x) rhs2[x] = lambda_field_[x] * lambda_field_[x] * out.u1[x];
    std::tie(out.ubar, out.mg) = mg_.solve(rhs2);

    // (lambda^2 - div a grad) u2 = (lambda^2 - div abar grad) ubar on C_* minus the boundary.
    const ScalarField lbar = constant_laplacian(config_.abar, out.ubar);
    ScalarField rhs3(dom);
    const double l2 = config_.lambda * config_.lambda;
    for (std::size_t x = 0; x < dom.size(); ++x)
      if (act[x]) rhs3[x] = l2 * out.ubar[x] + lbar[x];
    std::tie(out.u2, out.cg2) = cg_solve(het_, rhs3, cg);

    out.u_hat = u0;
    for (std::size_t x = 0; x < dom.size(); ++x) out.u_hat[x] += out.u1[x] + out.u2[x];
    return out;
  }

  /// Repeats iterate_once, feeding each result back in. Stops once the
  /// residual drops below 1e-12; flags (but does not stop on) divergence.
  std::pair<ScalarField, IterationTrace> run(const ScalarField& u0) const {
    IterationTrace trace;
    trace.lambda_in_range = lambda_in_range_;
    trace.initial_res = residual(u0);
    if (config_.reference) trace.initial_energy_error = energy_error(u0);
    ScalarField u = u0;
    double prev = trace.initial_res;
    int growing = 0;
    for (int n = 1; n <= config_.rounds; ++n) {
      const auto t0 = std::chrono::steady_clock::now();
      IterateResult it = iterate_once(u);
      u = std::move(it.u_hat);
      RoundRecord rec;
      rec.res = residual(u);
      if (n > 1) rec.ratio = prev > 0.0 ? rec.res / prev : std::numeric_limits<double>::quiet_NaN();
      if (config_.reference) rec.energy_error = energy_error(u);
      rec.cg1_iters = it.cg1.iterations;
      rec.mg_cycles = it.mg.iterations;
      rec.cg2_iters = it.cg2.iterations;
      rec.flagged = it.flagged();
      rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
      growing = rec.res > prev ? growing + 1 : 0;
      if (growing >= 3) trace.diverged = true;
      prev = rec.res;
      trace.rounds.push_back(rec);
      if (rec.res < 1e-12) {
        trace.stopped_early = n < config_.rounds;
        break;
      }
    }
    return {u, trace};
  }

  double energy_error(const ScalarField& u) const {
    ScalarField diff = u;
    for (std::size_t x = 0; x < diff.size(); ++x) diff[x] -= (*config_.reference)[x];
    return cluster_h1(problem_.a_cluster, diff);
  }

 private:
  Multigrid make_multigrid() const {
    MultigridOptions opt;
    opt.tol = config_.mg_tol;
    opt.max_cycles = config_.mg_max_cycles;
    return Multigrid(OperatorSpec::homogenized(problem_.domain(), config_.abar), opt);
  }

  SchemeProblem problem_;
  IterationConfig config_;
  ScalarField lambda_field_;
  OperatorSpec het_;
  Multigrid mg_;
  bool lambda_in_range_ = true;
};

inline IterateResult iterate_once(const SchemeProblem& problem, const ScalarField& u0, const IterationConfig& config) {
  return Scheme(problem, config).iterate_once(u0);
}

inline std::pair<ScalarField, IterationTrace> run(const SchemeProblem& problem, const IterationConfig& config) {
  const Scheme s(problem, config);
  return s.run(problem.initial_guess());
}

/// Solution of the problem by unregularized CG to a tight tolerance (used as a
/// reference for energy errors).
inline ScalarField reference_solution(const SchemeProblem& problem, double tol = 1e-12) {
  const CubeDomain& dom = problem.domain();
  const OperatorSpec op = OperatorSpec::heterogeneous(problem.a_cluster);
  const VertexMask act = op.active();
  const ScalarField g0 = problem.initial_guess();
  const ScalarField lg = divergence_form(problem.a_cluster, g0);
  ScalarField rhs(dom);
  for (std::size_t x = 0; x < dom.size(); ++x)
    if (act[x]) rhs[x] = problem.f[x] - lg[x];
  CgOptions opt;
  opt.tol = tol;
  opt.max_iter = static_cast<int>(400 * dom.side());
  auto [u, rep] = cg_solve(op, rhs, opt);
  if (!rep.converged) throw NumericalError("reference solve did not converge");
  for (std::size_t x = 0; x < dom.size(); ++x) u[x] += g0[x];
  return u;
}

}  // namespace phom
