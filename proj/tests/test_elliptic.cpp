#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"

using namespace phom;

namespace {

ConductanceField cluster_sample(int m, double p, std::uint64_t& seed) {
  for (;; ++seed) {
    const ConductanceField a = oracle::bernoulli(CubeDomain(2, m), p, seed);
    const ClusterLabels labels = union_find_clusters(a);
    if (labels.maximal_is_crossing) return mask_to_cluster(a, labels);
  }
}

ScalarField random_rhs(const OperatorSpec& spec, std::mt19937_64& rng) {
  ScalarField f = oracle::gaussian_field(spec.domain, rng);
  const VertexMask act = spec.active();
  for (std::size_t x = 0; x < f.size(); ++x)
    if (!act[x]) f[x] = 0.0;
  return f;
}

double energy(const OperatorSpec& spec, const ScalarField& u) {
  const EdgeField g = gradient(u);
  double e = 0.0;
  for (int j = 0; j < spec.domain.dim(); ++j)
    for (std::size_t x = 0; x < u.size(); ++x) e += spec.conductance(x, j) * g.dir[j][x] * g.dir[j][x];
  for (std::size_t x = 0; x < u.size(); ++x) e += spec.lambda_sq(x) * u[x] * u[x];
  return e;
}

}  // namespace

TEST(Operator, HandStencilOnFullLattice) {
  const CubeDomain dom(2, 1);
  const OperatorSpec spec = OperatorSpec::heterogeneous(oracle::bernoulli(dom, 1.0, 1));
  ScalarField u(dom);
  u[dom.index({1, 1, 0})] = 1.0;
  const ScalarField lu = apply(spec, u);
  EXPECT_EQ(lu[dom.index({1, 1, 0})], 4.0);
  const ScalarField lin = apply(spec, linear_function(dom, unit_vector(0)));
  EXPECT_EQ(lin[dom.index({1, 1, 0})], 0.0);
}

TEST(Operator, SymmetricAndPositive) {
  std::uint64_t seed = 0;
  for (int k = 0; k < 10; ++k, ++seed) {
    const ConductanceField a = cluster_sample(2, 0.6, seed);
    const ScalarField lf = field_lambda(union_find_clusters(a), k % 2 ? 0.1 : 0.0);
    const OperatorSpec spec = OperatorSpec::heterogeneous(a, &lf);
    const oracle::DenseSystem s = oracle::assemble(spec);
    for (std::size_t i = 0; i < s.n; ++i)
      for (std::size_t j = 0; j < s.n; ++j) EXPECT_EQ(s.a[i * s.n + j], s.a[j * s.n + i]);
    std::mt19937_64 rng(seed);
    ScalarField u = oracle::gaussian_field(a.domain, rng, true);
    const VertexMask act = spec.active();
    for (std::size_t x = 0; x < u.size(); ++x)
      if (!act[x]) u[x] = 0.0;
    const double q = dot(u, apply(spec, u), act);
    EXPECT_GE(q, 0.0);
    EXPECT_NEAR(q, energy(spec, u), 1e-10 * (1.0 + q));
  }
}

TEST(Operator, DivergenceFormMatchesAdjointOnInterior) {
  const ConductanceField a = oracle::bernoulli(CubeDomain(2, 3), 0.7, 8);
  std::mt19937_64 rng(1);
  const ScalarField u = oracle::gaussian_field(a.domain, rng);
  const ScalarField l = divergence_form(a, u);
  const EdgeField g = gradient(u);
  EdgeField ag = g;
  for (int j = 0; j < 2; ++j)
    for (std::size_t x = 0; x < u.size(); ++x) ag.dir[j][x] = a(x, j) * g.dir[j][x];
  const ScalarField d = divergence(ag);
  for (std::size_t x = 0; x < u.size(); ++x)
    if (!a.domain.is_boundary(x)) {
      EXPECT_NEAR(l[x], -d[x], 1e-12);
    }
}

TEST(Cg, RecoversKnownSolution) {
  std::uint64_t seed = 40;
  const ConductanceField a = cluster_sample(3, 0.7, seed);
  const OperatorSpec spec = OperatorSpec::heterogeneous(a);
  std::mt19937_64 rng(2);
  ScalarField v = random_rhs(spec, rng);
  const ScalarField f = apply(spec, v);
  CgOptions opt;
  opt.tol = 1e-12;
  opt.max_iter = 5000;
  const auto [u, rep] = cg_solve(spec, f, opt);
  EXPECT_TRUE(rep.converged);
  EXPECT_LE(oracle::max_abs_diff(u, v), 1e-8);
}

TEST(Cg, MatchesDenseOracle) {
  std::uint64_t seed = 100;
  std::mt19937_64 rng(3);
  for (double lambda : {0.0, 0.1})
    for (int k = 0; k < 30; ++k, ++seed) {
      const ConductanceField a = cluster_sample(2, 0.65, seed);
      const ScalarField lf = field_lambda(union_find_clusters(a), lambda);
      const OperatorSpec spec = OperatorSpec::heterogeneous(a, &lf);
      const ScalarField f = random_rhs(spec, rng);
      CgOptions opt;
      opt.tol = 1e-13;
      opt.max_iter = 2000;
      const ScalarField u = cg_solve(spec, f, opt).first;
      EXPECT_LE(oracle::max_abs_diff(u, oracle::dense_solve(spec, f)), 1e-8);
      EXPECT_LE(oracle::max_abs_diff(u, dense_direct(spec, f)), 1e-8);
    }
}

TEST(Cg, MassiveTermReducesIterations) {
  std::uint64_t seed = 7;
  const ConductanceField a = cluster_sample(4, 0.7, seed);
  const ClusterLabels labels = union_find_clusters(a);
  std::mt19937_64 rng(4);
  const OperatorSpec s0 = OperatorSpec::heterogeneous(a);
  const ScalarField f = random_rhs(s0, rng);
  const ScalarField lf = field_lambda(labels, 0.3);
  const OperatorSpec s1 = OperatorSpec::heterogeneous(a, &lf);
  CgOptions opt;
  opt.tol = 1e-10;
  opt.max_iter = 10000;
  EXPECT_LT(cg_solve(s1, f, opt).second.iterations, cg_solve(s0, f, opt).second.iterations);
}

TEST(Cg, EnergyErrorDecreasesMonotonically) {
  std::uint64_t seed = 11;
  const ConductanceField a = cluster_sample(3, 0.7, seed);
  const OperatorSpec spec = OperatorSpec::heterogeneous(a);
  std::mt19937_64 rng(5);
  const ScalarField f = random_rhs(spec, rng);
  const ScalarField exact = dense_direct(spec, f);
  std::vector<double> errs;
  CgOptions opt;
  opt.tol = 1e-10;
  opt.max_iter = 5000;
  opt.observer = [&](int, const ScalarField& u) {
    ScalarField e = u;
    for (std::size_t x = 0; x < e.size(); ++x) e[x] -= exact[x];
    errs.push_back(energy(spec, e));
  };
  cg_solve(spec, f, opt);
  ASSERT_GT(errs.size(), 5u);
  for (std::size_t k = 1; k < errs.size(); ++k) EXPECT_LE(errs[k], errs[k - 1] * (1 + 1e-9) + 1e-20);
}

TEST(Cg, ZeroRhsAndEmptySystem) {
  const ConductanceField a = oracle::bernoulli(CubeDomain(2, 2), 0.0, 1);
  const OperatorSpec spec = OperatorSpec::heterogeneous(a);
  ScalarField f(a.domain, 1.0);
  const auto [u, rep] = cg_solve(spec, f);
  EXPECT_TRUE(rep.converged);
  for (double v : u.values) EXPECT_EQ(v, 0.0);
}

TEST(Multigrid, ZeroRhsGivesZero) {
  const auto [u, rep] = multigrid_poisson(1.0, ScalarField(CubeDomain(2, 3)));
  EXPECT_TRUE(rep.converged);
  for (double v : u.values) EXPECT_EQ(v, 0.0);
}

TEST(Multigrid, ManufacturedSolutionAndRate) {
  for (int dim : {2, 3}) {
    const CubeDomain dom(dim, dim == 2 ? 4 : 3);
    const double abar = 0.37;
    ScalarField v(dom);
    const double pi = std::acos(-1.0);
    const double n = static_cast<double>(dom.side() - 1);
    for (std::size_t x = 0; x < v.size(); ++x) {
      double prod = 1.0;
      for (int j = 0; j < dim; ++j) prod *= std::sin(pi * static_cast<double>(dom.coord(x, j)) / n);
      v[x] = dom.is_boundary(x) ? 0.0 : prod;
    }
    const OperatorSpec spec = OperatorSpec::homogenized(dom, abar);
    const ScalarField f = apply(spec, v);
    MultigridOptions opt;
    opt.tol = 1e-11;
    const auto [u, rep] = Multigrid(spec, opt).solve(f);
    EXPECT_TRUE(rep.converged);
    EXPECT_LE(oracle::max_abs_diff(u, v), 1e-9);
    const auto& h = rep.residual_history;
    const double rate = std::pow(h.back() / h.front(), 1.0 / static_cast<double>(h.size() - 1));
    EXPECT_LE(rate, 0.2) << "dim " << dim;
  }
}

TEST(Multigrid, MatchesDenseOracleWithMass) {
  std::mt19937_64 rng(6);
  for (int k = 0; k < 30; ++k) {
    const CubeDomain dom(2, 2);
    const ScalarField lf(dom, k % 2 ? 0.1 : 0.0);
    const OperatorSpec spec = OperatorSpec::homogenized(dom, 0.2 + 0.05 * k, &lf);
    const ScalarField f = oracle::gaussian_field(dom, rng, true);
    MultigridOptions opt;
    opt.tol = 1e-13;
    opt.max_cycles = 100;
    const ScalarField u = Multigrid(spec, opt).solve(f).first;
    EXPECT_LE(oracle::max_abs_diff(u, oracle::dense_solve(spec, f)), 1e-8);
  }
}

TEST(Multigrid, RejectsHeterogeneousOperator) {
  const OperatorSpec spec = OperatorSpec::heterogeneous(oracle::bernoulli(CubeDomain(2, 2), 1.0, 1));
  EXPECT_THROW(Multigrid{spec}, InvalidArgument);
  EXPECT_THROW(OperatorSpec::homogenized(CubeDomain(2, 2), 0.0), InvalidArgument);
}

TEST(DenseDirect, SmallCases) {
  const CubeDomain dom(2, 1);
  const OperatorSpec spec = OperatorSpec::homogenized(dom, 2.0);
  ScalarField f(dom);
  f[dom.index({1, 1, 0})] = 8.0;
  const ScalarField u = dense_direct(spec, f);
  EXPECT_DOUBLE_EQ(u[dom.index({1, 1, 0})], 1.0);
  EXPECT_THROW(dense_direct(OperatorSpec::homogenized(CubeDomain(2, 5), 1.0), ScalarField(CubeDomain(2, 5))),
               InvalidArgument);
}

TEST(ConstantLaplacian, AgreesWithHomogenizedApply) {
  const CubeDomain dom(3, 2);
  std::mt19937_64 rng(8);
  const ScalarField u = oracle::gaussian_field(dom, rng);
  const ScalarField a = constant_laplacian(0.4, u);
  const ScalarField b = apply(OperatorSpec::homogenized(dom, 0.4), u);
  for (std::size_t x = 0; x < u.size(); ++x)
    if (!dom.is_boundary(x)) {
      EXPECT_NEAR(a[x], b[x], 1e-12);
    }
}
