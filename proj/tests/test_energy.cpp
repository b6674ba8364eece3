#include "fracflow/energy.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <numbers>

using namespace fracflow;

namespace {

FlowParams params(double s, double p, double q, double h = 0.01) {
  FlowParams f;
  f.s = s;
  f.p = p;
  f.q = q;
  f.h = h;
  return f;
}

using L = long double;

}  // namespace

TEST(Energy, LqPowerIntegral) {
  const auto g = build_grid<Real>(1, Real(0), Real(1), 4, Real(2));
  const auto u = GridFunction<Real>::from_interior(g, (VectorX<Real>(4) << 1, -2, 0, 0.5).finished());
  EXPECT_EQ(lq_power_integral(u, Real(2)), Real(0.25) * (1 + 4 + 0 + 0.25));
  EXPECT_EQ(lq_power_integral(u, Real(1)), Real(0.25) * 3.5);
  EXPECT_THROW(lq_power_integral(u, Real(0.5)), std::invalid_argument);
}

TEST(Energy, SeminormMatchesBruteForce) {
  std::mt19937_64 rng(3);
  for (const int dim : {1, 2}) {
    const auto g = build_grid<Real>(dim, Real(0), Real(1), dim == 1 ? 20 : 5, Real(2));
    for (const double s : {0.25, 0.5, 0.75}) {
      for (const double p : {1.5, 2.0, 3.0}) {
        const auto k = assemble_kernel(g, params(s, p, 1));
        const auto u = GridFunction<Real>::from_interior(g, oracle::random_interior(*g, rng));
        const L ref = oracle::brute_seminorm(k, u, p);
        EXPECT_NEAR(static_cast<double>(gagliardo_seminorm_p(u, k, Real(p)) / ref), 1.0, 1e-13)
            << "dim=" << dim << " s=" << s << " p=" << p;
        EXPECT_NEAR(static_cast<double>(energy_functional(u, k, Real(p)) * 2 * p / ref), 1.0, 1e-13);
      }
    }
  }
}

TEST(Energy, SingleNodeIndicator) {
  const auto g = build_grid<Real>(1, Real(0), Real(1), 10, Real(2));
  const auto k = assemble_kernel(g, params(0.5, 2, 1));
  const Index node = g->interior_indices()[3];
  VectorX<Real> v = VectorX<Real>::Zero(g->size());
  v[node] = 1;
  const GridFunction<Real> u(g, v);
  // ordered pairs (node, j) and (j, node) each contribute w, plus 2 t_node
  L ref = 2 * k.tail()[node];
  for (Index j = 0; j < g->size(); ++j) {
    if (j == node) continue;
    ref += 2 * g->vol() * g->vol() * std::pow(oracle::node_distance(*g, node, j), L(-2));
  }
  EXPECT_NEAR(static_cast<double>(gagliardo_seminorm_p(u, k, Real(2)) / ref), 1.0, 1e-15);
}

TEST(Energy, HomogeneityAndSymmetry) {
  std::mt19937_64 rng(11);
  const auto g = build_grid<Real>(1, Real(0), Real(1), 16, Real(2));
  for (const double p : {1.5, 2.0, 3.0}) {
    const auto k = assemble_kernel(g, params(0.5, p, 1));
    for (int t = 0; t < 10; ++t) {
      const auto u = GridFunction<Real>::from_interior(g, oracle::random_interior(*g, rng));
      const Real lambda = Real(0.1) + Real(t);
      const Real base = gagliardo_seminorm_p(u, k, Real(p));
      EXPECT_NEAR(static_cast<double>(gagliardo_seminorm_p(lambda * u, k, Real(p)) /
                                      (std::pow(lambda, Real(p)) * base)),
                  1.0, 1e-14);
      EXPECT_NEAR(static_cast<double>(gagliardo_seminorm_p(Real(-1) * u, k, Real(p)) / base), 1.0, 1e-15);
    }
  }
  EXPECT_EQ(gagliardo_seminorm_p(GridFunction<Real>(g), assemble_kernel(g, params(0.5, 2, 1)), Real(2)), 0);
}

TEST(Energy, EulerIdentity) {
  // <grad E(u), u> = p E(u) = [u]^p / 2 for the p-homogeneous energy.
  std::mt19937_64 rng(5);
  const auto g = build_grid<Real>(2, Real(0), Real(1), 5, Real(2));
  for (const double p : {1.5, 2.0, 3.0}) {
    const auto k = assemble_kernel(g, params(0.5, p, 1));
    const auto u = GridFunction<Real>::from_interior(g, oracle::random_interior(*g, rng));
    const auto grad = apply_frac_p_laplacian(u, k, Real(p));
    const Real lhs = grad.values().dot(u.values());
    EXPECT_NEAR(static_cast<double>(lhs / (gagliardo_seminorm_p(u, k, Real(p)) / 2)), 1.0, 1e-14);
    for (Index i = 0; i < g->size(); ++i)
      if (!g->is_interior(i)) EXPECT_EQ(grad[i], 0);
  }
}

// Central differences in long double along smooth random directions, step 1e-6 scale.
TEST(Energy, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(2024);
  const auto g = build_grid<Real>(1, Real(0), Real(1), 12, Real(2));
  for (const double p : {1.5, 2.0, 3.0}) {
    for (const double q : {0.5, 1.0, 2.0}) {
      const FlowParams fp = params(0.5, p, q);
      const auto k = assemble_kernel(g, fp);
      const auto u_prev = GridFunction<Real>::from_interior(g, oracle::random_smooth(*g, rng));
      for (int t = 0; t < 50; ++t) {
        // central differences need the stencil clear of the kinks of |x|^r, r < 2
        auto w = GridFunction<Real>::from_interior(g, oracle::random_smooth(*g, rng));
        while (oracle::kink_distance(w.interior_values()) < 1e3L * 1e-6L * flow_scale(w, k, fp))
          w = GridFunction<Real>::from_interior(g, oracle::random_smooth(*g, rng));
        const auto d = GridFunction<Real>::from_interior(g, oracle::random_smooth(*g, rng));
        const Real eps = Real(1e-6) * flow_scale(w, k, fp);
        const auto wp = w + eps * d;
        const auto wm = w - eps * d;

        const Real fd_r = (rothe_functional(wp, u_prev, k, fp) - rothe_functional(wm, u_prev, k, fp)) / (2 * eps);
        const Real an_r = rothe_gradient(w, u_prev, k, fp).values().dot(d.values());
        EXPECT_LE(std::abs(static_cast<double>((fd_r - an_r) / an_r)), 1e-6) << "p=" << p << " q=" << q;

        const Real fd_e = (energy_functional(wp, k, Real(p)) - energy_functional(wm, k, Real(p))) / (2 * eps);
        const Real an_e = apply_frac_p_laplacian(w, k, Real(p)).values().dot(d.values());
        EXPECT_LE(std::abs(static_cast<double>((fd_e - an_e) / an_e)), 1e-6) << "p=" << p << " q=" << q;
      }
    }
  }
}

TEST(Energy, ValueDifferenceMatchesValues) {
  std::mt19937_64 rng(9);
  const auto g = build_grid<Real>(1, Real(0), Real(1), 10, Real(2));
  for (const double p : {1.5, 2.0, 3.0}) {
    for (const double q : {0.5, 1.0, 2.0}) {
      const FlowParams fp = params(0.5, p, q);
      const auto k = assemble_kernel(g, fp);
      const RotheProblem<Real> prob(k, oracle::random_interior(*g, rng), fp);
      const VectorX<Real> a = oracle::random_interior(*g, rng);
      const VectorX<Real> b = oracle::random_interior(*g, rng);
      const Real ref = prob.value(a) - prob.value(b);
      EXPECT_NEAR(static_cast<double>(prob.value_difference(a, b) / ref), 1.0, 1e-14);
      EXPECT_EQ(prob.value_difference(a, a), 0);
    }
  }
}

TEST(Energy, CurvatureIsSymmetricPsdAndExactForLinearCase) {
  std::mt19937_64 rng(4);
  const auto g = build_grid<Real>(1, Real(0), Real(1), 10, Real(2));
  for (const double p : {1.5, 2.0, 3.0}) {
    for (const double q : {0.5, 1.0, 2.0}) {
      const FlowParams fp = params(0.5, p, q);
      const auto k = assemble_kernel(g, fp);
      const RotheProblem<Real> prob(k, oracle::random_interior(*g, rng), fp);
      const MatrixX<Real> H = prob.curvature(oracle::random_interior(*g, rng), Real(1e-18));
      EXPECT_EQ(H, H.transpose());
      const Eigen::SelfAdjointEigenSolver<MatrixX<Real>> es(H);
      EXPECT_GT(es.eigenvalues().minCoeff(), 0);
    }
  }
  const FlowParams lin = params(0.5, 2, 1, 0.05);
  const auto k = assemble_kernel(g, lin);
  const RotheProblem<Real> prob(k, oracle::random_interior(*g, rng), lin);
  MatrixX<L> ref = oracle::dense_p2_operator(k);
  ref.diagonal().array() += g->vol() / L(0.05);
  const MatrixX<Real> H = prob.curvature(oracle::random_interior(*g, rng), Real(1e-18));
  EXPECT_LE(static_cast<double>((H - ref).cwiseAbs().maxCoeff() / ref.cwiseAbs().maxCoeff()), 1e-15);
}

TEST(AlgConstants, RatioBasics) {
  EXPECT_EQ(alg_ratio(2.0, 0.3, -0.7), 1.0);
  EXPECT_EQ(alg_ratio(2.0, 1.0, 1.0), 1.0);
  EXPECT_NEAR(alg_ratio(3.0, 0.5, 0.5), 2.0 / 2.0, 1e-15);
  EXPECT_NEAR(alg_ratio(1.5, 0.5, 0.5), 0.5 / std::pow(2.0, -0.5), 1e-15);
  // continuity at the diagonal
  EXPECT_NEAR(alg_ratio(3.5L, 1.0L, 1.0L + 1e-9L), alg_ratio(3.5L, 1.0L, 1.0L), 1e-12);
  EXPECT_THROW(alg_ratio(3.0, 0.0, 0.0), std::invalid_argument);
  // V(xi) = |xi| xi at alpha = 3: (V(1) - V(0)) / (1^1 * 1) = 1
  EXPECT_NEAR(alg_ratio(3.0, 1.0, 0.0), 1.0, 1e-15);
  EXPECT_NEAR(alg_ratio(3.0, 1.0, -1.0), 2.0 / (2.0 * 2.0), 1e-15);
}

TEST(AlgConstants, UnitAtTwoAndOrdered) {
  const AlgConstants two = scan_alg_constants(2.0, 50, 1.0);
  EXPECT_EQ(two.c1, 1.0);
  EXPECT_EQ(two.c2, 1.0);
  const AlgConstants d = default_alg_constants(2.0);
  EXPECT_EQ(d.c1, 1.0);
  EXPECT_EQ(d.c2, 1.0);
  for (const double a : {1.25, 1.5, 2.5, 3.0, 4.0}) {
    const AlgConstants c = default_alg_constants(a);
    EXPECT_GT(c.c2, 0);
    EXPECT_LE(c.c2, c.c1);
  }
  EXPECT_THROW(scan_alg_constants(1.0, 10, 1.0), std::invalid_argument);
  EXPECT_THROW(scan_alg_constants(2.5, 0, 1.0), std::invalid_argument);
}

TEST(AlgConstants, ScanIsScaleInvariantAndBoundsRandomPairs) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (const double a : {1.5, 2.5, 4.0}) {
    const AlgConstants c = default_alg_constants(a);
    const AlgConstants wide = scan_alg_constants<L>(L(a), 400, L(1000));
    EXPECT_NEAR(wide.c1, c.c1, 1e-12);
    EXPECT_NEAR(wide.c2, c.c2, 1e-12);
    for (int t = 0; t < 20000; ++t) {
      const L xi = u(rng);
      const L eta = u(rng);
      if (xi == eta) continue;
      // both inequalities in product form, with V evaluated directly
      const L vx = std::pow(std::abs(xi), L(a) - 2) * xi;
      const L ve = std::pow(std::abs(eta), L(a) - 2) * eta;
      const L wgt = std::pow(std::abs(xi) + std::abs(eta), L(a) - 2);
      const L slack = 1e-15L * wgt * std::abs(xi - eta);
      EXPECT_LE(std::abs(vx - ve), L(c.c1) * wgt * std::abs(xi - eta) + slack);
      EXPECT_GE((vx - ve) * (xi - eta), L(c.c2) * wgt * (xi - eta) * (xi - eta) - slack * std::abs(xi - eta));
    }
  }
}
