#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "phstat/hyperradial.hpp"

using namespace phstat;

namespace {

// Roots of k cot(k a) = -kappa, k^2 - kappa^2 = V0: s-wave bound states of a
// finite square well of depth V0 and radius a (hbar^2/m = 1), by bisection
// on each branch ((n - 1/2) pi, n pi) of k a.
std::vector<double> square_well_levels(double v0, double a) {
  std::vector<double> out;
  const double kmax = std::sqrt(v0);
  auto g = [&](double k) { return k / std::tan(k * a) + std::sqrt(v0 - k * k); };
  for (int n = 1; (n - 0.5) * std::numbers::pi / a < kmax; ++n) {
    double lo = (n - 0.5) * std::numbers::pi / a, hi = std::min(n * std::numbers::pi / a, kmax) - 1e-15;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (g(mid) > 0.0 ? lo : hi) = mid;
    }
    const double k = 0.5 * (lo + hi);
    out.push_back(k * k - v0);
  }
  return out;
}

// Sign changes of the finite-difference solution marched from u_0 = 0 at
// energy e; by the discrete oscillation theorem this counts the eigenvalues
// of the truncated matrix below e.
std::size_t shooting_nodes(const UniformTridiagonal& m, double e) {
  double prev = 0.0, cur = 1.0;
  std::size_t nodes = 0;
  for (std::size_t i = 0; i < m.diag.size(); ++i) {
    const double next = ((e - m.diag[i]) * cur - (i ? m.off * prev : 0.0)) / m.off;
    if ((next < 0.0) != (cur < 0.0)) ++nodes;
    prev = cur;
    cur = next;
  }
  return nodes;
}

}  // namespace

TEST(Sturm, CountMatchesShootingNodes) {
  const auto m = fd_hamiltonian([](double r) { return 0.5 * r * r; }, 0.0, 20.0, 3000, 1.0);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 150.0);
  for (int i = 0; i < 200; ++i) {
    const double e = u(rng);
    EXPECT_EQ(m.count_below(e), shooting_nodes(m, e)) << e;
  }
}

TEST(Sturm, BatchedCountsAgreeWithSingleCounts) {
  const auto m = fd_hamiltonian([](double r) { return std::sin(r) * 4.0; }, 0.0, 30.0, 999, 0.7);
  double xs[UniformTridiagonal::batch_width];
  std::size_t counts[UniformTridiagonal::batch_width];
  for (std::size_t j = 0; j < 5; ++j) xs[j] = -3.0 + 7.5 * static_cast<double>(j);
  m.count_below_batch(xs, counts, 5);
  for (std::size_t j = 0; j < 5; ++j) EXPECT_EQ(counts[j], m.count_below(xs[j]));
}

TEST(Sturm, EigenvaluesMatchDenseSolver) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g;
  UniformTridiagonal m;
  m.off = -0.8;
  for (int i = 0; i < 300; ++i) m.diag.push_back(3.0 * g(rng));
  Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(300, 300);
  for (int i = 0; i < 300; ++i) {
    dense(i, i) = m.diag[i];
    if (i) dense(i, i - 1) = dense(i - 1, i) = m.off;
  }
  const Eigen::VectorXd ref = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(dense).eigenvalues();
  const auto ev = m.eigenvalues_below(1.0, 1000);
  std::size_t expected = 0;
  while (expected < 300 && ref(expected) < 1.0) ++expected;
  ASSERT_EQ(ev.size(), expected);
  for (std::size_t i = 0; i < ev.size(); ++i) EXPECT_NEAR(ev[i], ref(i), 1e-11);
  EXPECT_EQ(m.eigenvalues_below(1.0, 7).size(), 7u);
  EXPECT_TRUE(m.eigenvalues_below(m.lower_bound(), 10).empty());
}

// -u'' + r^2/2 u on (0, 20) with u(0) = 0 keeps the odd oscillator states,
// E = sqrt(2) (n + 1/2), n = 1, 3, 5, ...
TEST(Levels, HarmonicOscillatorOddStates) {
  const SolverGrid grid{0.0, 20.0, 4000};
  const auto seq = solve_levels([](double r) { return 0.5 * r * r; }, grid, 1.0, 12);
  ASSERT_EQ(seq.size(), 12u);
  for (std::size_t i = 0; i < seq.size(); ++i) {
    const double exact = std::sqrt(2.0) * (2.0 * static_cast<double>(i) + 1.5);
    EXPECT_NEAR(seq.energies[i] / exact, 1.0, 1e-4) << i;
    EXPECT_LT(seq.convergence[i], 1e-3);
  }
  EXPECT_TRUE(seq.truncated_by_limit);
}

TEST(Levels, FiniteSquareWell) {
  const double v0 = 100.0, a = 1.0;
  const auto exact = square_well_levels(v0, a);
  ASSERT_EQ(exact.size(), 3u);
  // Place the step midway between grid points: h = a / (m + 1/2).
  const std::size_t m = 2000;
  const double h = a / (m + 0.5);
  const std::size_t n = static_cast<std::size_t>(std::round(8.0 / h)) - 1;
  const auto mat = fd_hamiltonian([&](double r) { return r < a ? -v0 : 0.0; }, 0.0, h * (n + 1), n, 1.0);
  const auto ev = mat.eigenvalues_below(0.0, 10);
  ASSERT_EQ(ev.size(), exact.size());
  for (std::size_t i = 0; i < ev.size(); ++i) EXPECT_NEAR(ev[i] / exact[i], 1.0, 1e-4) << i;
}

TEST(Levels, InfiniteWellMatchesClosedForm) {
  // w = 0 on (0, L) with Dirichlet walls: E_n = (n pi / L)^2.
  const double L = 1.0;
  const auto mat = fd_hamiltonian([](double) { return 0.0; }, 0.0, L, 4999, 1.0);
  const auto ev = mat.eigenvalues_below(1e3, 5);
  for (std::size_t i = 0; i < ev.size(); ++i) {
    const double k = static_cast<double>(i + 1) * std::numbers::pi / L;
    EXPECT_NEAR(ev[i] / (k * k), 1.0, 1e-5);
  }
}

TEST(Levels, WallRuleDropsLevelsNearThreshold) {
  // A well cut off at r_max = 6: levels within three spacings of w(r_max) go.
  SolverOptions opt;
  const auto seq = solve_levels([](double r) { return 0.5 * r * r; }, SolverGrid{0.0, 6.0, 2000}, 1.0, 100, opt);
  EXPECT_GT(seq.dropped_wall, 0u);
  EXPECT_FALSE(seq.truncated_by_limit);
  for (double e : seq.energies) EXPECT_LT(e, seq.wall_threshold);
  for (std::size_t i = 1; i < seq.size(); ++i) EXPECT_GT(seq.energies[i], seq.energies[i - 1]);
}

TEST(Levels, RejectsBadInput) {
  const auto w = [](double r) { return r; };
  EXPECT_THROW(solve_levels(w, SolverGrid{0.0, 1.0, 100}, 1.0, 0), ConfigError);
  EXPECT_THROW(solve_levels(w, SolverGrid{0.0, 1.0, 2}, 1.0, 5), ConfigError);
  EXPECT_THROW(solve_levels(w, SolverGrid{0.0, 1.0, 100}, -1.0, 5), ConfigError);
  EXPECT_THROW(fd_hamiltonian(w, 1.0, 0.0, 10, 1.0), ConfigError);
}

TEST(Spline, ReproducesLinearDataExactly) {
  std::vector<double> x, y;
  for (int i = 0; i <= 20; ++i) {
    x.push_back(0.5 * i);
    y.push_back(3.0 - 2.0 * x.back());
  }
  const CubicSpline s(x, y);
  for (double t : {0.1, 3.33, 9.99}) EXPECT_NEAR(s(t), 3.0 - 2.0 * t, 1e-12);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_DOUBLE_EQ(s(x[i]), y[i]);
}

// Frozen count for N = 3 at K_max = 20 (a_s = 100 a0, five-bound-state
// branch, solver box 1000 A, 10 steps per radian).
TEST(Levels, FrozenThreeBodyCount) {
  const UnitSystem rb = make_units("Rb87");
  const auto pot = make_vdw_potential(15.1497, 2803.0, rb);
  const BasisSpec spec(3, 0, 20);
  const auto ep = effective_potential(spec, pot, overlap_factors(spec), default_r_grid(pot));
  SolverOptions opt;
  opt.r_max = 1000.0;
  opt.steps_per_radian = 10.0;
  const auto seq = bound_states(ep, 2000, rb, opt);
  EXPECT_NEAR(static_cast<double>(seq.size()), 183.0, 2.0);
  EXPECT_NEAR(seq.energies.front(), ep.min_value(), std::abs(ep.min_value()));
  EXPECT_GT(seq.energies.front(), ep.min_value());
}
