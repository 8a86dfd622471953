#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "phstat/adiabatic.hpp"

using namespace phstat;

namespace {

const UnitSystem rb = make_units("Rb87");

struct ConstantPotential {
  double value;
  double operator()(double) const { return value; }
  double core_radius() const { return 0.0; }
};

// Reports its width as the grading radius so the panels resolve it at large r.
struct GaussianWell {
  double depth, width;
  double operator()(double r) const { return -depth * std::exp(-r * r / (width * width)); }
  double core_radius() const { return width; }
};

// V_KK'(r) by composite Simpson in theta, z = -cos(theta), on [theta_c, pi];
// the substitution turns the Jacobi weight into a bounded integrand. The
// lower limit is the core edge, where the tail starts.
Eigen::MatrixXd simpson_oracle(const BasisSpec& spec, const TwoBodyPotential& pot, double r,
                               int panels) {
  const double zc = 2.0 * (pot.r_c / r) * (pot.r_c / r) - 1.0;
  const double t0 = std::acos(-zc), t1 = std::numbers::pi;
  const double h = (t1 - t0) / panels;
  const int nk = spec.size();
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(nk, nk);
  std::vector<double> b(nk);
  for (int i = 0; i <= panels; ++i) {
    const double t = t0 + h * i;
    const double z = -std::cos(t);
    const double w = std::pow(1.0 + std::cos(t), spec.alpha()) *
                     std::pow(1.0 - std::cos(t), spec.beta()) * std::sin(t);
    const double rij = r * std::sqrt(0.5 * (1.0 + z));
    const double simpson = (i == 0 || i == panels) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    basis_values(spec, z, b);
    const double g = simpson * w * pot.tail(std::max(rij, pot.r_c));
    for (int a = 0; a < nk; ++a)
      for (int c = 0; c < nk; ++c) v(a, c) += g * b[a] * b[c];
  }
  return v * h / 3.0;
}

}  // namespace

TEST(PotentialMatrix, ConstantPotentialIsDiagonal) {
  for (int n : {3, 5, 40})
    for (int l : {0, 1}) {
      const BasisSpec spec(n, l, 20);
      const auto f = overlap_factors(spec);
      const double c = -3.7, r = 50.0;
      const auto pm = potential_matrix(r, spec, ConstantPotential{c}, f, rb.hbar2_over_m);
      for (int i = 0; i < spec.size(); ++i)
        for (int j = 0; j < spec.size(); ++j) {
          const double expect = i == j ? f.f2[i] * c + rb.hbar2_over_m / (r * r) * spec.centrifugal(i) : 0.0;
          EXPECT_NEAR(pm.entries(i, j), expect, 1e-10 * std::max(1.0, std::abs(expect)))
              << n << " " << l << " " << i << " " << j;
        }
    }
}

TEST(PotentialMatrix, ZeroPotentialLeavesCentrifugalDiagonal) {
  const BasisSpec spec(5, 0, 10);
  const auto pm = potential_matrix(30.0, spec, ConstantPotential{0.0}, overlap_factors(spec), 2.0);
  for (int i = 0; i < spec.size(); ++i) {
    EXPECT_DOUBLE_EQ(pm.entries(i, i), 2.0 / 900.0 * spec.centrifugal(i));
    for (int j = 0; j < spec.size(); ++j)
      if (i != j) {
        EXPECT_EQ(pm.entries(i, j), 0.0);
      }
  }
}

class DenseOracle : public ::testing::TestWithParam<std::tuple<int, int, double>> {};

TEST_P(DenseOracle, MatchesSimpsonIntegral) {
  const auto [n, l, r] = GetParam();
  const BasisSpec spec(n, l, 6);
  const auto pot = make_vdw_potential(15.1497, 2803.0, rb);
  const auto pm = potential_matrix(r, spec, pot, overlap_factors(spec));
  const auto ref = simpson_oracle(spec, pot, r, 400000);
  const double scale = ref.cwiseAbs().maxCoeff();
  EXPECT_LT((pm.potential - ref).cwiseAbs().maxCoeff() / scale, 1e-7) << n << " " << l << " " << r;
}

INSTANTIATE_TEST_SUITE_P(Points, DenseOracle,
                         ::testing::Values(std::make_tuple(3, 0, 100.0), std::make_tuple(3, 0, 20.0),
                                           std::make_tuple(5, 1, 60.0), std::make_tuple(5, 0, 400.0)));

TEST(PotentialMatrix, QuadratureConvergedAtDefaultOrder) {
  const auto pot = make_vdw_potential(15.1497, 2803.0, rb);
  for (int n : {3, 5, 40})
    for (double r : {10.0, 16.0, 40.0, 200.0, 5000.0}) {
      const BasisSpec spec(n, 0, 20);
      QuadratureOptions q;
      q.check_convergence = true;
      const auto pm = potential_matrix(r, spec, pot, overlap_factors(spec), q);
      EXPECT_LT(pm.quadrature_shift, 1e-8) << n << " " << r;
    }
}

TEST(PotentialMatrix, InsideCoreExcludedModelIsPureCentrifugal) {
  const auto pot = make_vdw_potential(15.0, 2803.0, rb);
  const BasisSpec spec(3, 0, 4);
  const auto pm = potential_matrix(10.0, spec, pot, overlap_factors(spec));
  EXPECT_EQ(pm.potential.cwiseAbs().maxCoeff(), 0.0);
}

TEST(EffectivePotential, LowestEigenvalueBelowEveryDiagonalEntry) {
  const auto pot = make_vdw_potential(15.1497, 2803.0, rb);
  const BasisSpec spec(5, 0, 10);
  const auto f = overlap_factors(spec);
  const auto grid = log_grid(10.0, 500.0, 30);
  const auto ep = effective_potential(spec, pot, f, grid);
  ASSERT_EQ(ep.channel.size(), grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto pm = potential_matrix(grid[i], spec, pot, f);
    EXPECT_LE(ep.omega[i], pm.entries.diagonal().minCoeff() + 1e-12);
    double norm = 0.0;
    for (double c : ep.channel[i]) norm += c * c;
    EXPECT_NEAR(norm, 1.0, 1e-12);
    if (i > 0) {
      double dot = 0.0;
      for (int k = 0; k < spec.size(); ++k) dot += ep.channel[i][k] * ep.channel[i - 1][k];
      EXPECT_GT(dot, 0.0);
    }
  }
}

TEST(EffectivePotential, DiagonalOnlyPicksSmallestDiagonal) {
  const auto pot = make_vdw_potential(15.1497, 2803.0, rb);
  const BasisSpec spec(3, 2, 8);
  const auto f = overlap_factors(spec);
  const auto grid = log_grid(8.0, 300.0, 20);
  const auto ep = effective_potential(spec, pot, f, grid);
  EXPECT_EQ(ep.mode, ConstructionMode::diagonal_only);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto pm = potential_matrix(grid[i], spec, pot, f);
    EXPECT_DOUBLE_EQ(ep.omega[i], pm.entries.diagonal().minCoeff());
  }
}

// With a short-range pair potential the hypercentrifugal term dominates at
// large r, so omega r^2 m / hbar^2 -> L(L+1); the pair term falls as r^-3,
// so the deviation shrinks tenfold per decade.
TEST(EffectivePotential, ShortRangeTailApproachesCentrifugalLimit) {
  const GaussianWell well{5.0, 3.0};
  const BasisSpec spec(3, 0, 8);
  const auto f = overlap_factors(spec);
  double prev = 1e300;
  for (double rmax : {1e2, 1e3, 1e4}) {
    AdiabaticOptions opt;
    opt.convergence_checks = 1;
    const auto ep = effective_potential(spec, well, f, log_grid(1.0, rmax, 40), 1.0, opt);
    EXPECT_LT(ep.max_quadrature_shift, 1e-8);
    const double dev = std::abs(ep.asymptotic_ratio() - 1.0);
    EXPECT_LT(dev, 0.15 * prev);
    prev = dev;
  }
  EXPECT_LT(prev, 0.05);
}

// Frozen minima of omega_0 at K_max = 20 for the a_s = 100 a0 potential on
// the five-bound-state branch; the well deepens with N.
TEST(EffectivePotential, FrozenWellDepthsDeepenWithN) {
  const auto pot = make_vdw_potential(15.1497, 2803.0, rb);
  const std::vector<std::pair<int, double>> cases{{3, -2.556}, {5, -5.19}, {40, -304.8}};
  double prev = 0.0;
  for (const auto& [n, depth] : cases) {
    const BasisSpec spec(n, 0, 20);
    const auto ep = effective_potential(spec, pot, overlap_factors(spec), log_grid(10.0, 400.0, 120));
    EXPECT_NEAR(ep.min_value(), depth, 0.01 * std::abs(depth)) << n;
    EXPECT_LT(ep.min_value(), prev);
    EXPECT_LT(ep.max_quadrature_shift, 1e-6);
    prev = ep.min_value();
  }
}

TEST(EffectivePotential, RejectsBadGrids) {
  const auto pot = make_vdw_potential(15.0, 2803.0, rb);
  const BasisSpec spec(3, 0, 4);
  const auto f = overlap_factors(spec);
  EXPECT_THROW(effective_potential(spec, pot, f, {5.0}), ConfigError);
  EXPECT_THROW(effective_potential(spec, pot, f, {5.0, 4.0}), ConfigError);
  EXPECT_THROW(effective_potential(spec, pot, analytic_overlap_factors(3, 0, 5), {5.0, 6.0}), ConfigError);
  EXPECT_THROW(log_grid(0.0, 1.0, 5), ConfigError);
}
