#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "phstat/spectral.hpp"

using namespace phstat;

namespace {

// Composite Simpson of a reference density on [0, hi].
double integrate_density(ReferenceKind k, double hi, int panels, double nu = 0.0) {
  const double h = hi / panels;
  double s = 0.0;
  for (int i = 0; i <= panels; ++i) {
    const double w = (i == 0 || i == panels) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    s += w * reference_density(k, h * i, nu);
  }
  return s * h / 3.0;
}

std::vector<double> picket(std::size_t n) {
  std::vector<double> e(n);
  for (std::size_t i = 0; i < n; ++i) e[i] = static_cast<double>(i);
  return e;
}

std::vector<double> unfolded_poisson(std::size_t n, std::uint64_t seed) {
  return unfold(synthetic_levels(SyntheticKind::poisson, n, seed)).levels;
}

}  // namespace

TEST(Reference, SpacingDensitiesAreNormalisedWithUnitMean) {
  for (auto k : {ReferenceKind::poisson_ps, ReferenceKind::wigner_ps, ReferenceKind::semipoisson_ps}) {
    EXPECT_NEAR(integrate_density(k, 60.0, 60000), 1.0, 1e-9) << to_string(k);
    const double h = 60.0 / 60000;
    double mean = 0.0;
    for (int i = 0; i <= 60000; ++i) {
      const double w = (i == 0 || i == 60000) ? 1.0 : (i % 2 ? 4.0 : 2.0);
      mean += w * h * i * reference_density(k, h * i);
    }
    EXPECT_NEAR(mean * h / 3.0, 1.0, 1e-9) << to_string(k);
  }
  for (double nu : {0.0, 1.0})
    EXPECT_NEAR(integrate_density(ReferenceKind::brody_ps, 60.0, 60000, nu), 1.0, 1e-9) << nu;
  // s^0.3 has an unbounded derivative at 0, which caps Simpson's accuracy.
  EXPECT_NEAR(integrate_density(ReferenceKind::brody_ps, 60.0, 600000, 0.3), 1.0, 1e-5);
}

TEST(Reference, CdfIsTheIntegralOfTheDensity) {
  for (auto k : {ReferenceKind::poisson_ps, ReferenceKind::wigner_ps, ReferenceKind::semipoisson_ps,
                 ReferenceKind::poisson_pr, ReferenceKind::goe_pr})
    for (double x : {0.3, 1.0, 2.7}) {
      EXPECT_NEAR(reference_cdf(k, x), integrate_density(k, x, 20000), 1e-10) << to_string(k) << " " << x;
    }
  EXPECT_NEAR(brody_cdf(1.3, 0.4), integrate_density(ReferenceKind::brody_ps, 1.3, 200000, 0.4), 1e-6);
}

// r -> 1/r maps a ratio law onto itself, so F(1/r) = 1 - F(r), and the
// surmise means of min(r, 1/r) are 2 ln 2 - 1 and 4 - 2 sqrt 3.
TEST(Reference, RatioLawsAreInversionSymmetric) {
  for (auto k : {ReferenceKind::poisson_pr, ReferenceKind::goe_pr}) {
    EXPECT_NEAR(reference_cdf(k, 1.0), 0.5, 1e-14);
    for (double r : {0.2, 0.7, 3.0}) EXPECT_NEAR(reference_cdf(k, 1.0 / r), 1.0 - reference_cdf(k, r), 1e-14);
    EXPECT_NEAR(2.0 * integrate_density(k, 1.0, 20000), 1.0, 1e-12);
  }
  auto mean_rtilde = [](ReferenceKind k) {
    const int panels = 20000;
    const double h = 1.0 / panels;
    double s = 0.0;
    for (int i = 0; i <= panels; ++i) {
      const double w = (i == 0 || i == panels) ? 1.0 : (i % 2 ? 4.0 : 2.0);
      s += w * h * i * 2.0 * reference_density(k, h * i);
    }
    return s * h / 3.0;
  };
  EXPECT_NEAR(mean_rtilde(ReferenceKind::poisson_pr), 2.0 * std::log(2.0) - 1.0, 1e-10);
  EXPECT_NEAR(mean_rtilde(ReferenceKind::goe_pr), 4.0 - 2.0 * std::sqrt(3.0), 1e-10);
}

TEST(Histogram, DensityPlusOutsideIntegratesToOne) {
  const std::vector<double> v{-1.0, 0.1, 0.15, 0.5, 0.99, 1.0, 7.0};
  const auto h = make_histogram(v, 0.0, 1.0, 0.25);
  EXPECT_EQ(h.bins(), 4u);
  EXPECT_EQ(h.underflow, 1u);
  EXPECT_EQ(h.overflow, 2u);
  EXPECT_NEAR(h.integral(), 1.0, 1e-15);
  EXPECT_EQ(h.counts[0], 2u);
  EXPECT_THROW(make_histogram(v, 1.0, 0.0, 0.1), ConfigError);
}

TEST(Unfold, PicketFenceStaysUniform) {
  const auto u = unfold(picket(200));
  for (std::size_t i = 1; i < u.levels.size(); ++i) EXPECT_NEAR(u.levels[i] - u.levels[i - 1], 1.0, 1e-10);
  EXPECT_NEAR(u.mean_spacing(), 1.0, 1e-12);
}

TEST(Unfold, SmoothDensityIsRemoved) {
  // E_i = i + i^2 / 2000: the level density drops by a third across the window;
  // the inverse staircase is smooth enough for a degree-6 fit to flatten it.
  std::vector<double> e;
  for (int i = 0; i < 500; ++i) e.push_back(i + i * i / 2000.0);
  const auto u = unfold(e);
  double worst = 0.0;
  for (std::size_t i = 1; i < u.levels.size(); ++i) worst = std::max(worst, std::abs(u.levels[i] - u.levels[i - 1] - 1.0));
  EXPECT_LT(worst, 1e-3);
}

TEST(Unfold, PoissonSpacingsAreExponential) {
  const auto u = unfold(synthetic_levels(SyntheticKind::poisson, 20000, 3));
  const auto s = spacings_of(u);
  EXPECT_NEAR(s.mean(), 1.0, 1e-9);
  EXPECT_LT(ks_distance(s.spacings, [](double x) { return reference_cdf(ReferenceKind::poisson_ps, x); }), 0.015);
}

TEST(Unfold, RejectsShortOrUnsortedWindows) {
  EXPECT_THROW(unfold(picket(10)), ConfigError);
  auto e = picket(100);
  std::swap(e[3], e[4]);
  EXPECT_THROW(unfold(e), ConfigError);
  EXPECT_THROW(unfold(picket(100), IndexWindow{50, 200}), ConfigError);
}

TEST(Pool, NoSpacingCrossesASequenceBoundary) {
  std::vector<UnfoldedSequence> seqs;
  seqs.push_back(unfold(picket(50)));
  auto far = picket(80);
  for (double& x : far) x += 1e6;
  seqs.push_back(unfold(far, IndexWindow{0, far.size()}, {}, "far"));
  const auto s = pool_ensemble(seqs);
  EXPECT_EQ(s.size(), 49u + 79u);
  for (double v : s.spacings) EXPECT_NEAR(v, 1.0, 1e-9);
  EXPECT_EQ(s.tags.back(), "far");
  EXPECT_EQ(s.tags.front(), "seq0");
}

namespace {

std::vector<double> brody_sample(double nu, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double a = brody_a(nu);
  std::vector<double> s(n);
  for (double& x : s) x = std::pow(-std::log1p(-u(rng)) / a, 1.0 / (1.0 + nu));
  return s;
}

}  // namespace

class BrodyRecovery : public ::testing::TestWithParam<double> {};

TEST_P(BrodyRecovery, FitRecoversGeneratingExponent) {
  const double nu = GetParam();
  SpacingSample sample;
  sample.spacings = brody_sample(nu, 100000, 42);
  const auto fit = brody_fit(sample);
  EXPECT_NEAR(fit.nu, nu, 0.03);
  EXPECT_NEAR(fit.nu_histogram, nu, 0.03);
  EXPECT_LT(fit.ks, 0.01);
  EXPECT_NEAR(fit.a, brody_a(fit.nu), 1e-15);
}

INSTANTIATE_TEST_SUITE_P(Exponents, BrodyRecovery, ::testing::Values(0.0, 0.25, 0.5, 1.0));

TEST(Brody, TooFewSpacingsIsAConfigError) {
  SpacingSample s;
  s.spacings.assign(50, 1.0);
  EXPECT_THROW(brody_fit(s), ConfigError);
}

TEST(IntegralSpacing, MonotoneAndEndsAtOne) {
  SpacingSample s;
  s.spacings = {0.0, 0.5, 0.5, 1.0, 2.0};
  const auto is = integral_spacing(s);
  EXPECT_EQ(is.zero_spacings, 1u);
  ASSERT_EQ(is.log_s.size(), 3u);
  EXPECT_DOUBLE_EQ(is.cumulative[0], 0.6);
  EXPECT_DOUBLE_EQ(is.cumulative.back(), 1.0);
  for (std::size_t i = 1; i < is.log_s.size(); ++i) EXPECT_GT(is.log_s[i], is.log_s[i - 1]);
}

// Multiplying by 4 and adding 8 is exact in binary for these integer levels,
// so the ratios must agree bit for bit.
TEST(Ratio, InvariantUnderExactAffineMaps) {
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<int> step(1, 1000);
  std::vector<double> e{0.0};
  for (int i = 0; i < 5000; ++i) e.push_back(e.back() + step(rng));
  std::vector<double> mapped(e);
  for (double& x : mapped) x = 4.0 * x + 8.0;
  const auto a = ratio_sample(e), b = ratio_sample(mapped);
  ASSERT_EQ(a.r.size(), b.r.size());
  for (std::size_t i = 0; i < a.r.size(); ++i) EXPECT_EQ(a.r[i], b.r[i]);
  EXPECT_EQ(a.mean_rtilde(), b.mean_rtilde());
}

TEST(Ratio, DegenerateSpacingsAreExcluded) {
  const std::vector<double> e{0.0, 1.0, 1.0, 3.0, 4.0};
  const auto r = ratio_sample(e);
  EXPECT_EQ(r.excluded_degenerate, 1u);
  ASSERT_EQ(r.r.size(), 2u);
  EXPECT_DOUBLE_EQ(r.r[0], 0.0);
  EXPECT_DOUBLE_EQ(r.r[1], 0.5);
  EXPECT_DOUBLE_EQ(r.rtilde[1], 0.5);
}

TEST(Ratio, PoissonMeanMatchesExactValue) {
  const auto e = synthetic_levels(SyntheticKind::poisson, 100000, 1);
  const auto st = ratio_statistics(e, IndexWindow{0, e.size()});
  EXPECT_NEAR(st.mean_rtilde, 2.0 * std::log(2.0) - 1.0, 0.005);
  const auto ref = bin_averaged_reference(ReferenceKind::poisson_pr, st.pr);
  EXPECT_LT(max_deviation(st.pr.density, ref), 0.02);
}

TEST(NumberVariance, PicketFence) {
  const auto x = picket(2000);
  const std::vector<double> L{2.0, 2.5, 7.0};
  const auto s2 = number_variance(x, L);
  EXPECT_NEAR(s2[0].value, 0.0, 1e-12);
  EXPECT_NEAR(s2[1].value, 0.25, 0.01);
  EXPECT_NEAR(s2[2].value, 0.0, 1e-12);
}

TEST(Rigidity, PicketFenceIsOneTwelfth) {
  const auto x = picket(5000);
  const std::vector<double> L{5.0, 10.0, 20.0};
  for (const auto& p : delta3(x, L)) EXPECT_NEAR(p.value, 1.0 / 12.0, 0.05 / 12.0) << p.L;
  for (const auto& p : delta3_via_sigma2(x, L)) EXPECT_NEAR(p.value, 1.0 / 12.0, 0.05 / 12.0) << p.L;
}

TEST(Rigidity, SingleWindowClosedForm) {
  // Two levels at 1 and 2 in [0, 3]: staircase 0,1,2 on thirds. The best
  // line through a symmetric staircase is n = y - 1/2 shifted; compare with
  // a brute-force least squares on a fine grid.
  const std::vector<double> x{1.0, 2.0};
  const double d = delta3_window(x, 0, 0.0, 3.0);
  const int m = 300000;
  double sy = 0, sn = 0, syy = 0, syn = 0, snn = 0;
  for (int i = 0; i < m; ++i) {
    const double y = 3.0 * (i + 0.5) / m;
    const double n = y < 1.0 ? 0.0 : (y < 2.0 ? 1.0 : 2.0);
    sy += y; sn += n; syy += y * y; syn += y * n; snn += n * n;
  }
  const double A = (m * syn - sy * sn) / (m * syy - sy * sy);
  const double B = (sn - A * sy) / m;
  const double brute = (snn - 2 * A * syn - 2 * B * sn + A * A * syy + 2 * A * B * sy + B * B * m) / m;
  EXPECT_NEAR(d, brute, 1e-9);
}

TEST(Fluctuations, PoissonSigma2AndDelta3) {
  const auto x = unfolded_poisson(100000, 7);
  const std::vector<double> L{1.0, 5.0, 10.0, 20.0};
  for (const auto& p : number_variance(x, L)) EXPECT_NEAR(p.value / p.L, 1.0, 0.05) << p.L;
  const auto d3 = delta3(x, L);
  const auto via = delta3_via_sigma2(x, L);
  for (std::size_t i = 1; i < L.size(); ++i) {
    EXPECT_NEAR(d3[i].value / (L[i] / 15.0), 1.0, 0.05) << L[i];
    EXPECT_NEAR(via[i].value / d3[i].value, 1.0, 0.03) << L[i];
  }
}

TEST(Fluctuations, SpanGuard) {
  const auto x = picket(100);
  const std::vector<double> L{20.0};
  EXPECT_THROW(number_variance(x, L), ConfigError);
  EXPECT_THROW(delta3(x, L), ConfigError);
}

TEST(Synthetic, SeededGeneratorsAreReproducible) {
  for (auto k : {SyntheticKind::poisson, SyntheticKind::goe, SyntheticKind::semipoisson}) {
    const auto a = synthetic_levels(k, 200, 99), b = synthetic_levels(k, 200, 99);
    EXPECT_EQ(a, b) << to_string(k);
    EXPECT_NE(a, synthetic_levels(k, 200, 100)) << to_string(k);
    EXPECT_TRUE(std::is_sorted(a.begin(), a.end()));
  }
  EXPECT_THROW(synthetic_levels(SyntheticKind::poisson, 5, 1), ConfigError);
  EXPECT_THROW(parse_synthetic_kind("gue"), ConfigError);
}

TEST(Synthetic, SemiPoissonSpacingLaw) {
  const auto s = spacings_of(unfold(synthetic_levels(SyntheticKind::semipoisson, 100000, 4)));
  EXPECT_LT(ks_distance(s.spacings, [](double x) { return reference_cdf(ReferenceKind::semipoisson_ps, x); }), 0.01);
}

TEST(Synthetic, GoeSpectrumFollowsSemicircle) {
  // Off-diagonal variance 1/2 puts the edge at sqrt(2 N).
  Rng rng(3);
  const auto e = goe_levels(400, rng);
  EXPECT_NEAR(e.back() / std::sqrt(800.0), 1.0, 0.05);
  EXPECT_NEAR(e.front() / -std::sqrt(800.0), 1.0, 0.05);
}
