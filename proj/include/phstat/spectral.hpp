#pragma once

// Spectral fluctuation measures: unfolding, nearest-neighbour spacings and
// the Brody fit, spacing ratios, number variance, spectral rigidity, the
// closed-form reference laws and synthetic reference spectra.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "phstat/error.hpp"

namespace phstat {

// ---------------------------------------------------------------- histograms

/// Density histogram with uniform bins on [lo, hi). Samples outside the range
/// are counted in underflow/overflow, so sum(density * width) + outside = 1.
struct Histogram {
  std::vector<double> edges;
  std::vector<double> density;
  std::vector<std::size_t> counts;
  std::size_t total = 0;
  std::size_t underflow = 0;
  std::size_t overflow = 0;

  std::size_t bins() const { return density.size(); }
  double width(std::size_t i) const { return edges[i + 1] - edges[i]; }
  double center(std::size_t i) const { return 0.5 * (edges[i] + edges[i + 1]); }
  double outside_fraction() const {
    return total ? static_cast<double>(underflow + overflow) / static_cast<double>(total) : 0.0;
  }
  /// sum(density * width) + outside_fraction; 1 up to rounding for any sample.
  double integral() const {
    double s = outside_fraction();
    for (std::size_t i = 0; i < bins(); ++i) s += density[i] * width(i);
    return s;
  }
};

inline Histogram make_histogram(std::span<const double> values, double lo, double hi,
                                double bin_width) {
  if (!(hi > lo) || !(bin_width > 0.0)) throw ConfigError("histogram: need hi > lo, width > 0");
  const auto nb = static_cast<std::size_t>(std::llround(std::ceil((hi - lo) / bin_width - 1e-9)));
  Histogram h;
  h.edges.resize(nb + 1);
  for (std::size_t i = 0; i <= nb; ++i) h.edges[i] = lo + bin_width * static_cast<double>(i);
  h.edges.back() = std::max(h.edges.back(), hi);
  h.counts.assign(nb, 0);
  h.density.assign(nb, 0.0);
  h.total = values.size();
  for (double v : values) {
    if (v < lo) { ++h.underflow; continue; }
    if (!(v < h.edges.back())) { ++h.overflow; continue; }
    auto i = static_cast<std::size_t>((v - lo) / bin_width);
    i = std::min(i, nb - 1);
    ++h.counts[i];
  }
  if (h.total == 0) return h;
  for (std::size_t i = 0; i < nb; ++i)
    h.density[i] = static_cast<double>(h.counts[i]) / (static_cast<double>(h.total) * h.width(i));
  return h;
}

// ---------------------------------------------------------- reference laws

enum class ReferenceKind { poisson_ps, wigner_ps, semipoisson_ps, brody_ps, poisson_pr, goe_pr };

inline ReferenceKind parse_reference_kind(const std::string& s) {
  if (s == "poisson-ps") return ReferenceKind::poisson_ps;
  if (s == "wigner-ps") return ReferenceKind::wigner_ps;
  if (s == "semipoisson-ps") return ReferenceKind::semipoisson_ps;
  if (s == "brody-ps") return ReferenceKind::brody_ps;
  if (s == "poisson-pr") return ReferenceKind::poisson_pr;
  if (s == "goe-pr") return ReferenceKind::goe_pr;
  throw ConfigError("unknown reference curve '" + s + "'");
}

inline const char* to_string(ReferenceKind k) {
  switch (k) {
    case ReferenceKind::poisson_ps: return "poisson-ps";
    case ReferenceKind::wigner_ps: return "wigner-ps";
    case ReferenceKind::semipoisson_ps: return "semipoisson-ps";
    case ReferenceKind::brody_ps: return "brody-ps";
    case ReferenceKind::poisson_pr: return "poisson-pr";
    case ReferenceKind::goe_pr: return "goe-pr";
  }
  return "?";
}

/// Brody scale a(nu) = Gamma((2+nu)/(1+nu))^(1+nu), fixing unit mean spacing.
inline double brody_a(double nu) {
  return std::exp((1.0 + nu) * std::lgamma((2.0 + nu) / (1.0 + nu)));
}

inline double brody_density(double s, double nu) {
  if (s < 0.0) return 0.0;
  const double a = brody_a(nu);
  if (s == 0.0) return nu == 0.0 ? a : 0.0;
  return (1.0 + nu) * a * std::pow(s, nu) * std::exp(-a * std::pow(s, 1.0 + nu));
}

inline double brody_cdf(double s, double nu) {
  return s <= 0.0 ? 0.0 : -std::expm1(-brody_a(nu) * std::pow(s, 1.0 + nu));
}

inline double reference_density(ReferenceKind kind, double x, double nu = 0.0) {
  if (x < 0.0) return 0.0;
  constexpr double pi = std::numbers::pi;
  switch (kind) {
    case ReferenceKind::poisson_ps: return std::exp(-x);
    case ReferenceKind::wigner_ps: return 0.5 * pi * x * std::exp(-0.25 * pi * x * x);
    case ReferenceKind::semipoisson_ps: return 4.0 * x * std::exp(-2.0 * x);
    case ReferenceKind::brody_ps: return brody_density(x, nu);
    case ReferenceKind::poisson_pr: return 1.0 / ((1.0 + x) * (1.0 + x));
    case ReferenceKind::goe_pr: {
      const double q = 1.0 + x + x * x;
      return 27.0 / 8.0 * (x + x * x) / (q * q * std::sqrt(q));
    }
  }
  return 0.0;
}

/// Closed-form cumulative distributions of the reference laws.
inline double reference_cdf(ReferenceKind kind, double x, double nu = 0.0) {
  if (x <= 0.0) return 0.0;
  constexpr double pi = std::numbers::pi;
  switch (kind) {
    case ReferenceKind::poisson_ps: return -std::expm1(-x);
    case ReferenceKind::wigner_ps: return -std::expm1(-0.25 * pi * x * x);
    case ReferenceKind::semipoisson_ps: return 1.0 - (1.0 + 2.0 * x) * std::exp(-2.0 * x);
    case ReferenceKind::brody_ps: return brody_cdf(x, nu);
    case ReferenceKind::poisson_pr: return x / (1.0 + x);
    case ReferenceKind::goe_pr: {
      const double q = 1.0 + x + x * x;
      return 0.5 + (2.0 * x * x * x + 3.0 * x * x - 3.0 * x - 2.0) / (4.0 * q * std::sqrt(q));
    }
  }
  return 0.0;
}

/// Mean of the density over each histogram bin, from the CDF.
inline std::vector<double> bin_averaged_reference(ReferenceKind kind, const Histogram& h,
                                                  double nu = 0.0) {
  std::vector<double> out(h.bins());
  for (std::size_t i = 0; i < h.bins(); ++i)
    out[i] = (reference_cdf(kind, h.edges[i + 1], nu) - reference_cdf(kind, h.edges[i], nu)) /
             h.width(i);
  return out;
}

inline double max_deviation(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

/// Kolmogorov-Smirnov distance between a sample and a continuous CDF.
template <class Cdf>
double ks_distance(std::span<const double> sample, Cdf&& cdf) {
  if (sample.empty()) throw ConfigError("ks_distance: empty sample");
  std::vector<double> s(sample.begin(), sample.end());
  std::sort(s.begin(), s.end());
  const double n = static_cast<double>(s.size());
  double d = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double f = cdf(s[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

// ------------------------------------------------------------------ unfolding

struct IndexWindow {
  std::size_t begin = 0;
  std::size_t end = 0;  // exclusive
  std::size_t size() const { return end - begin; }
};

/// The central `fraction` of n indices.
inline IndexWindow central_window(std::size_t n, double fraction) {
  const auto keep = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  const std::size_t b = (n - std::min(n, keep)) / 2;
  return {b, b + std::min(n, keep)};
}

struct UnfoldedSequence {
  std::vector<double> levels;
  /// Polynomial coefficients c_k of Nbar(E) = sum c_k t^k, t = (E - center) / half_width.
  std::vector<double> poly_coeffs;
  double center = 0.0;
  double half_width = 1.0;
  /// Final affine map applied to Nbar: level = offset + scale * Nbar(E).
  double scale = 1.0;
  double offset = 0.0;
  IndexWindow window;
  std::string tag;

  double smooth_count(double e) const {
    const double t = (e - center) / half_width;
    double v = 0.0;
    for (std::size_t k = poly_coeffs.size(); k-- > 0;) v = v * t + poly_coeffs[k];
    return v;
  }
  double mean_spacing() const {
    return levels.size() < 2 ? 0.0
                             : (levels.back() - levels.front()) / static_cast<double>(levels.size() - 1);
  }
};

struct UnfoldOptions {
  int degree = 6;
  /// Density of monotonicity checkpoints per level interval.
  int checks_per_level = 4;
};

/// Least-squares fit of a polynomial Nbar(E) to the staircase at level
/// midpoints (rank i - 1/2 at the i-th level); unfolded levels Nbar(E_i),
/// rescaled affinely to unit mean spacing.
inline UnfoldedSequence unfold(std::span<const double> energies, IndexWindow window,
                               const UnfoldOptions& opt = {}, std::string tag = {}) {
  if (opt.degree < 1) throw ConfigError("unfold: degree must be >= 1");
  if (window.end > energies.size() || window.begin >= window.end)
    throw ConfigError("unfold: window outside the sequence");
  const std::size_t n = window.size();
  const auto need = static_cast<std::size_t>(3 * (opt.degree + 1));
  if (n < need)
    throw ConfigError("unfold: window has " + std::to_string(n) + " levels, need >= " +
                      std::to_string(need));
  const auto e = energies.subspan(window.begin, n);
  for (std::size_t i = 1; i < n; ++i)
    if (e[i] < e[i - 1]) throw ConfigError("unfold: energies must be ascending");
  if (!(e[n - 1] > e[0])) throw ConfigError("unfold: window spans a single energy");

  UnfoldedSequence u;
  u.window = window;
  u.tag = std::move(tag);
  u.center = 0.5 * (e[0] + e[n - 1]);
  u.half_width = 0.5 * (e[n - 1] - e[0]);
  const int p = opt.degree + 1;
  Eigen::MatrixXd a(static_cast<Eigen::Index>(n), p);
  Eigen::VectorXd b(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const double t = (e[i] - u.center) / u.half_width;
    double tk = 1.0;
    for (int k = 0; k < p; ++k, tk *= t) a(static_cast<Eigen::Index>(i), k) = tk;
    b(static_cast<Eigen::Index>(i)) = static_cast<double>(i) + 0.5;
  }
  const Eigen::VectorXd c = a.colPivHouseholderQr().solve(b);
  u.poly_coeffs.assign(c.data(), c.data() + p);

  // Monotonicity of Nbar over the window: derivative at dense checkpoints.
  auto slope = [&](double t) {
    double v = 0.0;
    for (int k = p - 1; k >= 1; --k) v = v * t + k * u.poly_coeffs[static_cast<std::size_t>(k)];
    return v;
  };
  const std::size_t checks = n * static_cast<std::size_t>(std::max(1, opt.checks_per_level));
  for (std::size_t j = 0; j <= checks; ++j) {
    const double t = -1.0 + 2.0 * static_cast<double>(j) / static_cast<double>(checks);
    if (!(slope(t) > 0.0))
      throw NumericalError("unfold: fitted staircase is not monotone over the window "
                           "(narrow the window or lower the degree)");
  }

  u.levels.resize(n);
  for (std::size_t i = 0; i < n; ++i) u.levels[i] = u.smooth_count(e[i]);
  const double raw_mean = (u.levels.back() - u.levels.front()) / static_cast<double>(n - 1);
  u.scale = 1.0 / raw_mean;
  u.offset = u.levels.front() - u.scale * u.levels.front();
  for (double& x : u.levels) x = u.offset + u.scale * x;
  return u;
}

inline UnfoldedSequence unfold(std::span<const double> energies, const UnfoldOptions& opt = {}) {
  return unfold(energies, IndexWindow{0, energies.size()}, opt);
}

// -------------------------------------------------------------------- spacings

struct SpacingSample {
  std::vector<double> spacings;
  std::vector<std::string> tags;  // source label per spacing

  std::size_t size() const { return spacings.size(); }
  double mean() const {
    double s = 0.0;
    for (double v : spacings) s += v;
    return spacings.empty() ? 0.0 : s / static_cast<double>(spacings.size());
  }
};

/// Spacings of each sequence, concatenated; no spacing crosses a boundary.
inline SpacingSample pool_ensemble(std::span<const UnfoldedSequence> sequences) {
  if (sequences.empty()) throw ConfigError("pool_ensemble: empty input");
  SpacingSample out;
  for (std::size_t k = 0; k < sequences.size(); ++k) {
    const auto& seq = sequences[k];
    const std::string tag = seq.tag.empty() ? "seq" + std::to_string(k) : seq.tag;
    for (std::size_t i = 1; i < seq.levels.size(); ++i) {
      out.spacings.push_back(seq.levels[i] - seq.levels[i - 1]);
      out.tags.push_back(tag);
    }
  }
  return out;
}

inline SpacingSample spacings_of(const UnfoldedSequence& u) {
  return pool_ensemble(std::span<const UnfoldedSequence>(&u, 1));
}

struct BrodyFit {
  double nu = 0.0;
  double a = 1.0;
  double log_likelihood = 0.0;
  double ks = 0.0;
  /// Least-squares nu against the bin-averaged Brody density.
  double nu_histogram = 0.0;
  double histogram_bin_width = 0.2;
  bool at_bound = false;
  bool histogram_at_bound = false;
};

namespace detail {

template <class F>
double golden_minimize(F&& f, double lo, double hi, double tol = 1e-7) {
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = lo, b = hi;
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc < fd) {
      b = d; d = c; fd = fc;
      c = b - g * (b - a); fc = f(c);
    } else {
      a = c; c = d; fc = fd;
      d = a + g * (b - a); fd = f(d);
    }
  }
  const double x = 0.5 * (a + b);
  // Endpoints are candidates too: golden section never evaluates them.
  double best = x, fbest = f(x);
  for (double e : {lo, hi})
    if (const double fe = f(e); fe < fbest) { best = e; fbest = fe; }
  return best;
}

}  // namespace detail

inline double brody_log_likelihood(std::span<const double> s, double nu) {
  const double a = brody_a(nu);
  const double log_pre = std::log1p(nu) + std::log(a);
  double ll = 0.0;
  for (double x : s) {
    const double v = std::max(x, 1e-300);
    ll += log_pre + nu * std::log(v) - a * std::pow(v, 1.0 + nu);
  }
  return ll;
}

struct BrodyOptions {
  double nu_min = 0.0;
  double nu_max = 1.2;
  double bin_width = 0.2;
  double hist_max = 4.0;
  std::size_t min_samples = 200;
};

inline BrodyFit brody_fit(const SpacingSample& sample, const BrodyOptions& opt = {}) {
  if (sample.size() < opt.min_samples)
    throw ConfigError("brody_fit: need at least " + std::to_string(opt.min_samples) + " spacings");
  for (double s : sample.spacings)
    if (!(s >= 0.0)) throw ConfigError("brody_fit: spacings must be nonnegative");
  const std::span<const double> s(sample.spacings);
  BrodyFit fit;
  fit.nu = detail::golden_minimize([&](double nu) { return -brody_log_likelihood(s, nu); },
                                   opt.nu_min, opt.nu_max);
  fit.a = brody_a(fit.nu);
  fit.log_likelihood = brody_log_likelihood(s, fit.nu);
  fit.ks = ks_distance(s, [&](double x) { return brody_cdf(x, fit.nu); });
  const double edge_tol = 1e-4 * (opt.nu_max - opt.nu_min);
  fit.at_bound = fit.nu - opt.nu_min < edge_tol || opt.nu_max - fit.nu < edge_tol;

  const Histogram h = make_histogram(s, 0.0, opt.hist_max, opt.bin_width);
  fit.histogram_bin_width = opt.bin_width;
  fit.nu_histogram = detail::golden_minimize(
      [&](double nu) {
        const auto ref = bin_averaged_reference(ReferenceKind::brody_ps, h, nu);
        double ss = 0.0;
        for (std::size_t i = 0; i < h.bins(); ++i) ss += (h.density[i] - ref[i]) * (h.density[i] - ref[i]);
        return ss;
      },
      opt.nu_min, opt.nu_max);
  fit.histogram_at_bound =
      fit.nu_histogram - opt.nu_min < edge_tol || opt.nu_max - fit.nu_histogram < edge_tol;
  return fit;
}

/// Empirical CDF of the spacings against ln s, I = 1 at the largest spacing.
/// Zero spacings have no logarithm; they are counted in I but not listed.
struct IntegralSpacing {
  std::vector<double> log_s;
  std::vector<double> cumulative;
  std::size_t zero_spacings = 0;
};

inline IntegralSpacing integral_spacing(const SpacingSample& sample) {
  if (sample.spacings.empty()) throw ConfigError("integral_spacing: empty sample");
  std::vector<double> s = sample.spacings;
  std::sort(s.begin(), s.end());
  IntegralSpacing out;
  const double n = static_cast<double>(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!(s[i] > 0.0)) { ++out.zero_spacings; continue; }
    // Ties report the count through the last of them.
    if (i + 1 < s.size() && s[i + 1] == s[i]) continue;
    out.log_s.push_back(std::log(s[i]));
    out.cumulative.push_back(static_cast<double>(i + 1) / n);
  }
  return out;
}

// ---------------------------------------------------------------------- ratios

struct RatioSample {
  std::vector<double> r;
  std::vector<double> rtilde;
  std::size_t excluded_degenerate = 0;  // s_{n-1} = 0: ratio undefined

  double mean_r() const {
    double s = 0.0;
    for (double v : r) s += v;
    return r.empty() ? 0.0 : s / static_cast<double>(r.size());
  }
  double mean_rtilde() const {
    double s = 0.0;
    for (double v : rtilde) s += v;
    return rtilde.empty() ? 0.0 : s / static_cast<double>(rtilde.size());
  }
};

/// r_n = s_n / s_{n-1} on raw (not unfolded) energies in the window.
inline RatioSample ratio_sample(std::span<const double> energies, IndexWindow window) {
  if (window.end > energies.size() || window.size() < 3)
    throw ConfigError("ratio_statistics: window needs >= 3 levels inside the sequence");
  RatioSample out;
  const auto e = energies.subspan(window.begin, window.size());
  for (std::size_t i = 2; i < e.size(); ++i) {
    const double s_prev = e[i - 1] - e[i - 2];
    const double s = e[i] - e[i - 1];
    if (s_prev < 0.0 || s < 0.0) throw ConfigError("ratio_statistics: energies must be ascending");
    if (s_prev == 0.0) { ++out.excluded_degenerate; continue; }
    const double r = s / s_prev;
    out.r.push_back(r);
    out.rtilde.push_back(r > 1.0 ? 1.0 / r : r);
  }
  return out;
}

inline RatioSample ratio_sample(std::span<const double> energies) {
  return ratio_sample(energies, IndexWindow{0, energies.size()});
}

struct RatioStatistics {
  RatioSample sample;
  Histogram pr;
  double mean_r = 0.0;
  double mean_rtilde = 0.0;
};

struct RatioOptions {
  double bin_width = 0.25;
  double r_max = 5.0;
};

inline RatioStatistics ratio_statistics(std::span<const double> energies, IndexWindow window,
                                        const RatioOptions& opt = {}) {
  RatioStatistics st;
  st.sample = ratio_sample(energies, window);
  st.pr = make_histogram(st.sample.r, 0.0, opt.r_max, opt.bin_width);
  st.mean_r = st.sample.mean_r();
  st.mean_rtilde = st.sample.mean_rtilde();
  return st;
}

// ----------------------------------------------- number variance and rigidity

struct CurvePoint {
  double L = 0.0;
  double value = 0.0;
};

namespace detail {

inline void require_span(std::span<const double> x, std::span<const double> L_grid) {
  if (x.size() < 2) throw ConfigError("spectral measure: need >= 2 unfolded levels");
  const double span = x.back() - x.front();
  for (double L : L_grid) {
    if (!(L > 0.0)) throw ConfigError("spectral measure: L must be positive");
    if (L > span / 10.0)
      throw ConfigError("spectral measure: L = " + std::to_string(L) +
                        " exceeds a tenth of the unfolded span " + std::to_string(span));
  }
}

}  // namespace detail

/// Sigma^2(L) = <(n(E, E+L) - L)^2>, E at the midpoints of a uniform grid of
/// the given stride over [x_0, x_last - L]. Midpoints keep E off the levels
/// of a rigid spectrum, where rounding would otherwise decide the count.
inline double number_variance_at(std::span<const double> x, double L, double stride) {
  const double start = x.front(), stop = x.back() - L;
  const auto steps = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor((stop - start) / stride)));
  std::size_t lo = 0, hi = 0;  // first index > E, first index > E + L
  double acc = 0.0;
  for (std::size_t k = 0; k < steps; ++k) {
    const double e = start + stride * (static_cast<double>(k) + 0.5);
    while (lo < x.size() && x[lo] <= e) ++lo;
    while (hi < x.size() && x[hi] <= e + L) ++hi;
    const double d = static_cast<double>(hi - lo) - L;
    acc += d * d;
  }
  return acc / static_cast<double>(steps);
}

inline std::vector<CurvePoint> number_variance(std::span<const double> unfolded,
                                               std::span<const double> L_grid,
                                               double stride_fraction = 0.25) {
  detail::require_span(unfolded, L_grid);
  std::vector<CurvePoint> out;
  for (double L : L_grid) out.push_back({L, number_variance_at(unfolded, L, stride_fraction * L)});
  return out;
}

/// Delta_3 on [a, a+L]: min over A, B of (1/L) int (N(E) - A E - B)^2 dE for
/// the exact staircase, with N counted from the window's left edge.
inline double delta3_window(std::span<const double> x, std::size_t first, double a, double L) {
  // Moments of the staircase n(y), y = E - a in [0, L].
  double i0 = 0.0, i1 = 0.0, i2 = 0.0;
  double y_prev = 0.0;
  double n = 0.0;
  std::size_t j = first;
  while (true) {
    const double y_next = (j < x.size() && x[j] - a < L) ? x[j] - a : L;
    if (y_next > y_prev) {
      const double w = y_next - y_prev;
      i0 += n * w;
      i1 += n * 0.5 * (y_next * y_next - y_prev * y_prev);
      i2 += n * n * w;
      y_prev = y_next;
    }
    if (y_next >= L || j >= x.size()) break;
    n += 1.0;
    ++j;
  }
  // Normal equations for A, B against 1 and y on [0, L].
  const double m00 = L, m01 = 0.5 * L * L, m11 = L * L * L / 3.0;
  const double det = m00 * m11 - m01 * m01;
  const double A = (m00 * i1 - m01 * i0) / det;
  const double B = (m11 * i0 - m01 * i1) / det;
  return std::max(0.0, (i2 - A * i1 - B * i0) / L);
}

inline std::vector<CurvePoint> delta3(std::span<const double> unfolded,
                                      std::span<const double> L_grid,
                                      double stride_fraction = 0.5) {
  detail::require_span(unfolded, L_grid);
  std::vector<CurvePoint> out;
  for (double L : L_grid) {
    const double stride = stride_fraction * L;
    const double start = unfolded.front(), stop = unfolded.back() - L;
    const auto steps = static_cast<std::size_t>(std::floor((stop - start) / stride));
    std::size_t first = 0;
    double acc = 0.0;
    for (std::size_t k = 0; k <= steps; ++k) {
      const double a = start + stride * static_cast<double>(k);
      while (first < unfolded.size() && unfolded[first] <= a) ++first;
      acc += delta3_window(unfolded, first, a, L);
    }
    out.push_back({L, acc / static_cast<double>(steps + 1)});
  }
  return out;
}

/// Delta_3(L) = (2/L^4) int_0^L (L^3 - 2 L^2 x + x^3) Sigma^2(x) dx, by
/// composite Simpson on `panels` (even) intervals.
template <class Sigma2>
double delta3_from_sigma2(double L, Sigma2&& sigma2, int panels = 200) {
  if (!(L > 0.0) || panels < 2) throw ConfigError("delta3_from_sigma2: need L > 0, panels >= 2");
  if (panels % 2) ++panels;
  const double h = L / panels;
  double s = 0.0;
  for (int k = 0; k <= panels; ++k) {
    const double x = h * k;
    const double kernel = L * L * L - 2.0 * L * L * x + x * x * x;
    const double w = (k == 0 || k == panels) ? 1.0 : (k % 2 ? 4.0 : 2.0);
    s += w * kernel * (k == 0 ? 0.0 : static_cast<double>(sigma2(x)));
  }
  return 2.0 / (L * L * L * L) * s * h / 3.0;
}

inline std::vector<CurvePoint> delta3_via_sigma2(std::span<const double> unfolded,
                                                 std::span<const double> L_grid,
                                                 double stride_fraction = 0.25, int panels = 200) {
  detail::require_span(unfolded, L_grid);
  std::vector<CurvePoint> out;
  for (double L : L_grid)
    out.push_back({L, delta3_from_sigma2(
                          L,
                          [&](double x) {
                            return number_variance_at(unfolded, x, stride_fraction * x);
                          },
                          panels)});
  return out;
}

// -------------------------------------------------------- synthetic spectra

enum class SyntheticKind { poisson, picket, goe, semipoisson };

inline SyntheticKind parse_synthetic_kind(const std::string& s) {
  if (s == "poisson") return SyntheticKind::poisson;
  if (s == "picket") return SyntheticKind::picket;
  if (s == "goe") return SyntheticKind::goe;
  if (s == "semipoisson") return SyntheticKind::semipoisson;
  throw ConfigError("unknown synthetic kind '" + s + "'");
}

inline const char* to_string(SyntheticKind k) {
  switch (k) {
    case SyntheticKind::poisson: return "poisson";
    case SyntheticKind::picket: return "picket";
    case SyntheticKind::goe: return "goe";
    case SyntheticKind::semipoisson: return "semipoisson";
  }
  return "?";
}

/// All synthetic randomness: std::mt19937_64 seeded with the config seed.
using Rng = std::mt19937_64;

inline std::vector<double> poisson_levels(std::size_t size, Rng& rng) {
  std::exponential_distribution<double> ex(1.0);
  std::vector<double> e(size);
  double acc = 0.0;
  for (double& v : e) v = (acc += ex(rng));
  return e;
}

/// Eigenvalues of a real symmetric matrix with N(0, 1) diagonal and
/// N(0, 1/2) off-diagonal entries.
inline std::vector<double> goe_levels(std::size_t dim, Rng& rng) {
  const auto n = static_cast<Eigen::Index>(dim);
  std::normal_distribution<double> g(0.0, 1.0);
  const double off = std::sqrt(0.5);
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    m(i, i) = g(rng);
    for (Eigen::Index j = i + 1; j < n; ++j) m(i, j) = m(j, i) = off * g(rng);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("goe_levels: eigensolver failed");
  return {es.eigenvalues().data(), es.eigenvalues().data() + n};
}

/// One realisation drawn from `rng`; successive calls give independent
/// realisations.
inline std::vector<double> synthetic_levels(SyntheticKind kind, std::size_t size, Rng& rng) {
  if (size < 10) throw ConfigError("synthetic_ensemble: size must be >= 10");
  switch (kind) {
    case SyntheticKind::poisson: return poisson_levels(size, rng);
    case SyntheticKind::picket: {
      std::vector<double> e(size);
      for (std::size_t i = 0; i < size; ++i) e[i] = static_cast<double>(i + 1);
      return e;
    }
    case SyntheticKind::goe: return goe_levels(size, rng);
    case SyntheticKind::semipoisson: {
      // Every second level of a unit-density Poisson sequence, halved.
      const auto p = poisson_levels(2 * size, rng);
      std::vector<double> e(size);
      for (std::size_t i = 0; i < size; ++i) e[i] = 0.5 * p[2 * i + 1];
      return e;
    }
  }
  return {};
}

inline std::vector<double> synthetic_levels(SyntheticKind kind, std::size_t size,
                                            std::uint64_t seed) {
  Rng rng(seed);
  return synthetic_levels(kind, size, rng);
}

}  // namespace phstat
