#pragma once

// Bound states of -(hbar^2/m) d^2/dr^2 + omega(r) with Dirichlet walls, by
// three-point finite differences on a uniform grid and Sturm-sequence
// bisection of the resulting symmetric tridiagonal matrix.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "phstat/adiabatic.hpp"
#include "phstat/error.hpp"

namespace phstat {

/// Natural cubic spline through (x_i, y_i), x strictly ascending.
class CubicSpline {
 public:
  CubicSpline() = default;
  CubicSpline(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size();
    if (n < 2 || y_.size() != n) throw ConfigError("CubicSpline: need >= 2 matching points");
    m_.assign(n, 0.0);
    if (n == 2) return;
    // Tridiagonal system for the second derivatives, m_0 = m_{n-1} = 0.
    std::vector<double> c(n, 0.0), d(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const double h0 = x_[i] - x_[i - 1], h1 = x_[i + 1] - x_[i];
      if (!(h0 > 0.0) || !(h1 > 0.0)) throw ConfigError("CubicSpline: x must be strictly ascending");
      const double a = h0, b = 2.0 * (h0 + h1), cc = h1;
      const double rhs = 6.0 * ((y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0);
      const double denom = b - a * c[i - 1];
      c[i] = cc / denom;
      d[i] = (rhs - a * d[i - 1]) / denom;
    }
    for (std::size_t i = n - 2; i >= 1; --i) m_[i] = d[i] - c[i] * m_[i + 1];
  }

  double front() const { return x_.front(); }
  double back() const { return x_.back(); }

  double operator()(double x) const {
    if (x <= x_.front()) return y_.front();
    if (x >= x_.back()) return y_.back();
    const auto it = std::upper_bound(x_.begin(), x_.end(), x);
    const std::size_t i = static_cast<std::size_t>(it - x_.begin()) - 1;
    const double h = x_[i + 1] - x_[i];
    const double a = (x_[i + 1] - x) / h, b = (x - x_[i]) / h;
    return a * y_[i] + b * y_[i + 1] +
           ((a * a * a - a) * m_[i] + (b * b * b - b) * m_[i + 1]) * h * h / 6.0;
  }

 private:
  std::vector<double> x_, y_, m_;
};

/// omega(r) interpolated by a cubic spline in ln r.
class OmegaInterpolant {
 public:
  explicit OmegaInterpolant(const EffectivePotential& ep) {
    std::vector<double> lx(ep.r_grid.size());
    for (std::size_t i = 0; i < lx.size(); ++i) lx[i] = std::log(ep.r_grid[i]);
    spline_ = CubicSpline(std::move(lx), ep.omega);
  }
  double operator()(double r) const { return spline_(std::log(r)); }

 private:
  CubicSpline spline_;
};

/// Symmetric tridiagonal matrix with diagonal d and constant off-diagonal e.
struct UniformTridiagonal {
  std::vector<double> diag;
  double off = 0.0;

  /// Number of eigenvalues strictly below x (Sturm sequence count).
  std::size_t count_below(double x) const {
    std::size_t c = 0;
    count_below_batch(&x, &c, 1);
    return c;
  }

  /// Sturm counts for up to batch_width shifts in one sweep; the pivot
  /// recurrences are independent, so interleaving them hides division latency.
  static constexpr std::size_t batch_width = 8;
  void count_below_batch(const double* xs, std::size_t* counts, std::size_t m) const {
    const double e2 = off * off;
    const double tiny = std::numeric_limits<double>::min() * 1e6;
    double q[batch_width], x[batch_width];
    std::size_t c[batch_width] = {};
    for (std::size_t j = 0; j < batch_width; ++j) {
      x[j] = xs[j < m ? j : 0];
      q[j] = 1.0;
    }
    for (std::size_t i = 0; i < diag.size(); ++i) {
      const double d = diag[i];
      const double f = i == 0 ? 0.0 : e2;
      for (std::size_t j = 0; j < batch_width; ++j) {
        double v = d - x[j] - f / q[j];
        if (v == 0.0) v = -tiny;
        c[j] += v < 0.0;
        q[j] = v;
      }
    }
    for (std::size_t j = 0; j < m; ++j) counts[j] = c[j];
  }

  double lower_bound() const {
    return *std::min_element(diag.begin(), diag.end()) - 2.0 * std::abs(off);
  }

  /// The lowest min(limit, count_below(upper)) eigenvalues, ascending, each
  /// bracketed to within abs_tol + rel_tol |E|.
  std::vector<double> eigenvalues_below(double upper, std::size_t limit, double rel_tol = 1e-13,
                                        double abs_tol = 0.0) const {
    const double lo = lower_bound();
    if (!(upper > lo)) return {};
    const std::size_t c_upper = count_below(upper);
    const std::size_t total = std::min(limit, c_upper);
    std::vector<double> out(total, 0.0);
    if (total == 0) return out;
    // Sturm counts are exact only up to rounding of order eps * ||T||.
    double norm = 0.0;
    for (double d : diag) norm = std::max(norm, std::abs(d));
    norm += 2.0 * std::abs(off);
    const double floor_tol = std::max(abs_tol, 4.0 * std::numeric_limits<double>::epsilon() * norm);
    // Interval splitting; each interval carries its counts so one Sturm
    // sweep serves every eigenvalue it separates.
    struct Interval {
      double lo, hi;
      std::size_t clo, chi;
    };
    std::vector<Interval> pending{{lo, upper, 0, c_upper}};
    std::vector<Interval> batch;
    while (!pending.empty()) {
      batch.clear();
      while (!pending.empty() && batch.size() < batch_width) {
        const Interval iv = pending.back();
        pending.pop_back();
        if (iv.clo >= total || iv.chi == iv.clo) continue;
        const double width_tol = floor_tol + rel_tol * std::max(std::abs(iv.lo), std::abs(iv.hi));
        if (iv.hi - iv.lo <= width_tol) {
          for (std::size_t k = iv.clo; k < std::min(iv.chi, total); ++k)
            out[k] = 0.5 * (iv.lo + iv.hi);
          continue;
        }
        batch.push_back(iv);
      }
      if (batch.empty()) continue;
      double mids[batch_width];
      std::size_t cm[batch_width];
      for (std::size_t j = 0; j < batch.size(); ++j) mids[j] = 0.5 * (batch[j].lo + batch[j].hi);
      count_below_batch(mids, cm, batch.size());
      for (std::size_t j = 0; j < batch.size(); ++j) {
        pending.push_back({mids[j], batch[j].hi, cm[j], batch[j].chi});
        pending.push_back({batch[j].lo, mids[j], batch[j].clo, cm[j]});
      }
    }
    return out;
  }
};

/// -(hbar^2/m) d^2/dr^2 + w(r) on n interior points of (r_min, r_max).
template <class W>
UniformTridiagonal fd_hamiltonian(const W& w, double r_min, double r_max, std::size_t n,
                                  double hbar2_over_m) {
  if (!(r_max > r_min) || n < 3) throw ConfigError("fd_hamiltonian: need r_max > r_min, n >= 3");
  const double h = (r_max - r_min) / static_cast<double>(n + 1);
  const double t = hbar2_over_m / (h * h);
  UniformTridiagonal m;
  m.diag.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double r = r_min + h * static_cast<double>(i + 1);
    m.diag[i] = 2.0 * t + static_cast<double>(w(r));
  }
  m.off = -t;
  return m;
}

struct SolverGrid {
  double r_min = 0.0;
  double r_max = 0.0;
  std::size_t n_points = 0;  // interior points of the coarse grid

  double step() const { return (r_max - r_min) / static_cast<double>(n_points + 1); }
};

struct SolverOptions {
  /// Unset fields are filled from the potential: r_min/r_max span its
  /// sampling grid and the step resolves the deepest local wavenumber k
  /// with h = 1 / (steps_per_radian k).
  std::optional<double> r_min;
  std::optional<double> r_max;
  std::optional<std::size_t> n_points;
  double steps_per_radian = 20.0;
  std::size_t max_points = 4'000'000;
  /// Retained levels lie this many local mean spacings below omega(r_max).
  double wall_spacings = 3.0;
  /// Retained levels have Richardson estimate below this fraction of the
  /// local mean spacing.
  double convergence_fraction = 0.05;
};

struct LevelSequence {
  int n_particles = 0;
  int l = 0;
  std::vector<double> energies;
  std::vector<double> convergence;  // Richardson estimate per level
  SolverGrid grid;
  double wall_threshold = 0.0;      // omega(r_max)
  std::size_t candidates = 0;       // eigenvalues below the wall threshold
  std::size_t dropped_wall = 0;     // too close to the wall threshold
  std::size_t dropped_unconverged = 0;
  bool truncated_by_limit = false;
  std::vector<std::string> warnings;

  std::size_t size() const { return energies.size(); }
  bool empty() const { return energies.empty(); }
};

namespace detail {

// Mean of the spacings adjacent to level i.
inline double local_spacing(const std::vector<double>& e, std::size_t i) {
  if (e.size() < 2) return std::numeric_limits<double>::infinity();
  if (i == 0) return e[1] - e[0];
  if (i + 1 == e.size()) return e[i] - e[i - 1];
  return 0.5 * (e[i + 1] - e[i - 1]);
}

}  // namespace detail

/// Levels of -(hbar^2/m) d^2/dr^2 + w(r) below w(r_max): coarse grid plus a
/// halved-step grid; energies from the fine grid, convergence estimate
/// |E_h - E_{h/2}| / 3.
template <class W>
LevelSequence solve_levels(const W& w, const SolverGrid& grid, double hbar2_over_m,
                           std::size_t count_limit, const SolverOptions& opt = {}) {
  if (count_limit < 1) throw ConfigError("bound_states: count_limit must be >= 1");
  if (!(hbar2_over_m > 0.0)) throw ConfigError("bound_states: hbar^2/m must be positive");
  if (grid.n_points < 3 || 2 * grid.n_points + 1 > opt.max_points)
    throw ConfigError("bound_states: solver grid of " + std::to_string(grid.n_points) +
                      " points outside [3, max_points/2]");
  LevelSequence seq;
  seq.grid = grid;
  seq.wall_threshold = static_cast<double>(w(grid.r_max));

  const auto coarse = fd_hamiltonian(w, grid.r_min, grid.r_max, grid.n_points, hbar2_over_m);
  const auto fine = fd_hamiltonian(w, grid.r_min, grid.r_max, 2 * grid.n_points + 1, hbar2_over_m);
  // A few spare levels above the limit so the wall rule sees local spacings.
  const std::size_t want = count_limit + 8;
  const auto ef = fine.eigenvalues_below(seq.wall_threshold, want);
  const auto ec = coarse.eigenvalues_below(seq.wall_threshold, want);
  seq.candidates = fine.count_below(seq.wall_threshold);
  if (ef.empty()) {
    seq.warnings.push_back("no bound states below omega(r_max)");
    return seq;
  }

  // Wall rule, against the mean spacing of the top few candidates.
  std::size_t keep = ef.size();
  if (seq.candidates <= want) {
    const std::size_t m = std::min<std::size_t>(ef.size() - 1, 5);
    const double top_spacing =
        m > 0 ? (ef.back() - ef[ef.size() - 1 - m]) / static_cast<double>(m)
              : std::numeric_limits<double>::infinity();
    while (keep > 0 && ef[keep - 1] > seq.wall_threshold - opt.wall_spacings * top_spacing) --keep;
    seq.dropped_wall = ef.size() - keep;
  }

  for (std::size_t i = 0; i < keep; ++i) {
    const double est = i < ec.size() ? std::abs(ec[i] - ef[i]) / 3.0
                                     : std::numeric_limits<double>::infinity();
    if (!(est < opt.convergence_fraction * detail::local_spacing(ef, i))) {
      seq.dropped_unconverged = keep - i;
      seq.warnings.push_back("levels from n = " + std::to_string(i) +
                             " dropped: grid-doubling shift above " +
                             std::to_string(opt.convergence_fraction) + " local spacings");
      break;
    }
    if (seq.energies.size() == count_limit) break;
    seq.energies.push_back(ef[i]);
    seq.convergence.push_back(est);
  }
  if (seq.energies.size() == count_limit && seq.candidates > count_limit) seq.truncated_by_limit = true;
  if (seq.energies.size() < count_limit && seq.candidates >= count_limit)
    seq.warnings.push_back("count_limit " + std::to_string(count_limit) + " exceeds the " +
                           std::to_string(seq.energies.size()) + " converged levels");
  if (seq.energies.empty()) seq.warnings.push_back("no converged bound states retained");
  return seq;
}

/// Default solver grid for an effective potential.
inline SolverGrid default_solver_grid(const EffectivePotential& ep, double hbar2_over_m,
                                      const SolverOptions& opt = {}) {
  SolverGrid g;
  g.r_min = opt.r_min.value_or(ep.r_grid.front());
  g.r_max = opt.r_max.value_or(ep.r_grid.back());
  if (g.r_min < ep.r_grid.front() || g.r_max > ep.r_grid.back() || !(g.r_max > g.r_min))
    throw ConfigError("bound_states: solver range must lie inside the omega sampling grid");
  if (opt.n_points) {
    g.n_points = *opt.n_points;
  } else {
    const double depth = std::max(0.0, ep.omega.back() - ep.min_value());
    const double k = std::sqrt(depth / hbar2_over_m);
    const double h = k > 0.0 ? 1.0 / (opt.steps_per_radian * k) : (g.r_max - g.r_min) / 1000.0;
    g.n_points = std::max<std::size_t>(
        1000, static_cast<std::size_t>(std::ceil((g.r_max - g.r_min) / h)));
  }
  return g;
}

inline LevelSequence bound_states(const EffectivePotential& ep, std::size_t count_limit,
                                  const UnitSystem& units, const SolverOptions& opt = {}) {
  if (ep.size() < 4 || ep.omega.size() != ep.size())
    throw ConfigError("bound_states: effective potential needs >= 4 samples");
  const double h2m = units.hbar2_over_m;
  const OmegaInterpolant w(ep);
  LevelSequence seq = solve_levels(w, default_solver_grid(ep, h2m, opt), h2m, count_limit, opt);
  seq.n_particles = ep.spec.n_particles;
  seq.l = ep.spec.l;
  return seq;
}

struct MultipolarOptions {
  int l_max = 0;
  std::size_t count_limit = 1000;
  AdiabaticOptions adiabatic;
  SolverOptions solver;
};

/// One independently solved LevelSequence per l = 0 .. l_max.
inline std::vector<LevelSequence> multipolar_spectrum(int n_particles, int k_max,
                                                      const TwoBodyPotential& pot,
                                                      const std::vector<double>& r_grid,
                                                      const MultipolarOptions& opt,
                                                      const OverlapProvider& provider =
                                                          analytic_overlap_factors) {
  if (opt.l_max < 0) throw ConfigError("multipolar_spectrum: l_max must be >= 0");
  std::vector<LevelSequence> out;
  for (int l = 0; l <= opt.l_max; ++l) {
    const BasisSpec spec(n_particles, l, k_max);
    const auto f = overlap_factors(spec, provider);
    const auto ep = effective_potential(spec, pot, f, r_grid, opt.adiabatic);
    if (ep.min_value() >= ep.omega.back()) {
      LevelSequence empty;
      empty.n_particles = n_particles;
      empty.l = l;
      empty.warnings.push_back("omega_l has no well below its r_max value");
      out.push_back(std::move(empty));
      continue;
    }
    out.push_back(bound_states(ep, opt.count_limit, pot.units, opt.solver));
  }
  return out;
}

}  // namespace phstat
