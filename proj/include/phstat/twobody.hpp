#pragma once

// Zero-energy two-body scattering for a hard core plus -C6/r^6 tail.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "phstat/error.hpp"
#include "phstat/units.hpp"

namespace phstat {

/// How the hard core enters hyperangular integrals. The two-body scattering
/// problem always uses the exact infinite core (u(r_c) = 0).
enum class CoreModel {
  excluded,        // integrand restricted to r_ij > r_c
  finite_barrier,  // V = core_height for r_ij <= r_c
};

struct TwoBodyPotential {
  double r_c = 0.0;          // A
  double c6 = 0.0;           // energy * A^6
  double core_height = 1e6;  // energy; used only with CoreModel::finite_barrier
  CoreModel core_model = CoreModel::excluded;
  UnitSystem units;

  /// -C6 / r^6, the attractive tail.
  double tail(double r) const { return -c6 / std::pow(r, 6.0); }

  /// Pair potential as seen by hyperangular quadrature.
  double operator()(double r) const {
    if (r <= r_c) return core_model == CoreModel::finite_barrier ? core_height : 0.0;
    return tail(r);
  }

  double core_radius() const { return r_c; }

  /// (C6 m / hbar^2)^(1/4): the van der Waals length of the tail.
  double tail_length() const {
    return c6 > 0.0 ? std::pow(c6 / units.hbar2_over_m, 0.25) : 0.0;
  }

  void validate() const {
    if (!(r_c > 0.0) || !(c6 >= 0.0) || !(core_height > 0.0) || !(units.hbar2_over_m > 0.0))
      throw ConfigError("TwoBodyPotential: need r_c > 0, C6 >= 0, core_height > 0");
  }
};

/// Builds the potential from C6 given in eV A^6.
inline TwoBodyPotential make_vdw_potential(double r_c, double c6_ev_a6, const UnitSystem& units) {
  TwoBodyPotential p;
  p.r_c = r_c;
  p.c6 = units.ev_to_internal(c6_ev_a6);
  p.core_height = units.kelvin_to_internal(1e6);
  p.units = units;
  p.validate();
  return p;
}

/// Radially graded integration grid: step h_min at the core edge, growing
/// geometrically by `growth` and limited to h_max and to `phase_step` times
/// the local wavelength / 2pi.
struct IntegrationGrid {
  double r_max = 0.0;
  double h_min = 0.0;
  double h_max = 0.0;
  double growth = 1.001;
  double phase_step = 0.02;
  double fit_fraction = 0.2;
};

inline IntegrationGrid default_grid(const TwoBodyPotential& pot) {
  pot.validate();
  const double h2m = pot.units.hbar2_over_m;
  const double scale = std::max(pot.r_c, pot.tail_length());
  IntegrationGrid g;
  g.r_max = pot.r_c + 50.0 * scale;
  const double k_core = std::sqrt(std::abs(pot.tail(pot.r_c)) / h2m);
  g.h_min = std::min(pot.r_c / 200.0, k_core > 0.0 ? g.phase_step / k_core : pot.r_c / 200.0);
  g.h_max = g.r_max / 4000.0;
  return g;
}

struct ScatteringResult {
  double a_s = 0.0;
  double matching_radius = 0.0;  // inner edge of the asymptotic fit window
  int node_count = 0;
  double fit_residual = 0.0;     // rms residual / rms(u) over the fit window
  IntegrationGrid grid;
  std::size_t steps = 0;
};

namespace detail {

// Integrates u'' = q(r) u from r_c with u = 0, u' = 1 by fixed-step RK4 on
// the graded grid; returns the sampled (r, u).
inline void integrate_zero_energy(const TwoBodyPotential& pot, const IntegrationGrid& g,
                                  std::vector<double>& rs, std::vector<double>& us) {
  const double inv_h2m = 1.0 / pot.units.hbar2_over_m;
  auto q = [&](double r) { return pot.tail(r) * inv_h2m; };
  rs.clear();
  us.clear();
  double r = pot.r_c, u = 0.0, du = 1.0;
  rs.push_back(r);
  us.push_back(u);
  double h = g.h_min;
  while (r < g.r_max) {
    const double k = std::sqrt(std::abs(q(r)));
    double step = std::min(h, g.h_max);
    if (k > 0.0) step = std::min(step, std::max(g.phase_step / k, g.h_min));
    step = std::min(step, g.r_max - r);
    const double k1u = du, k1d = q(r) * u;
    const double rm = r + 0.5 * step, qm = q(rm);
    const double k2u = du + 0.5 * step * k1d, k2d = qm * (u + 0.5 * step * k1u);
    const double k3u = du + 0.5 * step * k2d, k3d = qm * (u + 0.5 * step * k2u);
    const double k4u = du + step * k3d, k4d = q(r + step) * (u + step * k3u);
    u += step / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
    du += step / 6.0 * (k1d + 2.0 * k2d + 2.0 * k3d + k4d);
    r += step;
    if (!std::isfinite(u) || !std::isfinite(du))
      throw NumericalError("scattering_length: non-finite solution at r = " + std::to_string(r));
    rs.push_back(r);
    us.push_back(u);
    h *= g.growth;
  }
}

}  // namespace detail

/// Zero-energy scattering length from the asymptote u(r) = C (r - a_s),
/// least-squares fitted over the outer fit_fraction of the grid.
inline ScatteringResult scattering_length(const TwoBodyPotential& pot, const IntegrationGrid& grid,
                                          double max_residual = 1e-5) {
  pot.validate();
  if (!(grid.r_max > pot.r_c) || !(grid.h_min > 0.0) || !(grid.h_max >= grid.h_min))
    throw ConfigError("scattering_length: invalid integration grid");
  std::vector<double> rs, us;
  detail::integrate_zero_energy(pot, grid, rs, us);

  ScatteringResult res;
  res.grid = grid;
  res.steps = rs.size() - 1;
  res.matching_radius = grid.r_max - grid.fit_fraction * (grid.r_max - pot.r_c);

  // Straight-line fit in centred coordinates.
  double n = 0, sr = 0, su = 0;
  for (std::size_t i = 0; i < rs.size(); ++i)
    if (rs[i] >= res.matching_radius) { n += 1; sr += rs[i]; su += us[i]; }
  if (n < 8) throw NumericalError("scattering_length: fit window has too few points");
  const double rbar = sr / n, ubar = su / n;
  double srr = 0, sru = 0, suu = 0;
  for (std::size_t i = 0; i < rs.size(); ++i) {
    if (rs[i] < res.matching_radius) continue;
    const double dr = rs[i] - rbar, du = us[i] - ubar;
    srr += dr * dr;
    sru += dr * du;
    suu += us[i] * us[i];
  }
  const double slope = sru / srr;
  const double intercept = ubar - slope * rbar;
  double ss = 0;
  for (std::size_t i = 0; i < rs.size(); ++i) {
    if (rs[i] < res.matching_radius) continue;
    const double e = us[i] - (intercept + slope * rs[i]);
    ss += e * e;
  }
  res.fit_residual = std::sqrt(ss / suu);
  if (!(res.fit_residual <= max_residual))
    throw NumericalError("scattering_length: asymptotic fit residual " +
                         std::to_string(res.fit_residual) + " above tolerance (grid too short?)");
  res.a_s = -intercept / slope;

  int nodes = 0;
  for (std::size_t i = 1; i + 1 < us.size(); ++i)
    if ((us[i] > 0.0 && us[i + 1] < 0.0) || (us[i] < 0.0 && us[i + 1] > 0.0)) ++nodes;
  // Asymptotic zero beyond the grid.
  if (res.a_s > grid.r_max) ++nodes;
  res.node_count = nodes;
  return res;
}

inline ScatteringResult scattering_length(const TwoBodyPotential& pot) {
  return scattering_length(pot, default_grid(pot));
}

inline int count_dimer_bound_states(const TwoBodyPotential& pot) {
  return scattering_length(pot).node_count;
}

struct TuneOptions {
  double rel_tolerance = 1e-4;  // required |a_s - target| / target
  double core_height = 1e6;     // K
  CoreModel core_model = CoreModel::excluded;
};

/// Finds r_c with a_s(r_c) = target_as on the branch holding exactly
/// target_nodes dimer bound states. c6 in internal energy * A^6.
inline TwoBodyPotential tune_hardcore(double c6, double target_as, int target_nodes,
                                      const UnitSystem& units, const TuneOptions& opt = {}) {
  if (!(target_as > 0.0)) throw ConfigError("tune_hardcore: target a_s must be positive");
  if (target_nodes < 0) throw ConfigError("tune_hardcore: target_nodes must be >= 0");
  if (!(c6 >= 0.0)) throw ConfigError("tune_hardcore: C6 must be >= 0");

  TwoBodyPotential pot;
  pot.c6 = c6;
  pot.units = units;
  pot.core_height = units.kelvin_to_internal(opt.core_height);
  pot.core_model = opt.core_model;

  if (c6 == 0.0) {
    // Hard sphere: a_s = r_c, no bound states.
    if (target_nodes != 0)
      throw NumericalError("tune_hardcore: pure hard sphere has no bound states");
    pot.r_c = target_as;
    return pot;
  }

  auto at = [&](double rc) {
    TwoBodyPotential p = pot;
    p.r_c = rc;
    return scattering_length(p);
  };
  const double beta6 = std::pow(c6 / units.hbar2_over_m, 0.25);

  // Walk r_c downward until the branch below the requested one is reached.
  double r_top = 2.0 * beta6;
  while (at(r_top).node_count > 0) r_top *= 1.5;
  double r = r_top;
  double r_prev = r_top;
  int count = 0;
  while (count <= target_nodes) {
    r_prev = r;
    r *= 0.95;
    if (r < 1e-3 * beta6)
      throw NumericalError("tune_hardcore: could not bracket branch " + std::to_string(target_nodes));
    count = at(r).node_count;
  }

  // Boundary where node_count goes from > target to <= target.
  auto edge = [&](double lo, double hi, int threshold) {
    // node_count(lo) > threshold >= node_count(hi)
    for (int it = 0; it < 200 && hi - lo > 1e-13 * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (at(mid).node_count > threshold) lo = mid; else hi = mid;
    }
    return std::pair{lo, hi};
  };
  const auto [below_lo, lower_edge] = edge(r, r_prev, target_nodes);
  (void)below_lo;

  double upper_edge;
  if (target_nodes == 0) {
    upper_edge = std::max(r_top, 2.0 * target_as + 10.0 * beta6);
  } else {
    double hi = r_prev;
    while (at(hi).node_count >= target_nodes) hi /= 0.95;
    upper_edge = edge(lower_edge, hi, target_nodes - 1).first;
  }

  // a_s(r_c) increases monotonically across the branch.
  double lo = lower_edge * (1.0 + 1e-9), hi = upper_edge * (1.0 - 1e-9);
  auto f = [&](double rc) {
    const auto s = at(rc);
    if (s.node_count != target_nodes)
      throw NumericalError("tune_hardcore: left the requested branch during bisection");
    return s.a_s - target_as;
  };
  double flo = f(lo), fhi = f(hi);
  if (!(flo < 0.0 && fhi > 0.0))
    throw NumericalError("tune_hardcore: target a_s unreachable on branch " +
                         std::to_string(target_nodes));
  double mid = 0.5 * (lo + hi), fmid = 0.0;
  for (int it = 0; it < 200; ++it) {
    mid = 0.5 * (lo + hi);
    fmid = f(mid);
    if (std::abs(fmid) < 1e-3 * opt.rel_tolerance * target_as || hi - lo < 1e-14 * mid) break;
    if (fmid < 0.0) lo = mid; else hi = mid;
  }
  if (!(std::abs(fmid) < opt.rel_tolerance * target_as))
    throw NumericalError("tune_hardcore: bisection did not reach tolerance");
  pot.r_c = mid;
  return pot;
}

}  // namespace phstat
