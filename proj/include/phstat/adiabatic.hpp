#pragma once

// Hyperangular potential matrix at fixed hyperradius and the adiabatic
// effective potentials omega_l(r) obtained from it.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "phstat/error.hpp"
#include "phstat/ph_basis.hpp"
#include "phstat/quadrature.hpp"
#include "phstat/twobody.hpp"

namespace phstat {

/// A pair potential usable in hyperangular integrals: V(r_ij) plus the radius
/// at which it may be discontinuous. The quadrature is graded from that
/// radius outward, so a smooth short-range potential should report its range
/// here; 0 selects a single Gauss-Jacobi rule, which cannot see structure at
/// r_ij << r / order.
template <class P>
concept PairPotential = requires(const P& p, double r) {
  { p(r) } -> std::convertible_to<double>;
  { p.core_radius() } -> std::convertible_to<double>;
};

struct PotentialMatrix {
  double r = 0.0;
  BasisSpec spec;
  /// f_K V_KK' f_K' plus the hypercentrifugal diagonal.
  Eigen::MatrixXd entries;
  /// Bare V_KK'(r) before the overlap factors.
  Eigen::MatrixXd potential;
  /// max |dV| / max |V| on doubling the quadrature order; negative if unchecked.
  double quadrature_shift = -1.0;
};

struct QuadratureOptions {
  int order = 0;               // 0 selects default_quadrature_order(spec)
  double panel_ratio = 2.0;    // geometric panel growth in (1+z) beyond the core edge
  bool check_convergence = false;
  double tolerance = 1e-6;
};

/// Integrates sum_q w_q V(r_ij(z_q)) B_K(z_q) B_K'(z_q) over z in [-1,1], with
/// Gauss-Jacobi rules on the panels touching z = +-1 and Gauss-Legendre in
/// between. The interval is split at the core edge z_c = 2 (r_c/r)^2 - 1 and
/// graded geometrically in (1+z) above it, where the tail is steep.
class HyperangularQuadrature {
 public:
  HyperangularQuadrature(const BasisSpec& spec, int order)
      : spec_(spec),
        order_(order > 0 ? order : default_quadrature_order(spec)),
        full_(gauss_jacobi(order_, spec.alpha(), spec.beta())),
        upper_(gauss_jacobi(order_, spec.alpha(), 0.0)),
        lower_(gauss_jacobi(order_, 0.0, spec.beta())),
        legendre_(gauss_legendre(order_)) {}

  int order() const { return order_; }
  const BasisSpec& spec() const { return spec_; }

  /// Nodes and full weights (including w(z)) for a split at core radius
  /// fraction x_c = r_c / r and the given panel ratio.
  void nodes(double x_c, double panel_ratio, std::vector<double>& z,
             std::vector<double>& w) const {
    z.clear();
    w.clear();
    const double a = spec_.alpha(), b = spec_.beta();
    if (!(x_c > 0.0) || x_c >= 1.0) {
      z = full_.nodes;
      w = full_.weights;
      return;
    }
    const double zc = 2.0 * x_c * x_c - 1.0;
    const double sc = 2.0 * x_c * x_c;  // 1 + z_c
    // Core side [-1, z_c]: (1+z)^beta carried by the rule.
    {
      const double scale = std::pow(0.5 * sc, b + 1.0);
      for (std::size_t i = 0; i < lower_.size(); ++i) {
        const double zi = -1.0 + 0.5 * sc * (lower_.nodes[i] + 1.0);
        z.push_back(zi);
        w.push_back(scale * lower_.weights[i] * std::pow(1.0 - zi, a));
      }
    }
    // Tail side: panels [s, ratio*s] in s = 1+z while s < 1, then [z_a, 1].
    double s = sc;
    while (s * panel_ratio < 1.0) {
      const double lo = s - 1.0, hi = s * panel_ratio - 1.0;
      const auto m = mapped(legendre_, lo, hi);
      for (std::size_t i = 0; i < m.size(); ++i) {
        z.push_back(m.nodes[i]);
        w.push_back(m.weights[i] * std::pow(1.0 - m.nodes[i], a) * std::pow(1.0 + m.nodes[i], b));
      }
      s *= panel_ratio;
    }
    const double za = std::max(s - 1.0, zc);
    const double scale = std::pow(0.5 * (1.0 - za), a + 1.0);
    for (std::size_t i = 0; i < upper_.size(); ++i) {
      const double zi = za + 0.5 * (1.0 - za) * (upper_.nodes[i] + 1.0);
      z.push_back(zi);
      w.push_back(scale * upper_.weights[i] * std::pow(1.0 + zi, b));
    }
  }

  /// Bare V_KK'(r) for a pair potential.
  template <PairPotential P>
  Eigen::MatrixXd potential(double r, const P& pot, double panel_ratio = 2.0) const {
    const double rc = static_cast<double>(pot.core_radius());
    nodes(rc > 0.0 ? rc / r : 0.0, panel_ratio, z_, w_);
    const int nk = spec_.size();
    const auto nq = static_cast<Eigen::Index>(z_.size());
    Eigen::MatrixXd basis(nq, nk);
    Eigen::VectorXd wv(nq);
    std::vector<double> row(nk);
    for (Eigen::Index q = 0; q < nq; ++q) {
      basis_values(spec_, z_[q], row);
      for (int k = 0; k < nk; ++k) basis(q, k) = row[k];
      const double rij = r * std::sqrt(0.5 * (1.0 + z_[q]));
      wv(q) = w_[q] * static_cast<double>(pot(rij));
    }
    Eigen::MatrixXd m = basis.transpose() * wv.asDiagonal() * basis;
    return 0.5 * (m + m.transpose());
  }

 private:
  BasisSpec spec_;
  int order_;
  QuadratureRule full_, upper_, lower_, legendre_;
  mutable std::vector<double> z_, w_;
};

namespace detail {
inline double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }
}  // namespace detail

template <PairPotential P>
PotentialMatrix potential_matrix(double r, const BasisSpec& spec, const P& pot,
                                 const OverlapFactors& f, double hbar2_over_m,
                                 const QuadratureOptions& opt = {}) {
  if (!(r > 0.0)) throw ConfigError("potential_matrix: r must be positive");
  spec.validate();
  if (f.k_max() != spec.k_max) throw ConfigError("potential_matrix: overlap factors size mismatch");
  const HyperangularQuadrature quad(spec, opt.order);
  PotentialMatrix pm;
  pm.r = r;
  pm.spec = spec;
  pm.potential = quad.potential(r, pot, opt.panel_ratio);
  if (opt.check_convergence) {
    const HyperangularQuadrature fine(spec, 2 * quad.order());
    const Eigen::MatrixXd v2 = fine.potential(r, pot, opt.panel_ratio);
    const double scale = std::max(detail::max_abs(v2), 1e-300);
    pm.quadrature_shift = detail::max_abs(v2 - pm.potential) / scale;
    if (pm.quadrature_shift > opt.tolerance)
      throw NumericalError("potential_matrix: quadrature not converged at r = " +
                           std::to_string(r) + " (shift " + std::to_string(pm.quadrature_shift) +
                           ")");
  }
  const int nk = spec.size();
  pm.entries.resize(nk, nk);
  for (int i = 0; i < nk; ++i)
    for (int j = 0; j < nk; ++j) pm.entries(i, j) = f.f[i] * pm.potential(i, j) * f.f[j];
  for (int k = 0; k < nk; ++k) pm.entries(k, k) += hbar2_over_m / (r * r) * spec.centrifugal(k);
  return pm;
}

inline PotentialMatrix potential_matrix(double r, const BasisSpec& spec,
                                        const TwoBodyPotential& pot, const OverlapFactors& f,
                                        const QuadratureOptions& opt = {}) {
  return potential_matrix(r, spec, pot, f, pot.units.hbar2_over_m, opt);
}

enum class ConstructionMode { full_diagonalization, diagonal_only };

inline const char* to_string(ConstructionMode m) {
  return m == ConstructionMode::full_diagonalization ? "full-diagonalization" : "diagonal-only";
}

struct EffectivePotential {
  BasisSpec spec;
  std::vector<double> r_grid;
  std::vector<double> omega;
  /// Lowest eigenvector chi_K0(r) per grid point (full diagonalization only).
  std::vector<std::vector<double>> channel;
  ConstructionMode mode = ConstructionMode::full_diagonalization;
  /// Diagonal-only: index K of the minimal diagonal entry per grid point.
  std::vector<int> min_k;
  /// Grid points where the minimal diagonal entry was not K = 0.
  int non_k0_minima = 0;
  /// Largest quadrature shift seen at the sampled check points.
  double max_quadrature_shift = 0.0;
  double hbar2_over_m = 0.0;

  std::size_t size() const { return r_grid.size(); }

  /// omega * m r^2 / hbar^2 at the last grid point divided by L(L+1).
  double asymptotic_ratio() const {
    const double r = r_grid.back();
    const double L = spec.calL();
    return omega.back() * r * r / hbar2_over_m / (L * (L + 1.0));
  }

  std::size_t argmin() const {
    return static_cast<std::size_t>(std::min_element(omega.begin(), omega.end()) - omega.begin());
  }
  double min_value() const { return omega[argmin()]; }
};

/// `count` log-spaced points on [lo, hi].
inline std::vector<double> log_grid(double lo, double hi, int count) {
  if (!(lo > 0.0) || !(hi > lo) || count < 2) throw ConfigError("log_grid: need 0 < lo < hi, count >= 2");
  std::vector<double> g(count);
  const double a = std::log(lo), b = std::log(hi);
  for (int i = 0; i < count; ++i) g[i] = std::exp(a + (b - a) * i / (count - 1));
  g.front() = lo;
  g.back() = hi;
  return g;
}

/// 400 log-spaced points from 0.3 r_c to 1e4 A.
inline std::vector<double> default_r_grid(const TwoBodyPotential& pot) {
  return log_grid(0.3 * pot.r_c, 1e4, 400);
}

struct AdiabaticOptions {
  QuadratureOptions quadrature;
  /// Force a construction mode; by default l = 0 is fully diagonalised and
  /// l > 0 uses the diagonal-only prescription.
  std::optional<ConstructionMode> mode;
  /// Number of evenly spread grid points where quadrature convergence is checked.
  int convergence_checks = 4;
};

template <PairPotential P>
EffectivePotential effective_potential(const BasisSpec& spec, const P& pot, const OverlapFactors& f,
                                       const std::vector<double>& r_grid, double hbar2_over_m,
                                       const AdiabaticOptions& opt = {}) {
  spec.validate();
  if (r_grid.size() < 2) throw ConfigError("effective_potential: r_grid needs >= 2 points");
  for (std::size_t i = 0; i < r_grid.size(); ++i) {
    if (!(r_grid[i] > 0.0) || (i > 0 && !(r_grid[i] > r_grid[i - 1])))
      throw ConfigError("effective_potential: r_grid must be positive and strictly ascending");
  }
  if (f.k_max() != spec.k_max) throw ConfigError("effective_potential: overlap factors size mismatch");

  EffectivePotential ep;
  ep.spec = spec;
  ep.r_grid = r_grid;
  ep.hbar2_over_m = hbar2_over_m;
  ep.mode = opt.mode.value_or(spec.l == 0 ? ConstructionMode::full_diagonalization
                                          : ConstructionMode::diagonal_only);
  ep.omega.resize(r_grid.size());

  const HyperangularQuadrature quad(spec, opt.quadrature.order);
  const HyperangularQuadrature fine(spec, 2 * quad.order());
  const int nk = spec.size();
  const std::size_t n = r_grid.size();
  const std::size_t check_stride =
      opt.convergence_checks > 0 ? std::max<std::size_t>(1, n / opt.convergence_checks) : 0;

  Eigen::VectorXd prev;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = r_grid[i];
    const Eigen::MatrixXd v = quad.potential(r, pot, opt.quadrature.panel_ratio);
    if (check_stride > 0 && (i % check_stride == check_stride / 2 || i + 1 == n)) {
      const Eigen::MatrixXd v2 = fine.potential(r, pot, opt.quadrature.panel_ratio);
      const double shift = detail::max_abs(v2 - v) / std::max(detail::max_abs(v2), 1e-300);
      ep.max_quadrature_shift = std::max(ep.max_quadrature_shift, shift);
    }
    Eigen::MatrixXd m(nk, nk);
    for (int a = 0; a < nk; ++a)
      for (int b = 0; b < nk; ++b) m(a, b) = f.f[a] * v(a, b) * f.f[b];
    for (int k = 0; k < nk; ++k) m(k, k) += hbar2_over_m / (r * r) * spec.centrifugal(k);

    if (ep.mode == ConstructionMode::diagonal_only) {
      int best = 0;
      for (int k = 1; k < nk; ++k)
        if (m(k, k) < m(best, best)) best = k;
      ep.omega[i] = m(best, best);
      ep.min_k.push_back(best);
      if (best != 0) ++ep.non_k0_minima;
      continue;
    }
    es.compute(m);
    if (es.info() != Eigen::Success)
      throw NumericalError("effective_potential: eigensolver failed at r = " + std::to_string(r));
    ep.omega[i] = es.eigenvalues()(0);
    Eigen::VectorXd vec = es.eigenvectors().col(0);
    if (prev.size() == 0) {
      Eigen::Index imax = 0;
      vec.cwiseAbs().maxCoeff(&imax);
      if (vec(imax) < 0.0) vec = -vec;
    } else if (vec.dot(prev) < 0.0) {
      vec = -vec;
    }
    prev = vec;
    ep.channel.emplace_back(vec.data(), vec.data() + vec.size());
    if (!std::isfinite(ep.omega[i]))
      throw NumericalError("effective_potential: non-finite omega at r = " + std::to_string(r));
  }
  return ep;
}

inline EffectivePotential effective_potential(const BasisSpec& spec, const TwoBodyPotential& pot,
                                              const OverlapFactors& f,
                                              const std::vector<double>& r_grid,
                                              const AdiabaticOptions& opt = {}) {
  return effective_potential(spec, pot, f, r_grid, pot.units.hbar2_over_m, opt);
}

}  // namespace phstat
