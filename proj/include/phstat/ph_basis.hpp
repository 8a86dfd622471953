#pragma once

// Potential-harmonic basis for N identical bosons with one interacting pair.
//
// The hyperangular factor of the PH of grand orbital 2K+l is a Jacobi
// polynomial P_K^{(alpha,beta)}(z) in z = cos 2phi, where r_ij = r cos phi.
// The (cos phi)^l factor and the hyperangular volume element combine into
// the weight w(z) = (1-z)^alpha (1+z)^beta.

#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "phstat/error.hpp"
#include "phstat/quadrature.hpp"

namespace phstat {

struct BasisSpec {
  int n_particles = 3;
  int l = 0;
  int k_max = 1;

  BasisSpec() = default;
  BasisSpec(int n, int l_, int kmax) : n_particles(n), l(l_), k_max(kmax) { validate(); }

  double alpha() const { return (3.0 * n_particles - 8.0) / 2.0; }
  double beta() const { return l + 0.5; }
  /// l + (3N-6)/2, the effective centrifugal quantum number.
  double calL() const { return l + (3.0 * n_particles - 6.0) / 2.0; }
  int size() const { return k_max + 1; }

  /// L(L+1) + 4K(K+alpha+beta+1), the hypercentrifugal factor of channel K.
  double centrifugal(int k) const {
    const double L = calL();
    return L * (L + 1.0) + 4.0 * k * (k + alpha() + beta() + 1.0);
  }

  void validate() const {
    if (n_particles < 3) throw ConfigError("BasisSpec: need N >= 3");
    if (l < 0) throw ConfigError("BasisSpec: need l >= 0");
    if (k_max < 1) throw ConfigError("BasisSpec: need K_max >= 1");
  }
};

/// Normalisation constant of the K-th basis factor: 1 / sqrt(h_K).
inline double ph_norm(const BasisSpec& spec, int k) {
  if (k < 0 || k > spec.k_max) throw ConfigError("ph_norm: K out of range");
  return std::exp(-0.5 * jacobi_log_norm2(k, spec.alpha(), spec.beta()));
}

/// Normalised basis factors B_K(z), K = 0..K_max, written into out.
inline void basis_values(const BasisSpec& spec, double z, std::span<double> out) {
  jacobi_eval_all(spec.alpha(), spec.beta(), z, out);
  for (int k = 0; k <= spec.k_max; ++k) out[k] *= ph_norm(spec, k);
}

/// Default quadrature order for basis integrals.
inline int default_quadrature_order(const BasisSpec& spec) { return 4 * spec.k_max + 16; }

struct OverlapFactors {
  int n_particles = 0;
  int l = 0;
  std::vector<double> f2;  // f_Kl^2
  std::vector<double> f;   // f_Kl = sqrt(max(f2, 0))

  int k_max() const { return static_cast<int>(f.size()) - 1; }
};

inline constexpr int max_overlap_k = 400;

/// Closed form for the overlap of the (ij) potential harmonic with the sum of
/// potential harmonics over all N(N-1)/2 pairs. Projecting the (kl) harmonic
/// onto the (ij) one gives (cos t)^l P_K(cos 2t) / P_K(1), with t the angle
/// between the pair directions in the 3(N-1)-dim configuration space:
/// cos t = 1/2 for pairs sharing a particle, 0 for disjoint pairs. For odd l
/// the two orientations of a shared pair cancel.
inline OverlapFactors analytic_overlap_factors(int n_particles, int l, int k_max) {
  if (n_particles < 2) throw ConfigError("overlap_factors: need N >= 2");
  if (l < 0 || k_max < 0) throw ConfigError("overlap_factors: need l >= 0, K_max >= 0");
  if (k_max > max_overlap_k)
    throw ConfigError("overlap_factors: K_max above supported range " +
                      std::to_string(max_overlap_k));
  OverlapFactors out;
  out.n_particles = n_particles;
  out.l = l;
  out.f2.assign(k_max + 1, 1.0);
  out.f.assign(k_max + 1, 1.0);
  if (n_particles == 2) return out;

  const double alpha = (3.0 * n_particles - 8.0) / 2.0;
  const double beta = l + 0.5;
  const double shared = 2.0 * (n_particles - 2) * ((l % 2 == 0) ? std::pow(0.5, l) : 0.0);
  const double disjoint = (l == 0) ? 0.5 * (n_particles - 2) * (n_particles - 3) : 0.0;

  std::vector<double> p_one(k_max + 1), p_half(k_max + 1), p_minus(k_max + 1);
  jacobi_eval_all(alpha, beta, 1.0, p_one);
  jacobi_eval_all(alpha, beta, -0.5, p_half);
  jacobi_eval_all(alpha, beta, -1.0, p_minus);
  for (int k = 0; k <= k_max; ++k) {
    const double v = 1.0 + (shared * p_half[k] + disjoint * p_minus[k]) / p_one[k];
    if (!std::isfinite(v)) throw NumericalError("overlap_factors: non-finite f_Kl");
    // K = 1, l = 0 cancels exactly; clip the rounding residue.
    out.f2[k] = (std::abs(v) < 1e-12 * (1.0 + shared + disjoint)) ? 0.0 : v;
    if (out.f2[k] < 0.0) throw NumericalError("overlap_factors: negative f_Kl^2");
    out.f[k] = std::sqrt(out.f2[k]);
  }
  return out;
}

/// Source of overlap factors; the analytic form is the default.
using OverlapProvider = std::function<OverlapFactors(int n_particles, int l, int k_max)>;

inline OverlapFactors overlap_factors(const BasisSpec& spec,
                                      const OverlapProvider& provider = analytic_overlap_factors) {
  spec.validate();
  OverlapFactors f = provider(spec.n_particles, spec.l, spec.k_max);
  if (f.n_particles != spec.n_particles || f.l != spec.l || f.k_max() != spec.k_max)
    throw ConfigError("overlap_factors: provider returned factors for a different basis");
  if (!(f.f[0] > 0.0)) throw NumericalError("overlap_factors: f_0l must be positive");
  return f;
}

}  // namespace phstat
