#pragma once

// Gaussian quadrature rules on [-1, 1] and the Jacobi polynomials they are
// built from.

#include <cmath>
#include <span>
#include <vector>

#include <Eigen/Eigenvalues>

#include "phstat/error.hpp"

namespace phstat {

/// P_n^{(alpha,beta)}(z) by the standard three-term recurrence.
inline double jacobi_eval(int n, double alpha, double beta, double z) {
  if (n == 0) return 1.0;
  double p0 = 1.0;
  double p1 = 0.5 * (alpha - beta) + 0.5 * (alpha + beta + 2.0) * z;
  for (int k = 2; k <= n; ++k) {
    const double c = 2.0 * k + alpha + beta;
    const double a1 = 2.0 * k * (k + alpha + beta) * (c - 2.0);
    const double a2 = (c - 1.0) * (alpha * alpha - beta * beta);
    const double a3 = (c - 2.0) * (c - 1.0) * c;
    const double a4 = 2.0 * (k + alpha - 1.0) * (k + beta - 1.0) * c;
    const double p2 = ((a2 + a3 * z) * p1 - a4 * p0) / a1;
    p0 = p1;
    p1 = p2;
  }
  return p1;
}

/// Fills out[k] = P_k^{(alpha,beta)}(z) for k = 0 .. out.size()-1.
inline void jacobi_eval_all(double alpha, double beta, double z, std::span<double> out) {
  if (out.empty()) return;
  out[0] = 1.0;
  if (out.size() == 1) return;
  out[1] = 0.5 * (alpha - beta) + 0.5 * (alpha + beta + 2.0) * z;
  for (std::size_t kk = 2; kk < out.size(); ++kk) {
    const double k = static_cast<double>(kk);
    const double c = 2.0 * k + alpha + beta;
    const double a1 = 2.0 * k * (k + alpha + beta) * (c - 2.0);
    const double a2 = (c - 1.0) * (alpha * alpha - beta * beta);
    const double a3 = (c - 2.0) * (c - 1.0) * c;
    const double a4 = 2.0 * (k + alpha - 1.0) * (k + beta - 1.0) * c;
    out[kk] = ((a2 + a3 * z) * out[kk - 1] - a4 * out[kk - 2]) / a1;
  }
}

/// log of the squared norm  h_n = int_{-1}^{1} (1-z)^alpha (1+z)^beta P_n(z)^2 dz.
inline double jacobi_log_norm2(int n, double alpha, double beta) {
  const double ab1 = alpha + beta + 1.0;
  const double log2 = std::log(2.0);
  if (n == 0) {
    return ab1 * log2 + std::lgamma(alpha + 1.0) + std::lgamma(beta + 1.0) -
           std::lgamma(alpha + beta + 2.0);
  }
  return ab1 * log2 - std::log(2.0 * n + ab1) + std::lgamma(n + alpha + 1.0) +
         std::lgamma(n + beta + 1.0) - std::lgamma(n + ab1) - std::lgamma(n + 1.0);
}

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }

  template <class F>
  double integrate(F&& f) const {
    double s = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) s += weights[i] * f(nodes[i]);
    return s;
  }
};

/// n-point Gauss-Jacobi rule for the weight (1-z)^alpha (1+z)^beta on [-1,1]
/// (Golub-Welsch). Nodes ascending.
inline QuadratureRule gauss_jacobi(int n, double alpha, double beta) {
  if (n < 1) throw ConfigError("gauss_jacobi: need at least one node");
  if (!(alpha > -1.0) || !(beta > -1.0))
    throw ConfigError("gauss_jacobi: alpha and beta must exceed -1");

  Eigen::VectorXd diag(n);
  Eigen::VectorXd sub(n > 1 ? n - 1 : 1);
  const double ab = alpha + beta;
  for (int k = 0; k < n; ++k) {
    const double c = 2.0 * k + ab;
    diag(k) = (k == 0) ? (beta - alpha) / (ab + 2.0)
                       : (beta * beta - alpha * alpha) / (c * (c + 2.0));
  }
  for (int k = 1; k < n; ++k) {
    const double c = 2.0 * k + ab;
    const double num = 4.0 * k * (k + alpha) * (k + beta) * (k + ab);
    const double den = c * c * (c + 1.0) * (c - 1.0);
    sub(k - 1) = (k == 1) ? std::sqrt(4.0 * (1.0 + alpha) * (1.0 + beta) /
                                      ((2.0 + ab) * (2.0 + ab) * (3.0 + ab)))
                          : std::sqrt(num / den);
  }

  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const double mu0 = std::exp(jacobi_log_norm2(0, alpha, beta));
  if (n == 1) {
    rule.nodes[0] = diag(0);
    rule.weights[0] = mu0;
    return rule;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, sub.head(n - 1), Eigen::ComputeEigenvectors);
  if (es.info() != Eigen::Success) throw NumericalError("gauss_jacobi: eigensolver failed");
  for (int i = 0; i < n; ++i) {
    rule.nodes[i] = es.eigenvalues()(i);
    const double v0 = es.eigenvectors()(0, i);
    rule.weights[i] = mu0 * v0 * v0;
  }
  return rule;
}

inline QuadratureRule gauss_legendre(int n) { return gauss_jacobi(n, 0.0, 0.0); }

/// Maps a rule on [-1,1] to [lo,hi] (weights scaled by the Jacobian only).
inline QuadratureRule mapped(const QuadratureRule& ref, double lo, double hi) {
  QuadratureRule out;
  out.nodes.resize(ref.size());
  out.weights.resize(ref.size());
  const double half = 0.5 * (hi - lo);
  const double mid = 0.5 * (hi + lo);
  for (std::size_t i = 0; i < ref.size(); ++i) {
    out.nodes[i] = mid + half * ref.nodes[i];
    out.weights[i] = half * ref.weights[i];
  }
  return out;
}

}  // namespace phstat
