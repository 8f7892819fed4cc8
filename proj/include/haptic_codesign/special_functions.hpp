#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/special_functions/erf.hpp>

namespace hcd {

/// Standard Gaussian upper tail, Q(x) = Pr{N(0,1) > x}.
inline double q_function(double x) {
  return 0.5 * std::erfc(x / std::numbers::sqrt2);
}

/// Inverse of q_function on (0, 1).
inline double inverse_q(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::domain_error("inverse_q: probability must lie in (0, 1), got " +
                            std::to_string(p));
  }
  return std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

/**
 * Lower branch W_{-1} of the Lambert W function.
 *
 * Solves x * exp(x) = y for x <= -1 with y in [-1/e, 0). The starting point is
 * the branch-point series near -1/e and the logarithmic asymptote elsewhere;
 * Halley iterations then converge in a handful of steps.
 */
inline double lambert_w_m1(double y) {
  constexpr double kInvE = 0.36787944117144232160;
  if (!(y >= -kInvE && y < 0.0)) {
    // allow y a couple of ulps below -1/e, which arises from rounding of -rho*exp(-rho)
    if (y < -kInvE && y > -kInvE * (1.0 + 4.0 * std::numeric_limits<double>::epsilon())) {
      return -1.0;
    }
    throw std::domain_error("lambert_w_m1: argument must lie in [-1/e, 0), got " +
                            std::to_string(y));
  }
  if (y == -kInvE) return -1.0;

  double x;
  const double q = 1.0 + std::numbers::e * y;  // distance from the branch point
  if (q < 0.25) {
    const double p = -std::sqrt(2.0 * q);
    x = -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p;
  } else {
    const double l1 = std::log(-y);
    const double l2 = std::log(-l1);
    x = l1 - l2 + l2 / l1;
  }

  for (int iter = 0; iter < 64; ++iter) {
    const double ex = std::exp(x);
    const double f = x * ex - y;
    if (f == 0.0) break;
    const double xp1 = x + 1.0;
    if (xp1 == 0.0) break;
    const double denom = ex * xp1 - (x + 2.0) * f / (2.0 * xp1);
    double next = x - f / denom;
    if (next > -1.0) next = 0.5 * (x - 1.0);  // stay on the lower branch
    if (std::abs(next - x) <= 4.0 * std::numeric_limits<double>::epsilon() * std::abs(x)) {
      x = next;
      break;
    }
    x = next;
  }
  return x;
}

/// Nodes and weights of a Gauss rule.
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

namespace detail {

// Golub-Welsch: eigen-decomposition of the symmetric Jacobi matrix.
inline GaussRule golub_welsch(const Eigen::VectorXd& diag, const Eigen::VectorXd& offdiag,
                              double mu0) {
  const Eigen::Index n = diag.size();
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    jacobi(i, i) = diag(i);
    if (i + 1 < n) {
      jacobi(i, i + 1) = offdiag(i);
      jacobi(i + 1, i) = offdiag(i);
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi);
  GaussRule rule;
  rule.nodes.resize(static_cast<std::size_t>(n));
  rule.weights.resize(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    rule.nodes[static_cast<std::size_t>(i)] = solver.eigenvalues()(i);
    const double v0 = solver.eigenvectors()(0, i);
    rule.weights[static_cast<std::size_t>(i)] = mu0 * v0 * v0;
  }
  return rule;
}

}  // namespace detail

/// Gauss-Legendre rule on [-1, 1].
inline GaussRule gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be >= 1");
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd off(std::max(n - 1, 0));
  for (int i = 1; i < n; ++i) {
    const double k = i;
    off(i - 1) = k / std::sqrt(4.0 * k * k - 1.0);
  }
  return detail::golub_welsch(diag, off, 2.0);
}

/// Gauss-Laguerre rule for the weight exp(-x) on [0, inf).
inline GaussRule gauss_laguerre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_laguerre: n must be >= 1");
  Eigen::VectorXd diag(n);
  Eigen::VectorXd off(std::max(n - 1, 0));
  for (int i = 0; i < n; ++i) diag(i) = 2.0 * i + 1.0;
  for (int i = 1; i < n; ++i) off(i - 1) = i;
  return detail::golub_welsch(diag, off, 1.0);
}

}  // namespace hcd
