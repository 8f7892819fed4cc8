#pragma once

// Slow, independent reference computations used to check the library.

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <vector>

namespace oracle {

/// x <= -1 with x e^x = y by plain bisection on (-800, -1].
inline double lambert_w_m1(double y) {
  double lo = -800.0, hi = -1.0;  // x e^x falls from 0 to -1/e on this interval
  for (int i = 0; i < 400; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid * std::exp(mid) > y) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

/// Adaptive Simpson integration.
inline double simpson(const std::function<double(double)>& f, double a, double b, double tol,
                      int depth = 50) {
  auto rule = [&](double x0, double x1, double f0, double fm, double f1) {
    return (x1 - x0) / 6.0 * (f0 + 4.0 * fm + f1);
  };
  std::function<double(double, double, double, double, double, double, double, int)> rec =
      [&](double x0, double x1, double f0, double fm, double f1, double whole, double eps, int d) {
        const double m = 0.5 * (x0 + x1);
        const double lm = 0.5 * (x0 + m), rm = 0.5 * (m + x1);
        const double flm = f(lm), frm = f(rm);
        const double left = rule(x0, m, f0, flm, fm), right = rule(m, x1, fm, frm, f1);
        if (d <= 0 || std::abs(left + right - whole) <= 15.0 * eps) {
          return left + right + (left + right - whole) / 15.0;
        }
        return rec(x0, m, f0, flm, fm, left, eps / 2, d - 1) + rec(m, x1, fm, frm, f1, right, eps / 2, d - 1);
      };
  const double f0 = f(a), f1 = f(b), fm = f(0.5 * (a + b));
  return rec(a, b, f0, fm, f1, rule(a, b, f0, fm, f1), tol, depth);
}

/// Gaussian upper tail by integrating the density from x to x + 40.
inline double gaussian_tail(double x) {
  const auto pdf = [](double t) { return std::exp(-0.5 * t * t) / std::sqrt(2.0 * std::numbers::pi); };
  return simpson(pdf, x, x + 40.0, 1e-16);
}

/// Direct evaluation of the queue tail with the given Lambert routine.
inline double queue_tail(double lambda, double bits, double dt_s, double packet_bits, double kappa_s) {
  const double rho = lambda * packet_bits * dt_s / bits;
  if (rho >= 1.0 || kappa_s == 0.0) return 1.0;
  const double eb = bits / (packet_bits * dt_s);
  return std::exp(kappa_s * (eb * lambert_w_m1(-rho * std::exp(-rho)) + lambda));
}

}  // namespace oracle
