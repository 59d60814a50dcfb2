#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "she/common.hpp"
#include "she/fft.hpp"

namespace she {

/// Point query for the wrapped-Gaussian kernel on the unit torus.
/// x is wrapped into [0,1); t and tol must be positive and finite.
struct KernelQuery {
  double t;
  double x;
  double tol = 1e-12;
};

namespace detail {

inline void check_kernel_args(double t, double tol) {
  require(std::isfinite(t) && t > 0.0, "heat kernel: t must be finite and > 0");
  require(std::isfinite(tol) && tol > 0.0,
          "heat kernel: tol must be finite and > 0");
}

// Image-sum evaluation at folded distance d in [0, 1/2].  K starts from the
// Gaussian-tail estimate and grows until the certified remainder bound drops
// below tol.
inline double image_sum(double t, double d, double tol) {
  const double pref = 1.0 / std::sqrt(2.0 * kPi * t);
  double tolp = tol / pref;
  int k_images = 1;
  if (tolp < 1.0) {
    k_images = static_cast<int>(
        std::ceil(1.0 + std::sqrt(2.0 * t * std::log(1.0 / tolp))));
  }
  auto remainder_bound = [&](int k) {
    // images beyond k sit at distance >= k + 1/2 on both sides
    double r = static_cast<double>(k) + 0.5;
    double ratio = std::exp(-r / t);
    if (ratio >= 1.0) return std::numeric_limits<double>::infinity();
    return 2.0 * pref * std::exp(-r * r / (2.0 * t)) / (1.0 - ratio);
  };
  while (remainder_bound(k_images) >= tol && k_images < 100000) ++k_images;

  double sum = pref * std::exp(-d * d / (2.0 * t));
  for (int m = 1; m <= k_images; ++m) {
    double a = d + static_cast<double>(m);
    double b = static_cast<double>(m) - d;
    sum += pref * (std::exp(-a * a / (2.0 * t)) + std::exp(-b * b / (2.0 * t)));
  }
  return sum;
}

// Dual (Jacobi-theta) series, preferred above the self-dual scale where it
// converges in a handful of terms.
inline double theta_sum(double t, double d, double tol) {
  double sum = 1.0;
  for (int k = 1; k < 10000; ++k) {
    double decay = std::exp(-2.0 * kPi * kPi * static_cast<double>(k) *
                            static_cast<double>(k) * t);
    sum += 2.0 * decay * std::cos(2.0 * kPi * static_cast<double>(k) * d);
    // remainder is dominated by a geometric series with ratio < e^{-2 pi^2 t}
    double next = std::exp(-2.0 * kPi * kPi * (k + 1.0) * (k + 1.0) * t);
    double ratio = std::exp(-2.0 * kPi * kPi * (2.0 * k + 3.0) * t);
    if (2.0 * next / (1.0 - ratio) < tol) break;
  }
  return sum;
}

}  // namespace detail

/// Heat kernel G_t(x) on the unit torus, evaluated to absolute accuracy tol.
/// The argument is folded to min(x, 1-x), which makes the reflection symmetry
/// exact at the bit level.
inline double heat_kernel(const KernelQuery& q) {
  detail::check_kernel_args(q.t, q.tol);
  require(std::isfinite(q.x), "heat kernel: x must be finite");
  double xw = wrap_unit(q.x);
  double d = xw <= 0.5 ? xw : 1.0 - xw;
  if (q.t >= 1.0 / (2.0 * kPi)) return detail::theta_sum(q.t, d, q.tol);
  return detail::image_sum(q.t, d, q.tol);
}

inline double heat_kernel(double t, double x, double tol = 1e-12) {
  return heat_kernel(KernelQuery{t, x, tol});
}

struct QuadratureResult {
  double value;
  double error_bound;  // estimated quadrature + truncation error
  int points;
};

/// Composite trapezoid (= rectangle rule by periodicity) of G_t over [0,1),
/// refined until two successive levels agree.
inline QuadratureResult kernel_mass(double t, double tol = 1e-12) {
  detail::check_kernel_args(t, tol);
  auto level = [&](int n) {
    CompensatedSum s;
    for (int j = 0; j < n; ++j)
      s.add(heat_kernel(t, static_cast<double>(j) / n, tol * 0.01));
    return s.value() / n;
  };
  int n = 256;
  double prev = level(n);
  for (; n <= (1 << 20); ) {
    n *= 2;
    double cur = level(n);
    double diff = std::fabs(cur - prev);
    prev = cur;
    if (diff < std::max(tol * 0.1, 1e-15)) {
      return {cur, diff + tol, n};
    }
  }
  throw estimation_failure("kernel_mass: quadrature did not stabilize");
}

struct L2IdentityResult {
  double lhs;  // quadrature of G_t^2 over one period
  double rhs;  // G_{2t}(0)
  int points;
};

/// The L2 kernel identity: integral of G_t(x-y)^2 over y equals G_{2t}(0).
inline L2IdentityResult kernel_l2_identity(double t, double tol = 1e-12) {
  detail::check_kernel_args(t, tol);
  auto level = [&](int n) {
    CompensatedSum s;
    for (int j = 0; j < n; ++j) {
      double g = heat_kernel(t, static_cast<double>(j) / n, tol * 0.01);
      s.add(g * g);
    }
    return s.value() / n;
  };
  int n = 256;
  double prev = level(n);
  for (; n <= (1 << 20); ) {
    n *= 2;
    double cur = level(n);
    double diff = std::fabs(cur - prev);
    prev = cur;
    if (diff < std::max(tol * 0.1, 1e-15)) {
      return {cur, heat_kernel(2.0 * t, 0.0, tol), n};
    }
  }
  throw estimation_failure("kernel_l2_identity: quadrature did not stabilize");
}

/// Upper bound for G_{2t}(0) used by the moment estimates.
inline double l2_mass_bound(double t) {
  return 1.0 + std::sqrt(2.0 * kPi) / std::sqrt(t);
}

struct IncrementRatios {
  double ratio_time;
  double ratio_space;
};

/// Normalized kernel increments.  The sweep over (t, t', x, y, beta) in the
/// test suite certifies an empirical uniform constant for both ratios.
/// Degenerate denominators (t'=t, x=y) yield zero by convention.
inline IncrementRatios kernel_increment_check(double t, double tprime,
                                              double x, double y,
                                              double beta,
                                              double tol = 1e-14) {
  detail::check_kernel_args(t, tol);
  require(tprime >= t, "kernel_increment_check: requires t' >= t");
  require(beta > 0.0 && beta <= 1.0,
          "kernel_increment_check: beta must lie in (0,1]");
  const double tb = std::pow(t, -beta / 2.0);
  IncrementRatios out{0.0, 0.0};

  if (tprime > t) {
    double num = std::fabs(heat_kernel(t, x, tol) - heat_kernel(tprime, x, tol));
    double den = tb * heat_kernel(2.0 * tprime, x, tol) *
                 std::pow(tprime - t, beta / 2.0);
    out.ratio_time = num / den;
  }
  double dxy = torus_distance(x, y);
  if (dxy > 0.0) {
    double num = std::fabs(heat_kernel(t, x, tol) - heat_kernel(t, y, tol));
    double den = tb *
                 (heat_kernel(2.0 * t, x, tol) + heat_kernel(2.0 * t, y, tol)) *
                 std::pow(dxy, beta);
    out.ratio_space = num / den;
  }
  return out;
}

/// Convolution of a grid field with the heat semigroup at time t, done in the
/// diagonalizing Fourier basis of the periodic grid.  The mode-0 multiplier
/// is exactly 1, so the spatial mean is preserved to rounding.
inline std::vector<double> convolve_initial(const std::vector<double>& u0,
                                            double t) {
  require(std::isfinite(t) && t >= 0.0, "convolve_initial: t must be >= 0");
  const std::size_t n = u0.size();
  require(n > 0 && (n & (n - 1)) == 0,
          "convolve_initial: grid size must be a power of two");
  if (t == 0.0) return u0;
  std::vector<double> mult(n);
  for (std::size_t k = 0; k < n; ++k) {
    double freq = static_cast<double>(std::min(k, n - k));
    mult[k] = std::exp(-2.0 * kPi * kPi * freq * freq * t);
  }
  std::vector<double> out = u0;
  fft::CirculantOperator op(std::move(mult));
  op.apply(out);
  return out;
}

}  // namespace she
