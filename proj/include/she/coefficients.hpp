#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "she/common.hpp"

namespace she {

enum class DriftKind { zero, constant, linear, power_log, power_log_sin, custom_table };
enum class SigmaKind { zero, constant, linear, power_log, custom_table };

/// Behavior of the coefficient pair on [delta, infinity).
enum class TailKind {
  lipschitz_linear,         // linear continuation with the slope at delta
  log_superlinear,          // drift tail  z log z      beyond z = e
  log_quarter_superlinear,  // sigma tail  z (log z)^{1/4} beyond z = e
};

/// Monotone-cubic (Fritsch-Carlson) interpolant for user-supplied samples.
class MonotoneCubicTable {
 public:
  MonotoneCubicTable() = default;
  MonotoneCubicTable(std::vector<double> z, std::vector<double> f)
      : z_(std::move(z)), f_(std::move(f)) {
    require(z_.size() == f_.size() && z_.size() >= 2,
            "custom table: need at least two samples");
    for (std::size_t i = 0; i + 1 < z_.size(); ++i)
      require(z_[i] < z_[i + 1], "custom table: abscissae must increase");
    require(z_.front() >= 0.0, "custom table: abscissae must be >= 0");
    build_slopes();
  }

  bool empty() const noexcept { return z_.empty(); }
  const std::vector<double>& abscissae() const noexcept { return z_; }
  const std::vector<double>& ordinates() const noexcept { return f_; }

  double operator()(double z) const {
    require(!z_.empty(), "custom table: empty");
    if (z <= z_.front())
      return f_.front() + m_.front() * (z - z_.front());
    if (z >= z_.back())
      return f_.back() + m_.back() * (z - z_.back());
    std::size_t lo = 0, hi = z_.size() - 1;
    while (hi - lo > 1) {
      std::size_t mid = (lo + hi) / 2;
      (z_[mid] <= z ? lo : hi) = mid;
    }
    double h = z_[lo + 1] - z_[lo];
    double s = (z - z_[lo]) / h;
    double h00 = (1 + 2 * s) * (1 - s) * (1 - s);
    double h10 = s * (1 - s) * (1 - s);
    double h01 = s * s * (3 - 2 * s);
    double h11 = s * s * (s - 1);
    return h00 * f_[lo] + h10 * h * m_[lo] + h01 * f_[lo + 1] +
           h11 * h * m_[lo + 1];
  }

 private:
  void build_slopes() {
    const std::size_t n = z_.size();
    std::vector<double> d(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i)
      d[i] = (f_[i + 1] - f_[i]) / (z_[i + 1] - z_[i]);
    m_.assign(n, 0.0);
    m_.front() = d.front();
    m_.back() = d.back();
    for (std::size_t i = 1; i + 1 < n; ++i) {
      if (d[i - 1] * d[i] <= 0.0) {
        m_[i] = 0.0;
      } else {
        // harmonic mean keeps the interpolant monotone on each interval
        double w1 = 2.0 * (z_[i + 1] - z_[i]) + (z_[i] - z_[i - 1]);
        double w2 = (z_[i + 1] - z_[i]) + 2.0 * (z_[i] - z_[i - 1]);
        m_[i] = (w1 + w2) / (w1 / d[i - 1] + w2 / d[i]);
      }
    }
  }

  std::vector<double> z_, f_;
  std::vector<double> m_;
};

/// Description of a drift/diffusion pair with prescribed behavior near zero.
/// The built-in power_log kinds are the canonical representatives
///   b(z) = theta_b * b_scale * z (log 1/z)^{A1},
///   sigma(z) = sigma_scale * z (log 1/z)^{A2}   on (0, delta],
/// continued beyond delta according to `tail`.
struct CoefficientSpec {
  DriftKind kind_b = DriftKind::power_log;
  double A1 = 0.5;
  int theta_b = -1;
  double b_scale = 1.0;
  double b_value = 0.0;       // slope for linear kind, value for constant kind
  double b_linear_shift = 0.0;  // adds shift*z on top of b (comparison pairs)

  SigmaKind kind_sigma = SigmaKind::power_log;
  double A2 = 0.2;
  double sigma_scale = 1.0;
  double sigma_value = 0.0;

  double delta = 0.36787944117144233;  // e^{-1}
  TailKind tail = TailKind::lipschitz_linear;
  bool unsafe_hypotheses = false;

  MonotoneCubicTable table_b;
  MonotoneCubicTable table_sigma;

  void validate() const {
    require(delta > 0.0 && delta < 1.0, "CoefficientSpec: delta must lie in (0,1)");
    if (kind_b == DriftKind::power_log || kind_b == DriftKind::power_log_sin) {
      require(A1 > 0.0 && A1 <= 1.0, "CoefficientSpec: A1 must lie in (0,1]");
      if (A1 == 1.0)
        require(kind_b == DriftKind::power_log,
                "CoefficientSpec: A1 = 1 requires a sign-constant drift");
      require(theta_b == 1 || theta_b == -1,
              "CoefficientSpec: theta_b must be +1 or -1");
    }
    if (kind_sigma == SigmaKind::power_log) {
      if (!unsafe_hypotheses)
        require(A2 > 0.0 && A2 < 0.25,
                "CoefficientSpec: A2 must lie in (0,1/4) "
                "(set unsafe_hypotheses to override)");
      else
        require(A2 > 0.0, "CoefficientSpec: A2 must be positive");
    }
    if (kind_b == DriftKind::custom_table)
      require(!table_b.empty(), "CoefficientSpec: custom drift table missing");
    if (kind_sigma == SigmaKind::custom_table)
      require(!table_sigma.empty(), "CoefficientSpec: custom sigma table missing");
  }

  double b(double z) const { return eval_drift(z) + b_linear_shift * z; }

  double sigma(double z) const {
    require(!std::isnan(z), "sigma: NaN argument");
    switch (kind_sigma) {
      case SigmaKind::zero: return 0.0;
      case SigmaKind::constant: return sigma_value;
      case SigmaKind::linear: return sigma_value * z;
      case SigmaKind::custom_table:
        require(z >= 0.0, "sigma: custom table evaluated at negative argument");
        return table_sigma(z);
      case SigmaKind::power_log: break;
    }
    require(z >= 0.0,
            "sigma: power_log kind evaluated at negative argument; "
            "use a regularization mode");
    if (z == 0.0) return 0.0;
    if (z <= delta) return sigma_scale * z * std::pow(std::log(1.0 / z), A2);
    return sigma_tail(z);
  }

  // Analytic slope of the near-zero branches, used by the growth estimators.
  double drift_near_zero_derivative(double z) const {
    double l = std::log(1.0 / z);
    if (kind_b == DriftKind::power_log)
      return theta_b * b_scale * (std::pow(l, A1) - A1 * std::pow(l, A1 - 1.0));
    // power_log_sin: z (log 1/z)^{A1} sin(1/z)
    double s = std::sin(1.0 / z), c = std::cos(1.0 / z);
    return b_scale *
           ((std::pow(l, A1) - A1 * std::pow(l, A1 - 1.0)) * s - std::pow(l, A1) * c / z);
  }

  double sigma_near_zero_derivative(double z) const {
    double l = std::log(1.0 / z);
    return sigma_scale * (std::pow(l, A2) - A2 * std::pow(l, A2 - 1.0));
  }

 private:
  double eval_drift(double z) const {
    require(!std::isnan(z), "b: NaN argument");
    switch (kind_b) {
      case DriftKind::zero: return 0.0;
      case DriftKind::constant: return b_value;
      case DriftKind::linear: return b_value * z;
      case DriftKind::custom_table:
        require(z >= 0.0, "b: custom table evaluated at negative argument");
        return table_b(z);
      default: break;
    }
    require(z >= 0.0,
            "b: power_log kind evaluated at negative argument; "
            "use a regularization mode");
    if (z == 0.0) return 0.0;
    if (z <= delta) {
      double core = b_scale * z * std::pow(std::log(1.0 / z), A1);
      if (kind_b == DriftKind::power_log_sin) return core * std::sin(1.0 / z);
      return theta_b * core;
    }
    return drift_tail(z);
  }

  double drift_tail(double z) const {
    double at_delta = (kind_b == DriftKind::power_log_sin)
                          ? b_scale * delta * std::pow(std::log(1.0 / delta), A1) *
                                std::sin(1.0 / delta)
                          : theta_b * b_scale * delta *
                                std::pow(std::log(1.0 / delta), A1);
    if (tail == TailKind::lipschitz_linear)
      return at_delta + drift_near_zero_derivative(delta) * (z - delta);
    // superlinear tail z log z beyond e, chord on (delta, e)
    const double e1 = std::exp(1.0);
    if (z >= e1) return b_scale * z * std::log(z);
    double chord = (b_scale * e1 - at_delta) / (e1 - delta);
    return at_delta + chord * (z - delta);
  }

  double sigma_tail(double z) const {
    double at_delta = sigma_scale * delta * std::pow(std::log(1.0 / delta), A2);
    if (tail != TailKind::log_quarter_superlinear)
      return at_delta + sigma_near_zero_derivative(delta) * (z - delta);
    const double e1 = std::exp(1.0);
    if (z >= e1) return sigma_scale * z * std::pow(std::log(z), 0.25);
    double chord = (sigma_scale * e1 - at_delta) / (e1 - delta);
    return at_delta + chord * (z - delta);
  }
};

/// A coefficient pair with the regularization stack applied:
///   alpha-interpolation (drift only)  ->  M-truncation  ->  eps-linearization,
/// optionally rescaled to a V-block level k (f_k(u) = e^k f(e^{-k} u)).
/// Immutable after construction; growth/sup constants are cached eagerly.
class Coefficient {
 public:
  Coefficient() = default;
  explicit Coefficient(CoefficientSpec spec) : base_(std::move(spec)) {
    base_.validate();
  }

  const CoefficientSpec& spec() const noexcept { return base_; }
  bool has_eps() const noexcept { return eps_ > 0.0; }
  bool has_alpha() const noexcept { return alpha_ > 0.0; }
  bool has_truncation() const noexcept { return std::isfinite(m_level_); }
  double eps() const noexcept { return eps_; }
  double alpha() const noexcept { return alpha_; }
  double m_level() const noexcept { return m_level_; }
  int rescale_level() const noexcept { return rescale_k_; }
  double delta() const noexcept { return base_.delta; }
  double eps_slope_b() const noexcept { return slope_b_eps_; }
  double eps_slope_sigma() const noexcept { return slope_sigma_eps_; }

  double b(double z) const {
    if (rescale_k_ != 0) return rescale_out_ * b_inner(z * rescale_in_);
    return b_inner(z);
  }

  double sigma(double z) const {
    if (rescale_k_ != 0) return rescale_out_ * sigma_inner(z * rescale_in_);
    return sigma_inner(z);
  }

  friend Coefficient regularize_eps(Coefficient c, double eps);
  friend Coefficient interpolate_alpha(const CoefficientSpec& spec, double alpha);
  friend Coefficient truncate_M(Coefficient c, double m_level);
  friend Coefficient rescale_level(Coefficient c, int k);

 private:
  // both knots use strict comparisons, so evaluation at eps (resp. delta)
  // reproduces the base value bit-for-bit
  double b_inner(double z) const {
    require(!std::isnan(z), "b: NaN argument");
    if (has_eps() && z < eps_) return slope_b_eps_ * z;
    double zc = std::min(z, m_level_);
    if (has_alpha() && zc > 0.0 && zc < base_.delta) return alpha_drift(zc);
    return base_.b(zc);
  }

  double sigma_inner(double z) const {
    require(!std::isnan(z), "sigma: NaN argument");
    if (has_eps() && z < eps_) return slope_sigma_eps_ * z;
    return base_.sigma(std::min(z, m_level_));
  }

  // theta_b z (|b(z)|/z)^alpha (|b(delta)|/delta)^{1-alpha} on (0, delta]
  double alpha_drift(double z) const {
    double q = std::fabs(base_.b(z)) / z;
    if (q == 0.0) return 0.0;
    return base_.theta_b * z * std::pow(q, alpha_) * alpha_anchor_pow_;
  }

  // drift/sigma with alpha and M applied but not eps; defines the eps knot
  double b_pre_eps(double z) const {
    double zc = std::min(z, m_level_);
    if (has_alpha() && zc > 0.0 && zc <= base_.delta) return alpha_drift(zc);
    return base_.b(zc);
  }
  double sigma_pre_eps(double z) const { return base_.sigma(std::min(z, m_level_)); }

  CoefficientSpec base_;
  double eps_ = 0.0;
  double alpha_ = 0.0;
  double m_level_ = std::numeric_limits<double>::infinity();
  double slope_b_eps_ = 0.0;
  double slope_sigma_eps_ = 0.0;
  double alpha_anchor_pow_ = 1.0;  // (|b(delta)|/delta)^{1-alpha}
  int rescale_k_ = 0;
  double rescale_in_ = 1.0;   // e^{-k}
  double rescale_out_ = 1.0;  // e^{k}
};

/// eps-linearization: below eps both coefficients become the linear function
/// through (eps, f(eps)); above eps they agree with the base bit-for-bit.
/// The linear branch extends to negative arguments, so transient scheme
/// undershoots stay evaluable.
inline Coefficient regularize_eps(Coefficient c, double eps) {
  require(std::isfinite(eps) && eps > 0.0 && eps < c.base_.delta,
          "regularize_eps: requires 0 < eps < delta");
  require(!c.has_eps(), "regularize_eps: eps mode already applied");
  c.eps_ = eps;
  c.slope_b_eps_ = c.b_pre_eps(eps) / eps;
  c.slope_sigma_eps_ = c.sigma_pre_eps(eps) / eps;
  return c;
}

inline Coefficient regularize_eps(const CoefficientSpec& spec, double eps) {
  return regularize_eps(Coefficient(spec), eps);
}

namespace detail {

/// Numeric check of the critical-case hypothesis: |b(z)|/z >= |b(delta)|/delta
/// on (0, delta] and b of constant sign there.  (The interpolated family is
/// monotone in alpha exactly when the quotient is anchored from below at
/// delta, which is what the canonical example b(z) = -z log(1/z) satisfies.)
inline void check_critical_hypotheses(const CoefficientSpec& spec) {
  double anchor = std::fabs(spec.b(spec.delta)) / spec.delta;
  int sign = 0;
  double z = spec.delta;
  for (int i = 0; i < 600; ++i) {
    double v = spec.b(z);
    if (v != 0.0) {
      int s = v > 0.0 ? 1 : -1;
      if (sign == 0) sign = s;
      require(s == sign, "interpolate_alpha: drift changes sign on (0,delta]");
    }
    double q = std::fabs(v) / z;
    require(q >= anchor * (1.0 - 1e-9),
            "interpolate_alpha: |b(z)|/z falls below the delta anchor at z=" +
                format_double(z));
    z *= 0.95;
    if (z < 1e-14) break;
  }
}

}  // namespace detail

/// alpha-interpolation of a critical drift: geometric interpolation between
/// b and its delta-anchored linearization, yielding near-zero exponent alpha.
inline Coefficient interpolate_alpha(const CoefficientSpec& spec, double alpha) {
  require(alpha > 0.0 && alpha < 1.0, "interpolate_alpha: alpha must lie in (0,1)");
  require(spec.kind_b == DriftKind::power_log ||
              spec.kind_b == DriftKind::custom_table ||
              spec.kind_b == DriftKind::linear,
          "interpolate_alpha: drift kind is not sign-constant near zero");
  Coefficient c(spec);
  detail::check_critical_hypotheses(spec);
  c.alpha_ = alpha;
  double anchor = std::fabs(spec.b(spec.delta)) / spec.delta;
  c.alpha_anchor_pow_ = std::pow(anchor, 1.0 - alpha);
  return c;
}

/// M-truncation: freeze both coefficients at level M.
inline Coefficient truncate_M(Coefficient c, double m_level) {
  require(std::isfinite(m_level) && m_level > 1.0,
          "truncate_M: requires M > 1");
  require(!c.has_truncation(), "truncate_M: truncation already applied");
  require(!c.has_eps(), "truncate_M: apply truncation before eps mode");
  c.m_level_ = m_level;
  return c;
}

inline Coefficient truncate_M(const CoefficientSpec& spec, double m_level) {
  return truncate_M(Coefficient(spec), m_level);
}

/// V-block rescaling: f_k(u) = e^k f(e^{-k} u).  Growth constants do not
/// increase under this map.
inline Coefficient rescale_level(Coefficient c, int k) {
  require(c.has_eps(), "rescale_level: requires an eps-regularized coefficient");
  c.rescale_k_ = k;
  c.rescale_in_ = std::exp(-static_cast<double>(k));
  c.rescale_out_ = std::exp(static_cast<double>(k));
  return c;
}

// ---------------------------------------------------------------------------
// Growth / Lipschitz constants
// ---------------------------------------------------------------------------

struct GrowthConstants {
  double L = 0.0;        // growth constant for eps-mode, Lipschitz on [delta,oo) else
  double C_delta = 0.0;  // sup of |f| on [0, delta]
  double lipest_ratio = std::numeric_limits<double>::quiet_NaN();
  // L / (log 1/eps)^A for eps-mode; the empirical constant of the
  // Lipschitz estimate for the modified coefficients.
};

namespace detail {

using ScalarFn = std::function<double(double)>;

/// sup of |f(z)/z| over a geometric grid of (0, z_hi], refined until stable.
inline double sup_quotient(const ScalarFn& f, double z_lo, double z_hi) {
  double prev = -1.0;
  for (int n = 512; n <= (1 << 17); n *= 2) {
    double best = 0.0;
    double ratio = std::pow(z_hi / z_lo, 1.0 / n);
    double z = z_lo;
    for (int i = 0; i <= n; ++i) {
      best = std::max(best, std::fabs(f(z)) / z);
      z *= ratio;
    }
    if (prev >= 0.0 && std::fabs(best - prev) <= 0.01 * std::max(prev, 1e-300))
      return std::max(best, prev);
    prev = best;
  }
  throw estimation_failure(
      "growth constant scan did not stabilize on [" + format_double(z_lo) +
      ", " + format_double(z_hi) + "]; the quotient may be unbounded");
}

/// sup of difference quotients of f over [z_lo, z_hi], log-spaced, refined.
inline double sup_slope(const ScalarFn& f, double z_lo, double z_hi) {
  double prev = -1.0;
  for (int n = 512; n <= (1 << 17); n *= 2) {
    double best = 0.0;
    double ratio = std::pow(z_hi / z_lo, 1.0 / n);
    double z = z_lo;
    double fz = f(z);
    for (int i = 0; i < n; ++i) {
      double z2 = z * ratio;
      double fz2 = f(z2);
      best = std::max(best, std::fabs(fz2 - fz) / (z2 - z));
      z = z2;
      fz = fz2;
    }
    if (prev >= 0.0 && std::fabs(best - prev) <= 0.01 * std::max(prev, 1e-300))
      return std::max(best, prev);
    prev = best;
  }
  throw estimation_failure("Lipschitz scan did not stabilize on [" +
                           format_double(z_lo) + ", " + format_double(z_hi) +
                           "]; the slope may be unbounded");
}

/// sup of |f| on [0, delta]: geometric grid resolving the log blowup.
inline double sup_abs(const ScalarFn& f, double delta) {
  double best = std::fabs(f(delta));
  double z = delta;
  for (int i = 0; i < 4096; ++i) {
    z *= 0.99;
    if (z < 1e-18) break;
    best = std::max(best, std::fabs(f(z)));
  }
  return best;
}

/// Scans an unbounded window in two stages; a tail whose estimate keeps
/// growing with the window has no finite constant.
inline double scan_to_infinity(const ScalarFn& f, double delta,
                               double (*scan)(const ScalarFn&, double, double),
                               const char* what) {
  double near = scan(f, delta, 1e3);
  double far = scan(f, delta, 1e6);
  if (far > near * 1.05 + 1e-300)
    throw estimation_failure(std::string(what) +
                             " grows with the scan window on [delta, oo); "
                             "no finite constant (estimates " +
                             format_double(near) + " -> " + format_double(far) +
                             ")");
  return std::max(near, far);
}

inline GrowthConstants growth_constants_impl(const Coefficient& c,
                                             const ScalarFn& f, double slope_eps,
                                             double near_zero_exponent) {
  GrowthConstants g;
  const double delta = c.delta();
  g.C_delta = sup_abs(f, delta);
  if (c.has_eps()) {
    // growth constant: sup over z > 0 of |f(z)|/z; the linear branch
    // contributes |slope| exactly, the rest is scanned.
    double interior = sup_quotient(f, c.eps(), delta);
    double tail = c.has_truncation()
                      ? sup_quotient(f, delta, 2.0 * c.m_level())
                      : scan_to_infinity(f, delta, &sup_quotient,
                                         "growth quotient");
    g.L = std::max({std::fabs(slope_eps), interior, tail});
    g.lipest_ratio =
        g.L / std::pow(std::log(1.0 / c.eps()), near_zero_exponent);
  } else {
    g.L = c.has_truncation()
              ? sup_slope(f, delta, 2.0 * c.m_level())
              : scan_to_infinity(f, delta, &sup_slope, "Lipschitz estimate");
  }
  return g;
}

}  // namespace detail

/// Growth constants of the drift.  For eps-mode the L field is the growth
/// constant sup_z |b(z)|/z together with the empirical constant of the
/// Lipschitz estimate; otherwise it is the Lipschitz constant on
/// [delta, infinity) from a dense refining scan.
inline GrowthConstants growth_constants_b(const Coefficient& c) {
  double a1 = c.spec().A1;
  return detail::growth_constants_impl(
      c, [&c](double z) { return c.b(z); }, c.eps_slope_b(),
      c.has_alpha() ? c.alpha() * a1 : a1);
}

inline GrowthConstants growth_constants_sigma(const Coefficient& c) {
  return detail::growth_constants_impl(
      c, [&c](double z) { return c.sigma(z); }, c.eps_slope_sigma(),
      c.spec().A2);
}

/// sup over a refining grid of |f - g| on [0, z_max]; drives the uniform
/// convergence checks for the eps- and alpha-ladders.
inline double uniform_gap(const std::function<double(double)>& f,
                          const std::function<double(double)>& g,
                          double z_max) {
  require(z_max > 0.0, "uniform_gap: z_max must be positive");
  double prev = -1.0;
  for (int n = 1024; n <= (1 << 18); n *= 2) {
    double best = std::fabs(f(0.0) - g(0.0));
    // geometric part resolves behavior near zero, uniform part covers the rest
    double z = z_max;
    for (int i = 0; i < n; ++i) {
      best = std::max(best, std::fabs(f(z) - g(z)));
      z *= 0.98;
      if (z < 1e-18) break;
    }
    for (int i = 1; i <= n; ++i) {
      double zz = z_max * static_cast<double>(i) / n;
      best = std::max(best, std::fabs(f(zz) - g(zz)));
    }
    if (prev >= 0.0 &&
        std::fabs(best - prev) <= std::max(0.005 * prev, 1e-18))
      return std::max(best, prev);
    prev = best;
  }
  return prev;
}

inline double uniform_gap(const Coefficient& fn, const Coefficient& target,
                          double z_max) {
  return uniform_gap([&fn](double z) { return fn.b(z); },
                     [&target](double z) { return target.b(z); }, z_max);
}

}  // namespace she
