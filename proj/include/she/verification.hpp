#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "she/common.hpp"
#include "she/solver.hpp"
#include "she/stats.hpp"

namespace she {

// ---------------------------------------------------------------------------
// Closed-form bound evaluators
// ---------------------------------------------------------------------------

/// Constants feeding the moment and Hoelder bounds.  For the zero-at-origin
/// variant, L_* are the growth constants and C_* = |b(0)| = |sigma(0)| = 0;
/// for the delta form, L_* are the Lipschitz constants on [delta, oo) and
/// C_* the sups over [0, delta].
struct MomentBoundParams {
  double p = 2.0;
  double T = 1.0;
  double L_b = 1.0;
  double L_sigma = 1.0;
  double C_b = 0.0;
  double C_sigma = 0.0;
  double u0_sup = 1.0;
  double u0_holder = 0.0;  // Hoelder seminorm |u0|_gamma
  double u0_gamma = 1.0;   // Hoelder exponent of u0

  double H() const { return L_b + p * p * std::pow(L_sigma, 4.0); }

  // ||u0|| + C_b/L_b + C_sigma/L_sigma with the 0/0 -> 0 convention
  double M_const() const {
    double m = u0_sup;
    if (C_b != 0.0) m += C_b / L_b;
    if (C_sigma != 0.0) m += C_sigma / L_sigma;
    return m;
  }

  void validate() const {
    require(p >= 2.0, "MomentBoundParams: p must be >= 2");
    require(T >= 0.0, "MomentBoundParams: T must be >= 0");
    require(L_b >= 0.0 && L_sigma >= 0.0 && C_b >= 0.0 && C_sigma >= 0.0,
            "MomentBoundParams: constants must be nonnegative");
    require(std::isfinite(H()), "MomentBoundParams: H must be finite");
  }
};

enum class MomentBoundVariant { zero_at_origin, delta_form };

/// Contraction exponent of the fixed-point norm: 4 L_b + 2^16 pi^2 p^2 L_s^4.
inline double kappa_constant(double L_b, double L_sigma, double p) {
  return 4.0 * L_b + 65536.0 * kPi * kPi * p * p * std::pow(L_sigma, 4.0);
}

/// Log of the p-th moment bound; finite even when the bound itself overflows.
inline double moment_bound_log_rhs(const MomentBoundParams& par,
                                   MomentBoundVariant variant) {
  par.validate();
  double expo =
      (4.0 * par.L_b * par.p +
       65536.0 * kPi * kPi * par.p * par.p * par.p * std::pow(par.L_sigma, 4.0)) *
      par.T;
  double base = par.u0_sup;
  if (variant == MomentBoundVariant::delta_form) {
    if (par.C_b != 0.0) {
      if (par.L_b == 0.0) return std::numeric_limits<double>::infinity();
      base += par.C_b / (4.0 * par.L_b);
    }
    if (par.C_sigma != 0.0) {
      if (par.L_sigma == 0.0) return std::numeric_limits<double>::infinity();
      base += par.C_sigma / (4.0 * par.L_sigma);
    }
  }
  return par.p * std::log(2.0 * base) + expo;
}

/// The moment bound itself; +inf when the delta form divides by a vanishing
/// Lipschitz constant (the formula presupposes positive constants) or when
/// the exponential overflows.
inline double moment_bound_rhs(const MomentBoundParams& par,
                               MomentBoundVariant variant) {
  double lg = moment_bound_log_rhs(par, variant);
  if (lg > 700.0) return std::numeric_limits<double>::infinity();
  return std::exp(lg);
}

enum class IncrementKind { space, time };

/// Bracketed Hoelder bound on L^p increments; C_beta and the generic
/// exponential constant are exposed as parameters (calibrated once per suite
/// and then frozen).
inline double holder_bound_rhs(const MomentBoundParams& par, double beta,
                               IncrementKind kind, double offset, double t,
                               double C_beta = 1.0, double C_exp = 1.0) {
  par.validate();
  require(beta > 0.0 && beta < std::min(0.5, par.u0_gamma),
          "holder_bound_rhs: beta must lie in (0, 1/2 ^ gamma)");
  require(offset >= 0.0, "holder_bound_rhs: offset must be >= 0");
  const double H = par.H();
  const double M = par.M_const();
  const double sp = std::sqrt(par.p);
  double bracket;
  double prefactor;
  if (kind == IncrementKind::space) {
    double grow = std::exp(C_exp * H * t);
    bracket = par.u0_holder + par.C_b * std::pow(t, 1.0 - beta / 2.0) +
              sp * par.C_sigma *
                  (std::pow(t, 0.25 - beta / 2.0) + std::pow(t, 0.5 - beta / 2.0)) +
              par.L_b * M * grow * std::pow(H, beta / 2.0 - 1.0) +
              sp * par.L_sigma * M * grow *
                  (std::pow(H, beta / 2.0 - 0.25) + std::pow(H, beta / 2.0 - 0.5));
    prefactor = std::pow(offset, beta);
  } else {
    require(offset < 1.0, "holder_bound_rhs: time gaps must be < 1");
    double tp = t + offset;
    double grow = std::exp(C_exp * H * tp);
    bracket = par.u0_holder + par.C_b * (1.0 + std::pow(t, 1.0 - beta / 2.0)) +
              sp * par.C_sigma *
                  (1.0 + std::pow(t, 0.25 - beta / 2.0) +
                   std::pow(t, 0.5 - beta / 2.0)) +
              par.L_b * M * grow * std::pow(H, beta / 2.0 - 1.0) +
              sp * par.L_sigma * M * grow *
                  (std::pow(H, beta / 2.0 - 0.25) + std::pow(H, beta / 2.0 - 0.5));
    prefactor = std::pow(offset, beta / 2.0);
  }
  return C_beta * prefactor * bracket;
}

// ---------------------------------------------------------------------------
// Tail probability exponent
// ---------------------------------------------------------------------------

struct TailBoundParams {
  double T = 1.0;
  double p = 8.0;
  double beta = 0.2;
  double eta = 0.5;
  double A1 = 0.5;
  double A2 = 0.1;
  double C = 1.0;  // the generic constant, user-set

  double lambda() const { return eta - std::max(A1, 4.0 * A2); }

  void validate() const {
    require(p > 2.0, "TailBoundParams: p must exceed 2");
    require(beta > 0.0 && beta < 0.5, "TailBoundParams: beta must lie in (0,1/2)");
    require(A1 > 0.0 && A1 < 1.0 && A2 > 0.0 && 4.0 * A2 < 1.0,
            "TailBoundParams: requires A1 < 1 and 4 A2 < 1");
    require(std::max(A1, 4.0 * A2) < 1.0 - 2.0 / p,
            "TailBoundParams: eta-window empty; p not large enough");
    require(eta > std::max(A1, 4.0 * A2) && eta < 1.0 - 2.0 / p,
            "TailBoundParams: eta outside (A1 v 4A2, 1 - 2/p)");
    require(lambda() > 0.0, "TailBoundParams: invalid hypothesis combination");
    require(C > 0.0 && T > 0.0, "TailBoundParams: C and T must be positive");
  }

  /// Smallest even p whose eta-window contains the given exponents with a
  /// little headroom; the hypotheses require p large enough.
  static double minimal_p(double A1, double A2) {
    double s = std::max(A1, 4.0 * A2);
    double p = 2.0 / (1.0 - s) * 2.0;  // factor-two margin in window width
    return std::max(8.0, 2.0 * std::ceil(p / 2.0));
  }
};

/// The composed Lipschitz-estimate bound H(m) = C (2m)^{A1} + C p^2 (2m)^{4A2}
/// entering the exponent through the ladder level eps = e^{-2m}.
inline double tail_H_of_m(const TailBoundParams& par, double m) {
  return par.C * std::pow(2.0 * m, par.A1) +
         par.C * par.p * par.p * std::pow(2.0 * m, 4.0 * par.A2);
}

/// Full exponent of the switching-time tail bound, as printed.
inline double tail_exponent(const TailBoundParams& par, double m) {
  par.validate();
  require(m >= 1.0, "tail_exponent: m must be >= 1");
  const double ln2 = std::log(2.0);
  const double lnC = std::log(par.C);
  const double lnm = std::log(m);
  double e = (2.0 * m + 1.0) * ln2 - 0.5 * std::log(kPi * m);
  e += m * par.p * lnC;
  e += (m * par.p * par.beta / 2.0) *
       ((1.0 + par.A1 + 4.0 * par.A2) * ln2 + 2.0 * lnC +
        std::max(par.A1 * lnm, std::log(par.p * par.p) + 4.0 * par.A2 * lnm));
  e += par.C * (std::pow(m, par.A1) + par.p * par.p * std::pow(m, 4.0 * par.A2)) *
       (par.T / m);
  e += (par.beta * par.eta * par.p * m / 2.0) * std::log(par.T);
  e -= (par.beta * par.eta * par.p * m / 2.0) * lnm;
  return e;
}

/// The asymptotically dominating term -(beta lambda p m / 4) log m.
inline double tail_dominating_term(const TailBoundParams& par, double m) {
  return -(par.beta * par.lambda() * par.p * m / 4.0) * std::log(m);
}

struct TailTabulation {
  std::vector<double> m;
  std::vector<double> exponent;
  std::vector<double> dominating;
  std::optional<std::size_t> m_star_index;  // first index dominated onwards
  double m_star() const {
    return m_star_index ? m[*m_star_index]
                        : std::numeric_limits<double>::quiet_NaN();
  }
};

/// Tabulates the exponent and reports the first m beyond which it stays below
/// the dominating term for every tabulated value.
inline TailTabulation tabulate_tail(const TailBoundParams& par,
                                    const std::vector<double>& ms) {
  TailTabulation tab;
  tab.m = ms;
  tab.exponent.reserve(ms.size());
  tab.dominating.reserve(ms.size());
  for (double m : ms) {
    tab.exponent.push_back(tail_exponent(par, m));
    tab.dominating.push_back(tail_dominating_term(par, m));
  }
  std::optional<std::size_t> candidate;
  for (std::size_t i = 0; i < ms.size(); ++i) {
    if (tab.exponent[i] <= tab.dominating[i]) {
      if (!candidate) candidate = i;
    } else {
      candidate.reset();
    }
  }
  tab.m_star_index = candidate;
  return tab;
}

/// Stirling-type bound (2m choose m) <= 2^{2m+1} / sqrt(pi m).
inline double stirling_binomial_bound(double m) {
  return std::pow(2.0, 2.0 * m + 1.0) / std::sqrt(kPi * m);
}

inline double central_binomial(int m) {
  double v = 1.0;
  for (int i = 1; i <= m; ++i)
    v *= static_cast<double>(m + i) / static_cast<double>(i);
  return v;
}

// ---------------------------------------------------------------------------
// Monte Carlo estimators
// ---------------------------------------------------------------------------

struct MomentEstimate {
  double estimate = 0.0;
  Interval ci;
  double std_error = 0.0;
  std::size_t replicas = 0;
};

/// Max over grid points of the empirical p-th moment of the field values,
/// with a percentile bootstrap CI over replicas.
inline MomentEstimate estimate_sup_moment(
    const std::vector<std::vector<double>>& fields, double p,
    std::uint64_t bootstrap_seed) {
  require(fields.size() >= 30, "estimate_sup_moment: need >= 30 replicas");
  const std::size_t n = fields.front().size();
  for (const auto& f : fields)
    require(f.size() == n, "estimate_sup_moment: ragged ensemble");
  auto statistic = [&](const std::vector<std::size_t>& idx) {
    double best = 0.0;
    for (std::size_t x = 0; x < n; ++x) {
      CompensatedSum s;
      for (std::size_t r : idx)
        s.add(std::pow(std::fabs(fields[r][x]), p));
      best = std::max(best, s.value() / static_cast<double>(idx.size()));
    }
    return best;
  };
  auto boot = bootstrap(fields.size(), statistic, bootstrap_seed);
  return {boot.estimate, boot.ci, boot.std_error, fields.size()};
}

struct HolderQuotient {
  double offset = 0.0;   // torus distance or time gap
  double quotient = 0.0; // L^p increment norm / offset^{beta or beta/2}
};

/// Empirical L^p spatial increment quotients at a fixed snapshot step.
/// Offsets below four grid spacings are rejected as discretization floor.
inline std::vector<HolderQuotient> holder_space_quotients(
    const std::vector<const PathTrajectory*>& ensemble, std::size_t step,
    double p, double beta, const std::vector<std::size_t>& cell_offsets) {
  require(!ensemble.empty(), "holder quotients: empty ensemble");
  const TorusGrid& grid = ensemble.front()->grid;
  std::vector<HolderQuotient> out;
  for (std::size_t off : cell_offsets) {
    require(off >= 4, "holder quotients: offsets below 4 dx are rejected");
    require(off < grid.n, "holder quotients: offset beyond grid");
    CompensatedSum s;
    std::size_t count = 0;
    for (const PathTrajectory* traj : ensemble) {
      const auto& u = traj->snapshot(step);
      for (std::size_t x = 0; x < grid.n; ++x) {
        double d = u[(x + off) % grid.n] - u[x];
        s.add(std::pow(std::fabs(d), p));
        ++count;
      }
    }
    double dist = static_cast<double>(off) * grid.dx();
    dist = dist <= 0.5 ? dist : 1.0 - dist;
    double norm = std::pow(s.value() / static_cast<double>(count), 1.0 / p);
    out.push_back({dist, norm / std::pow(dist, beta)});
  }
  return out;
}

/// Empirical L^p time increment quotients at a fixed base step.
inline std::vector<HolderQuotient> holder_time_quotients(
    const std::vector<const PathTrajectory*>& ensemble, std::size_t base_step,
    double p, double beta, const std::vector<std::size_t>& step_gaps) {
  require(!ensemble.empty(), "holder quotients: empty ensemble");
  const TorusGrid& grid = ensemble.front()->grid;
  std::vector<HolderQuotient> out;
  for (std::size_t gap : step_gaps) {
    require(gap >= 4, "holder quotients: gaps below 4 dt are rejected");
    CompensatedSum s;
    std::size_t count = 0;
    for (const PathTrajectory* traj : ensemble) {
      const auto& u0 = traj->snapshot(base_step);
      const auto& u1 = traj->snapshot(base_step + gap);
      for (std::size_t x = 0; x < grid.n; ++x) {
        s.add(std::pow(std::fabs(u1[x] - u0[x]), p));
        ++count;
      }
    }
    double tgap = static_cast<double>(gap) * grid.dt;
    double norm = std::pow(s.value() / static_cast<double>(count), 1.0 / p);
    out.push_back({tgap, norm / std::pow(tgap, beta / 2.0)});
  }
  return out;
}

struct ComparisonResult {
  double max_violation = 0.0;  // max over stored data of u1 - u2
  std::size_t snapshots_compared = 0;
  bool pass = false;
};

/// Pathwise comparison of a common-noise pair: u1 <= u2 up to tolerance at
/// every stored snapshot, with the per-step extrema as necessary conditions.
inline ComparisonResult comparison_check(const PathTrajectory& u1,
                                         const PathTrajectory& u2,
                                         double tol_comparison = 1e-8) {
  require(u1.fields.size() == u2.fields.size() &&
              u1.min_per_step.size() == u2.min_per_step.size(),
          "comparison_check: trajectories are incompatible");
  ComparisonResult res;
  for (std::size_t i = 0; i < u1.fields.size(); ++i) {
    const auto& a = u1.fields[i];
    const auto& b = u2.fields[i];
    for (std::size_t x = 0; x < a.size(); ++x)
      res.max_violation = std::max(res.max_violation, a[x] - b[x]);
    ++res.snapshots_compared;
  }
  for (std::size_t m = 0; m < u1.min_per_step.size(); ++m) {
    res.max_violation =
        std::max(res.max_violation, u1.min_per_step[m] - u2.min_per_step[m]);
    res.max_violation =
        std::max(res.max_violation, u1.max_per_step[m] - u2.max_per_step[m]);
  }
  res.pass = res.max_violation <= tol_comparison;
  return res;
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct VerificationReport {
  std::string claim_id;
  double estimate = 0.0;
  Interval ci;
  std::string ci_method;  // "wilson", "bootstrap-percentile", or ""
  double bound = std::numeric_limits<double>::quiet_NaN();
  bool pass = false;
  std::size_t replicas = 0;
  double runtime_sec = 0.0;
  std::string notes;
};

}  // namespace she
