#pragma once

#include <optional>
#include <string>
#include <vector>

#include "she/coefficients.hpp"
#include "she/common.hpp"
#include "she/solver.hpp"

namespace she {

/// Raised when trajectories that must agree bit-for-bit do not; this would
/// mean the scheme is not deterministic and invalidates the localization
/// machinery.
class consistency_violation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// First step at which the spatial minimum reaches the level eps, or nullopt
/// if the path stays above eps for its whole horizon.
inline std::optional<std::size_t> scan_tau(const PathTrajectory& traj,
                                           double eps,
                                           std::size_t from_step = 0) {
  for (std::size_t m = from_step; m < traj.min_per_step.size(); ++m)
    if (traj.min_per_step[m] <= eps) return m;
  return std::nullopt;
}

/// First step at which the spatial maximum exceeds the level, or nullopt.
inline std::optional<std::size_t> scan_sup_exceed(const PathTrajectory& traj,
                                                  double level,
                                                  std::size_t from_step = 0) {
  for (std::size_t m = from_step; m < traj.max_per_step.size(); ++m)
    if (traj.max_per_step[m] > level) return m;
  return std::nullopt;
}

/// tau_eps values and the T_k switching times for one path.
struct StoppingRecord {
  std::vector<double> eps_ladder;                      // decreasing levels
  std::vector<std::optional<std::size_t>> tau_steps;   // per ladder level
  std::vector<std::optional<std::size_t>> t_k_steps;   // absolute steps, k >= 1
  double dt = 0.0;
  double t_end = 0.0;

  double tau_time(std::size_t level) const {
    return tau_steps[level] ? static_cast<double>(*tau_steps[level]) * dt
                            : std::numeric_limits<double>::infinity();
  }
};

/// Result of the T_k recursion: the coefficient is switched to ladder level
/// k+1 each time the minimum crosses base^{-k}, restarting from the stored
/// crossing state with the same driving noise (absolute step indexing), so
/// the concatenation is driven by a single noise realization.
struct TkRecursion {
  StoppingRecord record;
  std::vector<PathTrajectory> segments;  // one per active ladder level
};

/// Runs the T_k recursion up to k_max levels or until t_end.
/// eps(k) = ladder_base^{-k}; requires ladder_base^{-1} < delta.
inline TkRecursion t_k_recursion(const CoefficientSpec& spec,
                                 const std::vector<double>& u0,
                                 TorusGrid grid, const NoiseStream& noise,
                                 int k_max, double ladder_base = 2.718281828459045) {
  require(k_max >= 1, "t_k_recursion: k_max must be >= 1");
  require(ladder_base > 1.0, "t_k_recursion: ladder base must exceed 1");
  grid.snapshot_stride = 1;  // crossing states must be restartable

  TkRecursion out;
  out.record.dt = grid.dt;
  out.record.t_end = grid.t_end;

  const std::size_t total_steps = grid.steps();
  double eps1 = std::pow(ladder_base, -1.0);
  require(eps1 < spec.delta,
          "t_k_recursion: first ladder level must lie below delta");

  std::size_t abs_start = 0;
  PathTrajectory segment =
      simulate(regularize_eps(spec, eps1), u0, grid, noise);
  for (int k = 1; k <= k_max; ++k) {
    double level = std::pow(ladder_base, -static_cast<double>(k));
    out.record.eps_ladder.push_back(level);
    // strictly after the previous switching time
    std::size_t local_from = (k == 1) ? 1 : 1;
    auto hit = scan_tau(segment, level, local_from);
    if (!hit) {
      out.record.t_k_steps.emplace_back(std::nullopt);
      out.segments.push_back(std::move(segment));
      break;
    }
    std::size_t abs_hit = abs_start + *hit;
    out.record.t_k_steps.emplace_back(abs_hit);
    out.segments.push_back(segment);
    if (k == k_max || abs_hit >= total_steps) break;
    double remaining =
        static_cast<double>(total_steps - abs_hit) * grid.dt;
    Coefficient next =
        regularize_eps(spec, std::pow(ladder_base, -static_cast<double>(k + 1)));
    segment = restart_from(next, out.segments.back(), *hit, noise, remaining);
    abs_start = abs_hit;
  }
  return out;
}

/// Rescaled V-block: V(0,.) = 1 exactly, coefficients e^k f(e^{-k} u).
struct RescaledBlock {
  int level = 0;
  PathTrajectory trajectory;
  double oscillation = 0.0;  // sup over the block of |V(s,x) - V(0,x)|
};

inline RescaledBlock rescaled_oscillation(const Coefficient& eps_coeff, int k,
                                          double horizon, TorusGrid grid,
                                          const NoiseStream& noise) {
  require(eps_coeff.has_eps(),
          "rescaled_oscillation: requires an eps-regularized coefficient");
  grid.t_end = horizon;
  std::vector<double> v0(grid.n, 1.0);
  RescaledBlock block;
  block.level = k;
  block.trajectory = simulate(rescale_level(eps_coeff, k), v0, grid, noise);
  double osc = 0.0;
  for (std::size_t m = 0; m < block.trajectory.min_per_step.size(); ++m) {
    osc = std::max(osc, block.trajectory.max_per_step[m] - 1.0);
    osc = std::max(osc, 1.0 - block.trajectory.min_per_step[m]);
  }
  block.oscillation = osc;
  return block;
}

/// Certificate that two ladder levels agree bit-for-bit while the coarse
/// level is still above its barrier.
struct GlueCertificate {
  double eps_coarse = 0.0;
  double eps_fine = 0.0;
  std::optional<std::size_t> tau_coarse;      // crossing step of the coarse level
  std::optional<std::size_t> first_diff_step; // nullopt: full-horizon equality
  bool consistent = false;
};

/// Compares two trajectories driven by the same noise whose coefficients
/// agree above eps_coarse.  Per-step extrema are compared at every step and
/// full fields at every stored snapshot; equality must be exact.
inline GlueCertificate glue_check(const PathTrajectory& coarse,
                                  const PathTrajectory& fine,
                                  double eps_coarse, double eps_fine) {
  require(coarse.min_per_step.size() == fine.min_per_step.size(),
          "glue_check: trajectories have different horizons");
  GlueCertificate cert;
  cert.eps_coarse = eps_coarse;
  cert.eps_fine = eps_fine;
  cert.tau_coarse = scan_tau(coarse, eps_coarse);

  std::optional<std::size_t> diff;
  for (std::size_t m = 0; m < coarse.min_per_step.size(); ++m) {
    bool same = coarse.min_per_step[m] == fine.min_per_step[m] &&
                coarse.max_per_step[m] == fine.max_per_step[m] &&
                coarse.mean_per_step[m] == fine.mean_per_step[m];
    if (same && coarse.has_snapshot(m) && fine.has_snapshot(m))
      same = coarse.snapshot(m) == fine.snapshot(m);
    if (!same) {
      diff = m;
      break;
    }
  }
  cert.first_diff_step = diff;

  // agreement is required up to and including the coarse crossing step;
  // divergence may first appear in the state computed from the crossing state
  std::size_t must_agree_through =
      cert.tau_coarse ? *cert.tau_coarse : coarse.min_per_step.size() - 1;
  cert.consistent = !diff || *diff > must_agree_through;
  if (!cert.consistent)
    throw consistency_violation(
        "glue: trajectories diverge at step " + std::to_string(*diff) +
        " before the coarse barrier crossing at step " +
        std::to_string(must_agree_through) +
        "; the scheme is not deterministic");
  return cert;
}

/// Pairwise certificates along a ladder of trajectories ordered by
/// decreasing eps, all driven by the same noise.
inline std::vector<GlueCertificate> glue_ladder(
    const std::vector<PathTrajectory>& trajectories,
    const std::vector<double>& eps_ladder) {
  require(trajectories.size() == eps_ladder.size() && eps_ladder.size() >= 2,
          "glue_ladder: need one trajectory per ladder level");
  for (std::size_t i = 0; i + 1 < eps_ladder.size(); ++i)
    require(eps_ladder[i] > eps_ladder[i + 1],
            "glue_ladder: ladder levels must decrease");
  std::vector<GlueCertificate> certs;
  for (std::size_t i = 0; i + 1 < trajectories.size(); ++i)
    certs.push_back(glue_check(trajectories[i], trajectories[i + 1],
                               eps_ladder[i], eps_ladder[i + 1]));
  return certs;
}

/// Row of the M-truncation ladder table.
struct SupLadderRow {
  double m_level = 0.0;
  std::optional<std::size_t> tau_step;  // first step with spatial max > M
  bool blown_up = false;                // path left the representable range
};

/// CSV export for stopping records: (epsilon, tau_step, tau_time,
/// censored_flag); censored rows carry the sentinel "> T_end".
inline void write_stopping_csv(const StoppingRecord& rec,
                               const std::string& path) {
  std::ofstream out(path);
  require(out.good(), "cannot open " + path);
  out << "epsilon,tau_step,tau_time,censored_flag\n";
  const auto& steps = rec.tau_steps.empty() ? rec.t_k_steps : rec.tau_steps;
  for (std::size_t i = 0; i < rec.eps_ladder.size(); ++i) {
    out << format_double(rec.eps_ladder[i]) << ',';
    if (i < steps.size() && steps[i]) {
      out << *steps[i] << ','
          << format_double(static_cast<double>(*steps[i]) * rec.dt) << ",0\n";
    } else {
      out << ",> T_end,1\n";
    }
  }
}

}  // namespace she
