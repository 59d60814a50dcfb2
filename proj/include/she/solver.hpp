#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "she/coefficients.hpp"
#include "she/common.hpp"
#include "she/fft.hpp"
#include "she/noise.hpp"

namespace she {

/// Uniform periodic discretization of the torus plus the time step.
struct TorusGrid {
  std::size_t n = 128;
  double dt = 1e-5;
  double t_end = 0.05;
  std::size_t snapshot_stride = 1;

  double dx() const noexcept { return 1.0 / static_cast<double>(n); }

  std::size_t steps() const {
    double m = t_end / dt;
    double r = std::round(m);
    require(std::fabs(m - r) < 1e-9 * std::max(1.0, r),
            "TorusGrid: t_end must be an integer multiple of dt");
    return static_cast<std::size_t>(r);
  }

  void validate() const {
    require(n >= 8 && (n & (n - 1)) == 0,
            "TorusGrid: n must be a power of two >= 8");
    require(dt > 0.0 && std::isfinite(dt), "TorusGrid: dt must be positive");
    require(t_end > 0.0 && std::isfinite(t_end),
            "TorusGrid: t_end must be positive");
    require(dt <= dx() + 1e-15, "TorusGrid: dt <= dx accuracy guard violated");
    require(snapshot_stride >= 1, "TorusGrid: snapshot_stride must be >= 1");
    (void)steps();
  }
};

/// A realized solution path: full fields every snapshot_stride steps, spatial
/// extrema (plus mean and variance for the summaries) at every step.
struct PathTrajectory {
  TorusGrid grid;
  NoiseStream stream;
  std::size_t first_step = 0;  // absolute index of fields.front()

  std::vector<std::vector<double>> fields;  // snapshots, stride apart
  std::vector<double> min_per_step;         // one entry per step incl. step 0
  std::vector<double> max_per_step;
  std::vector<double> mean_per_step;
  std::vector<double> var_per_step;

  std::size_t steps() const noexcept { return min_per_step.size() - 1; }
  double time_of_step(std::size_t m) const noexcept {
    return static_cast<double>(first_step + m) * grid.dt;
  }

  bool has_snapshot(std::size_t step) const noexcept {
    return step % grid.snapshot_stride == 0 &&
           step / grid.snapshot_stride < fields.size();
  }

  const std::vector<double>& snapshot(std::size_t step) const {
    require(step % grid.snapshot_stride == 0,
            "trajectory: step " + std::to_string(step) +
                " is not aligned with snapshot stride " +
                std::to_string(grid.snapshot_stride));
    std::size_t idx = step / grid.snapshot_stride;
    require(idx < fields.size(), "trajectory: step beyond stored range");
    return fields[idx];
  }

  const std::vector<double>& final_field() const { return fields.back(); }
};

namespace detail {

inline void field_stats(const std::vector<double>& u, double& mn, double& mx,
                        double& mean, double& var) {
  mn = u[0];
  mx = u[0];
  CompensatedSum s;
  for (double v : u) {
    mn = std::min(mn, v);
    mx = std::max(mx, v);
    s.add(v);
  }
  mean = s.value() / static_cast<double>(u.size());
  CompensatedSum q;
  for (double v : u) q.add((v - mean) * (v - mean));
  var = q.value() / static_cast<double>(u.size());
}

}  // namespace detail

/// One semi-implicit Euler-Maruyama step factory: the linear half-step is the
/// exact spectral solve of (I - dt/2 L_h) with the periodic second-difference
/// operator L_h; drift and noise enter explicitly.
class SpectralStepper {
 public:
  explicit SpectralStepper(const TorusGrid& grid) : grid_(grid) {
    grid.validate();
    const std::size_t n = grid.n;
    std::vector<double> mult(n);
    const double c = grid.dt * 2.0 * static_cast<double>(n) *
                     static_cast<double>(n);
    for (std::size_t k = 0; k < n; ++k) {
      double s = std::sin(kPi * static_cast<double>(k) / static_cast<double>(n));
      mult[k] = 1.0 / (1.0 + c * s * s);
    }
    op_ = fft::CirculantOperator(std::move(mult));
    noise_scale_ = std::sqrt(grid.dt / grid.dx());
  }

  /// Damping factor applied to Fourier mode k by the implicit solve.
  double mode_damping(std::size_t k) const { return op_.multiplier()[k]; }

  template <class Coeff>
  void step(const Coeff& coeff, const NoiseStream& noise, std::size_t abs_step,
            std::vector<double>& u) {
    const std::size_t n = grid_.n;
    for (std::size_t j = 0; j < n; ++j) {
      double uj = u[j];
      u[j] = uj + grid_.dt * coeff.b(uj) +
             noise_scale_ * coeff.sigma(uj) * noise.gaussian(abs_step, j);
    }
    op_.apply(u);
  }

 private:
  TorusGrid grid_;
  fft::CirculantOperator op_;
  double noise_scale_;
};

/// Deterministic pure zero-noise variant used by oracle tests.
struct ZeroNoise {
  double gaussian(std::uint64_t, std::uint64_t) const noexcept { return 0.0; }
};

namespace detail {

template <class Coeff, class Noise>
PathTrajectory run_simulation(const Coeff& coeff, std::vector<double> u,
                              const TorusGrid& grid, const Noise& noise,
                              const NoiseStream& id, std::size_t first_step,
                              std::size_t n_steps) {
  PathTrajectory traj;
  traj.grid = grid;
  traj.stream = id;
  traj.first_step = first_step;
  traj.min_per_step.reserve(n_steps + 1);
  traj.max_per_step.reserve(n_steps + 1);
  traj.mean_per_step.reserve(n_steps + 1);
  traj.var_per_step.reserve(n_steps + 1);

  SpectralStepper stepper(grid);
  double mn, mx, mean, var;
  detail::field_stats(u, mn, mx, mean, var);
  traj.min_per_step.push_back(mn);
  traj.max_per_step.push_back(mx);
  traj.mean_per_step.push_back(mean);
  traj.var_per_step.push_back(var);
  traj.fields.push_back(u);

  for (std::size_t m = 0; m < n_steps; ++m) {
    stepper.step(coeff, noise, first_step + m, u);
    detail::field_stats(u, mn, mx, mean, var);
    if (!std::isfinite(mn) || !std::isfinite(mx))
      throw blowup_error(first_step + m + 1,
                         "simulate: non-finite field value at step " +
                             std::to_string(first_step + m + 1));
    traj.min_per_step.push_back(mn);
    traj.max_per_step.push_back(mx);
    traj.mean_per_step.push_back(mean);
    traj.var_per_step.push_back(var);
    if ((m + 1) % grid.snapshot_stride == 0) traj.fields.push_back(u);
  }
  return traj;
}

}  // namespace detail

/// Simulate the discrete mild equation with the given coefficient pair from
/// the nonnegative initial field u0.  Deterministic in (coeff, u0, grid,
/// noise) regardless of host parallelism.
template <class Coeff>
PathTrajectory simulate(const Coeff& coeff, const std::vector<double>& u0,
                        const TorusGrid& grid, const NoiseStream& noise) {
  grid.validate();
  require(u0.size() == grid.n, "simulate: initial field size mismatch");
  for (double v : u0)
    require(v >= 0.0, "simulate: initial field must be nonnegative");
  return detail::run_simulation(coeff, u0, grid, noise, noise, 0, grid.steps());
}

/// Deterministic run (sigma ignored, noise increments zero).
template <class Coeff>
PathTrajectory simulate_deterministic(const Coeff& coeff,
                                      const std::vector<double>& u0,
                                      const TorusGrid& grid) {
  grid.validate();
  require(u0.size() == grid.n, "simulate: initial field size mismatch");
  return detail::run_simulation(coeff, u0, grid, ZeroNoise{}, NoiseStream{}, 0,
                                grid.steps());
}

/// Common-noise pair run for comparison experiments.  Requires b1 <= b2 on
/// [0, z_check] (verified on a dense grid) and ordered initial data.
template <class Coeff1, class Coeff2>
std::pair<PathTrajectory, PathTrajectory> simulate_pair_common_noise(
    const Coeff1& coeff1, const Coeff2& coeff2,
    const std::vector<double>& u0_1, const std::vector<double>& u0_2,
    const TorusGrid& grid, const NoiseStream& noise, double z_check = 8.0) {
  require(u0_1.size() == u0_2.size(), "pair run: initial field size mismatch");
  for (std::size_t j = 0; j < u0_1.size(); ++j)
    require(u0_1[j] <= u0_2[j],
            "pair run: initial data not ordered at cell " + std::to_string(j));
  const int n_check = 4096;
  for (int i = 0; i <= n_check; ++i) {
    double z = z_check * static_cast<double>(i) / n_check;
    double b1 = coeff1.b(z), b2 = coeff2.b(z);
    require(b1 <= b2 + 1e-14,
            "pair run: drift order b1 <= b2 violated at z = " +
                format_double(z) + " (b1 = " + format_double(b1) +
                ", b2 = " + format_double(b2) + ")");
  }
  auto t1 = simulate(coeff1, u0_1, grid, noise);
  auto t2 = simulate(coeff2, u0_2, grid, noise);
  return {std::move(t1), std::move(t2)};
}

/// Continue a trajectory from a stored snapshot.  With the same stream the
/// continuation reproduces the tail of an uninterrupted run bit-for-bit; a
/// forked stream gives a strong-Markov restart.
template <class Coeff>
PathTrajectory restart_from(const Coeff& coeff, const PathTrajectory& traj,
                            std::size_t step_index, const NoiseStream& noise,
                            double duration) {
  const std::vector<double>& u = traj.snapshot(step_index);
  TorusGrid grid = traj.grid;
  grid.t_end = duration;  // t_end of a continuation segment is its duration
  std::size_t abs_step = traj.first_step + step_index;
  return detail::run_simulation(coeff, u, grid, noise, noise, abs_step,
                                grid.steps());
}

// ---------------------------------------------------------------------------
// Trajectory export
// ---------------------------------------------------------------------------

/// Binary snapshot file.  Header: magic "SHETRAJ1", u64 n, f64 dt, u64 stride,
/// u64 count, u64 first_step; then count row-major n-vectors of f64.
inline void write_trajectory_binary(const PathTrajectory& traj,
                                    const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "cannot open " + path);
  const char magic[8] = {'S', 'H', 'E', 'T', 'R', 'A', 'J', '1'};
  out.write(magic, 8);
  auto put_u64 = [&out](std::uint64_t v) {
    out.write(reinterpret_cast<const char*>(&v), 8);
  };
  auto put_f64 = [&out](double v) {
    out.write(reinterpret_cast<const char*>(&v), 8);
  };
  put_u64(traj.grid.n);
  put_f64(traj.grid.dt);
  put_u64(traj.grid.snapshot_stride);
  put_u64(traj.fields.size());
  put_u64(traj.first_step);
  for (const auto& f : traj.fields)
    out.write(reinterpret_cast<const char*>(f.data()),
              static_cast<std::streamsize>(f.size() * sizeof(double)));
}

/// Per-step summary CSV: t, min, max, mean, variance.
inline void write_trajectory_csv(const PathTrajectory& traj,
                                 const std::string& path) {
  std::ofstream out(path);
  require(out.good(), "cannot open " + path);
  out << "t,min,max,mean,variance\n";
  for (std::size_t m = 0; m < traj.min_per_step.size(); ++m) {
    out << format_double(traj.time_of_step(m)) << ','
        << format_double(traj.min_per_step[m]) << ','
        << format_double(traj.max_per_step[m]) << ','
        << format_double(traj.mean_per_step[m]) << ','
        << format_double(traj.var_per_step[m]) << '\n';
  }
}

}  // namespace she
