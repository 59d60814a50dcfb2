#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace she {

inline constexpr double kPi = 3.141592653589793238462643383279502884;

/// Thrown when an operation receives an argument outside its contract.
class invalid_parameter : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when a simulated field leaves the representable range.  Carries the
/// first offending time step so stress tests can report where the path died.
class blowup_error : public std::runtime_error {
 public:
  blowup_error(std::size_t step, const std::string& what)
      : std::runtime_error(what), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

/// Thrown when an iterative numeric estimate fails to stabilize.
class estimation_failure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw invalid_parameter(msg);
}

/// SplitMix64 finalizer; the mixing core of the counter-based noise streams.
inline std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Kahan-compensated accumulator, used by the independent high-precision
/// recomputation paths in the test oracles and by the estimator reductions.
class CompensatedSum {
 public:
  void add(double v) noexcept {
    double y = v - c_;
    double t = s_ + y;
    c_ = (t - s_) - y;
    s_ = t;
  }
  double value() const noexcept { return s_; }

 private:
  double s_ = 0.0;
  double c_ = 0.0;
};

/// Pairwise summation: associative reduction whose result is independent of
/// how work was split across threads.
inline double pairwise_sum(const double* data, std::size_t n) {
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += data[i];
    return s;
  }
  std::size_t h = n / 2;
  return pairwise_sum(data, h) + pairwise_sum(data + h, n - h);
}

inline double pairwise_sum(const std::vector<double>& v) {
  return pairwise_sum(v.data(), v.size());
}

/// Shortest round-trip decimal formatting; every number written to a report
/// goes through here so reruns are byte-identical.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf);
}

inline std::string format_double(double v, int precision) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.*g", precision, v);
  return std::string(buf);
}

/// Wrap a coordinate into [0,1).
inline double wrap_unit(double x) noexcept {
  double r = x - std::floor(x);
  if (r >= 1.0) r = 0.0;  // guards x = -tiny, where floor rounding yields 1
  return r;
}

/// Distance between two points of the unit torus.
inline double torus_distance(double x, double y) noexcept {
  double d = std::fabs(wrap_unit(x) - wrap_unit(y));
  return d <= 0.5 ? d : 1.0 - d;
}

}  // namespace she
