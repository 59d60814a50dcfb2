#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "she/common.hpp"

namespace she {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Wilson score interval for a binomial proportion (z = 1.96).
inline Interval wilson_interval(std::size_t successes, std::size_t trials) {
  require(trials > 0, "wilson_interval: trials must be positive");
  const double z = 1.959963984540054;
  double n = static_cast<double>(trials);
  double phat = static_cast<double>(successes) / n;
  double z2 = z * z;
  double denom = 1.0 + z2 / n;
  double center = (phat + z2 / (2.0 * n)) / denom;
  double half = (z / denom) *
                std::sqrt(phat * (1.0 - phat) / n + z2 / (4.0 * n * n));
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

/// Deterministic uniform index generator for bootstrap resampling.
class IndexSampler {
 public:
  explicit IndexSampler(std::uint64_t seed) : state_(mix64(seed ^ 0xABCDEF)) {}
  std::size_t next(std::size_t n) noexcept {
    state_ = mix64(state_);
    return static_cast<std::size_t>(state_ % n);
  }

 private:
  std::uint64_t state_;
};

struct BootstrapResult {
  double estimate = 0.0;
  Interval ci;       // percentile interval, 95%
  double std_error = 0.0;
};

/// Percentile bootstrap of a statistic over replica-level observations.
/// The statistic receives the resampled index set; resampling is seeded, so
/// reports are reproducible.
template <class Statistic>
BootstrapResult bootstrap(std::size_t n_replicas, const Statistic& statistic,
                          std::uint64_t seed, int resamples = 1000) {
  require(n_replicas >= 2, "bootstrap: need at least two replicas");
  std::vector<std::size_t> idx(n_replicas);
  for (std::size_t i = 0; i < n_replicas; ++i) idx[i] = i;
  BootstrapResult out;
  out.estimate = statistic(idx);

  std::vector<double> values(resamples);
  IndexSampler sampler(seed);
  for (int r = 0; r < resamples; ++r) {
    for (std::size_t i = 0; i < n_replicas; ++i)
      idx[i] = sampler.next(n_replicas);
    values[r] = statistic(idx);
  }
  std::sort(values.begin(), values.end());
  auto pick = [&values](double q) {
    double pos = q * (values.size() - 1);
    std::size_t lo = static_cast<std::size_t>(pos);
    double frac = pos - static_cast<double>(lo);
    if (lo + 1 >= values.size()) return values.back();
    return values[lo] * (1.0 - frac) + values[lo + 1] * frac;
  };
  out.ci = {pick(0.025), pick(0.975)};
  CompensatedSum s, s2;
  for (double v : values) s.add(v);
  double mean = s.value() / resamples;
  for (double v : values) s2.add((v - mean) * (v - mean));
  out.std_error = std::sqrt(s2.value() / (resamples - 1));
  return out;
}

}  // namespace she
