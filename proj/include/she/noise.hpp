#pragma once

#include <cstdint>

#include "she/common.hpp"

namespace she {

/// Counter-based space-time white noise stream.  The Gaussian increment for a
/// space-time cell is a pure function of (master_seed, replica, substream,
/// step, cell), so replicas can run on any thread layout and still reproduce
/// bit-identically, and restarted segments can resume mid-stream by absolute
/// step index.
class NoiseStream {
 public:
  NoiseStream() = default;
  NoiseStream(std::uint64_t master_seed, std::uint64_t replica_index,
              std::uint64_t substream = 0)
      : seed_(master_seed), replica_(replica_index), substream_(substream) {
    key_ = mix64(mix64(mix64(seed_ ^ 0x5851F42D4C957F2Dull) + replica_) +
                 (substream_ ^ 0x14057B7EF767814Full));
  }

  std::uint64_t master_seed() const noexcept { return seed_; }
  std::uint64_t replica() const noexcept { return replica_; }
  std::uint64_t substream() const noexcept { return substream_; }

  /// A fresh stream that is independent of this one (used by strong-Markov
  /// restarts and the V-block simulations).
  NoiseStream fork(std::uint64_t salt) const {
    return NoiseStream(seed_, replica_, mix64(substream_ + 1) ^ salt);
  }

  /// Standard normal variate for the given space-time cell.
  double gaussian(std::uint64_t step, std::uint64_t cell) const noexcept {
    std::uint64_t h = mix64(key_ ^ (step * 0x9E3779B97F4A7C15ull));
    std::uint64_t g = mix64(h + cell);
    std::uint64_t a = mix64(g ^ 0xD1B54A32D192ED03ull);
    std::uint64_t b = mix64(g ^ 0x8CB92BA72F3D8DD7ull);
    // Box-Muller on two 53-bit uniforms, both strictly inside (0,1)
    double u1 = (static_cast<double>(a >> 11) + 0.5) * 0x1.0p-53;
    double u2 = (static_cast<double>(b >> 11) + 0.5) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
  }

 private:
  std::uint64_t seed_ = 0;
  std::uint64_t replica_ = 0;
  std::uint64_t substream_ = 0;
  std::uint64_t key_ = 0;
};

}  // namespace she
