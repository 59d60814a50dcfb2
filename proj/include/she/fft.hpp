#pragma once

#include <complex>
#include <vector>

#include "she/common.hpp"

namespace she::fft {

/// In-place iterative radix-2 Cooley-Tukey transform.  n must be a power of
/// two.  sign = -1 gives the forward transform, +1 the (unscaled) inverse.
/// The loop structure is fixed, so results are bit-reproducible across runs
/// and across hosts with the same FP environment.
inline void transform(std::vector<std::complex<double>>& a, int sign) {
  const std::size_t n = a.size();
  require(n > 0 && (n & (n - 1)) == 0, "fft: size must be a power of two");
  // bit reversal permutation
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = sign * 2.0 * kPi / static_cast<double>(len);
    const std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        std::complex<double> u = a[i + k];
        std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

/// Applies a real, index-symmetric spectral multiplier m_k to a real grid
/// function: u <- IDFT(diag(m) DFT(u)).  The multiplier array holds one entry
/// per mode k = 0..n-1 and must satisfy m_k = m_{n-k} for a real result; the
/// imaginary parts left by rounding are discarded.
class CirculantOperator {
 public:
  CirculantOperator() = default;
  explicit CirculantOperator(std::vector<double> multiplier)
      : mult_(std::move(multiplier)), work_(mult_.size()) {
    const std::size_t n = mult_.size();
    require(n > 0 && (n & (n - 1)) == 0,
            "CirculantOperator: size must be a power of two");
  }

  std::size_t size() const noexcept { return mult_.size(); }
  const std::vector<double>& multiplier() const noexcept { return mult_; }

  void apply(std::vector<double>& u) {
    const std::size_t n = mult_.size();
    require(u.size() == n, "CirculantOperator: field/operator size mismatch");
    for (std::size_t j = 0; j < n; ++j) work_[j] = {u[j], 0.0};
    transform(work_, -1);
    for (std::size_t k = 0; k < n; ++k) work_[k] *= mult_[k];
    transform(work_, +1);
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t j = 0; j < n; ++j) u[j] = work_[j].real() * inv_n;
  }

 private:
  std::vector<double> mult_;
  std::vector<std::complex<double>> work_;
};

}  // namespace she::fft
