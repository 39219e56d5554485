#pragma once

// Minimal iterative radix-2 FFT and a Toeplitz convolution helper for the
// 1-D integral operators.

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace commlab::fft {

inline void transform(std::vector<std::complex<double>>& a, bool inverse) {
  const size_t n = a.size();
  if (n == 0 || (n & (n - 1)) != 0)
    throw std::invalid_argument("fft: length must be a power of two");
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (size_t len = 2; len <= n; len <<= 1) {
    const double ang = 2.0 * 3.141592653589793238462643 / double(len) *
                       (inverse ? 1.0 : -1.0);
    const std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (size_t j = 0; j < len / 2; ++j) {
        const std::complex<double> u = a[i + j];
        const std::complex<double> v = a[i + j + len / 2] * w;
        a[i + j] = u + v;
        a[i + j + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
  if (inverse)
    for (auto& x : a) x /= double(n);
}

// out[i] = sum_j f[j] kernel[(i - j) + (N-1)], kernel indexed by offset
// d in [-(N-1), N-1] as kernel[d + N - 1].
inline std::vector<double> toeplitz_apply(const std::vector<double>& f,
                                          const std::vector<double>& kernel) {
  const size_t n = f.size();
  if (kernel.size() != 2 * n - 1)
    throw std::invalid_argument("toeplitz_apply: kernel size mismatch");
  size_t m = 1;
  while (m < 3 * n) m <<= 1;
  std::vector<std::complex<double>> fa(m), ka(m);
  for (size_t i = 0; i < n; ++i) fa[i] = f[i];
  for (size_t i = 0; i < kernel.size(); ++i) ka[i] = kernel[i];
  transform(fa, false);
  transform(ka, false);
  for (size_t i = 0; i < m; ++i) fa[i] *= ka[i];
  transform(fa, true);
  std::vector<double> out(n);
  for (size_t i = 0; i < n; ++i) out[i] = fa[i + n - 1].real();
  return out;
}

}  // namespace commlab::fft
