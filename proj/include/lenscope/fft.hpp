// SPDX-License-Identifier: Apache-2.0
//
// Radix-2 complex FFT with the grid conventions the wave propagator
// needs: plain and centered 2D transforms on row-major arrays, and an
// exact unitary rotation built from quarter-turn index maps plus a
// three-shear decomposition of the residual angle.
#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "lenscope/errors.hpp"

namespace lenscope {

inline bool is_pow2(std::size_t n) { return n > 0 && (n & (n - 1)) == 0; }

namespace detail {

inline void fft_radix2(std::complex<double>* a, std::size_t n,
                       bool inverse) {
  if (!is_pow2(n))
    throw DomainError("fft: length must be a power of two, got " +
                      std::to_string(n));
  // Bit-reversal permutation.
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  const double sign = inverse ? 1.0 : -1.0;
  std::vector<std::complex<double>> tw;
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len >> 1;
    tw.resize(half);
    for (std::size_t k = 0; k < half; ++k)
      tw[k] = std::polar(1.0, sign * 2.0 * M_PI * static_cast<double>(k) /
                                  static_cast<double>(len));
    for (std::size_t base = 0; base < n; base += len)
      for (std::size_t k = 0; k < half; ++k) {
        const std::complex<double> u = a[base + k];
        const std::complex<double> v = a[base + k + half] * tw[k];
        a[base + k] = u + v;
        a[base + k + half] = u - v;
      }
  }
  if (inverse) {
    const double scale = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) a[i] *= scale;
  }
}

} // namespace detail

/// In-place FFT of a length-n complex vector.  Forward is unscaled,
/// inverse carries the 1/n factor.
inline void fft_1d(std::vector<std::complex<double>>& a, bool inverse) {
  detail::fft_radix2(a.data(), a.size(), inverse);
}

/// In-place 2D FFT of a row-major nx-by-ny array (index iy*nx + ix).
inline void fft_2d(std::vector<std::complex<double>>& a, std::size_t nx,
                   std::size_t ny, bool inverse) {
  if (a.size() != nx * ny)
    throw DomainError("fft_2d: array size does not match nx*ny");
  for (std::size_t iy = 0; iy < ny; ++iy)
    detail::fft_radix2(a.data() + iy * nx, nx, inverse);
  std::vector<std::complex<double>> col(ny);
  for (std::size_t ix = 0; ix < nx; ++ix) {
    for (std::size_t iy = 0; iy < ny; ++iy) col[iy] = a[iy * nx + ix];
    detail::fft_radix2(col.data(), ny, inverse);
    for (std::size_t iy = 0; iy < ny; ++iy) a[iy * nx + ix] = col[iy];
  }
}

/// Centered 2D transform: both input and output indices count from the
/// grid midpoint c = n/2, so C[j] = sum_m v[m] exp(-+ 2 pi i
/// (j-c)(m-c)/n) per axis.  Realized with the alternating-sign trick,
/// which needs each axis length divisible by four.
inline void centered_fft_2d(std::vector<std::complex<double>>& a,
                            std::size_t nx, std::size_t ny, bool inverse) {
  if (nx % 4 != 0 || ny % 4 != 0)
    throw DomainError(
        "centered_fft_2d: axis lengths must be multiples of four");
  for (std::size_t iy = 0; iy < ny; ++iy)
    for (std::size_t ix = 0; ix < nx; ++ix)
      if ((ix + iy) & 1) a[iy * nx + ix] = -a[iy * nx + ix];
  fft_2d(a, nx, ny, inverse);
  for (std::size_t iy = 0; iy < ny; ++iy)
    for (std::size_t ix = 0; ix < nx; ++ix)
      if ((ix + iy) & 1) a[iy * nx + ix] = -a[iy * nx + ix];
}

namespace detail {

// Circular translation of every lattice line along one axis by an
// amount proportional to the transverse index, via a spectral phase
// ramp.  shear_x shifts row iy by s*(iy-c) cells; shear_y shifts
// column ix by s*(ix-c) cells.  Both are exactly unitary.
inline void shear_x(std::vector<std::complex<double>>& a, std::size_t n,
                    double s) {
  const double c = 0.5 * static_cast<double>(n);
  std::vector<std::complex<double>> row(n);
  for (std::size_t iy = 0; iy < n; ++iy) {
    const double t = s * (static_cast<double>(iy) - c);
    for (std::size_t ix = 0; ix < n; ++ix) row[ix] = a[iy * n + ix];
    fft_radix2(row.data(), n, false);
    for (std::size_t j = 0; j < n; ++j) {
      const double fj = (j < n / 2) ? static_cast<double>(j)
                                    : static_cast<double>(j) -
                                          static_cast<double>(n);
      row[j] *= std::polar(1.0, -2.0 * M_PI * fj * t /
                                    static_cast<double>(n));
    }
    fft_radix2(row.data(), n, true);
    for (std::size_t ix = 0; ix < n; ++ix) a[iy * n + ix] = row[ix];
  }
}

inline void shear_y(std::vector<std::complex<double>>& a, std::size_t n,
                    double s) {
  const double c = 0.5 * static_cast<double>(n);
  std::vector<std::complex<double>> col(n);
  for (std::size_t ix = 0; ix < n; ++ix) {
    const double t = s * (static_cast<double>(ix) - c);
    for (std::size_t iy = 0; iy < n; ++iy) col[iy] = a[iy * n + ix];
    fft_radix2(col.data(), n, false);
    for (std::size_t j = 0; j < n; ++j) {
      const double fj = (j < n / 2) ? static_cast<double>(j)
                                    : static_cast<double>(j) -
                                          static_cast<double>(n);
      col[j] *= std::polar(1.0, -2.0 * M_PI * fj * t /
                                    static_cast<double>(n));
    }
    fft_radix2(col.data(), n, true);
    for (std::size_t iy = 0; iy < n; ++iy) a[iy * n + ix] = col[iy];
  }
}

// Quarter turn of the periodic lattice about its index midpoint.
// Plus maps the sample at centered coordinates (p, q) to (-q, p),
// minus to (q, -p); both are permutations, hence exactly unitary.
inline std::vector<std::complex<double>>
quarter_turn(const std::vector<std::complex<double>>& a, std::size_t n,
             bool plus) {
  std::vector<std::complex<double>> out(n * n);
  const std::size_t c = n / 2;
  for (std::size_t iy = 0; iy < n; ++iy)
    for (std::size_t ix = 0; ix < n; ++ix) {
      std::size_t sx, sy;
      if (plus) {
        // out(x, y) = in(y, -x)
        sx = iy;
        sy = (2 * c + n - ix) % n;
      } else {
        // out(x, y) = in(-y, x)
        sx = (2 * c + n - iy) % n;
        sy = ix;
      }
      out[iy * n + ix] = a[sy * n + sx];
    }
  return out;
}

} // namespace detail

/// Rotation of a square centered field about the grid axis:
/// out(x, y) = in(x cos a + y sin a, -x sin a + y cos a), so a feature at
/// (r, 0) moves to (r cos a, r sin a).  Whole quarter turns are index
/// permutations; the residual within +-45 degrees is three unitary
/// shears, so the operation preserves the norm to rounding.
inline std::vector<std::complex<double>>
rotated(const std::vector<std::complex<double>>& a, std::size_t n,
        double angle) {
  if (!is_pow2(n) || n < 4)
    throw DomainError("rotated: grid side must be a power of two >= 4");
  if (a.size() != n * n)
    throw DomainError("rotated: array size does not match n*n");

  const double reduced = std::remainder(angle, 2.0 * M_PI);
  const long q = std::lround(reduced / (0.5 * M_PI));
  const double residual = reduced - static_cast<double>(q) * 0.5 * M_PI;

  std::vector<std::complex<double>> out = a;
  for (long i = 0; i < std::labs(q); ++i)
    out = detail::quarter_turn(out, n, q > 0);

  if (residual != 0.0) {
    const double s1 = -std::tan(0.5 * residual);
    const double s2 = std::sin(residual);
    detail::shear_x(out, n, s1);
    detail::shear_y(out, n, s2);
    detail::shear_x(out, n, s1);
  }
  return out;
}

} // namespace lenscope
