// SPDX-License-Identifier: Apache-2.0
//
// Transverse quantum wavefunctions on a uniform grid and their exact
// propagation through a round magnetic lens.  The propagator for a
// quadratic Hamiltonian is a quadratic-phase integral over the starting
// plane; it is evaluated as chirp multiply, centered FFT, chirp
// multiply, which is exact for band-limited fields and keeps the
// discrete norm to rounding.  At an image plane the integral collapses
// to a rotated, magnified replica that is realized by rescaling the
// grid metadata instead of resampling.
#pragma once

#include <array>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "lenscope/beam.hpp"
#include "lenscope/errors.hpp"
#include "lenscope/fft.hpp"
#include "lenscope/field.hpp"
#include "lenscope/paraxial.hpp"

namespace lenscope {

/// Sampling geometry for a wavefunction grid.  The sample at index
/// (nx/2, ny/2) sits at (x0, y0); cell i along x sits at
/// x0 + (i - nx/2)*dx.  All lengths in mm.
struct GridSpec {
  std::size_t nx = 0;
  std::size_t ny = 0;
  double dx = 0.0;
  double dy = 0.0;
  double x0 = 0.0;
  double y0 = 0.0;
};

/// A transverse wavefunction sampled on a uniform grid at one plane z.
/// values is row-major, index iy*nx + ix.  The accumulated dynamical
/// phase is kept in global_phase rather than multiplied into the
/// samples; intensities and moments never see it.
struct WaveField {
  std::size_t nx = 0;
  std::size_t ny = 0;
  double dx = 0.0; // mm per cell
  double dy = 0.0;
  double x0 = 0.0; // mm, grid midpoint offset from the axis
  double y0 = 0.0;
  double z = 0.0;      // mm
  double p0c = 0.0;    // eV
  double hbar_c = 0.0; // eV nm
  double global_phase = 0.0; // radians
  std::vector<std::complex<double>> values;

  double x_at(std::size_t ix) const {
    return x0 + (static_cast<double>(ix) -
                 0.5 * static_cast<double>(nx)) * dx;
  }
  double y_at(std::size_t iy) const {
    return y0 + (static_cast<double>(iy) -
                 0.5 * static_cast<double>(ny)) * dy;
  }
  /// Wavenumber p0/hbar in 1/mm.
  double k0_per_mm() const {
    return p0c / (hbar_c / constants::nm_per_mm);
  }
  /// de Broglie wavelength 2*pi*hbar/p0 in mm.
  double lambda_db_mm() const { return 2.0 * M_PI / k0_per_mm(); }
};

/// Integral of |psi|^2 over the grid.
inline double norm_squared(const WaveField& psi) {
  double s = 0.0;
  for (const std::complex<double>& v : psi.values) s += std::norm(v);
  return s * psi.dx * psi.dy;
}

namespace detail {

inline void check_grid(const GridSpec& g, const char* who) {
  if (!is_pow2(g.nx) || !is_pow2(g.ny) || g.nx < 4 || g.ny < 4)
    throw DomainError(std::string(who) +
                      ": grid counts must be powers of two >= 4");
  if (!(g.dx > 0.0) || !(g.dy > 0.0) || !std::isfinite(g.dx) ||
      !std::isfinite(g.dy))
    throw DomainError(std::string(who) + ": cell pitch must be positive");
  if (!std::isfinite(g.x0) || !std::isfinite(g.y0))
    throw DomainError(std::string(who) + ": grid offsets must be finite");
}

inline void check_propagation_field(const WaveField& psi, const char* who) {
  if (!is_pow2(psi.nx) || !is_pow2(psi.ny) || psi.nx < 64 || psi.ny < 64)
    throw DomainError(std::string(who) +
                      ": propagation needs power-of-two grids with at "
                      "least 64 cells per axis");
  if (psi.values.size() != psi.nx * psi.ny)
    throw DomainError(std::string(who) +
                      ": value count does not match the grid");
  if (!(psi.dx > 0.0) || !(psi.dy > 0.0))
    throw DomainError(std::string(who) + ": cell pitch must be positive");
  if (!(psi.p0c > 0.0) || !(psi.hbar_c > 0.0))
    throw DomainError(std::string(who) +
                      ": field is missing its beam constants");
}

// Larmor rotation acts about the optical axis, which the index-space
// rotation can only reach when the axis is the grid center of a square
// grid.
inline void check_rotatable(const WaveField& psi, const char* who) {
  if (psi.nx != psi.ny || psi.dx != psi.dy)
    throw DomainError(std::string(who) +
                      ": image rotation needs a square grid with equal "
                      "pitches");
  if (psi.x0 != 0.0 || psi.y0 != 0.0)
    throw DomainError(std::string(who) +
                      ": image rotation needs the grid centered on the "
                      "axis (zero offsets)");
}

} // namespace detail

/// Normalized Gaussian source centered at `center` (mm) with per-axis
/// intensity standard deviation `sigma` (mm) and a linear phase giving
/// mean transverse momentum p0*tilt.
inline WaveField make_gaussian(const GridSpec& grid,
                               const BeamKinematics& beam, double z,
                               std::pair<double, double> center,
                               double sigma,
                               std::pair<double, double> tilt) {
  detail::check_grid(grid, "make_gaussian");
  if (!(beam.p0c > 0.0) || !(beam.hbar_c > 0.0))
    throw DomainError("make_gaussian: beam momentum must be positive");
  if (!std::isfinite(z) || !std::isfinite(center.first) ||
      !std::isfinite(center.second))
    throw DomainError("make_gaussian: plane and center must be finite");
  if (!(sigma >= 4.0 * std::max(grid.dx, grid.dy)))
    throw DomainError(
        "make_gaussian: sigma must span at least four cells per axis");
  const double tilt2 =
      tilt.first * tilt.first + tilt.second * tilt.second;
  if (!(tilt2 < 1.0))
    throw DomainError(
        "make_gaussian: tilt is transverse momentum over p0 and must "
        "stay below one");

  WaveField psi;
  psi.nx = grid.nx;
  psi.ny = grid.ny;
  psi.dx = grid.dx;
  psi.dy = grid.dy;
  psi.x0 = grid.x0;
  psi.y0 = grid.y0;
  psi.z = z;
  psi.p0c = beam.p0c;
  psi.hbar_c = beam.hbar_c;
  psi.values.resize(grid.nx * grid.ny);

  const double k0 = psi.k0_per_mm();
  const double inv4s2 = 1.0 / (4.0 * sigma * sigma);
  for (std::size_t iy = 0; iy < grid.ny; ++iy) {
    const double y = psi.y_at(iy);
    for (std::size_t ix = 0; ix < grid.nx; ++ix) {
      const double x = psi.x_at(ix);
      const double rx = x - center.first;
      const double ry = y - center.second;
      const double env = std::exp(-(rx * rx + ry * ry) * inv4s2);
      const double ph = k0 * (tilt.first * x + tilt.second * y);
      psi.values[iy * grid.nx + ix] = std::polar(env, ph);
    }
  }
  const double n2 = norm_squared(psi);
  if (!(n2 > 0.0))
    throw NumericError("make_gaussian: source has no weight on the grid");
  const double scale = 1.0 / std::sqrt(n2);
  for (std::complex<double>& v : psi.values) v *= scale;
  return psi;
}

/// Low-order observables of a normalized field.  Positions by grid
/// sums, momentum by the spectral expectation of the wavenumber.
struct WaveMoments {
  std::array<double, 2> centroid{};          // mm
  std::array<double, 2> momentum_centroid{}; // (px, py)/p0
  std::array<std::array<double, 2>, 2> covariance{}; // mm^2
  double third_central_x = 0.0;              // mm^3
};

inline WaveMoments moments(const WaveField& psi) {
  if (psi.values.size() != psi.nx * psi.ny || psi.nx == 0 || psi.ny == 0)
    throw DomainError("moments: value count does not match the grid");
  if (psi.nx % 4 != 0 || psi.ny % 4 != 0)
    throw DomainError("moments: grid counts must be multiples of four");
  const double n2 = norm_squared(psi);
  if (std::abs(n2 - 1.0) > 1e-6)
    throw DomainError("moments: field is not normalized");

  const double cell = psi.dx * psi.dy;
  double mx = 0.0, my = 0.0;
  for (std::size_t iy = 0; iy < psi.ny; ++iy) {
    const double y = psi.y_at(iy);
    for (std::size_t ix = 0; ix < psi.nx; ++ix) {
      const double w = std::norm(psi.values[iy * psi.nx + ix]) * cell;
      mx += w * psi.x_at(ix);
      my += w * y;
    }
  }
  mx /= n2;
  my /= n2;

  WaveMoments m;
  m.centroid = {mx, my};
  double cxx = 0.0, cxy = 0.0, cyy = 0.0, t3 = 0.0;
  for (std::size_t iy = 0; iy < psi.ny; ++iy) {
    const double ry = psi.y_at(iy) - my;
    for (std::size_t ix = 0; ix < psi.nx; ++ix) {
      const double rx = psi.x_at(ix) - mx;
      const double w = std::norm(psi.values[iy * psi.nx + ix]) * cell;
      cxx += w * rx * rx;
      cxy += w * rx * ry;
      cyy += w * ry * ry;
      t3 += w * rx * rx * rx;
    }
  }
  m.covariance = {{{cxx / n2, cxy / n2}, {cxy / n2, cyy / n2}}};
  m.third_central_x = t3 / n2;

  // Spectral momentum.  Grid offsets only add a linear spectral phase,
  // so the power spectrum needs no offset correction.
  std::vector<std::complex<double>> spec = psi.values;
  centered_fft_2d(spec, psi.nx, psi.ny, false);
  const double cx = 0.5 * static_cast<double>(psi.nx);
  const double cy = 0.5 * static_cast<double>(psi.ny);
  double wsum = 0.0, kxm = 0.0, kym = 0.0;
  for (std::size_t jy = 0; jy < psi.ny; ++jy) {
    const double ky =
        2.0 * M_PI * (static_cast<double>(jy) - cy) /
        (static_cast<double>(psi.ny) * psi.dy);
    for (std::size_t jx = 0; jx < psi.nx; ++jx) {
      const double kx =
          2.0 * M_PI * (static_cast<double>(jx) - cx) /
          (static_cast<double>(psi.nx) * psi.dx);
      const double w = std::norm(spec[jy * psi.nx + jx]);
      wsum += w;
      kxm += w * kx;
      kym += w * ky;
    }
  }
  const double k0 = psi.k0_per_mm();
  m.momentum_centroid = {kxm / (wsum * k0), kym / (wsum * k0)};
  return m;
}

enum class PropagationBranch { general, image_plane };

/// Everything propagate needs between two planes: the fundamental pair,
/// the accumulated rotation angle, and which propagator branch applies.
struct PropagationPlan {
  FundamentalPair pair;
  double theta = 0.0; // radians
  double zi = 0.0;    // mm
  double z = 0.0;     // mm
  PropagationBranch branch = PropagationBranch::general;
  double h_threshold = 0.0; // mm
};

/// Build a plan from the lens strength.  h_threshold <= 0 selects the
/// default switchover |h| < dx^2/lambda, where the general branch's
/// output grid pitch falls to the input pitch divided by the axial
/// magnification and its input chirp stops being resolvable.
inline PropagationPlan make_propagation_plan(const LensStrength& ls,
                                             double zi, double z,
                                             const WaveField& psi,
                                             double h_threshold = 0.0) {
  if (!std::isfinite(zi) || !std::isfinite(z))
    throw DomainError("make_propagation_plan: planes must be finite");
  if (!(psi.p0c > 0.0) || !(psi.hbar_c > 0.0))
    throw DomainError(
        "make_propagation_plan: field is missing its beam constants");
  PropagationPlan plan;
  plan.pair = pair_between(ls, zi, z);
  plan.theta = larmor_angle(ls, zi, z);
  plan.zi = zi;
  plan.z = z;
  if (h_threshold > 0.0) {
    plan.h_threshold = h_threshold;
  } else {
    const double pitch = std::max(psi.dx, psi.dy);
    plan.h_threshold = pitch * pitch / psi.lambda_db_mm();
  }
  plan.branch = (std::abs(plan.pair.h) < plan.h_threshold)
                    ? PropagationBranch::image_plane
                    : PropagationBranch::general;
  return plan;
}

namespace detail {

inline void check_plane_match(const WaveField& psi,
                              const PropagationPlan& plan,
                              const char* who) {
  const double tol = 1e-9 * std::max(1.0, std::abs(plan.zi));
  if (std::abs(psi.z - plan.zi) > tol)
    throw DomainError(std::string(who) +
                      ": plan starts at a different plane than the field");
}

// Mirror both axes about the grid center, index (n - j) mod n.  Used to
// express a negative output pitch on a positive-pitch grid.
inline void mirror_axes(std::vector<std::complex<double>>& v,
                        std::size_t nx, std::size_t ny) {
  std::vector<std::complex<double>> out(v.size());
  for (std::size_t jy = 0; jy < ny; ++jy) {
    const std::size_t sy = (ny - jy) % ny;
    for (std::size_t jx = 0; jx < nx; ++jx) {
      const std::size_t sx = (nx - jx) % nx;
      out[jy * nx + jx] = v[sy * nx + sx];
    }
  }
  v.swap(out);
}

} // namespace detail

/// Propagate a field with the quadratic-phase kernel between planes
/// where h != 0.  The Larmor rotation is applied to the input grid, the
/// kernel itself depends only on radii and the scalar product with the
/// rotated output point, and the Fourier step lands on an axis-centered
/// output grid with pitch lambda*|h|/(n*dx).  The overall norm is
/// preserved to rounding, and the drift phase p0(z-zi)/hbar plus the
/// quarter-wave phase of the 1/(i h) prefactor accumulate in
/// global_phase.
inline WaveField propagate(const WaveField& psi,
                           const PropagationPlan& plan) {
  if (plan.branch != PropagationBranch::general)
    throw DomainError(
        "propagate: plan selected the image-plane branch, use "
        "propagate_to_image");
  detail::check_propagation_field(psi, "propagate");
  detail::check_plane_match(psi, plan, "propagate");

  const double g = plan.pair.g;
  const double gp = plan.pair.g_prime;
  const double h = plan.pair.h;
  const double hp = plan.pair.h_prime;
  (void)gp;
  if (h == 0.0)
    throw DomainError(
        "propagate: plan has h = 0, use propagate_to_image");
  const double k0 = psi.k0_per_mm();

  // The input chirp advances by k0*g*r*dr/h between neighbouring cells;
  // demanding less than pi per cell at unit radius-to-pitch ratio gives
  // the per-axis sampling bound below.
  const double chirp_x = std::abs(k0 * g * psi.dx * psi.dx / (2.0 * h));
  const double chirp_y = std::abs(k0 * g * psi.dy * psi.dy / (2.0 * h));
  if (chirp_x >= M_PI || chirp_y >= M_PI) {
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "propagate: quadratic input chirp is undersampled, "
                  "|p0 g dx^2 / (2 hbar h)| = %.3g must stay below pi",
                  std::max(chirp_x, chirp_y));
    throw NumericError(buf);
  }

  WaveField out;
  out.nx = psi.nx;
  out.ny = psi.ny;
  out.z = plan.z;
  out.p0c = psi.p0c;
  out.hbar_c = psi.hbar_c;

  std::vector<std::complex<double>> work;
  if (plan.theta != 0.0) {
    detail::check_rotatable(psi, "propagate");
    work = rotated(psi.values, psi.nx, -plan.theta);
  } else {
    work = psi.values;
  }

  // Chirp over the input plane, full coordinates including offsets.
  const double ci = k0 * g / (2.0 * h);
  for (std::size_t iy = 0; iy < psi.ny; ++iy) {
    const double y = psi.y_at(iy);
    for (std::size_t ix = 0; ix < psi.nx; ++ix) {
      const double x = psi.x_at(ix);
      work[iy * psi.nx + ix] *= std::polar(1.0, ci * (x * x + y * y));
    }
  }

  centered_fft_2d(work, psi.nx, psi.ny, false);

  // The grid offsets of the input plane survive as a linear spectral
  // phase on the output side.
  if (psi.x0 != 0.0 || psi.y0 != 0.0) {
    const double cx = 0.5 * static_cast<double>(psi.nx);
    const double cy = 0.5 * static_cast<double>(psi.ny);
    for (std::size_t jy = 0; jy < psi.ny; ++jy) {
      const double ky = 2.0 * M_PI * (static_cast<double>(jy) - cy) /
                        (static_cast<double>(psi.ny) * psi.dy);
      for (std::size_t jx = 0; jx < psi.nx; ++jx) {
        const double kx = 2.0 * M_PI * (static_cast<double>(jx) - cx) /
                          (static_cast<double>(psi.nx) * psi.dx);
        work[jy * psi.nx + jx] *=
            std::polar(1.0, -(kx * psi.x0 + ky * psi.y0));
      }
    }
  }

  // Output pitch of the Fourier step; a negative h flips both axes,
  // which a mirror about the grid center absorbs.
  const double dX = 2.0 * M_PI * h /
                    (k0 * static_cast<double>(psi.nx) * psi.dx);
  const double dY = 2.0 * M_PI * h /
                    (k0 * static_cast<double>(psi.ny) * psi.dy);
  out.dx = std::abs(dX);
  out.dy = std::abs(dY);
  out.x0 = 0.0;
  out.y0 = 0.0;
  if (h < 0.0) detail::mirror_axes(work, psi.nx, psi.ny);

  // Chirp over the output plane plus the modulus of the kernel
  // prefactor p0/(2 pi hbar |h|) times the cell area of the sum.
  const double co = k0 * hp / (2.0 * h);
  const double amp = k0 * psi.dx * psi.dy / (2.0 * M_PI * std::abs(h));
  const double ccx = 0.5 * static_cast<double>(out.nx);
  const double ccy = 0.5 * static_cast<double>(out.ny);
  for (std::size_t jy = 0; jy < out.ny; ++jy) {
    const double Y = (static_cast<double>(jy) - ccy) * out.dy;
    for (std::size_t jx = 0; jx < out.nx; ++jx) {
      const double X = (static_cast<double>(jx) - ccx) * out.dx;
      work[jy * out.nx + jx] *=
          amp * std::polar(1.0, co * (X * X + Y * Y));
    }
  }
  out.values = std::move(work);

  const double sign_h = (h > 0.0) ? 1.0 : -1.0;
  out.global_phase =
      psi.global_phase + k0 * (plan.z - plan.zi) - sign_h * 0.5 * M_PI;
  return out;
}

/// Propagate to a conjugate plane, where the kernel collapses to a
/// rotated and magnified replica with a residual quadratic phase.  The
/// rescaling is carried by the grid metadata, so sample values move
/// only under the rotation and the norm is preserved exactly.
inline WaveField propagate_to_image(const WaveField& psi,
                                    const PropagationPlan& plan) {
  if (plan.branch != PropagationBranch::image_plane)
    throw DomainError(
        "propagate_to_image: plan selected the general branch, use "
        "propagate");
  detail::check_propagation_field(psi, "propagate_to_image");
  detail::check_plane_match(psi, plan, "propagate_to_image");

  const double g = plan.pair.g;
  const double gp = plan.pair.g_prime;
  if (std::abs(g) < 1e-6)
    throw NumericError(
        "propagate_to_image: degenerate magnification, |g| < 1e-6");
  const double k0 = psi.k0_per_mm();

  WaveField out;
  out.nx = psi.nx;
  out.ny = psi.ny;
  out.z = plan.z;
  out.p0c = psi.p0c;
  out.hbar_c = psi.hbar_c;
  out.dx = std::abs(g) * psi.dx;
  out.dy = std::abs(g) * psi.dy;
  out.x0 = g * psi.x0;
  out.y0 = g * psi.y0;

  std::vector<std::complex<double>> work;
  if (plan.theta != 0.0) {
    detail::check_rotatable(psi, "propagate_to_image");
    work = rotated(psi.values, psi.nx, -plan.theta);
  } else {
    work = psi.values;
  }
  if (g < 0.0) detail::mirror_axes(work, psi.nx, psi.ny);

  // Replica amplitude 1/g and the quadratic phase on output
  // coordinates; a negative g contributes its half-turn to the global
  // phase.
  const double amp = 1.0 / std::abs(g);
  const double cq = k0 * gp / (2.0 * g);
  for (std::size_t jy = 0; jy < out.ny; ++jy) {
    const double Y = out.y0 + (static_cast<double>(jy) -
                               0.5 * static_cast<double>(out.ny)) * out.dy;
    for (std::size_t jx = 0; jx < out.nx; ++jx) {
      const double X = out.x0 + (static_cast<double>(jx) -
                                 0.5 * static_cast<double>(out.nx)) * out.dx;
      work[jy * out.nx + jx] *=
          amp * std::polar(1.0, cq * (X * X + Y * Y));
    }
  }
  out.values = std::move(work);

  out.global_phase = psi.global_phase + k0 * (plan.z - plan.zi) +
                     ((g < 0.0) ? M_PI : 0.0);
  return out;
}

// ---------------------------------------------------------------------
// Serialization.  Binary layout, little endian throughout:
//   bytes 0..3   magic "WFLD"
//   bytes 4..7   format version, u32, currently 1
//   8 + 7*8      nx, ny, dx, dy, x0, y0, z as f64
//   then         nx*ny samples, f64 (re, im) pairs, row-major
// Beam constants are not stored; the reader takes them from the beam
// it is given, and the accumulated global phase starts fresh at zero.
// ---------------------------------------------------------------------

static_assert(std::endian::native == std::endian::little,
              "wavefield serialization assumes a little-endian host");

inline void write_wfld(const WaveField& psi, const std::string& path) {
  if (psi.values.size() != psi.nx * psi.ny)
    throw DomainError("write_wfld: value count does not match the grid");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("write_wfld: cannot open " + path);
  os.write("WFLD", 4);
  const std::uint32_t version = 1;
  os.write(reinterpret_cast<const char*>(&version), 4);
  const double header[7] = {static_cast<double>(psi.nx),
                            static_cast<double>(psi.ny),
                            psi.dx,
                            psi.dy,
                            psi.x0,
                            psi.y0,
                            psi.z};
  os.write(reinterpret_cast<const char*>(header), sizeof header);
  os.write(reinterpret_cast<const char*>(psi.values.data()),
           static_cast<std::streamsize>(psi.values.size() *
                                        sizeof(std::complex<double>)));
  if (!os) throw IoError("write_wfld: short write to " + path);
}

inline WaveField read_wfld(const std::string& path,
                           const BeamKinematics& beam) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("read_wfld: cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "WFLD", 4) != 0)
    throw IoError("read_wfld: " + path + " is not a wavefield file");
  std::uint32_t version = 0;
  is.read(reinterpret_cast<char*>(&version), 4);
  if (!is || version != 1)
    throw IoError("read_wfld: unsupported format version in " + path);
  double header[7];
  is.read(reinterpret_cast<char*>(header), sizeof header);
  if (!is) throw IoError("read_wfld: truncated header in " + path);

  WaveField psi;
  const double fnx = header[0], fny = header[1];
  if (!(fnx >= 1.0) || !(fny >= 1.0) || fnx != std::floor(fnx) ||
      fny != std::floor(fny) || fnx > 1e9 || fny > 1e9)
    throw IoError("read_wfld: corrupt grid counts in " + path);
  psi.nx = static_cast<std::size_t>(fnx);
  psi.ny = static_cast<std::size_t>(fny);
  psi.dx = header[2];
  psi.dy = header[3];
  psi.x0 = header[4];
  psi.y0 = header[5];
  psi.z = header[6];
  if (!(psi.dx > 0.0) || !(psi.dy > 0.0) || !std::isfinite(psi.x0) ||
      !std::isfinite(psi.y0) || !std::isfinite(psi.z))
    throw IoError("read_wfld: corrupt grid header in " + path);
  psi.p0c = beam.p0c;
  psi.hbar_c = beam.hbar_c;
  psi.global_phase = 0.0;
  psi.values.resize(psi.nx * psi.ny);
  is.read(reinterpret_cast<char*>(psi.values.data()),
          static_cast<std::streamsize>(psi.values.size() *
                                       sizeof(std::complex<double>)));
  if (!is) throw IoError("read_wfld: truncated samples in " + path);
  return psi;
}

/// Plain-text intensity export with one "x,y,intensity" row per cell.
inline void write_intensity_csv(const WaveField& psi,
                                const std::string& path) {
  if (psi.values.size() != psi.nx * psi.ny)
    throw DomainError(
        "write_intensity_csv: value count does not match the grid");
  std::ofstream os(path);
  if (!os) throw IoError("write_intensity_csv: cannot open " + path);
  os << "x,y,intensity\n";
  char line[96];
  for (std::size_t iy = 0; iy < psi.ny; ++iy) {
    const double y = psi.y_at(iy);
    for (std::size_t ix = 0; ix < psi.nx; ++ix) {
      std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g\n",
                    psi.x_at(ix), y,
                    std::norm(psi.values[iy * psi.nx + ix]));
      os << line;
    }
  }
  if (!os) throw IoError("write_intensity_csv: short write to " + path);
}

} // namespace lenscope
