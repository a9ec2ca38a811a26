#pragma once

#include <complex>
#include <vector>

#include "slipstokes/grid.hpp"

namespace slipstokes {

using cplx = std::complex<double>;

/// Fourier coefficients of a GridField, same component layout. Normalized so
/// that f(x,y) = sum_m c_m exp(i k_m . (x,y)) holds exactly on the grid, with
/// k = 2*pi*(mx/lx, my/ly) and integer modes in [-n/2, n/2).
struct Spectrum {
  Grid2 grid;
  int rank = 0;
  int ncomp = 1;
  std::vector<cplx> data;

  Spectrum() = default;
  Spectrum(const Grid2& g, int rank_);

  cplx& at(int c, int i, int j) { return data[static_cast<size_t>(c) * grid.npts() + grid.idx(i, j)]; }
  cplx at(int c, int i, int j) const { return data[static_cast<size_t>(c) * grid.npts() + grid.idx(i, j)]; }

  /// Signed integer mode for storage index i on an n-point axis.
  static int mode(int i, int n) { return 2 * i < n ? i : i - n; }
  double kx(int i) const { return kTwoPi * mode(i, grid.nx) / grid.lx; }
  double ky(int j) const { return kTwoPi * mode(j, grid.ny) / grid.ly; }
};

namespace fft {

/// Forward transform (coefficient-normalized). Deterministic: FFTW_ESTIMATE
/// plans only, cached per grid size.
Spectrum forward(const GridField& f);

/// Inverse of forward(). The imaginary part of the synthesis is discarded;
/// for conjugate-symmetric spectra it is rounding noise.
GridField backward(const Spectrum& s);

/// Multiply by i*k along the given axis (0 = x, 1 = y); the unpaired Nyquist
/// plane of that axis is zeroed to keep real fields real.
Spectrum derivative(const Spectrum& s, int axis);

GridField derivative(const GridField& f, int axis);

/// Solve lap(u) = rhs on the periodic box, zero-mean gauge; the rhs zero mode
/// is dropped (callers check or report the compatibility defect).
GridField poisson_periodic(const GridField& rhs);

/// 1-D coefficient-normalized transforms for boundary lines.
std::vector<cplx> forward1d(const std::vector<double>& f);
std::vector<double> backward1d_real(const std::vector<cplx>& c);

}  // namespace fft

}  // namespace slipstokes
