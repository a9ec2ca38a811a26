#pragma once

#include "slipstokes/fft.hpp"

namespace slipstokes {
namespace stokes {

struct Fields {
  GridField u;   // rank 1
  GridField pi;  // rank 0
};

/// Solve the periodic Stokes system
///   -lap(w) + grad(q) = f + Div(G),   Div(w) = h
/// on the box of the inputs, via the Fourier-side projection
///   m = f^ + i G^ k,   q^ = h^ - i (k . m)/|k|^2,   w^ = (m - i k q^)/|k|^2.
/// Div(G) acts on rows: (Div G)_i = sum_j d_j G_ij. Any input may be null.
/// Zero modes of w and q are set to zero (mean-free gauge); a nonzero mean of
/// h is ignored here and must be handled (reported) by the caller. Unpaired
/// Nyquist planes are zeroed because the symbols are odd in k.
Fields solve_periodic(const GridField* G, const GridField* f, const GridField* h);

/// Spectrum-level variant used by the half-space reflection solver.
void solve_periodic_spectral(const Spectrum* G, const Spectrum* f, const Spectrum* h,
                             Spectrum& w, Spectrum& q);

}  // namespace stokes
}  // namespace slipstokes
