#pragma once

#include <vector>

#include <json.hpp>

#include "slipstokes/grid.hpp"
#include "slipstokes/spaces.hpp"

namespace slipstokes {

/// Reflection parities under z -> -z used to extend a wall-bounded strip
/// problem onto the doubled torus. +1 keeps the sign (even), -1 flips (odd).
/// The table is chosen so that an even/odd velocity pair with even pressure
/// maps stress data slot-by-slot onto itself: (xx, xz, zx, zz) -> (+,-,-,+).
struct ParityTable {
  static constexpr int velocity[2] = {+1, -1};
  static constexpr int pressure = +1;
  static constexpr int stress[4] = {+1, -1, -1, +1};
  static constexpr int forcing[2] = {+1, -1};
  static constexpr int scalar = +1;
};

/// Model problem on the strip [0,lx) x [0,lz] with the wall at z = 0:
///
///   -lap(u) + grad(pi) = f + Div(F),   div(u) = h,
///   u_z(x,0) = g,                      d_z u_x(x,0) + F_xz(x,0) = S.
///
/// trace_normal stores g (the wall value of u_z itself; with the outward
/// normal pointing in -z the compatibility identity reads
/// int(h) dA + int(g) dx = 0). trace_slip stores S. Fields may be left
/// default-constructed to mean zero. Data must decay below 1e-8 (relative)
/// in the top quarter of the strip so that the truncation is harmless.
struct HalfProblem {
  Grid2 grid;
  GridField stress;      // rank 2, F
  GridField forcing;     // rank 1, f
  GridField divergence;  // rank 0, h
  std::vector<double> trace_normal;  // g, size nx or empty
  std::vector<double> trace_slip;    // S, size nx or empty
  double sobolev_s = 1.0;
  double sobolev_p = 2.0;

  void validate() const;
};

/// Relative defect sizes of a candidate solution, measured against the
/// original problem data with spectral x-derivatives and sixth-order
/// one-sided/centred z-stencils. Interior quantities are L2 over the rows
/// [3, 0.7*nz); traces are max norms on the wall row.
struct HalfResiduals {
  double interior = 0.0;
  double divergence = 0.0;
  double trace_normal = 0.0;
  double trace_slip = 0.0;
  double interior_scale = 0.0;  // absolute normaliser used for `interior`

  nlohmann::json to_json() const;
};

struct HalfSolution {
  GridField u;   // rank 1
  GridField pi;  // rank 0, mean-free
  HalfResiduals residuals;
  double compatibility_defect = 0.0;  // removed from h before solving
  double tangential_defect = 0.0;     // removed from mean(S) before solving
  NormReport estimate_left;   // |grad u|_{L2} + |pi|_{L2} over the data window
  NormReport estimate_right;  // data norms entering the a-priori bound
  nlohmann::json diagnostics;
};

// -- building blocks (each is exact for its own subproblem; the solver is
//    their composition followed by one reflected torus solve) --

/// Whole-space (periodic) solve -lap(w) + grad(q) = Div(G), div w = 0.
/// Component means of G carry no information (the symbol vanishes at k = 0);
/// they are reported through removed_means if given.
void solve_whole_space(const GridField& G, GridField& w, GridField& q,
                       std::vector<double>* removed_means = nullptr);

/// Extend a strip field (nx x nz) to the doubled torus (nx x 2nz) with the
/// given per-component parities. Row nz (the image of z = lz = -lz) is set to
/// zero; the strip data must have decayed there.
GridField reflect_extend(const GridField& f, const int* parities);

/// Restrict a doubled-torus field back to the strip rows [0, nz).
GridField restrict_half(const GridField& full, const Grid2& strip);

Grid2 doubled_grid(const Grid2& strip);

/// Subtract the x-mean of every component on every row (the k_x = 0 channel
/// is handled by exact one-dimensional integration, not by the torus solve).
void remove_x_mean(GridField& f);

/// Potential lift for the divergence and normal-trace data:
/// lap(theta) = h, d_z theta(x,0) = g, theta decaying at the top. Exact per
/// x-mode for g, spectral on the even reflection for h, sixth-order
/// cumulative integrals for the x-mean channel.
struct DivergenceLift {
  GridField theta;  // rank 0
  GridField grad;   // rank 1, grad(theta) sampled consistently
};
DivergenceLift lift_divergence(const Grid2& grid, const GridField& h,
                               const std::vector<double>& g);

/// Exact homogeneous-Stokes lift with d_z E_x(x,0) = s(x), E_z(x,0) = 0,
/// div E = 0. s must have zero mean (the mean belongs to the 1-D channel).
struct SlipLift {
  GridField u;   // rank 1
  GridField pi;  // rank 0
};
SlipLift lift_slip(const Grid2& grid, const std::vector<double>& s);

/// Trace-cleaning gadget for the xz stress slot. Builds the scalar potential
///   -lap(U) = d(x) exp(-z/depth),  U(x,0) = 0, decaying,
/// the shift c = (d_z U, -d_x U), and the stress K with K_xz = -K_zx =
/// d(x) exp(-z/depth). Then -lap(c) = Div(K), div c = 0, c_z(.,0) = 0 and
/// d_z c_x(.,0) = -d, so replacing u by u + c moves a slip-trace defect d
/// into stress data whose xz wall trace is exactly -d.
struct TractionLift {
  GridField shift;      // rank 1, c
  GridField stress;     // rank 2, K
  GridField potential;  // rank 0, U
};
TractionLift lift_traction(const Grid2& grid, const std::vector<double>& d, double depth);

/// Divergence-free tensor N with N_zx(x,0) = -a(x) and decaying profile;
/// added to stress data it cancels a zx wall trace without changing the
/// divergence (and hence the solution). a must have zero x-mean.
GridField clean_row_trace(const Grid2& grid, const std::vector<double>& a, double depth);

/// Decaying profile U with (-d^2/dz^2 + q^2) U = exp(-beta z) and U(0) = 0,
/// returned together with U'. Stable for q near beta (series branch) and
/// exact in the q = 0 limit, where U tends to (1 - exp(-beta z)) / beta^2.
void gadget_profile(double q, double beta, double z, double& value, double& dvalue);

/// Sixth-order z-derivative of given order (1 or 2) with clamped 7-point
/// stencils; never wraps across z = 0 or z = lz.
GridField fd_derivative_z(const GridField& f, int order);

/// Gradient with spectral x-derivatives and sixth-order z-stencils,
/// components ordered (xx, xz, zx, zz) for rank-1 input.
GridField strip_gradient(const GridField& u);

HalfResiduals measure_residuals(const HalfProblem& prob, const GridField& u,
                                const GridField& pi);

HalfSolution solve_halfspace(const HalfProblem& prob);

}  // namespace slipstokes
