#pragma once

#include <functional>
#include <string>
#include <vector>

#include "slipstokes/chart.hpp"
#include "slipstokes/common.hpp"
#include "slipstokes/grid.hpp"

namespace slipstokes {
namespace sharpness {

/// Plane sector of opening theta with the corner at the origin and one edge
/// on the positive x-axis. The conformal power kappa = pi / theta maps the
/// sector onto the upper half-plane.
struct WedgeDomain {
  double theta = 0.0;
  double kappa = 0.0;

  static WedgeDomain opening(double theta);
  void validate() const;

  /// Polar angle in [0, 2pi), measured from the positive x-axis.
  static double angle(double x, double y);
  bool contains(double x, double y) const;
  /// Stream value r^kappa sin(kappa angle); vanishes on both edges.
  double stream(double x, double y) const;
};

/// Corner-centered square sampling window. Nodes sit at half-integer
/// multiples of the spacing in both axes, so the corner itself (and the
/// sector edges through it, for right-angle openings) is never a node.
struct CornerPatch {
  double half_width = 1.0;
  int n = 256;

  double h() const { return 2.0 * half_width / n; }
  double x(int i) const { return -half_width + (i + 0.5) * h(); }
  double y(int j) const { return -half_width + (j + 0.5) * h(); }
  /// Storage-shaped grid for GridField containers on this window.
  Grid2 grid() const { return Grid2{2.0 * half_width, 2.0 * half_width, n, n}; }
};

/// Indicator of the sector on the patch nodes (rank 0, values 0/1).
GridField wedge_mask(const WedgeDomain& dom, const CornerPatch& patch);

/// Stream samples on the patch; zero outside the sector.
GridField wedge_stream(const WedgeDomain& dom, const CornerPatch& patch);

/// u = (-d_y w, d_x w) by centered differences wherever the full cross
/// stencil lies in the mask. The returned mask marks those nodes; outside it
/// the velocity is zero. The commuting centered stencils make the discrete
/// divergence of u vanish identically one erosion level further in.
struct StreamVelocity {
  GridField u;     // rank 1
  GridField mask;  // rank 0
};
StreamVelocity velocity_from_stream(const CornerPatch& patch, const GridField& w,
                                    const GridField& mask);

/// Pressure consistent with -lap(u) + grad(pi) = 0 on the masked patch:
/// the variational normal equations give a graph-Laplacian Neumann problem
/// for pi (natural boundary condition, compatible right side), solved by
/// conjugate gradients in the zero-mean gauge. momentum_residual is the
/// relative l2 defect |lap(u) - grad(pi)| / |lap-scale| on the final mask.
struct PressureRecovery {
  GridField pi;    // rank 0
  GridField mask;  // rank 0, where the momentum defect was measured
  double momentum_residual = 0.0;
  int cg_iterations = 0;
};
PressureRecovery pressure_from_momentum(const CornerPatch& patch, const GridField& u,
                                        const GridField& umask);

/// Least-squares slope of log sup_{|x| = r} |grad u| against log r over the
/// given radii. Radii must be geometric (constant ratio), at least four of
/// them, the smallest at least four spacings; each ring is the node shell
/// within half a spacing of r. For the sector stream family the expected
/// value is kappa - 2.
double measure_exponent(const CornerPatch& patch, const GridField& u, const GridField& umask,
                        const std::vector<double>& radii);

/// Dyadic-annulus masses of |grad^2 u|^p between r_lo and r_hi:
///   mass_k = mean over the annulus of |grad^2 u|^p  x  ideal sector area,
/// (the mean is taken over valid nodes, which compensates the stencil
/// exclusion strips along the edges), and the fitted log-log slope. For the
/// power family the slope approaches 2 - p (3 - kappa); a positive slope
/// means the corner mass vanishes, i.e. the second gradient is p-integrable.
/// degenerate is set when the second gradient is zero at measurement
/// precision, in which case the slope carries no information.
struct AnnulusScan {
  std::vector<double> radius;  // outer radius of each annulus
  std::vector<double> mass;
  double slope = 0.0;
  double peak_density = 0.0;  // max over annuli of mean|grad^2 u|^p ^ (1/p)
  bool degenerate = false;
};
AnnulusScan second_gradient_scan(const CornerPatch& patch, const GridField& u,
                                 const GridField& umask, double p, double r_lo, double r_hi);

/// Boundary identity of a stream vanishing on a chart graph: along y = phi(x),
///   (d_x w) + (d_y w) phi' = 0,
/// together with the quotient reconstruction phi' = -(d_x w)/(d_y w) wherever
/// the vertical derivative clears the positivity floor 1e-6 (nodes below the
/// floor are skipped and counted). Derivatives of w are centered differences
/// in world coordinates. Fails only if every node is below the floor.
struct TangentialIdentity {
  double residual = 0.0;        // sup |identity| / sup |d_y w|
  double quotient_error = 0.0;  // sup |phi' - reconstruction| over kept nodes
  int skipped = 0;
  int total = 0;
};
TangentialIdentity tangential_identity_check(const std::function<double(Vec2)>& w,
                                             const Chart& chart, int samples);

/// 13-point bilaplacian residual over the annulus r_lo <= |x| <= r_hi,
/// the stream trace on both sector edges (analytic samples), and the 5-point
/// Laplacian trace within two spacings of either edge.
struct BiharmonicReport {
  double interior = 0.0;
  double edge_value = 0.0;
  double edge_laplace = 0.0;
};
BiharmonicReport biharmonic_check(const WedgeDomain& dom, const CornerPatch& patch,
                                  const GridField& w, double r_lo, double r_hi);

/// One (theta, p) point of the regularity threshold table. The verdict
/// compares the fitted annulus slope against a +-0.05 deadband: "bounded"
/// above, "unbounded" below, "marginal" inside; a degenerate scan (second
/// gradient identically zero) is bounded outright. analytic_bounded is the
/// prediction sigma_analytic = 2 - p (3 - kappa) > 0.
struct ThresholdRow {
  double theta = 0.0;
  double p = 0.0;
  double measured_exponent = 0.0;
  double analytic_exponent = 0.0;  // kappa - 2
  double sigma = 0.0;
  double sigma_analytic = 0.0;
  std::string verdict;
  bool analytic_bounded = false;
};

std::vector<ThresholdRow> threshold_study(const std::vector<double>& thetas,
                                          const std::vector<double>& ps,
                                          const CornerPatch& patch);

}  // namespace sharpness
}  // namespace slipstokes
