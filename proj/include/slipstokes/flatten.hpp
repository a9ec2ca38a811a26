#pragma once

#include "slipstokes/chart.hpp"
#include "slipstokes/grid.hpp"

namespace slipstokes {

/// Normalized smooth mollifier on (-1,1): zeta(v) = c * exp(-1/(1-v^2)),
/// with unit mass.
double mollifier(double v);
/// First absolute moment c1 = int |v| zeta(v) dv (< 1); controls the
/// vertical derivative of the smoothed extension: |dt T phi| <= c1 K.
double mollifier_abs_moment();

/// Smoothed vertical extension (T phi)(x, t) = int zeta(v) phi(x - t v) dv
/// and its first partials:
///   dx T = int zeta(v) phi'(x - t v) dv,   dt T = -int v zeta(v) phi'(x - t v) dv.
/// At t = 0 these reduce to (phi, phi', 0) exactly. Zero and affine profiles
/// short-circuit to their closed forms (the kernel is even with zero first
/// moment); other kinds use composite Gauss-Legendre quadrature in v.
class MollifiedExtension {
 public:
  explicit MollifiedExtension(const Profile& phi, int panels = 48);
  double value(double x, double t) const;
  double dx(double x, double t) const;
  double dt(double x, double t) const;
  const Profile& profile() const { return phi_; }

 private:
  Profile phi_;
  int panels_;
};

/// Graph-flattening map in chart-local coordinates,
///   Phi(z1, z2) = (z1, z2 + (T phi)(z1, z2 / N)),
/// with Jacobian rows (1, 0) and (dx T, 1 + dt T / N) evaluated at t = z2/N.
/// N is certified by construction: det J within [1/2, 2] and the vertical
/// slices monotone on a scan of the chart window and collar.
class FlatteningMap {
 public:
  const Chart& chart() const { return chart_; }
  int n_scale() const { return n_; }
  double det_lo() const { return det_lo_; }
  double det_hi() const { return det_hi_; }
  const MollifiedExtension& extension() const { return ext_; }

  Vec2 graph_map(Vec2 z) const;
  Mat2 graph_jacobian(Vec2 z) const;
  double graph_det(Vec2 z) const;
  /// Solve z2 + T(z1, z2/N) = target for z2 (monotone; bisection bracket
  /// followed by safeguarded Newton polish to 1e-12).
  double invert_vertical(double z1, double target) const;

  Vec2 world_map(Vec2 z) const { return chart_.to_world(graph_map(z)); }
  Mat2 world_jacobian(Vec2 z) const { return chart_.rotation().mul(graph_jacobian(z)); }
  Vec2 world_inverse(Vec2 x) const;

  /// Precompute T and its partials on the nodes of a flattened strip grid
  /// (plus ghost rows) so map evaluation and inversion become interpolation
  /// instead of quadrature. Strip rows are z2 = j * dz, row 0 on the boundary.
  void prepare(const Grid2& strip);
  bool prepared() const { return table_nz_ > 0; }
  const Grid2& prepared_grid() const { return strip_; }

  friend FlatteningMap build_flattening(const Chart& chart);

 private:
  explicit FlatteningMap(const Chart& chart) : chart_(chart), ext_(chart.profile) {}

  // table evaluation; c = 0 value, 1 dx, 2 dt
  double teval(int c, double z1, double z2) const;

  Chart chart_;
  MollifiedExtension ext_;
  int n_ = 0;
  double det_lo_ = 0.0, det_hi_ = 0.0;

  static constexpr int kGhost = 2;
  Grid2 strip_;
  int table_nz_ = 0;
  std::vector<double> tval_, tdx_, tdt_;  // (nz + 2*kGhost) rows, x-periodic
};

/// Certify the smoothing scale per the doubling rule: start at the smallest
/// integer >= 2K + 2 and increase until the monotonicity/determinant scan
/// passes.
FlatteningMap build_flattening(const Chart& chart);

/// Metric coefficients of the graph map sampled on a strip grid.
/// With J = [[1, 0], [b, c]] these are
///   A = det J^-1 J^-T = [[c, -b], [-b, (1 + b^2)/c]]   (symmetric, det A = 1),
///   B = det J^-1     = [[c, 0], [-b, 1]]               (columns solenoidal).
/// Construction asserts the eigenvalues of A stay in [1/4, 4] and det J in
/// [1/4, 4] at every node; a violated bound means the chart window is too
/// aggressive for the certified smoothing scale.
struct TransformCoeffs {
  GridField A;    // rank 2
  GridField B;    // rank 2
  GridField det;  // rank 0, det J = c
  std::vector<double> wall_slope;    // b(x, 0), the boundary profile slope
  std::vector<double> wall_stretch;  // c(x, 0) (identically 1 for graph maps)
};
TransformCoeffs transform_coefficients(const FlatteningMap& map, const Grid2& strip);

}  // namespace slipstokes
