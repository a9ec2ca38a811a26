#include "slipstokes/grid.hpp"

#include <algorithm>

namespace slipstokes {

double max_abs(const GridField& f) {
  double m = 0.0;
  for (double v : f.raw()) m = std::max(m, std::abs(v));
  return m;
}

double l2_norm(const GridField& f) {
  // Fixed-order accumulation; the trapezoid rule on a periodic grid is exact
  // for trigonometric polynomials below the Nyquist frequency.
  double s = 0.0;
  for (double v : f.raw()) s += v * v;
  return std::sqrt(s * f.grid().cell_area());
}

double mean(const GridField& f, int c) {
  SS_REQUIRE(c >= 0 && c < f.ncomp(), "mean: component %d out of range", c);
  const double* p = f.comp(c);
  double s = 0.0;
  const int n = f.grid().npts();
  for (int k = 0; k < n; ++k) s += p[k];
  return s / n;
}

namespace {
// Keys cubic convolution kernel, a = -1/2. w[k] weights nodes at offsets
// {-1, 0, 1, 2} from the base index for fractional position t in [0,1).
inline void keys_weights(double t, double w[4]) {
  const double t2 = t * t, t3 = t2 * t;
  w[0] = 0.5 * (-t3 + 2.0 * t2 - t);
  w[1] = 0.5 * (3.0 * t3 - 5.0 * t2 + 2.0);
  w[2] = 0.5 * (-3.0 * t3 + 4.0 * t2 + t);
  w[3] = 0.5 * (t3 - t2);
}
}  // namespace

double interp_bicubic(const GridField& f, int c, double x, double y) {
  const Grid2& g = f.grid();
  SS_REQUIRE(c >= 0 && c < f.ncomp(), "interp_bicubic: component %d out of range", c);
  double fx = x / g.dx(), fy = y / g.dy();
  double ix = std::floor(fx), iy = std::floor(fy);
  double tx = fx - ix, ty = fy - iy;
  // Snap to exact nodes so that on-node queries return stored values
  // bit-for-bit (the flat-chart degeneration tests depend on this).
  constexpr double snap = 1e-12;
  if (tx < snap) tx = 0.0;
  if (ty < snap) ty = 0.0;
  if (tx > 1.0 - snap) { tx = 0.0; ix += 1.0; }
  if (ty > 1.0 - snap) { ty = 0.0; iy += 1.0; }
  const int i0 = Grid2::wrap(static_cast<int>(ix) % g.nx, g.nx);
  const int j0 = Grid2::wrap(static_cast<int>(iy) % g.ny, g.ny);
  double wx[4], wy[4];
  keys_weights(tx, wx);
  keys_weights(ty, wy);
  const double* p = f.comp(c);
  double acc = 0.0;
  for (int b = 0; b < 4; ++b) {
    const int j = Grid2::wrap(j0 + b - 1, g.ny);
    double row = 0.0;
    for (int a = 0; a < 4; ++a) {
      const int i = Grid2::wrap(i0 + a - 1, g.nx);
      row += wx[a] * p[g.idx(i, j)];
    }
    acc += wy[b] * row;
  }
  return acc;
}

GridField component(const GridField& f, int c) {
  SS_REQUIRE(c >= 0 && c < f.ncomp(), "component: index %d out of range", c);
  GridField out(f.grid(), 0);
  const double* src = f.comp(c);
  std::copy(src, src + f.grid().npts(), out.comp(0));
  return out;
}

}  // namespace slipstokes
