#include "slipstokes/flatten.hpp"

#include <cmath>

#include "slipstokes/numeric.hpp"

namespace slipstokes {

namespace {
double raw_bump(double v) {
  const double s = 1.0 - v * v;
  if (s <= 0.0) return 0.0;
  return std::exp(-1.0 / s);
}

double bump_mass() {
  static const double mass =
      numeric::adaptive_simpson([](double v) { return raw_bump(v); }, -1.0, 1.0, 1e-15);
  return mass;
}
}  // namespace

double mollifier(double v) { return raw_bump(v) / bump_mass(); }

double mollifier_abs_moment() {
  static const double m1 =
      numeric::adaptive_simpson([](double v) { return std::abs(v) * raw_bump(v); }, -1.0, 1.0,
                                1e-15) /
      bump_mass();
  return m1;
}

MollifiedExtension::MollifiedExtension(const Profile& phi, int panels)
    : phi_(phi), panels_(panels) {
  SS_REQUIRE(panels_ >= 4, "MollifiedExtension: need at least 4 quadrature panels");
}

double MollifiedExtension::value(double x, double t) const {
  switch (phi_.kind()) {
    case Profile::Kind::Zero:
      return 0.0;
    case Profile::Kind::Affine:
      return phi_.eval(x);  // even kernel: affine profiles are fixed points
    default:
      break;
  }
  if (t == 0.0) return phi_.eval(x);
  return numeric::composite_gl(
      [&](double v) { return mollifier(v) * phi_.eval(x - t * v); }, -1.0, 1.0, panels_);
}

double MollifiedExtension::dx(double x, double t) const {
  switch (phi_.kind()) {
    case Profile::Kind::Zero:
      return 0.0;
    case Profile::Kind::Affine:
      return phi_.deriv(x);
    default:
      break;
  }
  if (t == 0.0) return phi_.deriv(x);
  return numeric::composite_gl(
      [&](double v) { return mollifier(v) * phi_.deriv(x - t * v); }, -1.0, 1.0, panels_);
}

double MollifiedExtension::dt(double x, double t) const {
  switch (phi_.kind()) {
    case Profile::Kind::Zero:
    case Profile::Kind::Affine:
      return 0.0;
    default:
      break;
  }
  if (t == 0.0) return 0.0;
  return numeric::composite_gl(
      [&](double v) { return -v * mollifier(v) * phi_.deriv(x - t * v); }, -1.0, 1.0, panels_);
}

Vec2 FlatteningMap::graph_map(Vec2 z) const {
  return {z.x, z.y + teval(0, z.x, z.y)};
}

Mat2 FlatteningMap::graph_jacobian(Vec2 z) const {
  const double b = teval(1, z.x, z.y);
  const double c = 1.0 + teval(2, z.x, z.y) / n_;
  return {1.0, 0.0, b, c};
}

double FlatteningMap::graph_det(Vec2 z) const { return 1.0 + teval(2, z.x, z.y) / n_; }

double FlatteningMap::teval(int c, double z1, double z2) const {
  const double t = z2 / n_;
  if (!prepared()) {
    if (c == 0) return ext_.value(z1, t);
    if (c == 1) return ext_.dx(z1, t);
    return ext_.dt(z1, t);
  }
  // Bicubic on the precomputed strip table; x periodic, z via ghost rows.
  const std::vector<double>& tab = (c == 0) ? tval_ : (c == 1 ? tdx_ : tdt_);
  const Grid2& g = strip_;
  double fx = z1 / g.dx();
  double fz = z2 / g.dy();
  double ix = std::floor(fx), iz = std::floor(fz);
  double tx = fx - ix, tz = fz - iz;
  constexpr double snap = 1e-12;
  if (tx < snap) tx = 0.0;
  if (tz < snap) tz = 0.0;
  if (tx > 1.0 - snap) { tx = 0.0; ix += 1.0; }
  if (tz > 1.0 - snap) { tz = 0.0; iz += 1.0; }
  const int i0 = Grid2::wrap(static_cast<int>(ix) % g.nx, g.nx);
  int j0 = static_cast<int>(iz) + kGhost;
  SS_REQUIRE(j0 >= 1 && j0 + 2 < table_nz_,
             "FlatteningMap: z2=%g outside the prepared strip", z2);
  auto kw = [](double t_, double w[4]) {
    const double t2 = t_ * t_, t3 = t2 * t_;
    w[0] = 0.5 * (-t3 + 2.0 * t2 - t_);
    w[1] = 0.5 * (3.0 * t3 - 5.0 * t2 + 2.0);
    w[2] = 0.5 * (-3.0 * t3 + 4.0 * t2 + t_);
    w[3] = 0.5 * (t3 - t2);
  };
  double wx[4], wz[4];
  kw(tx, wx);
  kw(tz, wz);
  double acc = 0.0;
  for (int b = 0; b < 4; ++b) {
    const int j = j0 + b - 1;
    double row = 0.0;
    for (int a = 0; a < 4; ++a) {
      const int i = Grid2::wrap(i0 + a - 1, g.nx);
      row += wx[a] * tab[static_cast<size_t>(j) * g.nx + i];
    }
    acc += wz[b] * row;
  }
  return acc;
}

void FlatteningMap::prepare(const Grid2& strip) {
  strip_ = strip;
  table_nz_ = strip.ny + 2 * kGhost;
  const size_t total = static_cast<size_t>(table_nz_) * strip.nx;
  tval_.assign(total, 0.0);
  tdx_.assign(total, 0.0);
  tdt_.assign(total, 0.0);
  for (int j = 0; j < table_nz_; ++j) {
    const double z2 = (j - kGhost) * strip.dy();
    const double t = z2 / n_;
    for (int i = 0; i < strip.nx; ++i) {
      const double z1 = strip.x(i);
      const size_t k = static_cast<size_t>(j) * strip.nx + i;
      tval_[k] = ext_.value(z1, t);
      tdx_[k] = ext_.dx(z1, t);
      tdt_[k] = ext_.dt(z1, t);
    }
  }
}

double FlatteningMap::invert_vertical(double z1, double target) const {
  const double K = chart_.profile.lipschitz();
  const double c0 = target - teval(0, z1, 0.0);
  double R = std::max(1e-3, 2.0 * K * (1.0 + std::abs(c0)) / n_ + 1e-6);
  auto g = [&](double z2) { return z2 + teval(0, z1, z2) - target; };
  double lo = c0 - R, hi = c0 + R;
  for (int it = 0; it < 60 && g(lo) > 0.0; ++it) lo -= (R *= 2.0);
  for (int it = 0; it < 60 && g(hi) < 0.0; ++it) hi += (R *= 2.0);
  SS_REQUIRE(g(lo) <= 0.0 && g(hi) >= 0.0,
             "invert_vertical: failed to bracket root at z1=%g target=%g", z1, target);
  double mid = 0.5 * (lo + hi);
  for (int it = 0; it < 40; ++it) {
    mid = 0.5 * (lo + hi);
    const double v = g(mid);
    if (v == 0.0) return mid;
    (v < 0.0 ? lo : hi) = mid;
    if (hi - lo < 1e-8 * (1.0 + std::abs(target))) break;
  }
  // Safeguarded Newton polish; the slope is >= 1 - c1 K / N >= 1/2.
  double z = 0.5 * (lo + hi);
  for (int it = 0; it < 3; ++it) {
    const double v = g(z);
    const double slope = 1.0 + teval(2, z1, z) / n_;
    const double step = v / slope;
    double znew = z - step;
    if (znew < lo || znew > hi) znew = 0.5 * (lo + hi);
    z = znew;
    if (std::abs(step) < 1e-14 * (1.0 + std::abs(target))) break;
  }
  return z;
}

Vec2 FlatteningMap::world_inverse(Vec2 x) const {
  const Vec2 zl = chart_.to_local(x);
  return {zl.x, invert_vertical(zl.x, zl.y)};
}

FlatteningMap build_flattening(const Chart& chart) {
  FlatteningMap map(chart);
  const double K = chart.profile.lipschitz();
  const double c1 = mollifier_abs_moment();
  int n = std::max(2, static_cast<int>(std::ceil(2.0 * K + 2.0)));
  const int n_cap = 64 * (static_cast<int>(K) + 2);
  const double hw = chart.profile.is_periodic() ? 0.5 * chart.profile.wavelength()
                                                : chart.half_width;
  for (;; ++n) {
    SS_REQUIRE(n <= n_cap, "build_flattening: no admissible smoothing scale below %d (K=%g)",
               n_cap, K);
    map.n_ = n;
    double lo = 1e300, hi = -1e300;
    bool ok = true;
    const int mi = 96, mj = 48;
    for (int i = 0; i <= mi && ok; ++i) {
      const double z1 = -hw + 2.0 * hw * i / mi;
      double prev_alpha = 0.0;
      for (int j = 0; j <= mj && ok; ++j) {
        const double z2 = chart.collar * j / mj;
        const double det = map.graph_det({z1, z2});
        lo = std::min(lo, det);
        hi = std::max(hi, det);
        if (det < 0.5 || det > 2.0) ok = false;
        const double alpha = z2 + map.ext_.value(z1, z2 / n);
        if (j > 0 && alpha <= prev_alpha) ok = false;
        prev_alpha = alpha;
      }
    }
    // Analytic envelope |dt T| <= c1 K gives det within 1 -+ c1 K / N; the
    // scan must sit inside it (small slack for quadrature rounding).
    if (ok && (lo < 1.0 - c1 * K / n - 1e-7 || hi > 1.0 + c1 * K / n + 1e-7)) ok = false;
    if (ok) {
      map.det_lo_ = lo;
      map.det_hi_ = hi;
      return map;
    }
  }
}

TransformCoeffs transform_coefficients(const FlatteningMap& map, const Grid2& strip) {
  SS_REQUIRE(map.prepared() && map.prepared_grid() == strip,
             "transform_coefficients: prepare the map on the target strip first");
  TransformCoeffs out{GridField(strip, 2), GridField(strip, 2), GridField(strip, 0),
                      std::vector<double>(strip.nx), std::vector<double>(strip.nx)};
  for (int j = 0; j < strip.ny; ++j)
    for (int i = 0; i < strip.nx; ++i) {
      const Mat2 J = map.graph_jacobian({strip.x(i), strip.y(j)});
      const double b = J.c, c = J.d;
      SS_REQUIRE(c > 0.25 && c < 4.0, "transform_coefficients: det J = %g out of range at node "
                 "(%d, %d)", c, i, j);
      out.det.at(0, i, j) = c;
      out.B.set_mat(i, j, {c, 0.0, -b, 1.0});
      const Mat2 A{c, -b, -b, (1.0 + b * b) / c};
      // eigenvalue range of the symmetric A via trace/determinant (det A = 1)
      const double tr = A.a + A.d;
      const double lam = 0.5 * (tr + std::sqrt(std::max(tr * tr - 4.0, 0.0)));
      SS_REQUIRE(lam < 4.0 && lam > 0.0,
                 "transform_coefficients: metric eigenvalue %g out of [1/4,4] at node (%d, %d)",
                 lam, i, j);
      out.A.set_mat(i, j, A);
      if (j == 0) {
        out.wall_slope[i] = b;
        out.wall_stretch[i] = c;
      }
    }
  return out;
}

}  // namespace slipstokes
