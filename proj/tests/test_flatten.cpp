#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "slipstokes/fft.hpp"
#include "slipstokes/flatten.hpp"
#include "slipstokes/halfspace.hpp"
#include "slipstokes/numeric.hpp"

using namespace slipstokes;

namespace {

Chart wall_chart(const Profile& p, double lx, double collar) {
  Chart c;
  c.name = "wall";
  c.anchor = {0.0, 0.0};
  c.angle = 0.0;
  c.half_width = lx;
  c.collar = collar;
  c.profile = p;
  return c;
}

}  // namespace

TEST_CASE("mollifier has unit mass, even symmetry and the declared moment") {
  const double mass =
      numeric::composite_gl([](double v) { return mollifier(v); }, -1.0, 1.0, 64);
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
  const double moment = numeric::composite_gl(
      [](double v) { return std::abs(v) * mollifier(v); }, -1.0, 1.0, 64);
  CHECK(mollifier_abs_moment() == doctest::Approx(moment).epsilon(1e-10));
  CHECK(mollifier_abs_moment() < 1.0);
  CHECK(mollifier(0.3) == doctest::Approx(mollifier(-0.3)).epsilon(1e-15));
  CHECK(mollifier(1.0) == 0.0);
  CHECK(mollifier(-1.2) == 0.0);
}

TEST_CASE("mollified extension reduces to the profile exactly at t = 0") {
  const Profile phi = Profile::sine(0.15, kPi, 0.3);
  const MollifiedExtension ext(phi);
  for (int k = 0; k < 40; ++k) {
    const double x = 0.081 * k;
    CHECK(ext.value(x, 0.0) == doctest::Approx(phi.eval(x)).epsilon(1e-12));
    CHECK(ext.dx(x, 0.0) == doctest::Approx(phi.deriv(x)).epsilon(1e-12));
    CHECK(std::abs(ext.dt(x, 0.0)) < 1e-12);
  }
}

TEST_CASE("affine and zero profiles short-circuit to closed forms at every height") {
  const MollifiedExtension ea(Profile::affine(0.22));
  const MollifiedExtension ez(Profile::zero());
  for (int k = 0; k < 25; ++k) {
    const double x = -2.0 + 0.31 * k, t = 0.17 * k;
    CHECK(ea.value(x, t) == doctest::Approx(0.22 * x).epsilon(1e-14));
    CHECK(ea.dx(x, t) == doctest::Approx(0.22).epsilon(1e-14));
    CHECK(std::abs(ea.dt(x, t)) < 1e-14);
    CHECK(ez.value(x, t) == 0.0);
    CHECK(ez.dx(x, t) == 0.0);
  }
}

TEST_CASE("extension quadrature matches an independent integrator") {
  const Profile phi = Profile::sine(0.15, kPi, 0.0);
  const MollifiedExtension ext(phi);
  for (int k = 0; k < 12; ++k) {
    const double x = 0.3 * k, t = 0.25 + 0.2 * k;
    const double direct = numeric::adaptive_simpson(
        [&](double v) { return mollifier(v) * phi.eval(x - t * v); }, -1.0, 1.0, 1e-12);
    CHECK(ext.value(x, t) == doctest::Approx(direct).epsilon(1e-9));
    const double ddirect = numeric::adaptive_simpson(
        [&](double v) { return -v * mollifier(v) * phi.deriv(x - t * v); }, -1.0, 1.0, 1e-12);
    CHECK(ext.dt(x, t) == doctest::Approx(ddirect).epsilon(1e-8));
  }
}

TEST_CASE("vertical smoothing obeys the moment bound |dt T| <= c1 K") {
  const Profile phi = Profile::sine(0.15, kPi, 0.7);  // K = 0.3
  const MollifiedExtension ext(phi);
  const double cap = mollifier_abs_moment() * phi.lipschitz();
  for (int i = 0; i < 30; ++i)
    for (int k = 0; k < 12; ++k) {
      const double x = 0.11 * i, t = 0.3 * k;
      CHECK(std::abs(ext.dt(x, t)) <= cap * (1.0 + 1e-9));
    }
}

TEST_CASE("flattening map pins the wall and certifies its determinant window") {
  const Chart chart = wall_chart(Profile::sine(0.15, kPi, 0.0), kPi, 4.0 * kPi + 1.0);
  const FlatteningMap map = build_flattening(chart);
  CHECK(map.n_scale() >= 3);  // doubling rule at K = 0.3: at least 2K + 2
  CHECK(map.det_lo() >= 0.25);
  CHECK(map.det_hi() <= 4.0);
  CHECK(map.det_lo() <= map.det_hi());

  for (int k = 0; k < 50; ++k) {
    const double x = kPi * k / 50.0;
    const Vec2 wall = map.graph_map({x, 0.0});
    CHECK(wall.x == x);
    CHECK(wall.y == doctest::Approx(chart.profile.eval(x)).epsilon(1e-12));
    const double z2 = 0.07 + 0.23 * k;
    CHECK(map.graph_det({x, z2}) >= map.det_lo() * (1.0 - 1e-12));
    CHECK(map.graph_det({x, z2}) <= map.det_hi() * (1.0 + 1e-12));
  }
}

TEST_CASE("graph jacobian agrees with finite differences of the map") {
  const Chart chart = wall_chart(Profile::sine(0.15, kPi, 0.4), kPi, 4.0 * kPi + 1.0);
  const FlatteningMap map = build_flattening(chart);
  const double h = 1e-5;
  for (int k = 0; k < 18; ++k) {
    const Vec2 z{0.17 * k, 0.05 + 0.4 * k};
    const Mat2 J = map.graph_jacobian(z);
    const Vec2 px = map.graph_map({z.x + h, z.y}), mx = map.graph_map({z.x - h, z.y});
    const Vec2 py = map.graph_map({z.x, z.y + h}), my = map.graph_map({z.x, z.y - h});
    CHECK(J.a == doctest::Approx((px.x - mx.x) / (2 * h)).epsilon(1e-7));
    CHECK(J.b == doctest::Approx((py.x - my.x) / (2 * h)).epsilon(1e-7));
    CHECK(J.c == doctest::Approx((px.y - mx.y) / (2 * h)).epsilon(1e-6));
    CHECK(J.d == doctest::Approx((py.y - my.y) / (2 * h)).epsilon(1e-6));
    CHECK(map.graph_det(z) == doctest::Approx(J.det()).epsilon(1e-13));
  }
}

TEST_CASE("vertical inversion returns the preimage height") {
  const Chart chart = wall_chart(Profile::sine(0.15, kPi, -0.2), kPi, 4.0 * kPi + 1.0);
  const FlatteningMap map = build_flattening(chart);
  for (int k = 0; k < 25; ++k) {
    const double x = 0.13 * k, z2 = 0.02 + 0.5 * k;
    const double target = map.graph_map({x, z2}).y;
    CHECK(map.invert_vertical(x, target) == doctest::Approx(z2).epsilon(1e-10));
  }
}

TEST_CASE("world map composes the chart frame and inverts") {
  Chart chart = wall_chart(Profile::sine(0.1, kPi, 0.0), kPi, 4.0 * kPi + 1.0);
  chart.anchor = {0.7, -1.1};
  chart.angle = 0.5;
  const FlatteningMap map = build_flattening(chart);
  for (int k = 0; k < 20; ++k) {
    const Vec2 z{0.15 * k, 0.1 + 0.3 * k};
    const Vec2 w = map.world_map(z);
    const Vec2 back = map.world_inverse(w);
    CHECK(back.x == doctest::Approx(z.x).epsilon(1e-9));
    CHECK(back.y == doctest::Approx(z.y).epsilon(1e-9));
  }
}

TEST_CASE("prepared tables reproduce the quadrature map") {
  const Chart chart = wall_chart(Profile::sine(0.15, kPi, 0.1), kPi, 4.0 * kPi + 1.0);
  const FlatteningMap slow = build_flattening(chart);
  FlatteningMap fast = build_flattening(chart);
  const Grid2 strip{kPi, 4.0 * kPi, 96, 384};
  fast.prepare(strip);
  CHECK(fast.prepared());
  CHECK(fast.prepared_grid() == strip);
  for (int k = 0; k < 30; ++k) {
    const Vec2 z{0.11 * k, 0.031 * k};  // off-node points
    const Vec2 a = slow.graph_map(z), b = fast.graph_map(z);
    CHECK(b.x == a.x);
    CHECK(b.y == doctest::Approx(a.y).epsilon(1e-7));
    const Mat2 Ja = slow.graph_jacobian(z), Jb = fast.graph_jacobian(z);
    CHECK(Jb.c == doctest::Approx(Ja.c).epsilon(1e-5));
    CHECK(Jb.d == doctest::Approx(Ja.d).epsilon(1e-5));
  }
}

TEST_CASE("transform coefficients satisfy the exact algebraic identities") {
  const Chart chart = wall_chart(Profile::sine(0.15, kPi, 0.0), kPi, 4.0 * kPi + 1.0);
  FlatteningMap map = build_flattening(chart);
  const Grid2 strip{kPi, 4.0 * kPi, 96, 384};
  map.prepare(strip);
  const TransformCoeffs tc = transform_coefficients(map, strip);

  double det_a_err = 0.0, sym_err = 0.0, direct_err = 0.0, min_eig = 1e300;
  for (int j = 0; j < strip.ny; ++j)
    for (int i = 0; i < strip.nx; ++i) {
      const Mat2 A = tc.A.mat_at(i, j);
      det_a_err = std::max(det_a_err, std::abs(A.det() - 1.0));
      sym_err = std::max(sym_err, std::abs(A.b - A.c));
      // det A = 1, so the eigenvalues are (tr +- sqrt(tr^2 - 4)) / 2; the
      // clamp guards roundoff where A is the identity and tr^2 - 4 ~ -1e-16
      const double tr = A.a + A.d;
      min_eig = std::min(min_eig, (tr - std::sqrt(std::max(tr * tr - 4.0, 0.0))) / 2.0);

      const Mat2 J = map.graph_jacobian({strip.x(i), strip.y(j)});
      const Mat2 Ainv = J.inverse();
      const Mat2 direct = Ainv.mul(Ainv.transpose()) * J.det();
      direct_err = std::max(direct_err, (A - direct).frob());

      const Mat2 B = tc.B.mat_at(i, j);
      CHECK(std::abs(B.a - J.d) < 1e-12);  // B = det J^-1 = [[c, 0], [-b, 1]]
      CHECK(B.b == 0.0);
      CHECK(std::abs(B.c + J.c) < 1e-12);
      CHECK(B.d == 1.0);
      CHECK(std::abs(tc.det.at(0, i, j) - J.det()) < 1e-12);
    }
  CHECK(det_a_err < 1e-13);
  CHECK(sym_err == 0.0);
  CHECK(min_eig >= 0.25);
  CHECK(direct_err < 1e-11);

  for (int i = 0; i < strip.nx; ++i) {
    CHECK(tc.wall_slope[i] ==
          doctest::Approx(chart.profile.deriv(strip.x(i))).epsilon(1e-9));
    CHECK(tc.wall_stretch[i] == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("piola columns of B are discretely solenoidal") {
  const Chart chart = wall_chart(Profile::sine(0.15, kPi, 0.5), kPi, 4.0 * kPi + 1.0);
  FlatteningMap map = build_flattening(chart);
  const Grid2 strip{kPi, 4.0 * kPi, 96, 384};
  map.prepare(strip);
  const TransformCoeffs tc = transform_coefficients(map, strip);

  // first column (c, -b): div = dx(c) - dz(b); the second column (0, 1) is
  // trivially solenoidal. Mixed partials of the extension commute, so the
  // defect is pure discretization noise.
  const GridField c_fld = component(tc.B, 0);
  const GridField b_neg = component(tc.B, 2);
  const GridField dxc = fft::derivative(c_fld, 0);
  const GridField dzb = fd_derivative_z(b_neg, 1);
  double defect = 0.0;
  for (int j = 0; j < strip.ny; ++j)
    for (int i = 0; i < strip.nx; ++i)
      defect = std::max(defect, std::abs(dxc.at(0, i, j) + dzb.at(0, i, j)));
  CHECK(defect < 1e-6);
}
