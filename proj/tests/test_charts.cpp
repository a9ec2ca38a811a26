#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "slipstokes/chart.hpp"
#include "slipstokes/io.hpp"

using namespace slipstokes;

namespace {

double fd_deriv(const Profile& p, double x) {
  const double h = 1e-6;
  return (p.eval(x + h) - p.eval(x - h)) / (2.0 * h);
}

}  // namespace

TEST_CASE("closed-form profiles expose exact values, derivatives and slopes") {
  const Profile z = Profile::zero();
  CHECK(z.eval(1.3) == 0.0);
  CHECK(z.deriv(-2.0) == 0.0);
  CHECK(z.lipschitz() == 0.0);

  const Profile a = Profile::affine(-0.35);
  CHECK(a.eval(2.0) == doctest::Approx(-0.7));
  CHECK(a.deriv(17.0) == -0.35);
  CHECK(a.lipschitz() == doctest::Approx(0.35));
  CHECK_FALSE(a.is_periodic());

  const double amp = 0.3, wl = kPi / 2.0, ph = 0.4;
  const Profile s = Profile::sine(amp, wl, ph);
  CHECK(s.is_periodic());
  CHECK(s.wavelength() == wl);
  CHECK(s.lipschitz() == doctest::Approx(amp * kTwoPi / wl));
  for (int k = 0; k < 25; ++k) {
    const double x = -3.0 + 0.27 * k;
    CHECK(s.eval(x) == doctest::Approx(amp * std::sin(kTwoPi * x / wl + ph)).epsilon(1e-14));
    CHECK(s.deriv(x) == doctest::Approx(fd_deriv(s, x)).epsilon(1e-8));
  }
}

TEST_CASE("sine bump has compact support and a certified slope bound") {
  const Profile p = Profile::sine_bump(0.4, 0.9, 2.5);
  CHECK(p.support() == 2.5);
  CHECK(p.eval(2.5) == 0.0);
  CHECK(p.eval(-3.0) == 0.0);
  CHECK(p.deriv(2.6) == 0.0);
  double sup_slope = 0.0;
  for (int k = 0; k <= 2000; ++k) {
    const double x = -2.6 + 5.2 * k / 2000.0;
    CHECK(p.deriv(x) == doctest::Approx(fd_deriv(p, x)).epsilon(5e-5));
    sup_slope = std::max(sup_slope, std::abs(p.deriv(x)));
  }
  CHECK(sup_slope <= p.lipschitz() * (1.0 + 1e-9));
  CHECK(p.lipschitz() <= sup_slope * 1.5);  // the certificate is not wildly loose
}

TEST_CASE("sampled profiles interpolate their samples and vanish at the ends") {
  const double support = 1.5;
  const int m = 33;
  std::vector<double> vals(m);
  for (int k = 0; k < m; ++k) {
    const double x = -support + 2.0 * support * k / (m - 1);
    vals[k] = 0.2 * std::sin(kPi * x / support);
  }
  vals.front() = vals.back() = 0.0;  // the support contract wants exact zeros
  const Profile p = Profile::samples(vals, support);
  for (int k = 0; k < m; ++k) {
    const double x = -support + 2.0 * support * k / (m - 1);
    CHECK(p.eval(x) == doctest::Approx(vals[k]).epsilon(1e-12));
  }
  CHECK(p.eval(support + 0.4) == 0.0);
  double sup_slope = 0.0;
  for (int k = 0; k <= 1500; ++k) {
    const double x = -1.6 + 3.2 * k / 1500.0;
    sup_slope = std::max(sup_slope, std::abs(fd_deriv(p, x)));
  }
  CHECK(sup_slope <= p.lipschitz() + 1e-6);

  std::vector<double> bad(vals);
  bad.front() = 0.3;
  CHECK_THROWS_AS(Profile::samples(bad, support), Error);
}

TEST_CASE("profile json round trips preserve evaluation") {
  std::vector<Profile> kinds;
  kinds.push_back(Profile::zero());
  kinds.push_back(Profile::affine(0.12));
  kinds.push_back(Profile::sine(0.25, 1.7, -0.3));
  kinds.push_back(Profile::sine_bump(0.3, 0.8, 2.0));
  kinds.push_back(Profile::samples({0.0, 0.1, -0.2, 0.15, 0.0}, 1.0));
  for (const Profile& p : kinds) {
    const Profile q = Profile::from_json(p.to_json());
    CHECK(q.kind() == p.kind());
    CHECK(q.lipschitz() == doctest::Approx(p.lipschitz()).epsilon(1e-14));
    for (int k = 0; k < 40; ++k) {
      const double x = -2.3 + 0.13 * k;
      CHECK(q.eval(x) == doctest::Approx(p.eval(x)).epsilon(1e-14));
    }
  }
  CHECK_THROWS_AS(Profile::from_json(nlohmann::json{{"kind", "spline"}}), Error);
}

TEST_CASE("bump01 is a smooth unit bump") {
  CHECK(bump01(0.0) == doctest::Approx(1.0));
  CHECK(bump01(1.0) == 0.0);
  CHECK(bump01(-1.0) == 0.0);
  CHECK(bump01(1.7) == 0.0);
  for (int k = 1; k < 20; ++k) {
    const double t = k / 20.0;
    CHECK(bump01(t) == doctest::Approx(bump01(-t)).epsilon(1e-15));
    CHECK(bump01(t) < bump01(t - 0.05));  // decreasing away from the center
    const double h = 1e-6;
    const double fd = (bump01(t + h) - bump01(t - h)) / (2.0 * h);
    CHECK(bump01_deriv(t) == doctest::Approx(fd).epsilon(2e-6));
  }
}

TEST_CASE("chart frames round trip between local and world coordinates") {
  Chart c;
  c.name = "rotated";
  c.anchor = {1.2, -0.4};
  c.angle = 0.7;
  c.half_width = 2.0;
  c.collar = 1.0;
  c.profile = Profile::sine(0.1, 1.3, 0.0);

  for (int k = 0; k < 30; ++k) {
    const Vec2 z{-1.9 + 0.13 * k, 0.05 * k};
    const Vec2 back = c.to_local(c.to_world(z));
    CHECK(back.x == doctest::Approx(z.x).epsilon(1e-13));
    CHECK(back.y == doctest::Approx(z.y).epsilon(1e-13));
  }
  // boundary points: local (x, phi(x)) maps to anchor + Q (x, phi(x))
  const Vec2 p = c.to_world({0.5, c.profile.eval(0.5)});
  const Mat2 Q = c.rotation();
  CHECK(p.x == doctest::Approx(c.anchor.x + Q.a * 0.5 + Q.b * c.profile.eval(0.5)));
  CHECK(p.y == doctest::Approx(c.anchor.y + Q.c * 0.5 + Q.d * c.profile.eval(0.5)));

  const Chart d = Chart::from_json(c.to_json());
  CHECK(d.name == c.name);
  CHECK(d.angle == c.angle);
  CHECK(d.profile.eval(0.3) == doctest::Approx(c.profile.eval(0.3)));
}

TEST_CASE("atlas fixture validates and survives a json round trip") {
  const std::string path = std::string(SS_FIXTURE_DIR) + "/atlas_wall.json";
  const Atlas atlas = Atlas::from_json(io::read_json(path));  // from_json validates
  CHECK(atlas.charts.size() == 2);
  CHECK(atlas.has_interior);
  CHECK(atlas.boundary.is_periodic());

  const Atlas again = Atlas::from_json(atlas.to_json());
  CHECK(again.charts.size() == atlas.charts.size());
  CHECK(again.box_lx == atlas.box_lx);

  // charts must actually sit on the global graph
  for (const Chart& c : atlas.charts)
    for (int k = 0; k <= 16; ++k) {
      const double z1 = -c.half_width + 2.0 * c.half_width * k / 16.0;
      const double xw = c.anchor.x + z1;
      CHECK(c.anchor.y + c.profile.eval(z1) ==
            doctest::Approx(atlas.boundary.eval(std::remainder(xw, atlas.box_lx)))
                .epsilon(1e-10));
    }
}

TEST_CASE("atlas validation rejects gaps and misaligned charts") {
  Atlas a;
  a.box_lx = kTwoPi;
  a.box_ly = kTwoPi;
  a.boundary = Profile::zero();
  Chart c;
  c.name = "narrow";
  c.anchor = {0.0, 0.0};
  c.half_width = 1.0;  // cannot cover a 2*pi boundary alone
  c.collar = 1.0;
  c.profile = Profile::zero();
  a.charts.push_back(c);
  CHECK_THROWS_AS(a.validate(), Error);

  a.charts[0].half_width = 3.5;
  a.charts[0].profile = Profile::affine(0.2);  // disagrees with the flat graph
  CHECK_THROWS_AS(a.validate(), Error);

  a.charts[0].profile = Profile::zero();
  a.charts[0].half_width = kPi + 0.2;  // window wraps: covered via remainder
  CHECK_NOTHROW(a.validate());

  a.charts.clear();
  CHECK_THROWS_AS(a.validate(), Error);
}
