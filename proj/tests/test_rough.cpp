#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "slipstokes/fft.hpp"
#include "slipstokes/flatten.hpp"
#include "slipstokes/halfspace.hpp"
#include "slipstokes/rng.hpp"
#include "slipstokes/roughstokes.hpp"

using namespace slipstokes;

namespace {

Grid2 strip_grid(int nx) { return Grid2{kPi, 4.0 * kPi, nx, 4 * nx}; }

Chart wall_chart(double amplitude, double wavelength, const Grid2& g) {
  Chart ch;
  ch.name = "wall";
  ch.anchor = {0.0, 0.0};
  ch.angle = 0.0;
  ch.half_width = g.lx;
  ch.collar = g.ly + 1.0;
  ch.profile =
      amplitude == 0.0 ? Profile::zero() : Profile::sine(amplitude, wavelength, 0.0);
  return ch;
}

// Smooth wall-separated strip data: a few x-modes under a z-gaussian bell.
GridField strip_modes(const Grid2& g, int rank, uint64_t seed, double zc, double sz) {
  Rng rng(seed);
  GridField f(g, rank);
  for (int c = 0; c < f.ncomp(); ++c) {
    double amp[3], ph[3];
    for (int k = 0; k < 3; ++k) {
      amp[k] = rng.normal() / (1.0 + k);
      ph[k] = rng.uniform(0.0, kTwoPi);
    }
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        const double env = std::exp(-(g.y(j) - zc) * (g.y(j) - zc) / (2.0 * sz * sz));
        double acc = 0.0;
        for (int k = 0; k < 3; ++k)
          acc += amp[k] * std::cos(kTwoPi / g.lx * (k + 1) * g.x(i) + ph[k]);
        f.at(c, i, j) = env * acc;
      }
  }
  return f;
}

// Zero-mean tangential datum.
std::vector<double> slip_wave(const Grid2& g, double a) {
  std::vector<double> s(g.nx);
  for (int i = 0; i < g.nx; ++i)
    s[i] = a * (std::sin(2.0 * g.x(i) + 0.4) + 0.5 * std::cos(4.0 * g.x(i)));
  return s;
}

double rel_l2(const GridField& a, const GridField& b) {
  GridField d = a;
  d -= b;
  return l2_norm(d) / std::max(l2_norm(b), 1e-300);
}

TransformCoeffs chart_coeffs(const Chart& ch, const Grid2& g) {
  FlatteningMap map = build_flattening(ch);
  map.prepare(g);
  return transform_coefficients(map, g);
}

}  // namespace

TEST_CASE("flat-wall picard iteration degenerates to a single model solve") {
  const Grid2 g = strip_grid(64);
  const Chart flat = wall_chart(0.0, 1.0, g);

  SUBCASE("divergence form: stress and slip data") {
    rough::SlipProblem sp;
    sp.chart = flat;
    sp.grid = g;
    sp.stress = strip_modes(g, 2, 11, 0.3 * g.ly, 0.8);
    sp.slip = slip_wave(g, 0.3);
    rough::SlipSolution sol = rough::picard_solve(sp);

    CHECK(sol.sweeps.size() == 1);
    CHECK(sol.converged);

    HalfProblem hp;
    hp.grid = g;
    hp.stress = sp.stress;
    hp.trace_slip.resize(g.nx);
    for (int i = 0; i < g.nx; ++i) hp.trace_slip[i] = -sp.slip[i];
    HalfSolution hs = solve_halfspace(hp);

    CHECK(rel_l2(sol.v, hs.u) < 1e-12);

    // Pressures agree up to their gauges.
    GridField dp = sol.theta;
    dp -= hs.pi;
    const double off = mean(dp, 0);
    double dev = 0.0;
    for (double v : dp.raw()) dev = std::max(dev, std::abs(v - off));
    CHECK(dev < 1e-10 * std::max(1.0, max_abs(hs.pi)));
  }

  SUBCASE("forcing form: body force and slip data") {
    rough::SlipProblem sp;
    sp.chart = flat;
    sp.grid = g;
    sp.forcing = strip_modes(g, 1, 12, 0.3 * g.ly, 0.8);
    sp.slip = slip_wave(g, 0.1);
    rough::SlipSolution sol = rough::nondivergence_solve(sp);

    CHECK(sol.sweeps.size() == 1);
    CHECK(sol.diagnostics.contains("potential_div_misfit"));
    CHECK(sol.estimate.components.contains("forcing_potential_l2"));

    HalfProblem hp;
    hp.grid = g;
    hp.forcing = sp.forcing;
    hp.trace_slip.resize(g.nx);
    for (int i = 0; i < g.nx; ++i) hp.trace_slip[i] = -sp.slip[i];
    HalfSolution hs = solve_halfspace(hp);

    CHECK(rel_l2(sol.v, hs.u) < 1e-12);
  }
}

TEST_CASE("localization commutators match their analytic forms") {
  const Grid2 g = strip_grid(64);
  auto B = [](double z) { return std::exp(-(z - 1.5) * (z - 1.5) / (2.0 * 0.49)); };
  auto dB = [&](double z) { return -(z - 1.5) / 0.49 * B(z); };
  auto ddB = [&](double z) {
    const double r = (z - 1.5) / 0.49;
    return (r * r - 1.0 / 0.49) * B(z);
  };
  auto C = [](double z) { return std::exp(-(z - 1.0) * (z - 1.0) / (2.0 * 0.36)); };
  auto dC = [&](double z) { return -(z - 1.0) / 0.36 * C(z); };
  auto D = [](double z) { return std::exp(-(z - 1.2) * (z - 1.2) / (2.0 * 0.25)); };
  auto dD = [&](double z) { return -(z - 1.2) / 0.25 * D(z); };
  auto E = [](double z) { return std::exp(-(z - 1.0) * (z - 1.0) / (2.0 * 0.64)); };

  GridField xi(g, 0), u(g, 1), pi(g, 0);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const double x = g.x(i), z = g.y(j);
      xi.at(0, i, j) = (0.6 + 0.4 * std::cos(2.0 * x)) * B(z);
      u.at(0, i, j) = std::sin(2.0 * x) * C(z);
      u.at(1, i, j) = std::cos(4.0 * x) * D(z);
      pi.at(0, i, j) = std::cos(2.0 * x) * E(z);
    }

  rough::Localized loc = rough::localize(xi, u, pi);

  GridField lap_want(g, 1), grad_want(g, 1), div_want(g, 0);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const double x = g.x(i), z = g.y(j);
      const double w = 0.6 + 0.4 * std::cos(2.0 * x);
      const double xix = -0.8 * std::sin(2.0 * x) * B(z);
      const double xiz = w * dB(z);
      const double lap = -1.6 * std::cos(2.0 * x) * B(z) + w * ddB(z);
      const double ux = std::sin(2.0 * x) * C(z), uz = std::cos(4.0 * x) * D(z);
      const double uxx = 2.0 * std::cos(2.0 * x) * C(z);
      const double uxz = std::sin(2.0 * x) * dC(z);
      const double uzx = -4.0 * std::sin(4.0 * x) * D(z);
      const double uzz = std::cos(4.0 * x) * dD(z);
      lap_want.at(0, i, j) = lap * ux + 2.0 * (xix * uxx + xiz * uxz);
      lap_want.at(1, i, j) = lap * uz + 2.0 * (xix * uzx + xiz * uzz);
      grad_want.at(0, i, j) = xix * pi.at(0, i, j);
      grad_want.at(1, i, j) = xiz * pi.at(0, i, j);
      div_want.at(0, i, j) = xix * ux + xiz * uz;
    }

  CHECK(rel_l2(loc.laplace_comm, lap_want) < 1e-6);
  CHECK(rel_l2(loc.gradient_comm, grad_want) < 1e-7);
  CHECK(rel_l2(loc.divergence_comm, div_want) < 1e-7);

  double bt_dev = 0.0;
  for (int i = 0; i < g.nx; ++i) {
    const double x = g.x(i);
    const double want = -std::sin(2.0 * x) * C(0.0) * (0.6 + 0.4 * std::cos(2.0 * x)) * dB(0.0);
    bt_dev = std::max(bt_dev, std::abs(loc.boundary_tangential[i] - want));
  }
  CHECK(bt_dev < 1e-6);

  SUBCASE("cutoffs summing to one produce cancelling commutators") {
    GridField xi2(g, 0);
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) xi2.at(0, i, j) = 1.0 - xi.at(0, i, j);
    rough::Localized loc2 = rough::localize(xi2, u, pi);

    GridField ls = loc.laplace_comm;
    ls += loc2.laplace_comm;
    GridField gs = loc.gradient_comm;
    gs += loc2.gradient_comm;
    GridField ds = loc.divergence_comm;
    ds += loc2.divergence_comm;
    CHECK(max_abs(ls) < 1e-9);
    CHECK(max_abs(gs) < 1e-9);
    CHECK(max_abs(ds) < 1e-9);
    double bs = 0.0;
    for (int i = 0; i < g.nx; ++i)
      bs = std::max(bs,
                    std::abs(loc.boundary_tangential[i] + loc2.boundary_tangential[i]));
    CHECK(bs < 1e-9);
  }
}

TEST_CASE("divergence reduction empties the mass data and returns the lifting flow") {
  const Grid2 g = strip_grid(64);

  SUBCASE("rough wall with a volume source") {
    const Chart ch = wall_chart(0.025, kPi, g);
    rough::SlipProblem sp;
    sp.chart = ch;
    sp.grid = g;
    sp.divergence = strip_modes(g, 0, 41, 0.3 * g.ly, 0.8);
    std::vector<double> gtrace(g.nx);
    for (int i = 0; i < g.nx; ++i)
      gtrace[i] = 0.1 * std::sin(2.0 * g.x(i) + 0.2) + 0.05 * std::cos(4.0 * g.x(i));
    sp.trace_normal = gtrace;
    const GridField h_snapshot = sp.divergence;

    rough::Reduction red = rough::reduce_divergence(sp);

    CHECK(sp.divergence.empty());
    CHECK(sp.trace_normal.empty());
    CHECK(!sp.stress.empty());

    const TransformCoeffs tc = chart_coeffs(ch, g);

    // Flux balance of the removed data matches the reported defect.
    double hsum = 0.0, gsum = 0.0;
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i)
        hsum += tc.det.at(0, i, j) * h_snapshot.at(0, i, j);
    hsum *= g.cell_area();
    for (int i = 0; i < g.nx; ++i) {
      const double bp = tc.wall_slope[i];
      gsum += -std::sqrt(1.0 + bp * bp) * gtrace[i];
    }
    gsum *= g.dx();
    CHECK(red.defect == doctest::Approx(hsum + gsum).epsilon(1e-12));

    // Chart-side mass identity: c dx(u0_x) - b dz(u0_x) + dz(u0_z) equals the
    // det-weighted source minus the compatibility shift.
    const double shift = red.defect / (g.lx * g.ly);
    const GridField grad = strip_gradient(red.u0);
    const int jlo = 3, jhi = static_cast<int>(0.7 * g.ny);
    double num = 0.0, den = 0.0;
    for (int j = jlo; j < jhi; ++j)
      for (int i = 0; i < g.nx; ++i) {
        const Mat2 Bm = tc.B.mat_at(i, j);
        const double c = Bm.a, b = -Bm.c;
        const double got = c * grad.at(0, i, j) - b * grad.at(1, i, j) + grad.at(3, i, j);
        const double want = tc.det.at(0, i, j) * h_snapshot.at(0, i, j) - shift;
        num += (got - want) * (got - want);
        den += want * want;
      }
    CHECK(std::sqrt(num / den) < 1e-6);

    // Wall-normal velocity of the lift reproduces the removed trace.
    double ndev = 0.0;
    for (int i = 0; i < g.nx; ++i) {
      const double bp = tc.wall_slope[i];
      const double un =
          (bp * red.u0.at(0, i, 0) - red.u0.at(1, i, 0)) / std::sqrt(1.0 + bp * bp);
      ndev = std::max(ndev, std::abs(un - gtrace[i]));
    }
    CHECK(ndev < 1e-6);
  }

  SUBCASE("flat wall: trace lift and friction drag bookkeeping") {
    const Chart flat = wall_chart(0.0, 1.0, g);
    rough::SlipProblem sp;
    sp.chart = flat;
    sp.grid = g;
    std::vector<double> gtrace = slip_wave(g, 0.2);
    sp.trace_normal = gtrace;
    sp.alpha.assign(g.nx, 1.0);

    rough::Reduction red = rough::reduce_divergence(sp);

    CHECK(sp.trace_normal.empty());
    double ndev = 0.0;
    for (int i = 0; i < g.nx; ++i)
      ndev = std::max(ndev, std::abs(red.u0.at(1, i, 0) + gtrace[i]));
    CHECK(ndev < 1e-7);

    // Friction drag of the lift lands in the slip datum with a minus sign.
    REQUIRE(sp.slip.size() == static_cast<size_t>(g.nx));
    for (int i = 0; i < g.nx; ++i) CHECK(sp.slip[i] == -red.u0.at(0, i, 0));
  }
}

TEST_CASE("forcing_stress rows integrate the body force") {
  const Grid2 g = strip_grid(64);
  const GridField r = strip_modes(g, 1, 51, 0.3 * g.ly, 0.8);
  const GridField S = rough::forcing_stress(g, r);
  REQUIRE(S.rank() == 2);

  const GridField dxS = fft::derivative(S, 0);
  const GridField dzS = fd_derivative_z(S, 1);
  const int jlo = 3, jhi = static_cast<int>(0.7 * g.ny);
  double num = 0.0, den = 0.0;
  for (int c = 0; c < 2; ++c)
    for (int j = jlo; j < jhi; ++j)
      for (int i = 0; i < g.nx; ++i) {
        const double got = dxS.at(2 * c + 0, i, j) + dzS.at(2 * c + 1, i, j);
        const double want = r.at(c, i, j);
        num += (got - want) * (got - want);
        den += want * want;
      }
  CHECK(std::sqrt(num / den) < 1e-5);
}

TEST_CASE("sweeps contract under a small boundary slope") {
  const Grid2 g = strip_grid(64);
  const Chart ch = wall_chart(0.025, kPi, g);  // slope bound K = 0.05

  rough::SlipProblem sp;
  sp.chart = ch;
  sp.grid = g;
  sp.stress = strip_modes(g, 2, 21, 0.3 * g.ly, 0.8);
  sp.slip = slip_wave(g, 0.2);
  sp.alpha.assign(g.nx, 1.0);
  sp.max_sweeps = 6;
  sp.tol = -1.0;  // fixed sweep count

  rough::SlipSolution sol = rough::picard_solve(sp);

  REQUIRE(sol.sweeps.size() == 6);
  CHECK(sol.converged);
  CHECK(sol.sweeps[1].ratio < 0.5);
  CHECK(sol.sweeps[1].residual < sol.sweeps[0].residual);
  CHECK(sol.sweeps.back().residual < 1e-3 * sol.sweeps.front().residual);

  const TransformCoeffs tc = chart_coeffs(ch, g);
  HalfResiduals res = rough::measure_rough(sp, tc, sol.v, sol.theta);
  CHECK(res.interior == doctest::Approx(sol.residuals.interior).epsilon(1e-12));
  CHECK(res.divergence == doctest::Approx(sol.residuals.divergence).epsilon(1e-12));
  CHECK(res.trace_normal == doctest::Approx(sol.residuals.trace_normal).epsilon(1e-12));
  CHECK(res.trace_slip == doctest::Approx(sol.residuals.trace_slip).epsilon(1e-12));

  CHECK(sol.estimate.left > 0.0);
  CHECK(sol.estimate.right > 0.0);
  CHECK(sol.estimate.ratio > 0.0);
  CHECK(sol.estimate.ratio < 1e3);
}

TEST_CASE("the sweep map is linear in the data at a fixed sweep count") {
  const Grid2 g = strip_grid(64);
  const Chart ch = wall_chart(0.025, kPi, g);

  auto make = [&](GridField F, std::vector<double> s) {
    rough::SlipProblem sp;
    sp.chart = ch;
    sp.grid = g;
    sp.stress = std::move(F);
    sp.slip = std::move(s);
    sp.alpha.assign(g.nx, 1.0);
    sp.max_sweeps = 8;
    sp.tol = -1.0;
    return sp;
  };

  const GridField F1 = strip_modes(g, 2, 31, 0.3 * g.ly, 0.8);
  const GridField F2 = strip_modes(g, 2, 32, 0.35 * g.ly, 0.7);
  const std::vector<double> s1 = slip_wave(g, 0.15);
  std::vector<double> s2(g.nx);
  for (int i = 0; i < g.nx; ++i) s2[i] = -0.1 * std::sin(4.0 * g.x(i) + 0.9);

  GridField F12 = F1;
  F12 += F2;
  std::vector<double> s12(g.nx);
  for (int i = 0; i < g.nx; ++i) s12[i] = s1[i] + s2[i];

  rough::SlipSolution a = rough::picard_solve(make(F1, s1));
  rough::SlipSolution b = rough::picard_solve(make(F2, s2));
  rough::SlipSolution c = rough::picard_solve(make(F12, s12));

  GridField vsum = a.v;
  vsum += b.v;
  GridField tsum = a.theta;
  tsum += b.theta;
  CHECK(rel_l2(c.v, vsum) < 1e-10);
  CHECK(rel_l2(c.theta, tsum) < 1e-10);
}

TEST_CASE("zero data yield the zero solution") {
  const Grid2 g = strip_grid(64);
  rough::SlipProblem sp;
  sp.chart = wall_chart(0.025, kPi, g);
  sp.grid = g;
  sp.alpha.assign(g.nx, 1.0);

  rough::SlipSolution sol = rough::picard_solve(sp);
  CHECK(sol.sweeps.size() == 1);
  CHECK(max_abs(sol.v) == 0.0);
  CHECK(sol.estimate.ratio == 0.0);
}

TEST_CASE("slip problem validation rejects malformed setups") {
  const Grid2 g = strip_grid(64);
  const Chart ch = wall_chart(0.025, kPi, g);

  SUBCASE("unreduced volume source") {
    rough::SlipProblem sp;
    sp.chart = ch;
    sp.grid = g;
    sp.divergence = strip_modes(g, 0, 61, 0.3 * g.ly, 0.8);
    CHECK_THROWS_AS(rough::picard_solve(sp), Error);
  }
  SUBCASE("unreduced normal trace") {
    rough::SlipProblem sp;
    sp.chart = ch;
    sp.grid = g;
    sp.trace_normal.assign(g.nx, 0.1);
    CHECK_THROWS_AS(rough::picard_solve(sp), Error);
  }
  SUBCASE("negative friction") {
    rough::SlipProblem sp;
    sp.chart = ch;
    sp.grid = g;
    sp.alpha.assign(g.nx, -1.0);
    CHECK_THROWS_AS(sp.validate(), Error);
  }
  SUBCASE("slip datum of the wrong length") {
    rough::SlipProblem sp;
    sp.chart = ch;
    sp.grid = g;
    sp.slip.assign(g.nx + 2, 0.0);
    CHECK_THROWS_AS(sp.validate(), Error);
  }
  SUBCASE("stress alive in the pad") {
    rough::SlipProblem sp;
    sp.chart = ch;
    sp.grid = g;
    sp.stress = GridField(g, 2);
    for (double& v : sp.stress.raw()) v = 1.0;
    CHECK_THROWS_AS(sp.validate(), Error);
  }
  SUBCASE("boundary period must divide the strip width") {
    rough::SlipProblem sp;
    sp.chart = wall_chart(0.025, 1.1, g);
    sp.grid = g;
    CHECK_THROWS_AS(sp.validate(), Error);
  }
  SUBCASE("chart collar must cover the strip") {
    rough::SlipProblem sp;
    sp.chart = ch;
    sp.chart.collar = 1.0;
    sp.grid = g;
    CHECK_THROWS_AS(sp.validate(), Error);
  }
  SUBCASE("nonpositive sweep budget") {
    rough::SlipProblem sp;
    sp.chart = ch;
    sp.grid = g;
    sp.max_sweeps = 0;
    CHECK_THROWS_AS(sp.validate(), Error);
  }
  SUBCASE("forcing-form entry contract") {
    rough::SlipProblem sp;
    sp.chart = ch;
    sp.grid = g;
    sp.stress = strip_modes(g, 2, 62, 0.3 * g.ly, 0.8);
    sp.forcing = strip_modes(g, 1, 63, 0.3 * g.ly, 0.8);
    CHECK_THROWS_AS(rough::nondivergence_solve(sp), Error);
    rough::SlipProblem sp2;
    sp2.chart = ch;
    sp2.grid = g;
    CHECK_THROWS_AS(rough::nondivergence_solve(sp2), Error);
  }
}
