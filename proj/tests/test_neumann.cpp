#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "slipstokes/flatten.hpp"
#include "slipstokes/neumann.hpp"

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

// Sinusoidal wall with the derivatives the manufactured fields need.
struct SineWall {
  double A = 0.0, k = 0.0;
  double f(double x) const { return A * std::sin(k * x); }
  double d1(double x) const { return A * k * std::cos(k * x); }
};

// P(0) = P'(0) = 1, concentrated near the wall so the strip pad stays clean.
struct JetProfile {
  double sigma = 0.5;
  double P(double Y) const {
    return (1.0 + Y) * std::exp(-Y * Y / (2.0 * sigma * sigma));
  }
  double dP(double Y) const {
    const double s2 = sigma * sigma;
    return std::exp(-Y * Y / (2.0 * s2)) * (1.0 - Y * (1.0 + Y) / s2);
  }
};

// Gaussian shell a short distance above the wall; feeds the rotational part
// of the manufactured flux so the conormal datum is nontrivial.
struct QShell {
  double y0 = 0.3, s = 0.4;
  double Q(double Y) const { return std::exp(-(Y - y0) * (Y - y0) / (2.0 * s * s)); }
  double dQ(double Y) const { return -(Y - y0) / (s * s) * Q(Y); }
};

double rel_l2(const GridField& got, const GridField& want) {
  GridField diff = got;
  diff -= want;
  return l2_norm(diff) / l2_norm(want);
}

// Manufactured u* = cos(2x) P(Y), flux F = -grad(u*) + rot(sin(2x) Q(Y)),
// all evaluated at the image of the flattening map like real chart data.
struct FluxFixture {
  GridField exact;
  GridField flux;
  std::vector<double> trace_up;     // du/dz + F_z at the wall (flat model form)
  std::vector<double> trace_rough;  // (grad u + F) . n_out (rough chart form)

  FluxFixture(const Chart& ch, const Grid2& g, const SineWall& wall, double sigma_p) {
    FlatteningMap map = build_flattening(ch);
    map.prepare(g);
    const JetProfile jet{sigma_p};
    const QShell shell;
    exact = GridField(g, 0);
    flux = GridField(g, 1);
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        const double x = g.x(i);
        const Vec2 xy = map.graph_map({x, g.y(j)});
        const double Y = xy.y - wall.f(x);
        const double p1 = wall.d1(x);
        const double P = jet.P(Y), dP = jet.dP(Y);
        const double Q = shell.Q(Y), dQ = shell.dQ(Y);
        const double s2x = std::sin(2.0 * x), c2x = std::cos(2.0 * x);
        exact.at(0, i, j) = c2x * P;
        flux.at(0, i, j) = 2.0 * s2x * P + p1 * c2x * dP + s2x * dQ;
        flux.at(1, i, j) = -c2x * dP - 2.0 * c2x * Q + p1 * s2x * dQ;
      }
    trace_up.resize(g.nx);
    trace_rough.resize(g.nx);
    for (int i = 0; i < g.nx; ++i) {
      const double x = g.x(i);
      const double root = std::sqrt(1.0 + wall.d1(x) * wall.d1(x));
      trace_rough[i] = 2.0 * std::cos(2.0 * x) * shell.Q(0.0) / root;
      trace_up[i] = -2.0 * std::cos(2.0 * x) * shell.Q(0.0);
    }
  }
};

}  // namespace

TEST_CASE("dirichlet wall solve reproduces a separable manufactured solution") {
  const Grid2 g = strip_grid(64);
  // u = sin(2x) G(z) with G = z exp(-z^2/2): G(0) = 0 and the pad is clean.
  auto G = [](double z) { return z * std::exp(-z * z / 2.0); };
  auto ddG = [](double z) { return (z * z * z - 3.0 * z) * std::exp(-z * z / 2.0); };
  GridField r(g, 0), exact(g, 0);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const double x = g.x(i), z = g.y(j);
      exact.at(0, i, j) = std::sin(2.0 * x) * G(z);
      r.at(0, i, j) = std::sin(2.0 * x) * (ddG(z) - 4.0 * G(z));
    }

  GridField u = neumann::solve_dirichlet(g, r, 2.0);
  REQUIRE(u.rank() == 0);

  double wall = 0.0;
  for (int i = 0; i < g.nx; ++i) wall = std::max(wall, std::abs(u.at(0, i, 0)));
  CHECK(wall < 1e-10);
  CHECK(rel_l2(u, exact) < 1e-6);
}

TEST_CASE("flux solve on the flat strip matches the manufactured field") {
  const Grid2 g = strip_grid(64);
  const SineWall wall{0.0, 0.0};
  const FluxFixture fx(wall_chart(0.0, 1.0, g), g, wall, 0.5);

  neumann::FluxProblem prob;
  prob.grid = g;
  prob.flux = fx.flux;
  prob.trace = fx.trace_up;
  neumann::FluxSolution sol = neumann::solve_flux(prob);

  CHECK(std::abs(sol.trace_defect) < 1e-12);
  CHECK(rel_l2(sol.u, fx.exact) < 1e-5);
  CHECK(sol.residuals.interior < 1e-6);
  CHECK(sol.residuals.trace < 1e-6);

  SUBCASE("measure_flux agrees with the residuals the solve reported") {
    neumann::FluxResiduals res = neumann::measure_flux(prob, sol.u);
    CHECK(res.interior == doctest::Approx(sol.residuals.interior).epsilon(1e-12));
    CHECK(res.trace == doctest::Approx(sol.residuals.trace).epsilon(1e-12));
  }

  SUBCASE("solvability defect in the trace is removed and reported") {
    neumann::FluxProblem shifted = prob;
    for (double& v : shifted.trace) v += 0.3;
    neumann::FluxSolution sol2 = neumann::solve_flux(shifted);
    CHECK(sol2.trace_defect == doctest::Approx(0.3).epsilon(1e-12));
    GridField diff = sol2.u;
    diff -= sol.u;
    CHECK(max_abs(diff) < 1e-12 * std::max(1.0, max_abs(sol.u)));
  }
}

TEST_CASE("rough flux sweeps on a flat chart stop after one sweep") {
  const Grid2 g = strip_grid(64);
  const SineWall wall{0.0, 0.0};
  const Chart ch = wall_chart(0.0, 1.0, g);
  const FluxFixture fx(ch, g, wall, 0.5);

  neumann::RoughFluxProblem prob;
  prob.chart = ch;
  prob.grid = g;
  prob.flux = fx.flux;
  prob.trace = fx.trace_rough;
  neumann::RoughFluxSolution sol = neumann::solve_flux_rough(prob);

  // The flat problem is its own model problem: the solver should notice the
  // sweep map went stationary instead of re-solving an identical system.
  CHECK(sol.sweeps.size() == 1);
  CHECK(rel_l2(sol.v, fx.exact) < 1e-4);
}

TEST_CASE("rough flux sweeps contract on a gently sloped wall and refine at first order") {
  const double amp = 0.025, wl = kPi;  // slope bound K = 0.05
  double errs[2] = {0.0, 0.0};
  for (int pass = 0; pass < 2; ++pass) {
    const Grid2 g = strip_grid(pass == 0 ? 48 : 96);
    const SineWall wall{amp, 2.0 * kPi / wl};
    const Chart ch = wall_chart(amp, wl, g);
    const FluxFixture fx(ch, g, wall, 0.5);

    neumann::RoughFluxProblem prob;
    prob.chart = ch;
    prob.grid = g;
    prob.flux = fx.flux;
    prob.trace = fx.trace_rough;
    prob.max_sweeps = 30;
    neumann::RoughFluxSolution sol = neumann::solve_flux_rough(prob);

    REQUIRE(sol.sweeps.size() >= 2);
    // Every sweep but the final plateau one must shrink the residual.
    for (size_t k = 1; k + 1 < sol.sweeps.size(); ++k)
      CHECK(sol.sweeps[k].ratio < 1.0);
    CHECK(sol.sweeps.back().residual <= sol.sweeps.front().residual);

    errs[pass] = rel_l2(sol.v, fx.exact);
  }
  CHECK(errs[1] < errs[0]);
  CHECK(std::log2(errs[0] / errs[1]) > 0.8);
}

TEST_CASE("flux problem validation rejects malformed data") {
  const Grid2 g = strip_grid(64);

  SUBCASE("grid too small") {
    neumann::FluxProblem prob;
    prob.grid = Grid2{kPi, 4.0 * kPi, 4, 8};
    CHECK_THROWS_AS(prob.validate(), Error);
  }
  SUBCASE("trace length mismatch") {
    neumann::FluxProblem prob;
    prob.grid = g;
    prob.trace.assign(g.nx + 1, 0.0);
    CHECK_THROWS_AS(prob.validate(), Error);
  }
  SUBCASE("non-finite flux entry") {
    neumann::FluxProblem prob;
    prob.grid = g;
    prob.flux = GridField(g, 1);
    prob.flux.at(0, 3, 5) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(prob.validate(), Error);
  }
  SUBCASE("boundary period must divide the strip width") {
    neumann::RoughFluxProblem prob;
    prob.grid = g;
    prob.chart = wall_chart(0.05, 1.1, g);
    CHECK_THROWS_AS(prob.validate(), Error);
  }
  SUBCASE("chart collar must cover the strip") {
    neumann::RoughFluxProblem prob;
    prob.grid = g;
    prob.chart = wall_chart(0.05, kPi, g);
    prob.chart.collar = 1.0;
    CHECK_THROWS_AS(prob.validate(), Error);
  }
}
