#include "slipstokes/sharpness.hpp"

#include <algorithm>
#include <cmath>

namespace slipstokes {
namespace sharpness {

namespace {

constexpr double kTiny = 1e-300;

bool on(const GridField& mask, int i, int j) {
  const Grid2& g = mask.grid();
  if (i < 0 || i >= g.nx || j < 0 || j >= g.ny) return false;
  return mask.at(0, i, j) != 0.0;
}

/// Nodes whose whole cross stencil of the given radius is set.
GridField erode_cross(const GridField& mask, int radius) {
  const Grid2& g = mask.grid();
  GridField out(g, 0);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      bool ok = on(mask, i, j);
      for (int d = 1; d <= radius && ok; ++d)
        ok = on(mask, i + d, j) && on(mask, i - d, j) && on(mask, i, j + d) &&
             on(mask, i, j - d);
      out.at(0, i, j) = ok ? 1.0 : 0.0;
    }
  return out;
}

double ddx(const GridField& f, int c, int i, int j, double h) {
  return (f.at(c, i + 1, j) - f.at(c, i - 1, j)) / (2.0 * h);
}
double ddy(const GridField& f, int c, int i, int j, double h) {
  return (f.at(c, i, j + 1) - f.at(c, i, j - 1)) / (2.0 * h);
}

struct Fit {
  double slope = 0.0;
};

Fit fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
  const int n = static_cast<int>(x.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (int k = 0; k < n; ++k) {
    const double lx = std::log(x[k]), ly = std::log(y[k]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  Fit f;
  f.slope = (n * sxy - sx * sy) / std::max(n * sxx - sx * sx, kTiny);
  return f;
}

/// Frobenius gradient magnitude of a velocity field and the second-gradient
/// squared magnitude, each with its validity mask.
struct Derived {
  GridField gradmag;   // rank 0
  GridField gmask;     // rank 0
  GridField hessmag2;  // rank 0
  GridField hmask;     // rank 0
};

Derived derive_fields(const CornerPatch& patch, const GridField& u, const GridField& umask) {
  const Grid2& g = u.grid();
  const double h = patch.h();
  Derived d;
  d.gmask = erode_cross(umask, 1);
  d.gradmag = GridField(g, 0);
  GridField grad(g, 2);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      if (d.gmask.at(0, i, j) == 0.0) continue;
      const double a = ddx(u, 0, i, j, h), b = ddy(u, 0, i, j, h);
      const double c = ddx(u, 1, i, j, h), e = ddy(u, 1, i, j, h);
      grad.set_mat(i, j, Mat2{a, b, c, e});
      d.gradmag.at(0, i, j) = std::sqrt(a * a + b * b + c * c + e * e);
    }
  d.hmask = erode_cross(d.gmask, 1);
  d.hessmag2 = GridField(g, 0);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      if (d.hmask.at(0, i, j) == 0.0) continue;
      double acc = 0.0;
      for (int c = 0; c < 4; ++c) {
        acc += sq(ddx(grad, c, i, j, h));
        acc += sq(ddy(grad, c, i, j, h));
      }
      d.hessmag2.at(0, i, j) = acc;
    }
  return d;
}

}  // namespace

WedgeDomain WedgeDomain::opening(double theta) {
  WedgeDomain d;
  d.theta = theta;
  d.kappa = kPi / theta;
  d.validate();
  return d;
}

void WedgeDomain::validate() const {
  SS_REQUIRE(theta > 0.0 && theta < kTwoPi, "wedge: opening must lie in (0, 2*pi), got %g", theta);
  SS_REQUIRE(std::abs(kappa * theta / kPi - 1.0) <= 1e-14,
             "wedge: kappa is not pi / theta (relative defect %.3e)",
             std::abs(kappa * theta / kPi - 1.0));
}

double WedgeDomain::angle(double x, double y) {
  double a = std::atan2(y, x);
  if (a < 0.0) a += kTwoPi;
  return a;
}

bool WedgeDomain::contains(double x, double y) const {
  if (x == 0.0 && y == 0.0) return false;
  return angle(x, y) <= theta;
}

double WedgeDomain::stream(double x, double y) const {
  if (!contains(x, y)) return 0.0;
  // Integer powers anchor exactness checks; evaluate them in Cartesian form.
  if (kappa == 1.0) return y;
  if (kappa == 2.0) return 2.0 * x * y;
  const double r = std::hypot(x, y);
  return std::pow(r, kappa) * std::sin(kappa * angle(x, y));
}

GridField wedge_mask(const WedgeDomain& dom, const CornerPatch& patch) {
  dom.validate();
  GridField m(patch.grid(), 0);
  for (int j = 0; j < patch.n; ++j)
    for (int i = 0; i < patch.n; ++i)
      m.at(0, i, j) = dom.contains(patch.x(i), patch.y(j)) ? 1.0 : 0.0;
  return m;
}

GridField wedge_stream(const WedgeDomain& dom, const CornerPatch& patch) {
  dom.validate();
  GridField w(patch.grid(), 0);
  for (int j = 0; j < patch.n; ++j)
    for (int i = 0; i < patch.n; ++i) w.at(0, i, j) = dom.stream(patch.x(i), patch.y(j));
  return w;
}

StreamVelocity velocity_from_stream(const CornerPatch& patch, const GridField& w,
                                    const GridField& mask) {
  SS_REQUIRE(w.rank() == 0 && mask.rank() == 0 && w.grid() == mask.grid(),
             "velocity_from_stream: stream and mask must be rank 0 on one grid");
  const Grid2& g = w.grid();
  const double h = patch.h();
  StreamVelocity sv;
  sv.mask = erode_cross(mask, 1);
  sv.u = GridField(g, 1);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      if (sv.mask.at(0, i, j) == 0.0) continue;
      sv.u.at(0, i, j) = -ddy(w, 0, i, j, h);
      sv.u.at(1, i, j) = ddx(w, 0, i, j, h);
    }
  return sv;
}

PressureRecovery pressure_from_momentum(const CornerPatch& patch, const GridField& u,
                                        const GridField& umask) {
  const Grid2& g = u.grid();
  const double h = patch.h();
  const int nx = g.nx, ny = g.ny;

  // Momentum load lap(u) on the doubly eroded mask.
  GridField lmask = erode_cross(umask, 1);
  GridField lap(g, 1);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      if (lmask.at(0, i, j) == 0.0) continue;
      for (int c = 0; c < 2; ++c)
        lap.at(c, i, j) = (u.at(c, i + 1, j) + u.at(c, i - 1, j) + u.at(c, i, j + 1) +
                           u.at(c, i, j - 1) - 4.0 * u.at(c, i, j)) /
                          (h * h);
    }

  // Edge targets t_e = h * mean load along the edge; normal equations give a
  // graph Laplacian with natural boundary, solved by plain CG (the right side
  // telescopes to zero, so the singular direction never enters).
  auto idx = [nx](int i, int j) { return j * nx + i; };
  const int nn = nx * ny;
  std::vector<double> rhs(nn, 0.0), deg(nn, 0.0);
  auto add_edge = [&](int ia, int ja, int ib, int jb, int comp) {
    const double t = 0.5 * h * (lap.at(comp, ia, ja) + lap.at(comp, ib, jb));
    rhs[idx(ib, jb)] += t;
    rhs[idx(ia, ja)] -= t;
    deg[idx(ia, ja)] += 1.0;
    deg[idx(ib, jb)] += 1.0;
  };
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      if (lmask.at(0, i, j) == 0.0) continue;
      if (i + 1 < nx && lmask.at(0, i + 1, j) != 0.0) add_edge(i, j, i + 1, j, 0);
      if (j + 1 < ny && lmask.at(0, i, j + 1) != 0.0) add_edge(i, j, i, j + 1, 1);
    }

  auto apply = [&](const std::vector<double>& p, std::vector<double>& out) {
    std::fill(out.begin(), out.end(), 0.0);
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        if (lmask.at(0, i, j) == 0.0) continue;
        const int a = idx(i, j);
        if (i + 1 < nx && lmask.at(0, i + 1, j) != 0.0) {
          const double d = p[idx(i + 1, j)] - p[a];
          out[a] -= d;
          out[idx(i + 1, j)] += d;
        }
        if (j + 1 < ny && lmask.at(0, i, j + 1) != 0.0) {
          const double d = p[idx(i, j + 1)] - p[a];
          out[a] -= d;
          out[idx(i, j + 1)] += d;
        }
      }
  };

  PressureRecovery pr;
  std::vector<double> x(nn, 0.0), r = rhs, z(nn, 0.0), p(nn, 0.0), Ap(nn, 0.0);
  double rz = 0.0, rhs2 = 0.0;
  for (int a = 0; a < nn; ++a) {
    if (deg[a] > 0.0) z[a] = r[a] / deg[a];
    rz += r[a] * z[a];
    rhs2 += r[a] * r[a];
  }
  p = z;
  const double stop = std::max(rhs2, kTiny) * 1e-24;
  const int cap = 20 * (nx + ny);
  int it = 0;
  for (; it < cap && rz > 0.0; ++it) {
    apply(p, Ap);
    double pAp = 0.0;
    for (int a = 0; a < nn; ++a) pAp += p[a] * Ap[a];
    if (pAp <= 0.0) break;
    const double alpha = rz / pAp;
    double r2 = 0.0;
    for (int a = 0; a < nn; ++a) {
      x[a] += alpha * p[a];
      r[a] -= alpha * Ap[a];
      r2 += r[a] * r[a];
    }
    if (r2 <= stop) break;
    double rznew = 0.0;
    for (int a = 0; a < nn; ++a) {
      z[a] = deg[a] > 0.0 ? r[a] / deg[a] : 0.0;
      rznew += r[a] * z[a];
    }
    for (int a = 0; a < nn; ++a) p[a] = z[a] + (rznew / rz) * p[a];
    rz = rznew;
  }
  pr.cg_iterations = it;

  pr.pi = GridField(g, 0);
  double mean = 0.0;
  int cnt = 0;
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i)
      if (lmask.at(0, i, j) != 0.0) {
        mean += x[idx(i, j)];
        ++cnt;
      }
  mean /= std::max(cnt, 1);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i)
      if (lmask.at(0, i, j) != 0.0) pr.pi.at(0, i, j) = x[idx(i, j)] - mean;

  // Defect lap(u) - grad(pi), scaled by the second-gradient magnitude of u
  // (the natural size of the terms that were differentiated once more).
  pr.mask = erode_cross(lmask, 1);
  Derived d = derive_fields(patch, u, umask);
  double def2 = 0.0, scale2 = 0.0;
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      if (pr.mask.at(0, i, j) == 0.0) continue;
      def2 += sq(lap.at(0, i, j) - ddx(pr.pi, 0, i, j, h));
      def2 += sq(lap.at(1, i, j) - ddy(pr.pi, 0, i, j, h));
      if (d.hmask.at(0, i, j) != 0.0) scale2 += d.hessmag2.at(0, i, j);
    }
  pr.momentum_residual = std::sqrt(def2) / std::max(std::sqrt(scale2), kTiny);
  return pr;
}

double measure_exponent(const CornerPatch& patch, const GridField& u, const GridField& umask,
                        const std::vector<double>& radii) {
  const int m = static_cast<int>(radii.size());
  SS_REQUIRE(m >= 4, "measure_exponent: need at least four radii, got %d", m);
  const double h = patch.h();
  const double rho = radii[1] / radii[0];
  for (int k = 0; k + 1 < m; ++k) {
    SS_REQUIRE(radii[k] > 0.0 && radii[k + 1] > radii[k],
               "measure_exponent: radii must increase");
    SS_REQUIRE(std::abs(radii[k + 1] / radii[k] / rho - 1.0) <= 1e-2,
               "measure_exponent: radii must be geometric");
  }
  SS_REQUIRE(radii[0] >= 4.0 * h, "measure_exponent: smallest radius %.3g under four spacings",
             radii[0]);
  SS_REQUIRE(radii[m - 1] <= patch.half_width - 2.0 * h,
             "measure_exponent: largest radius leaves the sampling window");

  Derived d = derive_fields(patch, u, umask);
  std::vector<double> sup(m, 0.0);
  for (int j = 0; j < patch.n; ++j)
    for (int i = 0; i < patch.n; ++i) {
      if (d.gmask.at(0, i, j) == 0.0) continue;
      const double r = std::hypot(patch.x(i), patch.y(j));
      for (int k = 0; k < m; ++k)
        if (std::abs(r - radii[k]) <= 0.5 * h)
          sup[k] = std::max(sup[k], d.gradmag.at(0, i, j));
    }
  for (int k = 0; k < m; ++k)
    SS_REQUIRE(sup[k] > 0.0, "measure_exponent: ring %d has no valid nodes", k);
  return fit_loglog(radii, sup).slope;
}

AnnulusScan second_gradient_scan(const CornerPatch& patch, const GridField& u,
                                 const GridField& umask, double p, double r_lo, double r_hi) {
  SS_REQUIRE(p >= 1.0, "annulus scan: p must be >= 1, got %g", p);
  SS_REQUIRE(r_lo >= 3.0 * patch.h() && r_hi <= patch.half_width && r_hi > 2.0 * r_lo,
             "annulus scan: radius band [%g, %g] unusable at spacing %g", r_lo, r_hi, patch.h());
  std::vector<double> edges{r_lo};
  while (edges.back() * 2.0 <= r_hi * (1.0 + 1e-12)) edges.push_back(edges.back() * 2.0);
  const int m = static_cast<int>(edges.size()) - 1;
  SS_REQUIRE(m >= 3, "annulus scan: need at least three dyadic annuli in [%g, %g]", r_lo, r_hi);

  Derived d = derive_fields(patch, u, umask);

  // Opening angle of the sampled region, recovered from the mask itself so
  // the scan stays agnostic of how the field was produced.
  std::vector<double> acc(m, 0.0);
  std::vector<int> cnt(m, 0);
  double supgrad = 0.0;
  for (int j = 0; j < patch.n; ++j)
    for (int i = 0; i < patch.n; ++i) {
      if (d.gmask.at(0, i, j) != 0.0) supgrad = std::max(supgrad, d.gradmag.at(0, i, j));
      if (d.hmask.at(0, i, j) == 0.0) continue;
      const double r = std::hypot(patch.x(i), patch.y(j));
      if (r < edges.front() || r >= edges.back()) continue;
      int k = 0;
      while (r >= edges[k + 1]) ++k;
      acc[k] += std::pow(d.hessmag2.at(0, i, j), 0.5 * p);
      ++cnt[k];
    }

  AnnulusScan scan;
  for (int k = 0; k < m; ++k) {
    SS_REQUIRE(cnt[k] > 0, "annulus scan: annulus %d has no valid nodes", k);
    const double mean = acc[k] / cnt[k];
    scan.peak_density = std::max(scan.peak_density, std::pow(mean, 1.0 / p));
    // Count-based area estimate x ideal/count normalization collapses to
    // mean x ideal area; the ideal area uses the full dyadic ring, so edge
    // exclusion strips do not tilt the slope.
    const double ideal = 0.5 * (sq(edges[k + 1]) - sq(edges[k]));
    scan.radius.push_back(std::sqrt(edges[k] * edges[k + 1]));
    scan.mass.push_back(mean * ideal);
  }

  const double floor = 1e-8 * supgrad / r_lo;
  scan.degenerate = scan.peak_density <= floor;
  if (!scan.degenerate) scan.slope = fit_loglog(scan.radius, scan.mass).slope;
  return scan;
}

TangentialIdentity tangential_identity_check(const std::function<double(Vec2)>& w,
                                             const Chart& chart, int samples) {
  SS_REQUIRE(samples >= 8, "tangential identity: need at least 8 samples, got %d", samples);
  SS_REQUIRE(chart.half_width > 0.0, "tangential identity: chart window is empty");
  const double W = chart.half_width;
  const double h = 1e-4 * std::max(1.0, W);
  const Mat2 Q = chart.rotation();
  const Vec2 e1 = Q.apply(Vec2{1.0, 0.0});
  const Vec2 e2 = Q.apply(Vec2{0.0, 1.0});

  TangentialIdentity out;
  out.total = samples;
  double res = 0.0, den_scale = 0.0, quot = 0.0;
  for (int k = 0; k < samples; ++k) {
    const double x = -W + (k + 0.5) * (2.0 * W / samples);
    const Vec2 pb = chart.to_world(Vec2{x, chart.profile.eval(x)});
    const double dw1 = (w(pb + e1 * h) - w(pb - e1 * h)) / (2.0 * h);
    const double dw2 = (w(pb + e2 * h) - w(pb - e2 * h)) / (2.0 * h);
    const double slope = chart.profile.deriv(x);
    res = std::max(res, std::abs(dw1 + dw2 * slope));
    den_scale = std::max(den_scale, std::abs(dw2));
    if (dw2 <= 1e-6) {
      ++out.skipped;
      continue;
    }
    quot = std::max(quot, std::abs(slope - (-dw1 / dw2)));
  }
  if (out.skipped == out.total)
    fail(strf("tangential identity: vertical derivative under the positivity floor at all %d "
              "samples",
              out.total));
  out.residual = res / std::max(den_scale, kTiny);
  out.quotient_error = quot;
  return out;
}

BiharmonicReport biharmonic_check(const WedgeDomain& dom, const CornerPatch& patch,
                                  const GridField& w, double r_lo, double r_hi) {
  SS_REQUIRE(w.rank() == 0, "biharmonic check: stream must be rank 0");
  const double h = patch.h();
  GridField mask = wedge_mask(dom, patch);
  BiharmonicReport rep;

  for (int j = 0; j < patch.n; ++j)
    for (int i = 0; i < patch.n; ++i) {
      if (mask.at(0, i, j) == 0.0) continue;
      const double px = patch.x(i), py = patch.y(j);
      const double r = std::hypot(px, py);
      const double a = WedgeDomain::angle(px, py);
      const double dedge = r * std::sin(std::min({a, dom.theta - a, 0.5 * kPi}));

      bool lap_ok = on(mask, i + 1, j) && on(mask, i - 1, j) && on(mask, i, j + 1) &&
                    on(mask, i, j - 1);
      if (lap_ok && dedge <= 2.0 * h) {
        const double lap = (w.at(0, i + 1, j) + w.at(0, i - 1, j) + w.at(0, i, j + 1) +
                            w.at(0, i, j - 1) - 4.0 * w.at(0, i, j)) /
                           (h * h);
        rep.edge_laplace = std::max(rep.edge_laplace, std::abs(lap));
      }

      if (r < r_lo || r > r_hi) continue;
      bool bi_ok = lap_ok;
      for (int d = 0; d < 4 && bi_ok; ++d) {
        static const int oi[4] = {1, -1, 1, -1}, oj[4] = {1, 1, -1, -1};
        bi_ok = on(mask, i + oi[d], j + oj[d]);
      }
      bi_ok = bi_ok && on(mask, i + 2, j) && on(mask, i - 2, j) && on(mask, i, j + 2) &&
              on(mask, i, j - 2);
      if (!bi_ok) continue;
      const double bi =
          (20.0 * w.at(0, i, j) -
           8.0 * (w.at(0, i + 1, j) + w.at(0, i - 1, j) + w.at(0, i, j + 1) + w.at(0, i, j - 1)) +
           2.0 * (w.at(0, i + 1, j + 1) + w.at(0, i - 1, j + 1) + w.at(0, i + 1, j - 1) +
                  w.at(0, i - 1, j - 1)) +
           w.at(0, i + 2, j) + w.at(0, i - 2, j) + w.at(0, i, j + 2) + w.at(0, i, j - 2)) /
          (h * h * h * h);
      rep.interior = std::max(rep.interior, std::abs(bi));
    }

  const int ns = 64;
  for (int k = 0; k < ns; ++k) {
    const double r = (k + 0.5) * (0.9 * patch.half_width / ns);
    rep.edge_value = std::max(rep.edge_value, std::abs(dom.stream(r, 0.0)));
    const double ex = r * std::cos(dom.theta), ey = r * std::sin(dom.theta);
    rep.edge_value = std::max(rep.edge_value, std::abs(dom.stream(ex, ey)));
  }
  return rep;
}

std::vector<ThresholdRow> threshold_study(const std::vector<double>& thetas,
                                          const std::vector<double>& ps,
                                          const CornerPatch& patch) {
  SS_REQUIRE(!thetas.empty() && !ps.empty(), "threshold study: empty parameter grid");
  const double h = patch.h();
  const double L = patch.half_width;

  std::vector<double> radii;
  {
    double r = std::max(0.06 * L, 5.0 * h);
    for (int k = 0; k < 5; ++k, r *= 1.65) radii.push_back(r);
    SS_REQUIRE(radii.back() <= L - 2.0 * h,
               "threshold study: patch too coarse for the radius schedule");
  }
  const double r_lo = std::max(0.05 * L, 4.0 * h), r_hi = 0.85 * L;

  std::vector<ThresholdRow> rows;
  for (double theta : thetas) {
    const WedgeDomain dom = WedgeDomain::opening(theta);
    const GridField mask = wedge_mask(dom, patch);
    const GridField w = wedge_stream(dom, patch);
    const StreamVelocity sv = velocity_from_stream(patch, w, mask);
    const double expo = measure_exponent(patch, sv.u, sv.mask, radii);
    for (double p : ps) {
      AnnulusScan scan = second_gradient_scan(patch, sv.u, sv.mask, p, r_lo, r_hi);
      ThresholdRow row;
      row.theta = theta;
      row.p = p;
      row.measured_exponent = expo;
      row.analytic_exponent = dom.kappa - 2.0;
      row.sigma = scan.slope;
      row.sigma_analytic = 2.0 - p * (3.0 - dom.kappa);
      row.analytic_bounded = row.sigma_analytic > 0.0;
      if (scan.degenerate)
        row.verdict = "bounded";
      else if (scan.slope > 0.05)
        row.verdict = "bounded";
      else if (scan.slope < -0.05)
        row.verdict = "unbounded";
      else
        row.verdict = "marginal";
      rows.push_back(row);
    }
  }
  return rows;
}

}  // namespace sharpness
}  // namespace slipstokes
