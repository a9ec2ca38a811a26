#include "slipstokes/numeric.hpp"

#include <cmath>

namespace slipstokes {
namespace numeric {

namespace {
double simpson(double a, double fa, double b, double fb, double fm) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double adapt(const std::function<double(double)>& f, double a, double fa, double b, double fb,
             double fm, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = simpson(a, fa, m, fm, flm);
  const double right = simpson(m, fm, b, fb, frm);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return adapt(f, a, fa, m, fm, flm, left, 0.5 * tol, depth - 1) +
         adapt(f, m, fm, b, fb, frm, right, 0.5 * tol, depth - 1);
}
}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol) {
  SS_REQUIRE(b >= a, "adaptive_simpson: inverted interval");
  if (a == b) return 0.0;
  const double m = 0.5 * (a + b);
  const double fa = f(a), fb = f(b), fm = f(m);
  const double whole = simpson(a, fa, b, fb, fm);
  return adapt(f, a, fa, b, fb, fm, whole, tol, 48);
}

std::vector<double> fd_weights(double x0, const std::vector<double>& x, int m) {
  // Fornberg (1988) recursive algorithm.
  const int n = static_cast<int>(x.size());
  SS_REQUIRE(n >= m + 1, "fd_weights: %d nodes cannot give derivative order %d", n, m);
  std::vector<double> c(static_cast<size_t>(n) * (m + 1), 0.0);
  auto C = [&](int i, int j) -> double& { return c[static_cast<size_t>(i) * (m + 1) + j]; };
  double c1 = 1.0;
  C(0, 0) = 1.0;
  for (int i = 1; i < n; ++i) {
    double c2 = 1.0;
    const int mn = std::min(i, m);
    for (int j = 0; j < i; ++j) {
      const double c3 = x[i] - x[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k)
          C(i, k) = c1 * (k * C(i - 1, k - 1) - (x[i - 1] - x0) * C(i - 1, k)) / c2;
        C(i, 0) = -c1 * (x[i - 1] - x0) * C(i - 1, 0) / c2;
      }
      for (int k = mn; k >= 1; --k)
        C(j, k) = ((x[i] - x0) * C(j, k) - k * C(j, k - 1)) / c3;
      C(j, 0) = (x[i] - x0) * C(j, 0) / c3;
    }
    c1 = c2;
  }
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) w[i] = C(i, m);
  return w;
}

namespace {
// Integral over [x_{j}, x_{j+1}] of the cubic through samples at offsets
// base..base+3 (relative to j), expressed as weights on those four samples.
// Stencil choice: centered where possible, shifted at the ends.
void cubic_panel_weights(int shift, double w[4]) {
  // shift = -1: nodes {j-1, j, j+1, j+2}; integrate on [j, j+1]:
  //   (-1, 13, 13, -1)/24
  // shift = 0 (left end): nodes {j, j+1, j+2, j+3}: (9, 19, -5, 1)/24
  // shift = -2 (right end): nodes {j-2, j-1, j, j+1}: (1, -5, 19, 9)/24
  if (shift == 0) {
    w[0] = 9.0 / 24.0; w[1] = 19.0 / 24.0; w[2] = -5.0 / 24.0; w[3] = 1.0 / 24.0;
  } else if (shift == -1) {
    w[0] = -1.0 / 24.0; w[1] = 13.0 / 24.0; w[2] = 13.0 / 24.0; w[3] = -1.0 / 24.0;
  } else {
    w[0] = 1.0 / 24.0; w[1] = -5.0 / 24.0; w[2] = 19.0 / 24.0; w[3] = 9.0 / 24.0;
  }
}
}  // namespace

std::vector<double> cumint4(const std::vector<double>& f, double dz) {
  const int n = static_cast<int>(f.size());
  SS_REQUIRE(n >= 4, "cumint4: need at least 4 samples");
  std::vector<double> I(n, 0.0);
  double w[4];
  for (int j = 0; j + 1 < n; ++j) {
    int shift;
    if (j == 0) shift = 0;
    else if (j + 2 >= n) shift = -2;
    else shift = -1;
    cubic_panel_weights(shift, w);
    const int base = j + shift;
    double seg = 0.0;
    for (int k = 0; k < 4; ++k) seg += w[k] * f[base + k];
    I[j + 1] = I[j] + dz * seg;
  }
  return I;
}

std::vector<double> cumint4_from_top(const std::vector<double>& f, double dz) {
  std::vector<double> I = cumint4(f, dz);
  const double total = I.back();
  for (double& v : I) v = total - v;
  return I;
}

namespace {
// Weights on a 7-node stencil for the integral over one unit panel.
// Pattern p means the panel is [p, p+1] in stencil-local coordinates,
// so nodes sit at 0..6 and the integrand is the degree-6 interpolant.
// Computed once per pattern with GL8 (exact for degree 6).
const double* septic_panel_weights(int p) {
  static double table[6][7];
  static bool ready = false;
  if (!ready) {
    for (int pat = 0; pat < 6; ++pat) {
      for (int m = 0; m < 7; ++m) {
        auto basis = [&](double t) {
          double v = 1.0;
          for (int r = 0; r < 7; ++r) {
            if (r == m) continue;
            v *= (t - r) / double(m - r);
          }
          return v;
        };
        table[pat][m] = composite_gl(basis, double(pat), double(pat + 1), 2);
      }
    }
    ready = true;
  }
  SS_REQUIRE(p >= 0 && p < 6, "septic_panel_weights: bad pattern %d", p);
  return table[p];
}
}  // namespace

std::vector<double> cumint6(const std::vector<double>& f, double dz) {
  const int n = static_cast<int>(f.size());
  SS_REQUIRE(n >= 7, "cumint6: need at least 7 samples, got %d", n);
  std::vector<double> I(n, 0.0);
  for (int j = 0; j + 1 < n; ++j) {
    int s = j - 3;
    if (s < 0) s = 0;
    if (s > n - 7) s = n - 7;
    const double* w = septic_panel_weights(j - s);
    double seg = 0.0;
    for (int m = 0; m < 7; ++m) seg += w[m] * f[s + m];
    I[j + 1] = I[j] + dz * seg;
  }
  return I;
}

std::vector<double> cumint6_from_top(const std::vector<double>& f, double dz) {
  std::vector<double> I = cumint6(f, dz);
  const double total = I.back();
  for (double& v : I) v = total - v;
  return I;
}

}  // namespace numeric
}  // namespace slipstokes
