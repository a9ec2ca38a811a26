#pragma once

#include <array>
#include <functional>
#include <vector>

#include "slipstokes/common.hpp"

namespace slipstokes {
namespace numeric {

/// 8-point Gauss-Legendre nodes/weights on [-1, 1].
inline constexpr std::array<double, 8> kGL8Nodes = {
    -0.9602898564975363, -0.7966664774136267, -0.5255324099163290, -0.1834346424956498,
    0.1834346424956498,  0.5255324099163290,  0.7966664774136267,  0.9602898564975363};
inline constexpr std::array<double, 8> kGL8Weights = {
    0.1012285362903763, 0.2223810344533745, 0.3137066458778873, 0.3626837833783620,
    0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763};

/// Composite 8-point Gauss-Legendre quadrature with `panels` uniform panels.
template <class F>
double composite_gl(F&& f, double a, double b, int panels) {
  SS_REQUIRE(panels >= 1, "composite_gl: need at least one panel");
  const double h = (b - a) / panels;
  double acc = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double c = a + (p + 0.5) * h;
    double panel = 0.0;
    for (int k = 0; k < 8; ++k) panel += kGL8Weights[k] * f(c + 0.5 * h * kGL8Nodes[k]);
    acc += 0.5 * h * panel;
  }
  return acc;
}

/// Adaptive Simpson quadrature (used for one-off oracle integrals).
double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol);

/// Fornberg finite-difference weights: for derivative order m at point x0,
/// given stencil nodes x[]. Returns one weight per node.
std::vector<double> fd_weights(double x0, const std::vector<double>& x, int m);

/// Cumulative integral I[j] = int_0^{z_j} f, fourth-order (piecewise cubic),
/// on a uniform grid with spacing dz. I[0] = 0.
std::vector<double> cumint4(const std::vector<double>& f, double dz);

/// Downward cumulative integral D[j] = int_{z_j}^{z_top} f (top node last).
std::vector<double> cumint4_from_top(const std::vector<double>& f, double dz);

/// Sixth-order cumulative integral (piecewise degree-6 interpolation on a
/// 7-node sliding stencil, clamped at the ends). I[0] = 0.
std::vector<double> cumint6(const std::vector<double>& f, double dz);

/// Downward variant of cumint6: D[j] = int_{z_j}^{z_top} f.
std::vector<double> cumint6_from_top(const std::vector<double>& f, double dz);

}  // namespace numeric
}  // namespace slipstokes
