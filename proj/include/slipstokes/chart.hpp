#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "slipstokes/common.hpp"

namespace slipstokes {

/// Boundary height profile. Closed-form kinds carry exact derivatives and
/// exact Lipschitz constants; sampled profiles interpolate uniform samples
/// with a Catmull-Rom cubic (zero-extended outside the declared support) and
/// certify their Lipschitz constant from the piecewise-quadratic derivative.
class Profile {
 public:
  enum class Kind { Zero, Affine, Sine, SineBump, Samples };

  Profile() { certify(); }

  static Profile zero();
  /// slope * x; unbounded support (test fixture flavor).
  static Profile affine(double slope);
  /// amplitude * sin(2*pi*x/wavelength + phase); periodic, unbounded support.
  static Profile sine(double amplitude, double wavelength, double phase);
  /// amplitude * sin(2*pi*x/wavelength) * bump(x/support); compact support.
  static Profile sine_bump(double amplitude, double wavelength, double support);
  /// Uniform samples on [-support, support]; endpoints must vanish.
  static Profile samples(std::vector<double> values, double support);

  Kind kind() const { return kind_; }
  double eval(double x) const;
  double deriv(double x) const;
  /// Certified Lipschitz constant K = sup |phi'|.
  double lipschitz() const { return lip_; }
  /// Half-width of the support; 0 means unbounded (affine) or periodic (sine).
  double support() const { return support_; }
  bool is_periodic() const { return kind_ == Kind::Sine; }
  double wavelength() const { return wl_; }

  nlohmann::json to_json() const;
  static Profile from_json(const nlohmann::json& j);

 private:
  void certify();

  Kind kind_ = Kind::Zero;
  double slope_ = 0.0;
  double amp_ = 0.0, wl_ = 1.0, phase_ = 0.0;
  double support_ = 0.0;
  std::vector<double> vals_;
  double lip_ = 0.0;
};

/// Smooth bump eta on (-1,1) with eta(0) = 1: exp(1 - 1/(1-t^2)).
double bump01(double t);
/// Derivative of bump01.
double bump01_deriv(double t);

/// Local graph frame attached to the world by a rotation and an anchor.
/// Local coordinates z = (z1, z2); the boundary piece is the graph
/// z2 = phi(z1) for |z1| <= half_width; world point = anchor + Q(angle) z.
struct Chart {
  std::string name;
  Vec2 anchor{0.0, 0.0};
  double angle = 0.0;
  double half_width = 0.0;
  double collar = 0.0;
  Profile profile;

  Mat2 rotation() const { return Mat2::rotation(angle); }
  Vec2 to_world(Vec2 z) const { return anchor + rotation().apply(z); }
  Vec2 to_local(Vec2 x) const { return rotation().transpose().apply(x - anchor); }

  nlohmann::json to_json() const;
  static Chart from_json(const nlohmann::json& j);
};

/// Periodic embedding box with a global boundary graph y = boundary(x),
/// boundary charts covering the graph, and an optional interior patch.
struct Atlas {
  double box_lx = kTwoPi;
  double box_ly = kTwoPi;
  Profile boundary;
  std::vector<Chart> charts;
  bool has_interior = false;
  /// Interior patch covers { y >= boundary(x) + interior_lo }.
  double interior_lo = 0.0;
  int overlap_bound = 4;

  nlohmann::json to_json() const;
  static Atlas from_json(const nlohmann::json& j);

  /// Charts must agree with the global graph on their windows and jointly
  /// cover the boundary (with the interior patch covering the rest).
  void validate() const;
};

}  // namespace slipstokes
