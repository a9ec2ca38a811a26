#include "slipstokes/chart.hpp"

#include <algorithm>
#include <cmath>

namespace slipstokes {

double bump01(double t) {
  const double s = 1.0 - t * t;
  if (s <= 0.0) return 0.0;
  return std::exp(1.0 - 1.0 / s);
}

double bump01_deriv(double t) {
  const double s = 1.0 - t * t;
  if (s <= 0.0) return 0.0;
  return bump01(t) * (-2.0 * t / (s * s));
}

Profile Profile::zero() { return Profile(); }

Profile Profile::affine(double slope) {
  Profile p;
  p.kind_ = Kind::Affine;
  p.slope_ = slope;
  p.certify();
  return p;
}

Profile Profile::sine(double amplitude, double wavelength, double phase) {
  SS_REQUIRE(wavelength > 0.0, "Profile::sine: wavelength must be positive");
  Profile p;
  p.kind_ = Kind::Sine;
  p.amp_ = amplitude;
  p.wl_ = wavelength;
  p.phase_ = phase;
  p.certify();
  return p;
}

Profile Profile::sine_bump(double amplitude, double wavelength, double support) {
  SS_REQUIRE(wavelength > 0.0 && support > 0.0,
             "Profile::sine_bump: wavelength and support must be positive");
  Profile p;
  p.kind_ = Kind::SineBump;
  p.amp_ = amplitude;
  p.wl_ = wavelength;
  p.support_ = support;
  p.certify();
  return p;
}

Profile Profile::samples(std::vector<double> values, double support) {
  SS_REQUIRE(values.size() >= 4, "Profile::samples: need at least 4 samples");
  SS_REQUIRE(support > 0.0, "Profile::samples: support must be positive");
  SS_REQUIRE(values.front() == 0.0 && values.back() == 0.0,
             "Profile::samples: profile exceeds declared support "
             "(endpoint samples must vanish, got %g and %g)",
             values.front(), values.back());
  Profile p;
  p.kind_ = Kind::Samples;
  p.vals_ = std::move(values);
  p.support_ = support;
  p.certify();
  return p;
}

namespace {
// Catmull-Rom basis on the unit interval for samples (v0, v1, v2, v3)
// bracketing [v1, v2].
inline double cr_eval(double v0, double v1, double v2, double v3, double t) {
  const double t2 = t * t, t3 = t2 * t;
  return 0.5 * ((2.0 * v1) + (-v0 + v2) * t + (2.0 * v0 - 5.0 * v1 + 4.0 * v2 - v3) * t2 +
                (-v0 + 3.0 * v1 - 3.0 * v2 + v3) * t3);
}
inline double cr_deriv(double v0, double v1, double v2, double v3, double t) {
  const double t2 = t * t;
  return 0.5 * ((-v0 + v2) + 2.0 * (2.0 * v0 - 5.0 * v1 + 4.0 * v2 - v3) * t +
                3.0 * (-v0 + 3.0 * v1 - 3.0 * v2 + v3) * t2);
}
}  // namespace

double Profile::eval(double x) const {
  switch (kind_) {
    case Kind::Zero:
      return 0.0;
    case Kind::Affine:
      return slope_ * x;
    case Kind::Sine:
      return amp_ * std::sin(kTwoPi * x / wl_ + phase_);
    case Kind::SineBump:
      return amp_ * std::sin(kTwoPi * x / wl_) * bump01(x / support_);
    case Kind::Samples: {
      const int n = static_cast<int>(vals_.size());
      const double hs = 2.0 * support_ / (n - 1);
      const double u = (x + support_) / hs;
      if (u <= 0.0 || u >= n - 1) return 0.0;
      const int k = static_cast<int>(std::floor(u));
      const double t = u - k;
      auto v = [&](int i) { return (i < 0 || i >= n) ? 0.0 : vals_[i]; };
      return cr_eval(v(k - 1), v(k), v(k + 1), v(k + 2), t);
    }
  }
  return 0.0;
}

double Profile::deriv(double x) const {
  switch (kind_) {
    case Kind::Zero:
      return 0.0;
    case Kind::Affine:
      return slope_;
    case Kind::Sine:
      return amp_ * (kTwoPi / wl_) * std::cos(kTwoPi * x / wl_ + phase_);
    case Kind::SineBump: {
      const double w = kTwoPi / wl_;
      return amp_ * (w * std::cos(w * x) * bump01(x / support_) +
                     std::sin(w * x) * bump01_deriv(x / support_) / support_);
    }
    case Kind::Samples: {
      const int n = static_cast<int>(vals_.size());
      const double hs = 2.0 * support_ / (n - 1);
      const double u = (x + support_) / hs;
      if (u <= 0.0 || u >= n - 1) return 0.0;
      const int k = static_cast<int>(std::floor(u));
      const double t = u - k;
      auto v = [&](int i) { return (i < 0 || i >= n) ? 0.0 : vals_[i]; };
      return cr_deriv(v(k - 1), v(k), v(k + 1), v(k + 2), t) / hs;
    }
  }
  return 0.0;
}

void Profile::certify() {
  switch (kind_) {
    case Kind::Zero:
      lip_ = 0.0;
      break;
    case Kind::Affine:
      lip_ = std::abs(slope_);
      break;
    case Kind::Sine:
      lip_ = std::abs(amp_) * kTwoPi / wl_;
      break;
    case Kind::SineBump: {
      // No closed-form extremum; dense scan with local refinement.
      double best = 0.0;
      const int m = 8192;
      double xb = 0.0;
      for (int i = 0; i <= m; ++i) {
        const double x = -support_ + 2.0 * support_ * i / m;
        const double d = std::abs(deriv(x));
        if (d > best) {
          best = d;
          xb = x;
        }
      }
      const double h = 2.0 * support_ / m;
      for (int r = 0; r < 40; ++r) {
        const double step = h * std::pow(0.7, r);
        for (double x : {xb - step, xb + step}) {
          const double d = std::abs(deriv(x));
          if (d > best) {
            best = d;
            xb = x;
          }
        }
      }
      lip_ = best * (1.0 + 1e-9);
      break;
    }
    case Kind::Samples: {
      // Derivative is piecewise quadratic; maximize each piece exactly.
      const int n = static_cast<int>(vals_.size());
      const double hs = 2.0 * support_ / (n - 1);
      auto v = [&](int i) { return (i < 0 || i >= n) ? 0.0 : vals_[i]; };
      double best = 0.0;
      for (int k = -1; k < n; ++k) {
        const double v0 = v(k - 1), v1 = v(k), v2 = v(k + 1), v3 = v(k + 2);
        // d/dt = 0.5*(c1 + 2 c2 t + 3 c3 t^2)
        const double c1 = -v0 + v2;
        const double c2 = 2.0 * v0 - 5.0 * v1 + 4.0 * v2 - v3;
        const double c3 = -v0 + 3.0 * v1 - 3.0 * v2 + v3;
        auto dval = [&](double t) { return std::abs(0.5 * (c1 + 2.0 * c2 * t + 3.0 * c3 * t * t)); };
        best = std::max({best, dval(0.0), dval(1.0)});
        if (std::abs(c3) > 1e-300) {
          const double tc = -c2 / (3.0 * c3);
          if (tc > 0.0 && tc < 1.0) best = std::max(best, dval(tc));
        }
      }
      lip_ = best / hs;
      break;
    }
  }
}

namespace {
const char* kind_name(Profile::Kind k) {
  switch (k) {
    case Profile::Kind::Zero: return "zero";
    case Profile::Kind::Affine: return "affine";
    case Profile::Kind::Sine: return "sine";
    case Profile::Kind::SineBump: return "sine_bump";
    case Profile::Kind::Samples: return "samples";
  }
  return "?";
}
}  // namespace

nlohmann::json Profile::to_json() const {
  nlohmann::json j;
  j["kind"] = kind_name(kind_);
  switch (kind_) {
    case Kind::Zero:
      break;
    case Kind::Affine:
      j["slope"] = slope_;
      break;
    case Kind::Sine:
      j["amplitude"] = amp_;
      j["wavelength"] = wl_;
      j["phase"] = phase_;
      break;
    case Kind::SineBump:
      j["amplitude"] = amp_;
      j["wavelength"] = wl_;
      j["support"] = support_;
      break;
    case Kind::Samples:
      j["values"] = vals_;
      j["support"] = support_;
      break;
  }
  return j;
}

Profile Profile::from_json(const nlohmann::json& j) {
  SS_REQUIRE(j.contains("kind"), "Profile: missing \"kind\"");
  const std::string kind = j["kind"];
  if (kind == "zero") return zero();
  if (kind == "affine") return affine(j.at("slope").get<double>());
  if (kind == "sine")
    return sine(j.at("amplitude").get<double>(), j.at("wavelength").get<double>(),
                j.value("phase", 0.0));
  if (kind == "sine_bump")
    return sine_bump(j.at("amplitude").get<double>(), j.at("wavelength").get<double>(),
                     j.at("support").get<double>());
  if (kind == "samples")
    return samples(j.at("values").get<std::vector<double>>(), j.at("support").get<double>());
  fail(strf("Profile: unknown kind \"%s\"", kind.c_str()));
}

nlohmann::json Chart::to_json() const {
  nlohmann::json j;
  j["name"] = name;
  j["anchor"] = {anchor.x, anchor.y};
  j["angle"] = angle;
  j["half_width"] = half_width;
  j["collar"] = collar;
  j["profile"] = profile.to_json();
  return j;
}

Chart Chart::from_json(const nlohmann::json& j) {
  Chart c;
  c.name = j.value("name", "");
  SS_REQUIRE(j.contains("anchor") && j["anchor"].size() == 2, "Chart %s: bad anchor",
             c.name.c_str());
  c.anchor = {j["anchor"][0].get<double>(), j["anchor"][1].get<double>()};
  c.angle = j.value("angle", 0.0);
  c.half_width = j.at("half_width").get<double>();
  c.collar = j.at("collar").get<double>();
  SS_REQUIRE(c.half_width > 0.0 && c.collar > 0.0, "Chart %s: window and collar must be positive",
             c.name.c_str());
  c.profile = Profile::from_json(j.at("profile"));
  return c;
}

nlohmann::json Atlas::to_json() const {
  nlohmann::json j;
  j["box"] = {box_lx, box_ly};
  j["boundary"] = boundary.to_json();
  j["charts"] = nlohmann::json::array();
  for (const Chart& c : charts) j["charts"].push_back(c.to_json());
  j["interior"] = has_interior ? nlohmann::json{{"lo", interior_lo}} : nlohmann::json();
  j["overlap_bound"] = overlap_bound;
  return j;
}

Atlas Atlas::from_json(const nlohmann::json& j) {
  Atlas a;
  SS_REQUIRE(j.contains("box") && j["box"].size() == 2, "Atlas: bad box");
  a.box_lx = j["box"][0].get<double>();
  a.box_ly = j["box"][1].get<double>();
  a.boundary = Profile::from_json(j.at("boundary"));
  for (const auto& cj : j.value("charts", nlohmann::json::array()))
    a.charts.push_back(Chart::from_json(cj));
  if (j.contains("interior") && !j["interior"].is_null()) {
    a.has_interior = true;
    a.interior_lo = j["interior"].value("lo", 0.0);
  }
  a.overlap_bound = j.value("overlap_bound", 4);
  a.validate();
  return a;
}

void Atlas::validate() const {
  SS_REQUIRE(box_lx > 0.0 && box_ly > 0.0, "Atlas: box extents must be positive");
  SS_REQUIRE(!charts.empty(), "Atlas: need at least one boundary chart");
  // Charts must agree with the global graph on their windows. Graph charts
  // are axis-aligned here; rotated charts are for standalone (wedge) use.
  for (const Chart& c : charts) {
    SS_REQUIRE(c.angle == 0.0, "Atlas chart %s: atlas charts must be axis-aligned", c.name.c_str());
    const int m = 64;
    for (int i = 0; i <= m; ++i) {
      const double z1 = -c.half_width + 2.0 * c.half_width * i / m;
      const double xw = c.anchor.x + z1;
      const double here = c.anchor.y + c.profile.eval(z1);
      const double there = boundary.eval(std::remainder(xw, box_lx));
      SS_REQUIRE(std::abs(here - there) < 1e-9 * (1.0 + std::abs(there)) + 1e-12,
                 "Atlas chart %s: disagrees with global boundary at x=%g (%g vs %g)",
                 c.name.c_str(), xw, here, there);
    }
  }
  // Coverage: every boundary point lies in some chart window interior.
  const int m = 512;
  for (int i = 0; i < m; ++i) {
    const double x = box_lx * i / m;
    bool covered = false;
    for (const Chart& c : charts) {
      if (c.profile.is_periodic() && c.half_width >= 0.5 * box_lx - 1e-12) {
        covered = true;
        break;
      }
      double z1 = std::remainder(x - c.anchor.x, box_lx);
      if (std::abs(z1) < c.half_width * (1.0 - 1e-12)) {
        covered = true;
        break;
      }
    }
    SS_REQUIRE(covered, "Atlas: boundary point x=%g not covered by any chart window", x);
  }
}

}  // namespace slipstokes
