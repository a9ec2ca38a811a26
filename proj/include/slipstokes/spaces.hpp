#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "slipstokes/chart.hpp"
#include "slipstokes/grid.hpp"

namespace slipstokes {

/// Result of a norm estimator: the value plus enough context to audit it
/// (estimator kind, regime, parameters such as calibration constants and
/// excluded mass, and any warnings).
struct NormReport {
  double value = 0.0;
  std::string kind;
  std::string regime;
  nlohmann::json parameters = nlohmann::json::object();
  std::vector<std::string> warnings;

  nlohmann::json to_json() const;
};

namespace spaces {

/// L^p norm over the box; components combine pointwise (Euclidean magnitude).
/// p = inf gives the max norm.
NormReport lp_norm(const GridField& f, double p);

/// Gagliardo seminorm estimator for s in (0,1): double sum over node pairs
/// with minimum-image periodic distance. The singular diagonal is excluded
/// (pairs closer than one grid spacing, i.e. coincident nodes) and replaced by
/// a gradient-based local model whose constant is calibrated once per
/// (grid, s, p) against the Fourier oracle (p = 2) or the analytic disc
/// integral (otherwise).
NormReport fractional_seminorm(const GridField& f, double s, double p);

/// Uncorrected double sum; `excluded` receives the modeled diagonal mass.
double fractional_seminorm_raw(const GridField& f, double s, double p,
                               double* excluded = nullptr);

/// Fourier-side seminorm oracle (p = 2): ( |box| sum |k|^{2s} |f^_k|^2 )^{1/2}.
double fourier_seminorm(const GridField& f, double s);

/// W^{s,p} norm, s >= 0. Integer derivatives are spectral; a fractional part
/// adds the calibrated Gagliardo seminorm of the top derivatives. For p = 2
/// the exact spectral Bessel form ( |box| sum (1+|k|^2)^s |f^|^2 )^{1/2} is
/// used (kind "sobolev_spectral"). Negative s is rejected and points to
/// dual_norm_estimate.
NormReport sobolev_norm(const GridField& f, double s, double p, bool spectral_if_p2 = true);

/// Besov B^s_{p,q} via dyadic raised-cosine frequency bands that sum to one
/// exactly on the frequency grid. s in (0,2); p, q in [1, inf].
NormReport besov_norm(const GridField& f, double s, double p, double q);

/// Negative-smoothness estimator, s in (-1, 0): value is the Bessel-potential
/// norm ||(1-lap)^{s/2} f||_{L^p}; a dictionary of pure Fourier modes up to
/// Nyquist plus 50 seeded band-limited fields certifies a duality lower
/// bound reported alongside.
NormReport dual_norm_estimate(const GridField& f, double s, double p, uint64_t seed = 2026);

/// Pointwise multiplier bound for a boundary profile: evaluates the
/// applicable regimes (trace-index form with Besov control, the
/// high-smoothness gradient form, and its compact-support composite rescaling)
/// and returns the smallest applicable value with the regime recorded.
NormReport multiplier_bound(const Profile& phi, double s, double p);

// 1-D periodic estimators for boundary lines on [0, L).
double lp_norm_1d(const std::vector<double>& f, double L, double p);
double fractional_seminorm_1d(const std::vector<double>& f, double L, double s, double p);
double fourier_seminorm_1d(const std::vector<double>& f, double L, double s);
/// p = 2 only; spectral Bessel form, s may be negative.
double sobolev_norm_1d_spectral(const std::vector<double>& f, double L, double s);
double sobolev_norm_1d(const std::vector<double>& f, double L, double s, double p);

}  // namespace spaces
}  // namespace slipstokes
