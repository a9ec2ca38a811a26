#pragma once

#include <vector>

#include "slipstokes/chart.hpp"
#include "slipstokes/flatten.hpp"
#include "slipstokes/grid.hpp"
#include "slipstokes/halfspace.hpp"

#include "json.hpp"

namespace slipstokes {
namespace rough {

/// Stokes problem with Navier slip posed above an x-periodic boundary graph
/// y = phi(x), carried in the coordinates of the graph-flattening chart: the
/// strip [0,lx) x [0,lz) with the wall row z = 0 on the boundary. All volume
/// fields are physical quantities composed with the flattening map and
/// sampled on strip nodes; boundary data are sampled against the graph
/// parameter x.
///
/// Conventions (n is the outward normal (phi', -1)/s, tau the unit tangent
/// (1, phi')/s, s = sqrt(1 + phi'^2)):
///   momentum     -lap(u) + grad(pi) = f + Div F        in the domain,
///   mass         div u = h,
///   normal       u . n = g          on the graph,
///   tangential   tau . ((grad u + F) n) + alpha (u . tau) = slip.
/// With an empty stress the tangential condition carries no F term, which is
/// the natural pairing for forcing-only data. `divergence` and `trace_normal`
/// must be removed with reduce_divergence before the iteration runs; the
/// sweeps assume h = g = 0.
struct SlipProblem {
  Chart chart;
  Grid2 grid;
  GridField stress;       // rank 2, F o Phi; empty means zero
  GridField forcing;      // rank 1, f o Phi; empty means zero
  GridField divergence;   // rank 0, h o Phi; must be reduced before solving
  std::vector<double> trace_normal;  // g against the graph parameter; reduced
  std::vector<double> slip;          // tangential traction datum, size nx
  std::vector<double> alpha;         // friction samples >= 0, size nx
  int max_sweeps = 10;
  double tol = 1e-9;  // tol <= 0 disables early exit: exactly max_sweeps run

  void validate() const;
};

/// One sweep of the fixed-point iteration. `ratio` is residual[k]/residual
/// [k-1] (zero on the first sweep); the defects are the mean corrections the
/// half-space solver removed from the frozen data; `level_shift` is the
/// multiple of the probe pair added to pin the tangential mean flow.
struct SweepRecord {
  int index = 0;
  double residual = 0.0;
  double ratio = 0.0;
  double compat_defect = 0.0;
  double tangential_defect = 0.0;
  double level_shift = 0.0;

  nlohmann::json to_json() const;
};

/// Both sides of the a-priori bound, estimated chart-side: left is the
/// det-weighted W^{1,2} norm of the velocity plus the L2 norm of the
/// pressure, right collects the data norms (stress and forcing in L2, the
/// slip datum in the order -1/2 trace norm). `ratio` is zero when the data
/// vanish; `components` keeps the constituents.
struct EstimateReport {
  double left = 0.0;
  double right = 0.0;
  double ratio = 0.0;
  nlohmann::json components;

  nlohmann::json to_json() const;
};

struct SlipSolution {
  GridField v;      // rank 1, u o Phi
  GridField theta;  // rank 0, pi o Phi, x-mean pinned to zero on the top row
  std::vector<SweepRecord> sweeps;
  HalfResiduals residuals;  // transformed-system defects of the final iterate
  EstimateReport estimate;
  bool converged = false;
  nlohmann::json diagnostics;
};

/// Frozen right-hand data of one half-space model solve, before the pad
/// taper. stress = grad(v) (A - I) - (B^T - I) theta + F B^T plus the caller
/// supplied extra rows (e.g. a localization lift); divergence = (1-c) dx v_x
/// + b dz v_x; trace_normal = phi' v_x; trace_slip = the wall target of
/// dz v_x plus the wall row of the model stress (so the solver's boundary
/// bookkeeping cancels it again).
struct SweepData {
  GridField stress;       // rank 2
  GridField divergence;   // rank 0
  std::vector<double> trace_normal;
  std::vector<double> trace_slip;
};
SweepData sweep_data(const SlipProblem& prob, const TransformCoeffs& tc,
                     const GridField& v, const GridField& theta,
                     const GridField& extra_stress);

/// Wall target for dz v_x implied by the tangential condition: every other
/// term of the pulled-back slip identity evaluated at the given state.
std::vector<double> slip_target(const SlipProblem& prob, const TransformCoeffs& tc,
                                const GridField& v);

/// Defects of (v, theta) against the transformed system itself (not against
/// the per-sweep model): momentum with the full variable-coefficient stress,
/// the mass identity c dx v_x - b dz v_x + dz v_z = 0, and both wall
/// conditions. This is the convergence measure of the sweeps.
HalfResiduals measure_rough(const SlipProblem& prob, const TransformCoeffs& tc,
                            const GridField& v, const GridField& theta);

/// Represent a body force r (already det-weighted) as Div of a stress: each
/// row i is the gradient of the strip potential with lap P_i = r_i and
/// P_i(x, 0) = 0. Used for the localization lift and the forcing-form
/// closure report. The rows decay upward only at the rate of the slowest
/// surviving x-mode, so they are not pad-clean model data in general.
GridField forcing_stress(const Grid2& grid, const GridField& r);

/// Fixed-point solve by repeated half-space model problems with frozen
/// perturbation data. Throws Error when the residuals fail to contract three
/// sweeps in a row while sitting above their starting level; stops early on
/// a plateau at the measurement floor. Requires reduced data (h = g = 0).
SlipSolution picard_solve(const SlipProblem& prob);

/// Forcing-form entry point: requires an empty stress and nonzero forcing.
/// The det-weighted force rides along every model solve in the half-space
/// forcing channel; the tangential condition carries no stress term. The
/// divergence-form potential of the force (forcing_stress) is computed once
/// for the second-order estimate report and a consistency diagnostic.
SlipSolution nondivergence_solve(const SlipProblem& prob);

/// Remove nonzero (h, g) from the problem in place: builds the potential
/// flow u0 with div u0 = h and u0 . n = g through the flattening (Piola
/// pushforward of the half-space divergence lift), folds grad(u0) into the
/// stress and the friction drag of u0 into the slip datum. Returns u0
/// sampled on the strip in physical components together with the removed
/// compatibility defect; add u0 to the solved velocity to recover the
/// original unknown.
struct Reduction {
  GridField u0;  // rank 1
  double defect = 0.0;
};
Reduction reduce_divergence(SlipProblem& prob);

/// Localization bookkeeping for a cutoff xi: the commutator fields
/// [lap, xi]u = (lap xi) u + 2 grad(xi) . grad(u), [grad, xi]pi =
/// (grad xi) pi, [div, xi]u = grad(xi) . u, and the tangential wall term
/// (u . tau)(grad(xi) . n) with the flat wall frame. Sums to zero over any
/// family of cutoffs adding up to one.
struct Localized {
  GridField laplace_comm;     // rank 1
  GridField gradient_comm;    // rank 1
  GridField divergence_comm;  // rank 0
  std::vector<double> boundary_tangential;
};
Localized localize(const GridField& xi, const GridField& u, const GridField& pi);

/// Estimate both sides of the velocity/pressure-over-data bound for the
/// current state; see EstimateReport.
EstimateReport estimate_report(const SlipProblem& prob, const TransformCoeffs& tc,
                               const GridField& v, const GridField& theta);

}  // namespace rough
}  // namespace slipstokes
