#pragma once

#include <vector>

#include "json.hpp"
#include "slipstokes/flatten.hpp"
#include "slipstokes/grid.hpp"

namespace slipstokes {
namespace neumann {

/// Scalar flux problem on the strip [0,lx) x [0,lz), wall at z = 0:
///   -lap(u) = div(F),   du/dz(x,0) + F_z(x,0) = chi(x),   u decaying.
/// The trace condition is written in the +z direction; against the outward
/// normal -e_z it reads -(grad u + F).n = chi. Solvability requires chi to
/// have zero mean; the defect is removed and reported.
struct FluxProblem {
  Grid2 grid;
  GridField flux;             // rank 1, F; empty means zero
  std::vector<double> trace;  // chi, size nx or empty

  void validate() const;
};

struct FluxResiduals {
  double interior = 0.0;       // relative L2 of lap(u) + div(F) on the window
  double trace = 0.0;          // relative max defect of the wall condition
  double interior_scale = 0.0;

  nlohmann::json to_json() const;
};

struct FluxSolution {
  GridField u;  // rank 0, gauged to vanish at the top of the strip
  double trace_defect = 0.0;  // mean removed from chi
  FluxResiduals residuals;
  nlohmann::json diagnostics;
};

FluxSolution solve_flux(const FluxProblem& prob);
FluxResiduals measure_flux(const FluxProblem& prob, const GridField& u);

/// Poisson solve on the strip with a homogeneous Dirichlet wall: lap u = r,
/// u(x, 0) = 0, gradient decaying upward. The oscillatory wall residue is
/// peeled off with e^{-beta z} gadget profiles (beta > 0, typically the
/// fundamental wavenumber), the remainder is odd-reflected. The right-hand
/// side must decay in the pad like every other strip datum.
GridField solve_dirichlet(const Grid2& grid, const GridField& r, double beta);

/// One fixed-point sweep summary. `ratio` is residual[n] / residual[n-1]
/// (zero on the first sweep); `trace_defect` is the solvability mean removed
/// from that sweep's model datum.
struct SweepRecord {
  int index = 0;
  double residual = 0.0;
  double ratio = 0.0;
  double trace_defect = 0.0;

  nlohmann::json to_json() const;
};

/// The same flux problem posed above a graph boundary y = phi(x), solved in
/// flattened coordinates by frozen-coefficient sweeps. `flux` holds the
/// Cartesian components of F composed with the flattening map, sampled on the
/// strip; `trace` is the physical conormal datum (grad u + F).n_out at the
/// mapped wall nodes. The iterate, and the returned field, stay chart-side.
struct RoughFluxProblem {
  Chart chart;
  Grid2 grid;
  GridField flux;             // rank 1, F o Phi
  std::vector<double> trace;  // chi tilde, size nx or empty
  int max_sweeps = 12;
  double tol = 1e-10;

  void validate() const;
};

struct RoughFluxSolution {
  GridField v;  // rank 0, chart-side solution u o Phi
  std::vector<SweepRecord> sweeps;
  FluxResiduals residuals;  // transformed-system residuals at the last iterate
  nlohmann::json diagnostics;
};

/// Raises Error when the sweep residuals fail to contract three times in a
/// row while sitting above their starting level.
RoughFluxSolution solve_flux_rough(const RoughFluxProblem& prob);

/// Residuals of the transformed system
///   div(A grad v + B Ftilde) = 0,  dv/dz(x,0) = wall target(v)
/// measured with the same operators the sweeps use.
FluxResiduals measure_flux_rough(const RoughFluxProblem& prob, const TransformCoeffs& tc,
                                 const GridField& v);

}  // namespace neumann
}  // namespace slipstokes
