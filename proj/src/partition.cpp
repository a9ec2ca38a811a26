#include "slipstokes/partition.hpp"

#include <cmath>

namespace slipstokes {

namespace {
// Wrap a coordinate difference into [-L/2, L/2).
double wrap_diff(double d, double L) { return std::remainder(d, L); }
}  // namespace

Partition build_partition(const Atlas& atlas, const Grid2& grid, const PartitionOptions& opt) {
  SS_REQUIRE(std::abs(grid.lx - atlas.box_lx) < 1e-12 && std::abs(grid.ly - atlas.box_ly) < 1e-12,
             "build_partition: grid box (%g x %g) does not match atlas box (%g x %g)", grid.lx,
             grid.ly, atlas.box_lx, atlas.box_ly);
  const double rho = opt.mollify_radius > 0.0 ? opt.mollify_radius
                                              : 3.0 * std::max(grid.dx(), grid.dy());

  Partition part;
  part.grid = grid;
  part.has_interior = atlas.has_interior;

  // Domain mask: nodes on or above the boundary graph.
  part.domain_mask.assign(grid.npts(), 0);
  std::vector<double> bnd(grid.nx);
  for (int i = 0; i < grid.nx; ++i) bnd[i] = atlas.boundary.eval(wrap_diff(grid.x(i), grid.lx));
  for (int j = 0; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i)
      if (grid.y(j) >= bnd[i] - 1e-12) part.domain_mask[grid.idx(i, j)] = 1;

  // Raw patch indicators, eroded by the mollification radius.
  std::vector<GridField> raw;
  for (const Chart& c : atlas.charts) {
    GridField ind(grid, 0);
    const bool full_width = c.profile.is_periodic() && c.half_width >= 0.5 * atlas.box_lx - 1e-12;
    const bool full_height = c.anchor.y + c.collar >= atlas.box_ly - 1e-12;
    for (int j = 0; j < grid.ny; ++j) {
      for (int i = 0; i < grid.nx; ++i) {
        const double z1 = wrap_diff(grid.x(i) - c.anchor.x, atlas.box_lx);
        const double z2 = grid.y(j) - c.anchor.y;
        if (!full_width && std::abs(z1) > c.half_width - rho) continue;
        const double above = z2 - c.profile.eval(z1);
        if (above < -2.0 * rho) continue;
        if (!full_height && above > c.collar - rho) continue;
        ind.at(0, i, j) = 1.0;
      }
    }
    raw.push_back(std::move(ind));
  }
  if (atlas.has_interior) {
    GridField ind(grid, 0);
    for (int j = 0; j < grid.ny; ++j)
      for (int i = 0; i < grid.nx; ++i) {
        const double above = grid.y(j) - bnd[i];
        if (above >= atlas.interior_lo + rho) ind.at(0, i, j) = 1.0;
      }
    raw.push_back(std::move(ind));
  }

  // Compactly supported mollification: discrete bump stencil normalized to
  // unit sum, so constant-one regions stay exactly one.
  const int rx = static_cast<int>(std::ceil(rho / grid.dx()));
  const int ry = static_cast<int>(std::ceil(rho / grid.dy()));
  std::vector<double> kernel;
  double ksum = 0.0;
  for (int dj = -ry; dj <= ry; ++dj)
    for (int di = -rx; di <= rx; ++di) {
      const double r = std::hypot(di * grid.dx(), dj * grid.dy()) / rho;
      const double w = bump01(r);
      kernel.push_back(w);
      ksum += w;
    }
  for (double& w : kernel) w /= ksum;

  std::vector<GridField> smooth;
  for (const GridField& ind : raw) {
    GridField s(grid, 0);
    for (int j = 0; j < grid.ny; ++j)
      for (int i = 0; i < grid.nx; ++i) {
        double acc = 0.0;
        int k = 0;
        for (int dj = -ry; dj <= ry; ++dj)
          for (int di = -rx; di <= rx; ++di, ++k)
            if (kernel[k] != 0.0) acc += kernel[k] * ind.atw(0, i + di, j + dj);
        s.at(0, i, j) = acc;
      }
    smooth.push_back(std::move(s));
  }

  // Normalize on the domain; report coverage and overlap.
  part.min_cover = 1e300;
  part.max_overlap = 0;
  GridField sum(grid, 0);
  for (const GridField& s : smooth) sum += s;
  for (int j = 0; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i) {
      const double tot = sum.at(0, i, j);
      if (part.domain_mask[grid.idx(i, j)]) {
        part.min_cover = std::min(part.min_cover, tot);
        SS_REQUIRE(tot >= opt.cover_floor,
                   "build_partition: patches fail to cover the domain at node (%d, %d) "
                   "= (%g, %g), indicator sum %g",
                   i, j, grid.x(i), grid.y(j), tot);
      }
      int overlap = 0;
      for (const GridField& s : smooth)
        if (s.at(0, i, j) > 1e-12) ++overlap;
      part.max_overlap = std::max(part.max_overlap, overlap);
    }
  SS_REQUIRE(part.max_overlap <= atlas.overlap_bound,
             "build_partition: observed overlap %d exceeds declared bound %d", part.max_overlap,
             atlas.overlap_bound);
  for (GridField& s : smooth) {
    for (int j = 0; j < grid.ny; ++j)
      for (int i = 0; i < grid.nx; ++i) {
        const double tot = sum.at(0, i, j);
        s.at(0, i, j) = tot > 1e-12 ? s.at(0, i, j) / tot : 0.0;
      }
    part.cutoffs.push_back(std::move(s));
  }
  return part;
}

}  // namespace slipstokes
