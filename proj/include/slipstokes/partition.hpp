#pragma once

#include <cstdint>

#include "slipstokes/chart.hpp"
#include "slipstokes/grid.hpp"

namespace slipstokes {

struct PartitionOptions {
  /// Mollification radius in world units; 0 picks 3 grid cells.
  double mollify_radius = 0.0;
  /// Raw indicator sum below this on a domain node is a coverage failure.
  double cover_floor = 0.1;
};

/// Partition of unity on the embedding grid, subordinate to the atlas
/// patches: one cutoff per boundary chart, plus one for the interior patch
/// when present (stored last). Built from eroded patch indicators mollified
/// with a compact bump kernel and renormalized, so the cutoffs sum to one on
/// the domain and each is supported inside its patch.
struct Partition {
  Grid2 grid;
  std::vector<GridField> cutoffs;
  bool has_interior = false;
  std::vector<uint8_t> domain_mask;  // 1 where the node lies in the closed domain
  int max_overlap = 0;
  double min_cover = 0.0;
};

Partition build_partition(const Atlas& atlas, const Grid2& grid,
                          const PartitionOptions& opt = {});

}  // namespace slipstokes
