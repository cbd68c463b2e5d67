#pragma once

// Explicit partitions: scaled copies on the unit square, hexagonal tilings and
// dyadic cube fillings. Each is a feasible point, so its l1 value bounds the
// optimum from above.

#include <map>
#include <optional>

#include "specpart/grid.hpp"
#include "specpart/partition.hpp"

namespace specpart {

enum class TilingKind { SquareCopies, Hexagon, CubeFill };

struct TilingSpec {
  TilingKind kind = TilingKind::SquareCopies;
  int k = 1;                       // SquareCopies: k^2 copies
  double cell_area = 0.0;          // Hexagon
  int n = 1;                       // CubeFill: parts per cube
  int t = 0;                       // CubeFill: parts in the last cube
  std::optional<Partition> base;   // SquareCopies

  // Throws InvalidInput. `cubes` is the inner cube count for CubeFill checks.
  void validate(int cubes = 0) const;
};

// The unit square cut into k x k subsquares, each holding the base partition
// scaled by 1/k. Parts are numbered base label + m * (block row * k + block col).
Partition tile_square_copies(const GridDomain& unit_square, const Partition& base, int k);

// k x k axis-aligned blocks whose column and row boundaries are the nearest
// grid lines to i/k. Equal to tile_square_copies of the whole square when k
// divides the resolution.
Partition square_block_partition(const GridDomain& unit_square, int k);

struct HexTiling {
  Partition partition;
  double cell_area = 0.0;  // area of the hexagons that produced it
  int tiles = 0;           // parts after sliver merging, before padding or merging to m
  bool adjusted = false;   // parts were split or merged to reach m
};

// Flat-top hexagons centered on the centroid of the domain. Among cell areas
// |Omega|/m * f, f in [0.7, 1.3], the one nearest f = 1 whose tiling has
// exactly m parts after sliver merging is used; otherwise the nearest count is
// split (largest part, at its median column) or merged (smallest part into
// its lowest-label neighbour) to m.
HexTiling hexagon_tiling_partition(const GridDomain& domain, int m);

// Hexagon of `cell_area` less than this fraction of a full cell are slivers.
inline constexpr double kHexSliverFraction = 0.5;

struct CubeFill {
  GridDomain domain;  // union of the filled cubes
  Partition partition;
  int n = 0;
  int t = 0;
  bool last_cube_left_out = false;  // t = 0
};

// The first k-1 inner cubes of the cover receive the n-part base partition
// scaled to the cube, the last cube the t-part one. With t = 0 the last cube
// carries no part and is not part of the returned domain. Base partitions are
// keyed by part count and live on full square grids of any resolution.
CubeFill cube_fill_partition(const DyadicCover& cover, const std::map<int, Partition>& base_partitions, int n,
                             int t, int resolution);

// ((k-1) n^2 l_n / |Q| + t^2 l_t / |Q|) / m^2 with m = (k-1) n + t.
double cube_fill_bound(const DyadicCover& cover, int n, double l_n, int t, double l_t);

// Labels of `partition` (on `from`) moved to the cells of `to` at the same
// lattice positions; cells of `to` without a counterpart take the nearest
// label. Both grids must share the cell size. Parts only grow, so no part
// eigenvalue increases.
Partition extend_to_domain(const GridDomain& from, const Partition& partition, const GridDomain& to);

// n = m / (k-1), t = m mod (k-1).
std::pair<int, int> cube_fill_counts(int m, std::size_t cubes);

}  // namespace specpart
