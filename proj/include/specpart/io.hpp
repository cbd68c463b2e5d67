#pragma once

// Plain-text graymap (P2) files for partitions, masks and eigenfunctions.
//
// Rows are written top (largest y) first so the file displays upright. A
// partition stores label + 1 per cell with 0 outside the domain and maxval m;
// a mask stores 0/1 with maxval 1. Comment lines carry the domain id.

#include <filesystem>
#include <iosfwd>
#include <string>

#include "specpart/eigensolver.hpp"
#include "specpart/grid.hpp"
#include "specpart/partition.hpp"

namespace specpart {

void write_partition_pgm(std::ostream& os, const GridDomain& domain, const Partition& partition);
// Throws InvalidInput on malformed input, a grid of another size or id, or
// an invalid partition.
Partition read_partition_pgm(std::istream& is, const GridDomain& domain);

void write_mask_pgm(std::ostream& os, const GridDomain& domain, const SubdomainMask& mask);
SubdomainMask read_mask_pgm(std::istream& is, const GridDomain& domain);

// Eigenfunction scaled to 0..255 by its maximum, and a sidecar with lambda1,
// residual, iteration counts and the scale.
void write_eigenfunction_pgm(std::ostream& pgm, std::ostream& sidecar, const GridDomain& domain, const EigenResult& eig);

void save_partition_pgm(const std::filesystem::path& path, const GridDomain& domain, const Partition& partition);
Partition load_partition_pgm(const std::filesystem::path& path, const GridDomain& domain);

}  // namespace specpart
