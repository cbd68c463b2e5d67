#pragma once

// m-partitions of a GridDomain, their l1 energy, the segregated-field view of
// a partition, and the alternating eigen-solve / argmax optimizer.

#include <cstdint>
#include <string>
#include <vector>

#include "specpart/eigensolver.hpp"
#include "specpart/grid.hpp"

namespace specpart {

inline constexpr int kUnassigned = -1;

struct Partition {
  std::vector<int> labels;  // 0..m-1 on inside cells, kUnassigned elsewhere
  int m = 0;
  std::string parent_id;

  SubdomainMask part_mask(const GridDomain& domain, int label) const;
  std::vector<std::size_t> part_sizes() const;
  bool operator==(const Partition&) const = default;
};

// Throws InvalidInput describing the first violated invariant.
void validate_partition(const GridDomain& domain, const Partition& partition);

struct EnergyReport {
  std::vector<double> per_part_lambda;
  double sum_lambda = 0.0;
  double l1_normalized = 0.0;
  int m = 0;
};

// sum / m^2, with sum_lambda stored as l1_normalized * m^2 so the two fields
// satisfy that identity bit for bit.
EnergyReport make_report(std::vector<double> per_part_lambda);

// First eigenpair of every part. `warm` (optional, one grid function per part)
// seeds the inverse iteration.
std::vector<EigenResult> part_eigenpairs(const GridDomain& domain, const Partition& partition,
                                         double tol = 1e-7, const std::vector<EigenResult>* warm = nullptr);

EnergyReport l1_energy(const GridDomain& domain, const Partition& partition, double tol = 1e-7);

// m grid functions u_1..u_m with at most one nonzero value per cell.
struct SegregatedField {
  std::vector<std::vector<double>> components;
  int m = 0;
};

// Keeps the component of largest magnitude in each cell (lowest index on
// ties), then rescales every nonzero component to unit L2 norm.
SegregatedField project_to_sigma(const GridDomain& domain, const std::vector<std::vector<double>>& field);

// Label of the nonzero component in each inside cell; inside cells where every
// component vanishes take the label of the nearest labeled cell.
Partition partition_from_field(const GridDomain& domain, const SegregatedField& field);

// Fills inside cells carrying kUnassigned with the label of the nearest
// labeled cell in the Chebyshev distance, lowest label on ties.
void fill_nearest_labels(const GridDomain& domain, std::vector<int>& labels);

// Voronoi cells of m distinct random inside cells, optionally moved by Lloyd
// steps (each seed replaced by the centroid of its cell).
Partition voronoi_partition(const GridDomain& domain, int m, std::uint64_t seed, int lloyd_iters = 0);

struct OptimizerOptions {
  int max_outer_iters = 200;
  int restarts = 8;
  double tol = 1e-8;          // accepted energy increase, relative to the current sum
  double eigen_tol = 1e-7;         // final report of the returned partition
  double search_eigen_tol = 1e-5;  // solves that compare candidate states
  int lloyd_iters = 30;
  int jobs = 1;               // restarts run concurrently up to this many threads
  // Extra starting states refined after the random restarts.
  std::vector<Partition> initial_partitions;
};

struct OptimizerResult {
  Partition partition;
  EnergyReport report;
  // Seed of the winning restart (seed + r), or -1 - i for initial_partitions[i].
  long best_seed = 0;
  int iterations = 0;  // outer iterations of the winning start
  // Accepted energies of every start, starting with the initial state.
  std::vector<std::vector<double>> accepted_energies;
};

OptimizerResult optimize_partition(const GridDomain& domain, int m, std::uint64_t seed,
                                   const OptimizerOptions& opts = {});

enum class GroupPolicy {
  SmallestIntoNeighbor,  // merge the smallest part into its lowest-index neighbour
  LeastEnergy,           // merge the adjacent pair whose union costs the least energy
};

Partition group_subdomains(const GridDomain& domain, const Partition& partition, int m,
                           GroupPolicy policy = GroupPolicy::SmallestIntoNeighbor);

// Relabels parts to 0..k-1 preserving their order, dropping empty labels.
void compact_labels(Partition& partition);

}  // namespace specpart
