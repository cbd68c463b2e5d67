#pragma once

// Batch runs behind the command-line tool: configuration, sweeps over m,
// construction bounds, the bounds report and glue verification, together with
// their CSV, text and SVG outputs.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "specpart/glue.hpp"
#include "specpart/grid.hpp"
#include "specpart/partition.hpp"

namespace specpart {

// A shape by name: square, disk, hexagon or rectangle.
struct NamedShape {
  std::string name;
  ShapeSpec shape;
};

NamedShape parse_shape(const std::string& name, double area, double rect_a, double rect_b);

struct RunConfig {
  std::vector<std::string> shapes{"square"};
  double area = 1.0;  // disk and hexagon
  double rect_a = 1.0, rect_b = 0.5;
  int resolution = 256;
  std::vector<int> m_list;
  std::uint64_t seed = 1;
  OptimizerOptions optimizer;
  bool constructions = true;
  int base_resolution = 64;  // unit-square grid of the cube-fill base partitions
  std::optional<StripConfig> strip;
  int glue_m = 16;
  std::filesystem::path glue_partition;  // PGM; empty = optimize
  int bounds_resolution = 256;
  std::filesystem::path out_dir = "out";
  int jobs = 1;

  std::vector<NamedShape> named_shapes() const;
  // Throws InvalidInput.
  void validate() const;
};

// INI sections [domain], [sweep], [optimizer], [strip], [glue], [bounds] and
// [output]. Unknown sections or keys are rejected. Throws InvalidInput.
RunConfig parse_run_config(std::istream& is);
RunConfig load_run_config(const std::filesystem::path& path);

struct Construction {
  std::string name;  // square_copies, square_blocks, hexagon or cube_fill
  Partition partition;
  GridDomain domain;  // where `partition` lives (a cube union for cube_fill)
  double l1 = 0.0;
  double formula_bound = 0.0;  // cube_fill: bound from the base values
};

struct ConstructionSet {
  std::vector<Construction> items;
  // Failed or inapplicable constructions, one line each.
  std::vector<std::string> notes;
};

// Every construction that applies to (domain, m). Cube-fill bases are
// optimized on the unit square at cfg.base_resolution.
ConstructionSet build_constructions(const GridDomain& domain, const NamedShape& shape, int m, const RunConfig& cfg);

// The construction partitions moved onto `domain`, usable as optimizer starts.
std::vector<Partition> construction_starts(const GridDomain& domain, const ConstructionSet& set);

struct SweepRecord {
  std::string domain_id;
  std::string shape;
  int m = 0;
  double sum_lambda = 0.0;
  double l1_normalized = 0.0;
  long best_seed = 0;
  std::string construction;           // name of the best construction, empty if none
  double construction_bound = 0.0;    // NaN without a construction
  double fk_ratio_min = 0.0;          // min over parts of lambda_j |Omega_j| / (pi j01^2)
  std::string error;
  long long wall_ms = 0;
  std::optional<Partition> partition;  // absent when the run failed
};

struct SweepResult {
  std::vector<SweepRecord> records;  // shape-major, m in config order
};

// Runs every (shape, m) pair and writes sweep.csv, sweep_timing.csv,
// convergence.svg and <shape>/partition_m{M}.pgm under cfg.out_dir. Per-pair
// failures land in the error column.
SweepResult run_sweep(const RunConfig& cfg);

// Deterministic: no timings.
void write_sweep_csv(std::ostream& os, const std::vector<SweepRecord>& records);
void write_timing_csv(std::ostream& os, const std::vector<SweepRecord>& records);
void write_convergence_svg(std::ostream& os, const std::vector<SweepRecord>& records);

struct BoundsReport {
  int resolution = 0;
  double disk_coarse = 0.0, disk_fine = 0.0, disk_extrapolated = 0.0;
  double hexagon_coarse = 0.0, hexagon_fine = 0.0, hexagon_extrapolated = 0.0;
  double disk_exact = 0.0;          // pi j01^2
  double hexagon_reference = 0.0;
  double disk_relative_error = 0.0;  // of the extrapolated value
  bool ordering_ok = false;          // disk < hexagon
};

// Unit-area disk and hexagon at `resolution` and twice it, extrapolated.
// Requires resolution >= 256.
BoundsReport bounds_report(int resolution, double eigen_tol = 1e-9, int jobs = 1);
void write_bounds(std::ostream& os, const BoundsReport& r);

// eigen.csv plus eigen_<shape>.pgm and its sidecar eigen_<shape>.txt for
// every shape, and the results in shape order.
std::vector<EigenResult> run_eigen(const RunConfig& cfg);

// The optimizer alone (no construction starts) over shapes x m; writes
// partition.csv and <shape>/partition_m{M}.pgm.
std::vector<SweepRecord> run_partition(const RunConfig& cfg);

struct TileRow {
  std::string shape;
  int m = 0;
  std::string name;
  double l1 = 0.0;
  double formula_bound = 0.0;  // NaN except for cube_fill
  std::string note;            // why a construction is missing
};

// Every construction over shapes x m; writes tile.csv and
// <shape>/tile_<name>_m{M}.pgm.
std::vector<TileRow> run_tile(const RunConfig& cfg);

// chain_report.txt, chain_parts.csv and partition_m{M}.pgm under cfg.out_dir.
// The partition is read from cfg.glue_partition or optimized at cfg.glue_m on
// the first shape. Requires cfg.strip.
GlueRun run_glue_verify(const RunConfig& cfg);

}  // namespace specpart
