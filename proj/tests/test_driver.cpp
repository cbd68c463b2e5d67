#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "specpart/driver.hpp"
#include "specpart/errors.hpp"
#include "specpart/io.hpp"

using namespace specpart;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("specpart_test_" + name);
  fs::remove_all(p);
  return p;
}

RunConfig small_config(const fs::path& out) {
  std::istringstream ini(R"(
[domain]
shapes = square, disk
resolution = 48
[sweep]
m = 1, 3, 4
seed = 11
base_resolution = 32
[optimizer]
restarts = 2
lloyd_iters = 5
[output]
dir = unused
)");
  RunConfig cfg = parse_run_config(ini);
  cfg.out_dir = out;
  return cfg;
}

}  // namespace

TEST_SUITE("driver") {
  TEST_CASE("config parsing") {
    std::istringstream ini(R"(
[domain]
shapes = disk hexagon
resolution = 128
area = 2
[sweep]
m = 2, 5,9
seed = 99
constructions = false
[optimizer]
restarts = 4
eigen_tol = 1e-8
[strip]
delta = 0.05
[glue]
m = 9
[output]
dir = results
jobs = 3
)");
    const RunConfig cfg = parse_run_config(ini);
    CHECK(cfg.shapes == std::vector<std::string>{"disk", "hexagon"});
    CHECK(cfg.resolution == 128);
    CHECK(cfg.area == 2.0);
    CHECK(cfg.m_list == std::vector<int>{2, 5, 9});
    CHECK(cfg.seed == 99u);
    CHECK_FALSE(cfg.constructions);
    CHECK(cfg.optimizer.restarts == 4);
    CHECK(cfg.optimizer.eigen_tol == 1e-8);
    REQUIRE(cfg.strip.has_value());
    CHECK(cfg.strip->delta == 0.05);
    CHECK(cfg.strip->epsilon == 0.2);
    CHECK(cfg.glue_m == 9);
    CHECK(cfg.out_dir == fs::path("results"));
    CHECK(cfg.jobs == 3);
  }

  TEST_CASE("config errors are usage errors") {
    for (const char* text : {"[domain]\nshape = disk\n", "[nowhere]\nx = 1\n", "[domain]\nresolution = abc\n",
                             "[domain]\nresolution = 8\n", "[domain]\nshapes = blob\n", "[sweep]\nm = 0\n",
                             "[sweep]\nconstructions = maybe\n", "[output]\njobs = 0\n", "[domain\n"}) {
      CAPTURE(text);
      std::istringstream ini(text);
      CHECK_THROWS_AS(parse_run_config(ini), InvalidInput);
    }
    CHECK_THROWS_AS(load_run_config("/nonexistent/config.ini"), InvalidInput);
    std::istringstream no_strip("[domain]\nshapes = square\n");
    CHECK_FALSE(parse_run_config(no_strip).strip.has_value());
    std::istringstream empty_strip("[strip]\n");
    CHECK(parse_run_config(empty_strip).strip.has_value());
  }

  TEST_CASE("constructions per shape") {
    RunConfig cfg = small_config(scratch("cons"));
    cfg.resolution = 128;
    const NamedShape square = parse_shape("square", 1.0, 1.0, 1.0);
    const GridDomain sq = build_domain(square.shape, 128);
    ConstructionSet s = build_constructions(sq, square, 16, cfg);
    REQUIRE(s.items.size() == 2);
    CHECK(s.items[0].name == "square_copies");
    CHECK(s.items[1].name == "hexagon");
    s = build_constructions(sq, square, 9, cfg);
    CHECK(s.items[0].name == "square_blocks");

    const NamedShape disk = parse_shape("disk", 1.0, 1.0, 1.0);
    const GridDomain dd = build_domain(disk.shape, 128);
    s = build_constructions(dd, disk, 16, cfg);
    bool cube = false;
    for (const auto& c : s.items) {
      if (c.name != "cube_fill") continue;
      cube = true;
      CHECK(c.partition.m == 16);
      CHECK(c.l1 <= c.formula_bound * (1.0 + 1e-9));
    }
    CHECK(cube);
    const auto starts = construction_starts(dd, s);
    REQUIRE(starts.size() == s.items.size());
    for (const auto& p : starts) CHECK_NOTHROW(validate_partition(dd, p));
    CHECK_FALSE(build_constructions(dd, disk, 2, cfg).notes.empty());
  }

  TEST_CASE("sweep: files, invariants and byte-identical reruns") {
    const fs::path a = scratch("sweep_a"), b = scratch("sweep_b");
    RunConfig cfg = small_config(a);
    const SweepResult ra = run_sweep(cfg);
    cfg.out_dir = b;
    cfg.jobs = 3;
    run_sweep(cfg);
    CHECK(slurp(a / "sweep.csv") == slurp(b / "sweep.csv"));
    CHECK(slurp(a / "convergence.svg") == slurp(b / "convergence.svg"));
    for (const char* f : {"sweep.csv", "sweep_timing.csv", "convergence.svg", "square/partition_m3.pgm", "disk/partition_m4.pgm"})
      CHECK(fs::exists(a / f));

    REQUIRE(ra.records.size() == 6);
    for (const auto& r : ra.records) {
      CAPTURE(r.shape);
      CAPTURE(r.m);
      CHECK(r.error.empty());
      if (!std::isnan(r.construction_bound)) CHECK(r.l1_normalized <= r.construction_bound + 1e-9);
      CHECK(r.fk_ratio_min >= 0.95);
    }
    const std::string csv = slurp(a / "sweep.csv");
    CHECK(csv.rfind("# specpart sweep v1\n", 0) == 0);
    CHECK(csv.find("wall_ms") == std::string::npos);
    const std::string svg = slurp(a / "convergence.svg");
    CHECK(svg.find("<svg") != std::string::npos);
    CHECK(svg.find("disk pi j01^2") != std::string::npos);
    CHECK(svg.find("hexagon 18.590") != std::string::npos);

    const GridDomain sq = build_domain(ShapeSpec::unit_square(), 48);
    const Partition p3 = load_partition_pgm(a / "square/partition_m3.pgm", sq);
    CHECK(p3 == *ra.records[1].partition);
  }

  TEST_CASE("empty m list gives empty output") {
    RunConfig cfg = small_config(scratch("empty"));
    cfg.m_list.clear();
    const SweepResult r = run_sweep(cfg);
    CHECK(r.records.empty());
    CHECK(slurp(cfg.out_dir / "sweep.csv") ==
          "# specpart sweep v1\n"
          "domain_id,shape,m,sum_lambda,l1_normalized,best_seed,construction,construction_bound,fk_ratio_min,error\n");
  }

  TEST_CASE("per-m failures are recorded and the sweep continues") {
    RunConfig cfg = small_config(scratch("fail"));
    cfg.shapes = {"square"};
    cfg.m_list = {2, 1000};
    const SweepResult r = run_sweep(cfg);
    REQUIRE(r.records.size() == 2);
    CHECK(r.records[0].error.empty());
    CHECK(r.records[1].error.rfind("invalid input: ", 0) == 0);
    CHECK(slurp(cfg.out_dir / "sweep.csv").find(",invalid input: ") != std::string::npos);
  }

  TEST_CASE("glue-verify: needs a strip, round-trips its partition") {
    RunConfig cfg = small_config(scratch("glue"));
    cfg.shapes = {"square"};
    cfg.resolution = 128;
    cfg.glue_m = 4;
    CHECK_THROWS_AS(run_glue_verify(cfg), InvalidInput);
    cfg.strip = StripConfig{};
    const GlueRun first = run_glue_verify(cfg);
    CHECK(fs::exists(cfg.out_dir / "chain_report.txt"));
    CHECK(fs::exists(cfg.out_dir / "chain_parts.csv"));
    const fs::path pgm = cfg.out_dir / "partition_m4.pgm";
    REQUIRE(fs::exists(pgm));
    const std::string report = slurp(cfg.out_dir / "chain_report.txt");

    cfg.glue_partition = pgm;
    cfg.out_dir = scratch("glue_reload");
    const GlueRun second = run_glue_verify(cfg);
    CHECK(slurp(cfg.out_dir / "chain_report.txt") == report);
    CHECK(slurp(cfg.out_dir / "partition_m4.pgm") == slurp(pgm));
    CHECK(second.report.m == 4);
  }

  TEST_CASE("eigen and tile outputs") {
    RunConfig cfg = small_config(scratch("eigen"));
    cfg.m_list = {4};
    const auto e = run_eigen(cfg);
    REQUIRE(e.size() == 2);
    CHECK(e[0].lambda1 > e[1].lambda1);  // the unit-area disk minimizes lambda1
    CHECK(fs::exists(cfg.out_dir / "eigen.csv"));
    CHECK(fs::exists(cfg.out_dir / "eigen_disk.pgm"));
    const auto rows = run_tile(cfg);
    CHECK_FALSE(rows.empty());
    CHECK(fs::exists(cfg.out_dir / "tile.csv"));
    CHECK(fs::exists(cfg.out_dir / "square/tile_square_copies_m4.pgm"));
  }

  TEST_CASE("bounds report requires a fine grid") {
    CHECK_THROWS_AS(bounds_report(128), InvalidInput);
    std::ostringstream os;
    BoundsReport r;
    r.resolution = 256;
    r.ordering_ok = true;
    write_bounds(os, r);
    CHECK(os.str().find("ordering: disk < hexagon") != std::string::npos);
  }
}
