#include <cmath>
#include <random>
#include <set>

#include "doctest.h"
#include "specpart/constructions.hpp"
#include "specpart/errors.hpp"
#include "specpart/partition.hpp"

using namespace specpart;

namespace {

Partition halves(const GridDomain& d) {
  Partition p;
  p.m = 2;
  p.parent_id = d.id();
  p.labels.assign(d.size(), kUnassigned);
  for (std::size_t g = 0; g < d.size(); ++g) {
    if (d.inside(g)) p.labels[g] = d.col(g) < d.width() / 2 ? 0 : 1;
  }
  return p;
}

OptimizerOptions quick() {
  OptimizerOptions o;
  o.restarts = 3;
  o.lloyd_iters = 10;
  return o;
}

}  // namespace

TEST_SUITE("partition") {
  TEST_CASE("validation catches every broken invariant") {
    const GridDomain d = build_domain(ShapeSpec::disk(1.0), 32);
    Partition p = halves(d);
    CHECK_NOTHROW(validate_partition(d, p));
    Partition bad = p;
    bad.labels.pop_back();
    CHECK_THROWS_AS(validate_partition(d, bad), InvalidInput);
    bad = p;
    bad.parent_id = "elsewhere";
    CHECK_THROWS_AS(validate_partition(d, bad), InvalidInput);
    bad = p;
    bad.labels[0] = 0;  // bounding-box corner is outside the disk
    CHECK_THROWS_AS(validate_partition(d, bad), InvalidInput);
    bad = p;
    bad.m = 3;  // label 2 is empty
    CHECK_THROWS_AS(validate_partition(d, bad), InvalidInput);
    bad = p;
    for (auto& l : bad.labels) {
      if (l == 1) l = 5;
    }
    CHECK_THROWS_AS(validate_partition(d, bad), InvalidInput);
  }

  TEST_CASE("report identity and symmetric halves") {
    const GridDomain d = build_domain(ShapeSpec::unit_square(), 64);
    const EnergyReport r = l1_energy(d, halves(d), 1e-10);
    CHECK(r.m == 2);
    CHECK(r.sum_lambda == r.l1_normalized * 4.0);
    CHECK(r.per_part_lambda[0] == doctest::Approx(r.per_part_lambda[1]).epsilon(1e-9));
    // Each half is a 32 x 64 rectangle: closed form of the discrete operator.
    const double h = 1.0 / 64;
    const double oracle = 4.0 / (h * h) * (std::pow(std::sin(M_PI / 64), 2) + std::pow(std::sin(M_PI / 128), 2));
    CHECK(r.per_part_lambda[0] == doctest::Approx(oracle).epsilon(1e-9));
  }

  TEST_CASE("projection keeps the largest component per cell (brute force, 16 x 16 cells)") {
    const GridDomain d = build_domain(ShapeSpec::unit_square(), 32);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 5; ++trial) {
      const int m = 2 + trial;
      std::vector<std::vector<double>> field(static_cast<std::size_t>(m), std::vector<double>(d.size(), 0.0));
      // Random values on the lower-left 16 x 16 block, with some exact ties.
      for (int j = 0; j < 16; ++j) {
        for (int i = 0; i < 16; ++i) {
          for (auto& c : field) c[d.index(i, j)] = std::round(4.0 * u(rng)) / 4.0;
        }
      }
      const SegregatedField s = project_to_sigma(d, field);
      REQUIRE(s.m == m);
      for (int j = 0; j < 16; ++j) {
        for (int i = 0; i < 16; ++i) {
          const std::size_t g = d.index(i, j);
          int arg = -1;
          double best = 0.0;
          for (int k = 0; k < m; ++k) {
            const double a = std::abs(field[static_cast<std::size_t>(k)][g]);
            if (a > best) {
              best = a;
              arg = k;
            }
          }
          int nonzero = 0;
          for (int k = 0; k < m; ++k) {
            if (s.components[static_cast<std::size_t>(k)][g] != 0.0) {
              ++nonzero;
              CHECK(k == arg);
            }
          }
          CHECK(nonzero == (arg >= 0 ? 1 : 0));
        }
      }
      for (const auto& c : s.components) {
        double n = 0.0;
        for (double v : c) n += v * v * d.h() * d.h();
        if (n > 0.0) CHECK(n == doctest::Approx(1.0).epsilon(1e-12));
      }
      const Partition p = partition_from_field(d, s);
      CHECK_NOTHROW(validate_partition(d, Partition{p}));
      for (int j = 0; j < 16; ++j) {
        for (int i = 0; i < 16; ++i) {
          const std::size_t g = d.index(i, j);
          const int l = p.labels[g];
          if (s.components[static_cast<std::size_t>(l)][g] == 0.0) {
            for (const auto& c : s.components) CHECK(c[g] == 0.0);
          }
        }
      }
    }
  }

  TEST_CASE("nearest fill covers every inside cell") {
    const GridDomain d = build_domain(ShapeSpec::disk(1.0), 48);
    std::vector<int> labels(d.size(), kUnassigned);
    std::size_t first = 0;
    while (!d.inside(first)) ++first;
    labels[first] = 0;
    fill_nearest_labels(d, labels);
    for (std::size_t g = 0; g < d.size(); ++g) CHECK(labels[g] == (d.inside(g) ? 0 : kUnassigned));
  }

  TEST_CASE("voronoi starts are deterministic and complete") {
    const GridDomain d = build_domain(ShapeSpec::disk(1.0), 64);
    const Partition a = voronoi_partition(d, 7, 42, 5);
    const Partition b = voronoi_partition(d, 7, 42, 5);
    CHECK(a == b);
    CHECK_NOTHROW(validate_partition(d, a));
    CHECK(voronoi_partition(d, 7, 43, 5).labels != a.labels);
    CHECK_THROWS_AS(voronoi_partition(d, 0, 1), InvalidInput);
  }

  TEST_CASE("optimizer: deterministic, never worse than its starts, Faber-Krahn per part") {
    const GridDomain d = build_domain(ShapeSpec::unit_square(), 48);
    OptimizerOptions o = quick();
    o.initial_partitions.push_back(square_block_partition(d, 2));
    const OptimizerResult r = optimize_partition(d, 4, 5, o);
    const OptimizerResult again = optimize_partition(d, 4, 5, o);
    CHECK(r.partition == again.partition);
    CHECK(r.report.sum_lambda == again.report.sum_lambda);
    const double blocks = l1_energy(d, o.initial_partitions[0]).l1_normalized;
    CHECK(r.report.l1_normalized <= blocks + 1e-9);
    CHECK(r.report.l1_normalized == l1_energy(d, r.partition).l1_normalized);
    const auto sizes = r.partition.part_sizes();
    for (std::size_t j = 0; j < sizes.size(); ++j) {
      const double a = static_cast<double>(sizes[j]) * d.h() * d.h();
      CHECK(r.report.per_part_lambda[j] >= faber_krahn_lower_bound(a));
    }
    for (const auto& trace : r.accepted_energies) {
      for (std::size_t i = 1; i < trace.size(); ++i) CHECK(trace[i] < trace[i - 1]);
    }
  }

  TEST_CASE("optimizer improves a poor start") {
    const GridDomain d = build_domain(ShapeSpec::disk(1.0), 48);
    OptimizerOptions o = quick();
    o.restarts = 1;
    o.lloyd_iters = 0;
    const Partition start = voronoi_partition(d, 5, 9, 0);
    const OptimizerResult r = optimize_partition(d, 5, 9, o);
    CHECK(r.report.sum_lambda < l1_energy(d, start).sum_lambda);
    CHECK(r.best_seed == 9);
  }

  TEST_CASE("optimizer input checks") {
    const GridDomain d = build_domain(ShapeSpec::unit_square(), 32);
    CHECK_THROWS_AS(optimize_partition(d, 0, 1), InvalidInput);
    CHECK_THROWS_AS(optimize_partition(d, 100, 1), InvalidInput);
    OptimizerOptions o;
    o.initial_partitions.push_back(halves(d));
    CHECK_THROWS_AS(optimize_partition(d, 3, 1, o), InvalidInput);
  }

  TEST_CASE("grouping satisfies the scaling inequality") {
    const GridDomain d = build_domain(ShapeSpec::unit_square(), 48);
    OptimizerOptions o = quick();
    o.initial_partitions.push_back(square_block_partition(d, 3));
    const OptimizerResult r = optimize_partition(d, 9, 2, o);
    for (auto policy : {GroupPolicy::SmallestIntoNeighbor, GroupPolicy::LeastEnergy}) {
      for (int m = 2; m < 9; ++m) {
        CAPTURE(m);
        const Partition g = group_subdomains(d, r.partition, m, policy);
        CHECK(g.m == m);
        CHECK_NOTHROW(validate_partition(d, g));
        const double lm = l1_energy(d, g).l1_normalized;
        CHECK(lm <= (81.0 / (m * m)) * r.report.l1_normalized + 1e-9);
      }
    }
    CHECK_THROWS_AS(group_subdomains(d, r.partition, 9), InvalidInput);
    CHECK_THROWS_AS(group_subdomains(d, r.partition, 0), InvalidInput);
  }

  TEST_CASE("compact labels preserves order") {
    const GridDomain d = build_domain(ShapeSpec::unit_square(), 32);
    Partition p = halves(d);
    for (auto& l : p.labels) {
      if (l == 1) l = 4;
    }
    p.m = 5;
    compact_labels(p);
    CHECK(p.m == 2);
    CHECK(p == halves(d));
  }
}
