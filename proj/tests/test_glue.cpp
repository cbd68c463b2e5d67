#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "specpart/constants.hpp"
#include "specpart/errors.hpp"
#include "specpart/glue.hpp"

using namespace specpart;

namespace {

Partition by_column(const GridDomain& d, std::initializer_list<int> cuts) {
  Partition p{std::vector<int>(d.size(), kUnassigned), static_cast<int>(cuts.size()) + 1, d.id()};
  for (std::size_t g = 0; g < d.size(); ++g) {
    if (!d.inside(g)) continue;
    int l = 0;
    for (int c : cuts) l += d.col(g) >= c;
    p.labels[g] = l;
  }
  return p;
}

// Three parts on the 128 grid: a left block with a thin arm reaching across
// the strip, a right block with an arm reaching back, and the band between.
Partition arms(const GridDomain& d) {
  Partition p = by_column(d, {56, 72});
  for (int j = 60; j < 68; ++j) {
    for (int i = 56; i < 80; ++i) p.labels[d.index(i, j)] = 0;
  }
  for (int j = 20; j < 28; ++j) {
    for (int i = 48; i < 72; ++i) p.labels[d.index(i, j)] = 2;
  }
  return p;
}

}  // namespace

TEST_SUITE("glue") {
  TEST_CASE("strip configuration") {
    const GridDomain d = build_domain(ShapeSpec::unit_square(), 128);
    StripConfig cfg;
    CHECK_NOTHROW(cfg.validate(d));
    CHECK(cfg.claim_constant() == doctest::Approx(320000.0));
    cfg.gamma_x = 0.5 + 0.3 / 128;
    CHECK_THROWS_AS(cfg.validate(d), InvalidInput);
    cfg = {};
    cfg.gamma_x = 1.0;
    CHECK_THROWS_AS(cfg.validate(d), InvalidInput);
    cfg = {};
    cfg.epsilon = 1.0;
    CHECK_THROWS_AS(cfg.validate(d), InvalidInput);
    cfg = {};
    cfg.delta = 2.0 / 128;
    CHECK_THROWS_AS(cfg.validate(d), InvalidInput);
  }

  TEST_CASE("half-mass offsets exist at the endpoints for every function") {
    const GridDomain d = build_domain(ShapeSpec::unit_square(), 128);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (double delta : {0.1, 0.0625, 0.2}) {
      StripConfig cfg;
      cfg.delta = delta;
      for (int trial = 0; trial < 200; ++trial) {
        // Random nonnegative bumps, some concentrated inside the strip.
        std::vector<double> f(d.size(), 0.0);
        const int bumps = 1 + trial % 4;
        for (int b = 0; b < bumps; ++b) {
          const double cx = 0.5 + (u01(rng) - 0.5) * (trial % 2 ? 0.15 : 0.9);
          const double cy = u01(rng);
          const double w = 0.005 + 0.1 * u01(rng);
          for (std::size_t g = 0; g < d.size(); ++g) {
            const double dx = d.cell_x(d.col(g)) - cx, dy = d.cell_y(d.row(g)) - cy;
            f[g] += std::exp(-(dx * dx + dy * dy) / (w * w));
          }
        }
        const OffsetChoice o = select_half_mass_offset(d, f, cfg);
        CHECK(o.endpoint_ok);
        CHECK(o.r >= -delta / 2 - 1e-12);
        CHECK(o.r <= 1e-12);
        CHECK(o.half_mass <= 0.5 * o.total_mass * (1.0 + 1e-12));
      }
    }
  }

  TEST_CASE("cut-off is bounded by 8/delta and vanishes on its column") {
    const GridDomain d = build_domain(ShapeSpec::unit_square(), 256);
    StripConfig cfg;
    for (int i = 0; i <= 12; ++i) {
      const double r = -cfg.delta / 2 + i * d.h();
      const Cutoff c = build_cutoff(d, std::min(r, 0.0), cfg);
      CHECK(c.max_slope <= 8.0 / cfg.delta);
      for (std::size_t g = 0; g < d.size(); ++g) {
        CHECK(c.xi[g] >= 0.0);
        CHECK(c.xi[g] <= 1.0);
        if (d.col(g) == c.cut_col) CHECK(c.xi[g] == 0.0);
        if (std::abs(d.cell_x(d.col(g)) - 0.5) > cfg.delta) CHECK(c.xi[g] == 1.0);
      }
    }
    CHECK_THROWS_AS(build_cutoff(d, 0.1, cfg), InvalidInput);
    const GridDomain coarse = build_domain(ShapeSpec::unit_square(), 64);
    CHECK_THROWS_AS(build_cutoff(coarse, 0.0, cfg), InvalidInput);
  }

  TEST_CASE("parts on one side each: v and w are copies and the ratio is 1 + eps/5") {
    const GridDomain d = build_domain(ShapeSpec::unit_square(), 128);
    const Partition p = by_column(d, {32, 64, 96});
    StripConfig cfg;
    const GlueRun run = glue_verify(d, p, cfg, 1e-10);
    const ChainReport& r = run.report;
    CHECK(r.count_a == 2);
    CHECK(r.count_b == 2);
    CHECK(r.count_c == 0);
    CHECK(r.m1 == 2);
    CHECK(r.m2 == 2);
    CHECK(r.chain_ratio == doctest::Approx(1.0 + cfg.epsilon / 5).epsilon(1e-12));
    CHECK(r.alpha == doctest::Approx(0.5));
    CHECK(r.all_ok());
    for (std::size_t q = 0; q < 2; ++q) {
      const auto& src = run.eigs[static_cast<std::size_t>(run.split.v_source[q])].eigfn;
      for (std::size_t g = 0; g < d.size(); ++g) CHECK(run.split.v.components[q][g] == doctest::Approx(src[g]).epsilon(1e-12));
    }
  }

  TEST_CASE("straddling parts: the arms are cut and kept on their main side") {
    const GridDomain d = build_domain(ShapeSpec::unit_square(), 128);
    const Partition p = arms(d);
    StripConfig cfg;
    const GlueRun run = glue_verify(d, p, cfg, 1e-10);
    const Classification& c = run.classification;
    REQUIRE(c.parts.size() == 3);
    CHECK(c.parts[0].cls == PartClass::C);
    CHECK(c.parts[2].cls == PartClass::C);
    CHECK_FALSE(c.parts[0].in_d);
    CHECK_FALSE(c.parts[2].in_d);
    CHECK(c.parts[0].side == Side::V);
    CHECK(c.parts[2].side == Side::W);
    for (const auto& part : c.parts) {
      if (part.cls != PartClass::C) continue;
      // The cut-off only raises the Rayleigh quotient.
      CHECK(part.claim.ratio >= part.lambda1 * (1.0 - 1e-9));
      if (!part.in_d) CHECK(part.side == (part.tau1 <= part.tau2 ? Side::V : Side::W));
      CHECK(part.claim.triggered == part.in_d);
      if (!part.in_d) CHECK(std::min(part.tau1, part.tau2) <= (1.0 + cfg.epsilon / 5) * part.lambda1 * (1.0 + 1e-9));
    }
    const ChainReport& r = run.report;
    CHECK(r.count_e >= 1);
    CHECK(r.count_f >= 1);
    CHECK(r.m1 + r.m2 == r.m - r.count_d);
    CHECK(r.supports_ok);
    CHECK(r.cut_ok);
    CHECK(r.convexity_ok);
    CHECK(r.slope_ok);
    CHECK(r.endpoints_ok);
    CHECK(r.chain_ok);
    CHECK(r.lhs >= r.line1 * (1.0 - 1e-12));
    CHECK(r.line1 >= r.line2 * (1.0 - 1e-12));
    CHECK(r.line2 >= r.mid * (1.0 - 1e-12));
  }

  TEST_CASE("support separation holds cell by cell") {
    const GridDomain d = build_domain(ShapeSpec::disk(1.0), 128);
    const Partition p = by_column(d, {40, 80});
    StripConfig cfg;
    const GlueRun run = glue_verify(d, p, cfg);
    auto x = [&](std::size_t g) { return d.cell_x(d.col(g)) - cfg.gamma_x; };
    for (const auto& comp : run.split.v.components) {
      for (std::size_t g = 0; g < d.size(); ++g) {
        if (comp[g] != 0.0) CHECK(x(g) < cfg.delta / 2);
      }
    }
    for (const auto& comp : run.split.w.components) {
      for (std::size_t g = 0; g < d.size(); ++g) {
        if (comp[g] != 0.0) CHECK(x(g) > -cfg.delta / 2);
      }
    }
    CHECK(run.report.supports_ok);
    CHECK(run.report.counts_ok);
  }

  TEST_CASE("final factor arithmetic and the count bound") {
    const GridDomain d = build_domain(ShapeSpec::unit_square(), 128);
    StripConfig cfg;
    const ChainReport r = glue_verify(d, by_column(d, {64}), cfg).report;
    CHECK(r.factor == doctest::Approx(0.95 * 0.96 / 1.04));
    CHECK(r.factor_ok);
    CHECK(r.factor >= 1.0 - cfg.epsilon);
    CHECK(r.count_bound == static_cast<int>(std::ceil(640.0 / (kDiskUnitAreaLambda * 0.2 * 0.01))));
    CHECK(r.count_ok);
  }

  TEST_CASE("convexity check is exact") {
    // m1^2 / alpha + m2^2 / (1 - alpha) >= (m1 + m2)^2 with equality at alpha = m1 / (m1 + m2).
    const GridDomain d = build_domain(ShapeSpec::unit_square(), 128);
    StripConfig cfg;
    const ChainReport r = glue_verify(d, by_column(d, {64}), cfg).report;
    CHECK(r.m1 == 1);
    CHECK(r.m2 == 1);
    CHECK(r.alpha == 0.5);
    CHECK(r.convexity_ok);
  }

  TEST_CASE("report and CSV serialization") {
    const GridDomain d = build_domain(ShapeSpec::unit_square(), 128);
    StripConfig cfg;
    const GlueRun run = glue_verify(d, arms(d), cfg);
    std::ostringstream rep, csv;
    write_chain_report(rep, run.report, cfg);
    write_part_csv(csv, run.classification);
    CHECK(rep.str().find("m: 3\n") != std::string::npos);
    CHECK(rep.str().find("verdict: ") != std::string::npos);
    std::istringstream lines(csv.str());
    std::string line;
    std::getline(lines, line);
    CHECK(line == "label,class,in_d,lambda1,r,endpoint_ok,ratio,triggered,tau1,tau2,assignment");
    int rows = 0;
    while (std::getline(lines, line)) {
      ++rows;
      CHECK(std::count(line.begin(), line.end(), ',') == 10);
    }
    CHECK(rows == 3);
  }
}
