// Acceptance run: one PASS or FAIL line per criterion, exit status 1 if any
// criterion fails. Artifacts (sweep outputs, bounds, chain reports) are left
// under --out for inspection.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "specpart/constants.hpp"
#include "specpart/constructions.hpp"
#include "specpart/driver.hpp"
#include "specpart/eigensolver.hpp"
#include "specpart/glue.hpp"
#include "specpart/partition.hpp"
#include "specpart/simd.hpp"

namespace fs = std::filesystem;
using namespace specpart;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double rel_err(double value, double exact) { return std::abs(value - exact) / std::abs(exact); }

// Collects the failed sub-checks of one criterion with their measured values.
class Verdict {
 public:
  void check(bool ok, const std::string& what) {
    if (!ok) failures_.push_back(what);
  }
  void note(const std::string& s) { notes_.push_back(s); }
  bool ok() const { return failures_.empty(); }
  std::string text() const {
    std::ostringstream os;
    const auto& items = ok() ? notes_ : failures_;
    for (std::size_t i = 0; i < items.size(); ++i) os << (i ? "; " : "") << items[i];
    return os.str();
  }

 private:
  std::vector<std::string> failures_;
  std::vector<std::string> notes_;
};

std::string fmt(double v, int digits = 6) {
  std::ostringstream os;
  os << std::setprecision(digits) << v;
  return os.str();
}

struct Runner {
  int failed = 0;

  void run(int id, const std::string& title, double limit_s, const std::function<void(Verdict&)>& body) {
    Verdict v;
    const auto t0 = Clock::now();
    try {
      body(v);
    } catch (const std::exception& e) {
      v.check(false, std::string("exception: ") + e.what());
    }
    const double t = seconds_since(t0);
    v.check(t < limit_s, "runtime " + fmt(t, 4) + " s over " + fmt(limit_s, 4) + " s");
    if (!v.ok()) ++failed;
    std::cout << (v.ok() ? "PASS " : "FAIL ") << id << ' ' << title << " [" << std::fixed << std::setprecision(1) << t
              << " s]" << std::defaultfloat << ": " << v.text() << std::endl;
  }
};

Partition whole(const GridDomain& d) {
  Partition p{std::vector<int>(d.size(), kUnassigned), 1, d.id()};
  for (std::size_t g = 0; g < d.size(); ++g) {
    if (d.inside(g)) p.labels[g] = 0;
  }
  return p;
}

const SweepRecord* find(const std::vector<SweepRecord>& records, const std::string& shape, int m) {
  for (const auto& r : records) {
    if (r.shape == shape && r.m == m) return &r;
  }
  return nullptr;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"specpart acceptance run"};
  fs::path out = "acceptance_out";
  int jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  app.add_option("--out", out, "artifact directory");
  app.add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);
  fs::create_directories(out);
  std::cout << "kernels: " << simd::isa_name(simd::kernels().isa) << ", jobs: " << jobs << std::endl;

  Runner runner;
  const double two_pi2 = 2.0 * kPi * kPi;

  runner.run(1, "eigensolver on the unit square and the 1x1/2 rectangle", 20.0, [&](Verdict& v) {
    const struct {
      const char* name;
      ShapeSpec shape;
      double exact;
    } cases[] = {{"square", ShapeSpec::unit_square(), two_pi2}, {"rectangle", ShapeSpec::rectangle(1.0, 0.5), 5.0 * kPi * kPi}};
    for (const auto& c : cases) {
      const auto t0 = Clock::now();
      const GridDomain d = build_domain(c.shape, 256);
      const EigenResult r = first_eigenpair(d, full_mask(d));
      const double t = seconds_since(t0), e = rel_err(r.lambda1, c.exact);
      v.check(e < 0.01, std::string(c.name) + " rel err " + fmt(e));
      v.check(t < 10.0, std::string(c.name) + " took " + fmt(t, 3) + " s");
      v.note(std::string(c.name) + " " + fmt(r.lambda1, 8) + " rel err " + fmt(e, 3) + " in " + fmt(t, 3) + " s");
    }
  });

  runner.run(2, "eigensolver on the radius-1 disk", 30.0, [&](Verdict& v) {
    const double j01sq = kBesselJ01 * kBesselJ01;
    const ShapeSpec disk = ShapeSpec::disk(kPi);
    const GridDomain coarse_d = build_domain(disk, 128);
    const double coarse = first_eigenpair(coarse_d, full_mask(coarse_d)).lambda1;
    const GridDomain fine_d = build_domain(disk, 256);
    const double fine = first_eigenpair(fine_d, full_mask(fine_d)).lambda1;
    const double extrap = richardson_extrapolate(coarse, fine);
    v.check(rel_err(fine, j01sq) < 0.025, "h=1/256 rel err " + fmt(rel_err(fine, j01sq)));
    v.check(rel_err(extrap, j01sq) < 0.01, "extrapolated rel err " + fmt(rel_err(extrap, j01sq)));
    v.note("h=1/256 " + fmt(fine, 8) + " (rel err " + fmt(rel_err(fine, j01sq), 3) + "), extrapolated " +
           fmt(extrap, 8) + " (rel err " + fmt(rel_err(extrap, j01sq), 3) + ")");
  });

  runner.run(3, "bounds report for the unit-area disk and hexagon", 120.0, [&](Verdict& v) {
    const BoundsReport r = bounds_report(256, 1e-9, jobs);
    std::ofstream f(out / "bounds.txt");
    write_bounds(f, r);
    v.check(r.disk_relative_error < 0.01, "disk rel err " + fmt(r.disk_relative_error));
    v.check(r.hexagon_extrapolated >= 18.3 && r.hexagon_extrapolated <= 18.9,
            "hexagon " + fmt(r.hexagon_extrapolated) + " outside [18.3, 18.9]");
    v.check(r.ordering_ok && r.disk_extrapolated < r.hexagon_extrapolated, "disk not below hexagon");
    v.note("disk " + fmt(r.disk_extrapolated, 7) + " (rel err " + fmt(r.disk_relative_error, 3) + "), hexagon " +
           fmt(r.hexagon_extrapolated, 7));
  });

  runner.run(4, "square copies certificate at m = 4 and 9", 300.0, [&](Verdict& v) {
    const GridDomain d = build_domain(ShapeSpec::unit_square(), 240);
    const Partition base = whole(d);
    for (int k : {2, 3}) {
      const Partition tiling = tile_square_copies(d, base, k);
      const double tile_l1 = l1_energy(d, tiling).l1_normalized;
      OptimizerOptions opts;
      opts.restarts = 8;
      opts.jobs = jobs;
      opts.initial_partitions = {tiling};
      const OptimizerResult opt = optimize_partition(d, k * k, 1, opts);
      const double opt_l1 = opt.report.l1_normalized;
      v.check(rel_err(tile_l1, two_pi2) < 0.02, "k=" + std::to_string(k) + " tiling rel err " + fmt(rel_err(tile_l1, two_pi2)));
      v.check(opt_l1 <= tile_l1 + 1e-9,
              "m=" + std::to_string(k * k) + " optimizer " + fmt(opt_l1, 12) + " above tiling " + fmt(tile_l1, 12));
      v.note("m=" + std::to_string(k * k) + " tiling " + fmt(tile_l1, 8) + " optimizer " + fmt(opt_l1, 8));
    }
  });

  // One sweep feeds criteria 5 through 9; its runtime counts toward 6.
  RunConfig cfg;
  cfg.shapes = {"square", "disk"};
  cfg.resolution = 256;
  cfg.m_list = {1, 2, 4, 9, 16, 25};
  cfg.optimizer.restarts = 8;
  cfg.jobs = jobs;
  cfg.out_dir = out / "sweep";
  SweepResult sweep;
  double sweep_seconds = 0.0;
  std::string sweep_error;
  {
    const auto t0 = Clock::now();
    try {
      sweep = run_sweep(cfg);
    } catch (const std::exception& e) {
      sweep_error = e.what();
    }
    sweep_seconds = seconds_since(t0);
  }

  runner.run(5, "grouping inequality from optimized M = 9, 16", 300.0, [&](Verdict& v) {
    int cases = 0;
    double worst = INFINITY;  // smallest slack (M/m)^2 l_M - l_m
    for (const std::string shape : {"square", "disk"}) {
      const GridDomain d = build_domain(parse_shape(shape, cfg.area, cfg.rect_a, cfg.rect_b).shape, cfg.resolution);
      for (int big_m : {9, 16}) {
        const SweepRecord* rec = find(sweep.records, shape, big_m);
        v.check(rec && rec->partition, shape + " M=" + std::to_string(big_m) + " missing from the sweep");
        if (!rec || !rec->partition) continue;
        for (GroupPolicy policy : {GroupPolicy::SmallestIntoNeighbor, GroupPolicy::LeastEnergy}) {
          for (int m = 2; m < big_m; ++m) {
            const Partition g = group_subdomains(d, *rec->partition, m, policy);
            const double lm = l1_energy(d, g).l1_normalized;
            const double bound = static_cast<double>(big_m * big_m) / (m * m) * rec->l1_normalized;
            v.check(g.m == m && lm <= bound + 1e-9, shape + " M=" + std::to_string(big_m) + " m=" + std::to_string(m) +
                                                        " l_m " + fmt(lm, 10) + " > " + fmt(bound, 10));
            worst = std::min(worst, bound - lm);
            ++cases;
          }
        }
      }
    }
    v.note(std::to_string(cases) + " groupings, smallest slack " + fmt(worst, 5));
  });

  runner.run(6, "Faber-Krahn per part across the square and disk sweep", 60.0, [&](Verdict& v) {
    v.check(sweep_error.empty(), "sweep failed: " + sweep_error);
    v.check(sweep_seconds < 1200.0, "sweep took " + fmt(sweep_seconds, 4) + " s");
    double worst = INFINITY;
    for (const auto& r : sweep.records) {
      const std::string tag = r.shape + " m=" + std::to_string(r.m);
      v.check(r.error.empty(), tag + ": " + r.error);
      if (!r.error.empty()) continue;
      v.check(r.fk_ratio_min >= 0.95, tag + " ratio " + fmt(r.fk_ratio_min));
      worst = std::min(worst, r.fk_ratio_min);
    }
    v.check(sweep.records.size() == 12, "expected 12 sweep rows, got " + std::to_string(sweep.records.size()));
    v.note("smallest ratio " + fmt(worst, 5) + " over " + std::to_string(sweep.records.size()) + " runs, sweep " + fmt(sweep_seconds, 4) + " s");
  });

  runner.run(7, "cut-and-glue suite on optimized squares m = 9, 16, 25", 600.0, [&](Verdict& v) {
    const GridDomain d = build_domain(ShapeSpec::unit_square(), cfg.resolution);
    StripConfig strip;
    strip.gamma_x = 0.5;
    strip.delta = 0.1;
    strip.epsilon = 0.2;
    const double factor = (1.0 - strip.epsilon / 4) * (1.0 - strip.epsilon / 5) / (1.0 + strip.epsilon / 5);
    for (int m : {9, 16, 25}) {
      const SweepRecord* rec = find(sweep.records, "square", m);
      const std::string tag = "m=" + std::to_string(m);
      v.check(rec && rec->partition, tag + " missing from the sweep");
      if (!rec || !rec->partition) continue;
      const GlueRun run = glue_verify(d, *rec->partition, strip, 1e-7, jobs);
      const ChainReport& r = run.report;
      {
        std::ofstream f(out / ("chain_report_m" + std::to_string(m) + ".txt"));
        write_chain_report(f, r, strip);
        std::ofstream p(out / ("chain_parts_m" + std::to_string(m) + ".csv"));
        write_part_csv(p, run.classification);
      }
      v.check(r.endpoints_ok, tag + " (a) half-mass offset not at an endpoint for some part");
      v.check(r.slope_ok && r.max_slope <= 8.0 / strip.delta, tag + " (b) slope " + fmt(r.max_slope));
      v.check(r.claim_ok, tag + " (c) triggered part above " + fmt(r.claim_constant));
      v.check(r.supports_ok && r.cut_ok, tag + " (d) supports overlap the far side");
      v.check(r.counts_ok && r.m1 + r.m2 == m - r.count_d, tag + " (e) m1 + m2 != m - #D");
      v.check(r.convexity_ok, tag + " (f) convexity step");
      v.check(r.chain_ok && r.factor_ok && std::abs(r.factor - factor) < 1e-12, tag + " (g) chain ratio " + fmt(r.chain_ratio));
      v.note(tag + " #D=" + std::to_string(r.count_d) + " m1=" + std::to_string(r.m1) + " m2=" + std::to_string(r.m2) +
             " slope " + fmt(r.max_slope, 4) + " chain ratio " + fmt(r.chain_ratio, 5));
    }
    v.note("factor " + fmt(factor, 5) + ", claim constant " + fmt(strip.claim_constant()));
  });

  runner.run(8, "trend along m on the square, square and disk at m = 25", 5.0, [&](Verdict& v) {
    double prev = NAN;
    std::string trail;
    for (int m : {1, 4, 9, 16, 25}) {
      const SweepRecord* rec = find(sweep.records, "square", m);
      v.check(rec && rec->error.empty(), "square m=" + std::to_string(m) + " missing");
      if (!rec || !rec->error.empty()) return;
      if (!std::isnan(prev)) {
        v.check(rec->l1_normalized <= prev * 1.02,
                "square m=" + std::to_string(m) + " " + fmt(rec->l1_normalized) + " above " + fmt(prev) + " + 2%");
      }
      prev = rec->l1_normalized;
      trail += (trail.empty() ? "" : " ") + fmt(prev, 6);
    }
    for (const std::string shape : {"square", "disk"}) {
      const SweepRecord* rec = find(sweep.records, shape, 25);
      v.check(rec && rec->error.empty(), shape + " m=25 missing");
      if (!rec || !rec->error.empty()) continue;
      v.check(rec->l1_normalized >= 17.5 && rec->l1_normalized <= 22.0,
              shape + " m=25 " + fmt(rec->l1_normalized) + " outside [17.5, 22]");
      trail += "; " + shape + " m=25 " + fmt(rec->l1_normalized, 6);
    }
    v.note("square l1 " + trail);
  });

  runner.run(9, "byte-identical sweep.csv on a repeated sweep", 1200.0, [&](Verdict& v) {
    RunConfig again = cfg;
    again.out_dir = out / "sweep_repeat";
    run_sweep(again);
    const std::string a = slurp(cfg.out_dir / "sweep.csv"), b = slurp(again.out_dir / "sweep.csv");
    v.check(!a.empty(), "empty sweep.csv");
    v.check(a == b, "sweep.csv differs between runs");
    v.note(std::to_string(a.size()) + " bytes identical");
  });

  std::cout << (runner.failed ? "FAILED " : "ALL PASSED ") << 9 - runner.failed << "/9" << std::endl;
  return runner.failed ? 1 : 0;
}
