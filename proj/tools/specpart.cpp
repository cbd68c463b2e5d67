// specpart: eigenvalues, optimal partitions, constructions, sweeps, bounds and
// cut-and-glue checks from one INI configuration.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "specpart/driver.hpp"
#include "specpart/errors.hpp"
#include "specpart/simd.hpp"

namespace {

enum Exit { kOk = 0, kUsage = 1, kNumerical = 2 };

struct Flags {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
};

specpart::RunConfig resolve(const Flags& f) {
  specpart::RunConfig cfg = f.config.empty() ? specpart::RunConfig{} : specpart::load_run_config(f.config);
  if (!f.out.empty()) cfg.out_dir = f.out;
  if (f.seed) cfg.seed = *f.seed;
  if (f.jobs) cfg.jobs = *f.jobs;
  cfg.validate();
  return cfg;
}

// Worst failure among the rows: numerical beats invalid input.
int record_status(const std::vector<specpart::SweepRecord>& records) {
  int status = kOk;
  for (const auto& r : records) {
    if (r.error.empty()) continue;
    std::cerr << "warning: " << r.shape << " m=" << r.m << ": " << r.error << '\n';
    status = std::max(status, r.error.rfind("numerical", 0) == 0 ? int{kNumerical} : int{kUsage});
  }
  return status;
}

void print_records(const std::vector<specpart::SweepRecord>& records) {
  std::cout << std::setprecision(8);
  for (const auto& r : records) {
    std::cout << r.shape << " m=" << r.m;
    if (r.error.empty()) {
      std::cout << " l1=" << r.l1_normalized << " seed=" << r.best_seed;
      if (!std::isnan(r.construction_bound)) std::cout << " construction=" << r.construction << ':' << r.construction_bound;
    } else {
      std::cout << " error";
    }
    std::cout << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral minimal partitions on uniform grids"};
  app.require_subcommand(1);
  Flags flags;
  app.add_option("--config", flags.config, "INI configuration file")->check(CLI::ExistingFile);
  app.add_option("--out", flags.out, "output directory (overrides [output] dir)");
  app.add_option("--seed", flags.seed, "random seed (overrides [sweep] seed)");
  app.add_option("--jobs", flags.jobs, "worker threads (overrides [output] jobs)")->check(CLI::PositiveNumber);

  auto* eigen = app.add_subcommand("eigen", "first Dirichlet eigenpair of each configured shape")->fallthrough();
  auto* partition = app.add_subcommand("partition", "optimized partitions over shapes and m")->fallthrough();
  auto* tile = app.add_subcommand("tile", "explicit constructions over shapes and m")->fallthrough();
  auto* sweep = app.add_subcommand("sweep", "optimizer with construction bounds, CSV and convergence plot")->fallthrough();
  auto* bounds = app.add_subcommand("bounds", "extrapolated disk and hexagon eigenvalues")->fallthrough();
  auto* glue = app.add_subcommand("glue-verify", "cut-and-glue energy chain on one partition")->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    const specpart::RunConfig cfg = resolve(flags);
    std::cerr << "kernels: " << specpart::simd::isa_name(specpart::simd::kernels().isa) << '\n';
    if (eigen->parsed()) {
      const auto res = specpart::run_eigen(cfg);
      const auto shapes = cfg.named_shapes();
      std::cout << std::setprecision(10);
      for (std::size_t s = 0; s < res.size(); ++s)
        std::cout << shapes[s].name << " lambda1=" << res[s].lambda1 << " residual=" << res[s].residual << '\n';
      return kOk;
    }
    if (partition->parsed()) {
      const auto records = specpart::run_partition(cfg);
      print_records(records);
      return record_status(records);
    }
    if (tile->parsed()) {
      std::cout << std::setprecision(8);
      for (const auto& r : specpart::run_tile(cfg)) {
        std::cout << r.shape << " m=" << r.m << ' ';
        if (r.name.empty()) {
          std::cout << "skipped: " << r.note << '\n';
        } else {
          std::cout << r.name << " l1=" << r.l1 << '\n';
        }
      }
      return kOk;
    }
    if (sweep->parsed()) {
      const auto result = specpart::run_sweep(cfg);
      print_records(result.records);
      return record_status(result.records);
    }
    if (bounds->parsed()) {
      const auto r = specpart::bounds_report(cfg.bounds_resolution, 1e-9, cfg.jobs);
      std::filesystem::create_directories(cfg.out_dir);
      std::ofstream f(cfg.out_dir / "bounds.txt");
      if (!f) throw specpart::InvalidInput("cannot write " + (cfg.out_dir / "bounds.txt").string());
      specpart::write_bounds(f, r);
      specpart::write_bounds(std::cout, r);
      return kOk;
    }
    if (glue->parsed()) {
      const auto run = specpart::run_glue_verify(cfg);
      std::cout << "m=" << run.report.m << " #D=" << run.report.count_d << " m1=" << run.report.m1
                << " m2=" << run.report.m2 << " chain_ratio=" << run.report.chain_ratio
                << " verdict: " << (run.report.all_ok() ? "holds" : "fails") << '\n';
      return kOk;
    }
  } catch (const specpart::InvalidInput& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const specpart::NumericalFailure& e) {
    std::cerr << "numerical failure: " << e.what() << " (best residual " << e.best_residual() << ")\n";
    return kNumerical;
  }
  return kUsage;
}
