#include "specpart/driver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "specpart/constants.hpp"
#include "specpart/constructions.hpp"
#include "specpart/errors.hpp"
#include "specpart/io.hpp"
#include "specpart/parallel.hpp"

namespace specpart {

namespace fs = std::filesystem;
namespace pt = boost::property_tree;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string num(double v, int precision = 12) {
  if (std::isnan(v)) return "";
  std::ostringstream os;
  os << std::setprecision(precision) << v;
  return os.str();
}

// CSV fields never contain commas, quotes or line breaks.
std::string field(std::string s) {
  for (char& c : s) {
    if (c == ',' || c == '\n' || c == '\r' || c == '"') c = ';';
  }
  return s;
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path);
  if (!f) throw InvalidInput("cannot write " + path.string());
  return f;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',' || std::isspace(static_cast<unsigned char>(c))) {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

template <typename T>
T parse_value(const std::string& key, const std::string& text) {
  std::istringstream is(text);
  T v{};
  is >> v;
  if (!is || !(is >> std::ws).eof()) throw InvalidInput("config key '" + key + "': cannot parse '" + text + "'");
  return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw InvalidInput("config key '" + key + "': expected a boolean, got '" + text + "'");
}

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"domain", {"shapes", "resolution", "area", "rect_a", "rect_b"}},
      {"sweep", {"m", "seed", "constructions", "base_resolution"}},
      {"optimizer", {"restarts", "max_outer_iters", "tol", "eigen_tol", "search_eigen_tol", "lloyd_iters"}},
      {"strip", {"gamma_x", "delta", "epsilon"}},
      {"glue", {"m", "partition"}},
      {"bounds", {"resolution"}},
      {"output", {"dir", "jobs"}},
  };
  return keys;
}

struct Task {
  std::size_t shape;
  int m;
};

// Outer threads over tasks, the rest handed to each optimizer.
std::pair<int, int> split_jobs(int jobs, std::size_t tasks) {
  const int outer = static_cast<int>(std::max<std::size_t>(1, std::min<std::size_t>(static_cast<std::size_t>(jobs), tasks)));
  return {outer, std::max(1, jobs / outer)};
}

double fk_ratio_min(const GridDomain& domain, const Partition& p, const EnergyReport& report) {
  const auto sizes = p.part_sizes();
  double lo = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < sizes.size(); ++j) {
    const double a = static_cast<double>(sizes[j]) * domain.h() * domain.h();
    lo = std::min(lo, report.per_part_lambda[j] * a / kDiskUnitAreaLambda);
  }
  return lo;
}

const Construction* best_of(const ConstructionSet& set) {
  const Construction* best = nullptr;
  for (const auto& c : set.items) {
    if (!best || c.l1 < best->l1) best = &c;
  }
  return best;
}

Partition whole(const GridDomain& d) {
  Partition p;
  p.m = 1;
  p.parent_id = d.id();
  p.labels.assign(d.size(), kUnassigned);
  for (std::size_t g = 0; g < d.size(); ++g) {
    if (d.inside(g)) p.labels[g] = 0;
  }
  return p;
}

int square_root_exact(int m) {
  const int k = static_cast<int>(std::lround(std::sqrt(static_cast<double>(m))));
  return k * k == m ? k : 0;
}

// Unit-square partition with n parts at the base resolution.
Partition base_partition(int n, const RunConfig& cfg) {
  const GridDomain unit = build_domain(ShapeSpec::unit_square(), cfg.base_resolution);
  if (n == 1) return whole(unit);
  OptimizerOptions opts = cfg.optimizer;
  opts.jobs = 1;
  opts.initial_partitions.clear();
  if (const int k = square_root_exact(n); k > 0) opts.initial_partitions.push_back(square_block_partition(unit, k));
  return optimize_partition(unit, n, cfg.seed, opts).partition;
}

void add_construction(ConstructionSet& set, std::string name, Partition p, const GridDomain& d, double tol,
                      double formula = kNaN) {
  const double l1 = l1_energy(d, p, tol).l1_normalized;
  set.items.push_back({std::move(name), std::move(p), d, l1, formula});
}

SweepRecord run_one(const GridDomain& domain, const NamedShape& shape, int m, const RunConfig& cfg, int inner_jobs,
                    bool with_constructions) {
  SweepRecord rec;
  rec.domain_id = domain.id();
  rec.shape = shape.name;
  rec.m = m;
  rec.construction_bound = kNaN;
  rec.fk_ratio_min = kNaN;
  rec.sum_lambda = kNaN;
  rec.l1_normalized = kNaN;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    OptimizerOptions opts = cfg.optimizer;
    opts.jobs = inner_jobs;
    if (with_constructions) {
      const ConstructionSet set = build_constructions(domain, shape, m, cfg);
      if (const Construction* best = best_of(set)) {
        rec.construction = best->name;
        rec.construction_bound = best->l1;
      }
      opts.initial_partitions = construction_starts(domain, set);
    }
    OptimizerResult res = optimize_partition(domain, m, cfg.seed, opts);
    rec.sum_lambda = res.report.sum_lambda;
    rec.l1_normalized = res.report.l1_normalized;
    rec.best_seed = res.best_seed;
    rec.fk_ratio_min = fk_ratio_min(domain, res.partition, res.report);
    rec.partition = std::move(res.partition);
  } catch (const NumericalFailure& e) {
    rec.error = std::string("numerical failure: ") + e.what();
  } catch (const InvalidInput& e) {
    rec.error = std::string("invalid input: ") + e.what();
  }
  rec.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

std::vector<SweepRecord> run_grid(const RunConfig& cfg, bool with_constructions) {
  cfg.validate();
  const auto shapes = cfg.named_shapes();
  std::vector<GridDomain> domains;
  for (const auto& s : shapes) domains.push_back(build_domain(s.shape, cfg.resolution));
  std::vector<Task> tasks;
  for (std::size_t s = 0; s < shapes.size(); ++s) {
    for (int m : cfg.m_list) tasks.push_back({s, m});
  }
  const auto [outer, inner] = split_jobs(cfg.jobs, tasks.size());
  std::vector<SweepRecord> records(tasks.size());
  parallel_for(tasks.size(), outer, [&](std::size_t i) {
    const Task& t = tasks[i];
    records[i] = run_one(domains[t.shape], shapes[t.shape], t.m, cfg, inner, with_constructions);
  });
  for (const auto& r : records) {
    if (!r.partition) continue;
    const auto s = std::find_if(shapes.begin(), shapes.end(), [&](const NamedShape& n) { return n.name == r.shape; });
    const GridDomain& d = domains[static_cast<std::size_t>(s - shapes.begin())];
    fs::create_directories(cfg.out_dir / r.shape);
    save_partition_pgm(cfg.out_dir / r.shape / ("partition_m" + std::to_string(r.m) + ".pgm"), d, *r.partition);
  }
  return records;
}

}  // namespace

NamedShape parse_shape(const std::string& name, double area, double rect_a, double rect_b) {
  if (name == "square") return {name, ShapeSpec::unit_square()};
  if (name == "disk") return {name, ShapeSpec::disk(area)};
  if (name == "hexagon") return {name, ShapeSpec::regular_hexagon(area)};
  if (name == "rectangle") return {name, ShapeSpec::rectangle(rect_a, rect_b)};
  throw InvalidInput("unknown shape '" + name + "' (square, disk, hexagon, rectangle)");
}

std::vector<NamedShape> RunConfig::named_shapes() const {
  std::vector<NamedShape> out;
  for (const auto& s : shapes) out.push_back(parse_shape(s, area, rect_a, rect_b));
  return out;
}

void RunConfig::validate() const {
  if (shapes.empty()) throw InvalidInput("no shapes configured");
  std::set<std::string> seen;
  for (const auto& s : shapes) {
    if (!seen.insert(s).second) throw InvalidInput("shape '" + s + "' listed twice");
  }
  if (!(area > 0.0)) throw InvalidInput("area must be positive");
  if (!(rect_a > 0.0) || !(rect_b > 0.0)) throw InvalidInput("rectangle sides must be positive");
  named_shapes();
  if (resolution < 32) throw InvalidInput("resolution must be >= 32");
  for (int m : m_list) {
    if (m < 1) throw InvalidInput("every m must be >= 1");
  }
  if (optimizer.restarts < 1) throw InvalidInput("restarts must be >= 1");
  if (optimizer.max_outer_iters < 0) throw InvalidInput("max_outer_iters must be >= 0");
  if (optimizer.lloyd_iters < 0) throw InvalidInput("lloyd_iters must be >= 0");
  if (!(optimizer.eigen_tol > 0.0) || !(optimizer.search_eigen_tol > 0.0) || !(optimizer.tol >= 0.0))
    throw InvalidInput("optimizer tolerances must be positive");
  if (base_resolution < 32) throw InvalidInput("base_resolution must be >= 32");
  if (glue_m < 1) throw InvalidInput("glue m must be >= 1");
  if (jobs < 1) throw InvalidInput("jobs must be >= 1");
}

RunConfig parse_run_config(std::istream& is) {
  const std::string text{std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw InvalidInput(std::string("config: ") + e.what());
  }
  RunConfig cfg;
  // The INI reader drops sections without keys; a bare [strip] still enables
  // the default strip.
  {
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
      const auto a = line.find_first_not_of(" \t"), b = line.find_last_not_of(" \t\r");
      if (a != std::string::npos && line.compare(a, b - a + 1, "[strip]") == 0) cfg.strip = StripConfig{};
    }
  }
  const auto& keys = known_keys();
  for (const auto& [section, body] : tree) {
    const auto ks = keys.find(section);
    if (ks == keys.end()) throw InvalidInput("config: unknown section [" + section + "]");
    if (!body.data().empty()) throw InvalidInput("config: key '" + section + "' outside a section");
    for (const auto& [key, value] : body) {
      if (!ks->second.count(key)) throw InvalidInput("config: unknown key '" + key + "' in [" + section + "]");
      const std::string full = section + "." + key;
      const std::string text = value.data();
      if (full == "domain.shapes") {
        cfg.shapes = split_list(text);
      } else if (full == "domain.resolution") {
        cfg.resolution = parse_value<int>(full, text);
      } else if (full == "domain.area") {
        cfg.area = parse_value<double>(full, text);
      } else if (full == "domain.rect_a") {
        cfg.rect_a = parse_value<double>(full, text);
      } else if (full == "domain.rect_b") {
        cfg.rect_b = parse_value<double>(full, text);
      } else if (full == "sweep.m") {
        cfg.m_list.clear();
        for (const auto& t : split_list(text)) cfg.m_list.push_back(parse_value<int>(full, t));
      } else if (full == "sweep.seed") {
        cfg.seed = parse_value<std::uint64_t>(full, text);
      } else if (full == "sweep.constructions") {
        cfg.constructions = parse_bool(full, text);
      } else if (full == "sweep.base_resolution") {
        cfg.base_resolution = parse_value<int>(full, text);
      } else if (full == "optimizer.restarts") {
        cfg.optimizer.restarts = parse_value<int>(full, text);
      } else if (full == "optimizer.max_outer_iters") {
        cfg.optimizer.max_outer_iters = parse_value<int>(full, text);
      } else if (full == "optimizer.tol") {
        cfg.optimizer.tol = parse_value<double>(full, text);
      } else if (full == "optimizer.eigen_tol") {
        cfg.optimizer.eigen_tol = parse_value<double>(full, text);
      } else if (full == "optimizer.search_eigen_tol") {
        cfg.optimizer.search_eigen_tol = parse_value<double>(full, text);
      } else if (full == "optimizer.lloyd_iters") {
        cfg.optimizer.lloyd_iters = parse_value<int>(full, text);
      } else if (section == "strip") {
        if (!cfg.strip) cfg.strip = StripConfig{};
        const double v = parse_value<double>(full, text);
        if (key == "gamma_x") cfg.strip->gamma_x = v;
        if (key == "delta") cfg.strip->delta = v;
        if (key == "epsilon") cfg.strip->epsilon = v;
      } else if (full == "glue.m") {
        cfg.glue_m = parse_value<int>(full, text);
      } else if (full == "glue.partition") {
        cfg.glue_partition = text;
      } else if (full == "bounds.resolution") {
        cfg.bounds_resolution = parse_value<int>(full, text);
      } else if (full == "output.dir") {
        cfg.out_dir = text;
      } else if (full == "output.jobs") {
        cfg.jobs = parse_value<int>(full, text);
      }
    }
  }
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw InvalidInput("cannot read config " + path.string());
  RunConfig cfg = parse_run_config(f);
  const fs::path base = path.parent_path();
  if (!cfg.glue_partition.empty() && cfg.glue_partition.is_relative()) cfg.glue_partition = base / cfg.glue_partition;
  return cfg;
}

ConstructionSet build_constructions(const GridDomain& domain, const NamedShape& shape, int m, const RunConfig& cfg) {
  ConstructionSet set;
  const double tol = cfg.optimizer.eigen_tol;
  const std::string at = " at m = " + std::to_string(m);
  const bool square = shape.shape.kind == ShapeKind::UnitSquare;

  if (square) {
    if (const int k = square_root_exact(m); k > 0) {
      if (domain.width() % k == 0) {
        add_construction(set, "square_copies", tile_square_copies(domain, whole(domain), k), domain, tol);
      } else {
        add_construction(set, "square_blocks", square_block_partition(domain, k), domain, tol);
      }
    }
  }

  if (m >= 4) {
    try {
      HexTiling hex = hexagon_tiling_partition(domain, m);
      add_construction(set, "hexagon", std::move(hex.partition), domain, tol);
    } catch (const InvalidInput& e) {
      set.notes.push_back("hexagon" + at + ": " + e.what());
    }
  }

  if (!square) {
    // Finest dyadic level whose inner cubes still number at most m + 1.
    std::optional<DyadicCover> cover;
    for (int level = 1; std::ldexp(1.0, -level) >= 4.0 * domain.h() * (1.0 - 1e-12); ++level) {
      const double cells = std::ldexp(1.0 / domain.h(), -level);
      if (std::abs(cells - std::round(cells)) > 1e-9) break;
      DyadicCover c = dyadic_approximation(domain, level);
      if (c.k() > static_cast<std::size_t>(m) + 1) break;
      if (c.k() >= 2) cover = std::move(c);
    }
    if (!cover) {
      set.notes.push_back("cube_fill" + at + ": no dyadic level with 2 <= k <= m + 1 inner cubes");
    } else {
      try {
        const auto [n, t] = cube_fill_counts(m, cover->k());
        std::map<int, Partition> bases;
        bases.emplace(n, base_partition(n, cfg));
        if (t > 0 && !bases.count(t)) bases.emplace(t, base_partition(t, cfg));
        const GridDomain unit = build_domain(ShapeSpec::unit_square(), cfg.base_resolution);
        const double ln = l1_energy(unit, bases.at(n), tol).l1_normalized;
        const double lt = t > 0 ? l1_energy(unit, bases.at(t), tol).l1_normalized : 0.0;
        const int resolution = static_cast<int>(std::lround(1.0 / domain.h()));
        CubeFill fill = cube_fill_partition(*cover, bases, n, t, resolution);
        add_construction(set, "cube_fill", std::move(fill.partition), fill.domain, tol,
                         cube_fill_bound(*cover, n, ln, t, lt));
      } catch (const InvalidInput& e) {
        set.notes.push_back("cube_fill" + at + ": " + e.what());
      }
    }
  }
  return set;
}

std::vector<Partition> construction_starts(const GridDomain& domain, const ConstructionSet& set) {
  std::vector<Partition> out;
  for (const auto& c : set.items) {
    out.push_back(c.domain.id() == domain.id() ? c.partition : extend_to_domain(c.domain, c.partition, domain));
  }
  return out;
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepRecord>& records) {
  os << "# specpart sweep v1\n";
  os << "domain_id,shape,m,sum_lambda,l1_normalized,best_seed,construction,construction_bound,fk_ratio_min,error\n";
  for (const auto& r : records) {
    os << field(r.domain_id) << ',' << field(r.shape) << ',' << r.m << ',' << num(r.sum_lambda, 15) << ','
       << num(r.l1_normalized, 15) << ',';
    if (r.partition) os << r.best_seed;
    os << ',' << field(r.construction) << ',' << num(r.construction_bound, 15) << ',' << num(r.fk_ratio_min, 15) << ','
       << field(r.error) << '\n';
  }
}

void write_timing_csv(std::ostream& os, const std::vector<SweepRecord>& records) {
  os << "# specpart sweep timing v1\n";
  os << "domain_id,shape,m,wall_ms\n";
  for (const auto& r : records) os << field(r.domain_id) << ',' << field(r.shape) << ',' << r.m << ',' << r.wall_ms << '\n';
}

void write_convergence_svg(std::ostream& os, const std::vector<SweepRecord>& records) {
  constexpr double W = 720, H = 480, L = 70, R = 160, T = 40, B = 60;
  std::map<std::string, std::vector<std::pair<int, double>>> series;
  std::vector<std::string> order;
  for (const auto& r : records) {
    if (!series.count(r.shape)) order.push_back(r.shape);
    auto& s = series[r.shape];
    if (!std::isnan(r.l1_normalized)) s.emplace_back(r.m, r.l1_normalized);
  }
  double x0 = 1, x1 = 2, y0 = std::min(kDiskUnitAreaLambda, kHexagonUnitAreaLambda);
  double y1 = std::max(kDiskUnitAreaLambda, kHexagonUnitAreaLambda);
  bool any = false;
  for (const auto& [name, pts] : series) {
    for (const auto& [m, v] : pts) {
      if (!any) x0 = x1 = m;
      any = true;
      x0 = std::min<double>(x0, m);
      x1 = std::max<double>(x1, m);
      y0 = std::min(y0, v);
      y1 = std::max(y1, v);
    }
  }
  if (x1 <= x0) x1 = x0 + 1;
  const double pad = 0.05 * (y1 - y0) + 0.1;
  y0 -= pad;
  y1 += pad;
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};

  os << std::fixed << std::setprecision(2);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W << ' '
     << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">normalized l1 energy versus m</text>\n";
  // Axes and ticks.
  os << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  std::set<int> xticks;
  for (const auto& [name, pts] : series) {
    for (const auto& p : pts) xticks.insert(p.first);
  }
  for (int m : xticks) {
    os << "<line x1=\"" << px(m) << "\" y1=\"" << H - B << "\" x2=\"" << px(m) << "\" y2=\"" << H - B + 5
       << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << px(m) << "\" y=\"" << H - B + 18 << "\" text-anchor=\"middle\">" << m << "</text>\n";
  }
  const double step = std::pow(10.0, std::floor(std::log10((y1 - y0) / 2.0)));
  for (double y = std::ceil(y0 / step) * step; y <= y1; y += step) {
    os << "<line x1=\"" << L - 5 << "\" y1=\"" << py(y) << "\" x2=\"" << L << "\" y2=\"" << py(y) << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << L - 8 << "\" y=\"" << py(y) + 4 << "\" text-anchor=\"end\">" << std::setprecision(step < 1 ? 1 : 0)
       << y << std::setprecision(2) << "</text>\n";
  }
  os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 15 << "\" text-anchor=\"middle\">m</text>\n";
  os << "<text transform=\"translate(18," << (T + H - B) / 2 << ") rotate(-90)\" text-anchor=\"middle\">l1 / m^2</text>\n";
  // Reference lines.
  const std::pair<double, const char*> refs[] = {{kDiskUnitAreaLambda, "disk pi j01^2"},
                                                 {kHexagonUnitAreaLambda, "hexagon"}};
  for (const auto& [v, label] : refs) {
    os << "<line x1=\"" << L << "\" y1=\"" << py(v) << "\" x2=\"" << W - R << "\" y2=\"" << py(v)
       << "\" stroke=\"gray\" stroke-dasharray=\"6,4\"/>\n";
    os << "<text x=\"" << W - R + 6 << "\" y=\"" << py(v) + 4 << "\" fill=\"gray\">" << label << ' '
       << std::setprecision(3) << v << std::setprecision(2) << "</text>\n";
  }
  for (std::size_t s = 0; s < order.size(); ++s) {
    const auto& pts = series[order[s]];
    const char* color = colors[s % std::size(colors)];
    if (pts.size() > 1) {
      os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
      for (std::size_t i = 0; i < pts.size(); ++i) os << (i ? " " : "") << px(pts[i].first) << ',' << py(pts[i].second);
      os << "\"/>\n";
    }
    for (const auto& [m, v] : pts)
      os << "<circle cx=\"" << px(m) << "\" cy=\"" << py(v) << "\" r=\"3.5\" fill=\"" << color << "\"/>\n";
    const double ly = T + 20 + 18.0 * static_cast<double>(s);
    os << "<line x1=\"" << W - R + 6 << "\" y1=\"" << ly << "\" x2=\"" << W - R + 26 << "\" y2=\"" << ly << "\" stroke=\""
       << color << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << W - R + 30 << "\" y=\"" << ly + 4 << "\">" << order[s] << "</text>\n";
  }
  os << "</svg>\n";
  os.unsetf(std::ios::floatfield);
}

SweepResult run_sweep(const RunConfig& cfg) {
  SweepResult out;
  out.records = run_grid(cfg, cfg.constructions);
  {
    auto f = open_out(cfg.out_dir / "sweep.csv");
    write_sweep_csv(f, out.records);
  }
  {
    auto f = open_out(cfg.out_dir / "sweep_timing.csv");
    write_timing_csv(f, out.records);
  }
  auto f = open_out(cfg.out_dir / "convergence.svg");
  write_convergence_svg(f, out.records);
  return out;
}

std::vector<SweepRecord> run_partition(const RunConfig& cfg) {
  auto records = run_grid(cfg, false);
  auto f = open_out(cfg.out_dir / "partition.csv");
  write_sweep_csv(f, records);
  return records;
}

std::vector<TileRow> run_tile(const RunConfig& cfg) {
  cfg.validate();
  std::vector<TileRow> rows;
  for (const auto& shape : cfg.named_shapes()) {
    const GridDomain domain = build_domain(shape.shape, cfg.resolution);
    for (int m : cfg.m_list) {
      const ConstructionSet set = build_constructions(domain, shape, m, cfg);
      fs::create_directories(cfg.out_dir / shape.name);
      for (const auto& c : set.items) {
        rows.push_back({shape.name, m, c.name, c.l1, c.formula_bound, ""});
        save_partition_pgm(cfg.out_dir / shape.name / ("tile_" + c.name + "_m" + std::to_string(m) + ".pgm"), c.domain,
                           c.partition);
      }
      for (const auto& note : set.notes) rows.push_back({shape.name, m, "", kNaN, kNaN, note});
    }
  }
  auto f = open_out(cfg.out_dir / "tile.csv");
  f << "# specpart tile v1\nshape,m,construction,l1_normalized,formula_bound,note\n";
  for (const auto& r : rows)
    f << field(r.shape) << ',' << r.m << ',' << field(r.name) << ',' << num(r.l1, 15) << ',' << num(r.formula_bound, 15) << ','
      << field(r.note) << '\n';
  return rows;
}

std::vector<EigenResult> run_eigen(const RunConfig& cfg) {
  cfg.validate();
  const auto shapes = cfg.named_shapes();
  std::vector<EigenResult> out(shapes.size());
  std::vector<std::optional<GridDomain>> domains(shapes.size());
  parallel_for(shapes.size(), cfg.jobs, [&](std::size_t s) {
    domains[s] = build_domain(shapes[s].shape, cfg.resolution);
    out[s] = first_eigenpair(*domains[s], full_mask(*domains[s]), cfg.optimizer.eigen_tol);
  });
  auto f = open_out(cfg.out_dir / "eigen.csv");
  f << "# specpart eigen v1\nshape,domain_id,resolution,area,lambda1,lambda1_times_area,residual,iterations,cg_iterations\n";
  for (std::size_t s = 0; s < shapes.size(); ++s) {
    const double a = shapes[s].shape.exact_area();
    f << shapes[s].name << ',' << field(domains[s]->id()) << ',' << cfg.resolution << ',' << num(a, 15) << ','
      << num(out[s].lambda1, 15) << ',' << num(out[s].lambda1 * a, 15) << ',' << num(out[s].residual, 6) << ','
      << out[s].iterations << ',' << out[s].cg_iterations << '\n';
    auto pgm = open_out(cfg.out_dir / ("eigen_" + shapes[s].name + ".pgm"));
    auto side = open_out(cfg.out_dir / ("eigen_" + shapes[s].name + ".txt"));
    write_eigenfunction_pgm(pgm, side, *domains[s], out[s]);
  }
  return out;
}

BoundsReport bounds_report(int resolution, double eigen_tol, int jobs) {
  if (resolution < 256) throw InvalidInput("bounds report needs resolution >= 256");
  const ShapeSpec shapes[] = {ShapeSpec::disk(1.0), ShapeSpec::regular_hexagon(1.0)};
  double values[2][2];
  parallel_for(4, jobs, [&](std::size_t i) {
    const GridDomain d = build_domain(shapes[i / 2], resolution << (i % 2));
    values[i / 2][i % 2] = first_eigenpair(d, full_mask(d), eigen_tol).lambda1;
  });
  BoundsReport r;
  r.resolution = resolution;
  r.disk_coarse = values[0][0];
  r.disk_fine = values[0][1];
  r.disk_extrapolated = richardson_extrapolate(r.disk_coarse, r.disk_fine);
  r.hexagon_coarse = values[1][0];
  r.hexagon_fine = values[1][1];
  r.hexagon_extrapolated = richardson_extrapolate(r.hexagon_coarse, r.hexagon_fine);
  r.disk_exact = kDiskUnitAreaLambda;
  r.hexagon_reference = kHexagonUnitAreaLambda;
  r.disk_relative_error = std::abs(r.disk_extrapolated - r.disk_exact) / r.disk_exact;
  r.ordering_ok = r.disk_extrapolated < r.hexagon_extrapolated;
  return r;
}

void write_bounds(std::ostream& os, const BoundsReport& r) {
  os << std::setprecision(12);
  os << "resolution: " << r.resolution << "\nfine_resolution: " << 2 * r.resolution << '\n';
  os << "lambda1_disk_coarse: " << r.disk_coarse << "\nlambda1_disk_fine: " << r.disk_fine
     << "\nlambda1_disk: " << r.disk_extrapolated << "\nlambda1_disk_exact: " << r.disk_exact
     << "\nlambda1_disk_relative_error: " << r.disk_relative_error << '\n';
  os << "lambda1_hexagon_coarse: " << r.hexagon_coarse << "\nlambda1_hexagon_fine: " << r.hexagon_fine
     << "\nlambda1_hexagon: " << r.hexagon_extrapolated << "\nlambda1_hexagon_reference: " << r.hexagon_reference << '\n';
  os << "ordering: " << (r.ordering_ok ? "disk < hexagon" : "violated") << '\n';
}

GlueRun run_glue_verify(const RunConfig& cfg) {
  cfg.validate();
  if (!cfg.strip) throw InvalidInput("glue-verify needs a [strip] section");
  const NamedShape shape = cfg.named_shapes().front();
  const GridDomain domain = build_domain(shape.shape, cfg.resolution);
  cfg.strip->validate(domain);
  Partition p;
  if (!cfg.glue_partition.empty()) {
    p = load_partition_pgm(cfg.glue_partition, domain);
  } else {
    const SweepRecord rec = run_one(domain, shape, cfg.glue_m, cfg, cfg.jobs, cfg.constructions);
    if (!rec.partition) {
      if (rec.error.rfind("numerical", 0) == 0) throw NumericalFailure(rec.error);
      throw InvalidInput(rec.error);
    }
    p = *rec.partition;
  }
  GlueRun run = glue_verify(domain, p, *cfg.strip, cfg.optimizer.eigen_tol, cfg.jobs);
  fs::create_directories(cfg.out_dir);
  save_partition_pgm(cfg.out_dir / ("partition_m" + std::to_string(p.m) + ".pgm"), domain, p);
  {
    auto f = open_out(cfg.out_dir / "chain_report.txt");
    write_chain_report(f, run.report, *cfg.strip);
  }
  auto f = open_out(cfg.out_dir / "chain_parts.csv");
  write_part_csv(f, run.classification);
  return run;
}

}  // namespace specpart
