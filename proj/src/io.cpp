#include "specpart/io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

#include "specpart/errors.hpp"

namespace specpart {

namespace {

struct Graymap {
  int width = 0;
  int height = 0;
  int maxval = 0;
  std::string domain_id;
  std::vector<int> values;  // row-major, row 0 = bottom
};

void write_graymap(std::ostream& os, const GridDomain& d, const std::string& kind, int maxval,
                   const std::vector<int>& values) {
  os << "P2\n# specpart " << kind << "\n# domain " << d.id() << "\n" << d.width() << ' ' << d.height() << '\n' << maxval << '\n';
  for (int j = d.height() - 1; j >= 0; --j) {
    for (int i = 0; i < d.width(); ++i) {
      if (i) os << ' ';
      os << values[d.index(i, j)];
    }
    os << '\n';
  }
}

// Next whitespace-separated token, skipping '#' comments; comment bodies are
// passed to `on_comment`.
template <typename F>
bool next_token(std::istream& is, std::string& tok, F&& on_comment) {
  tok.clear();
  char c;
  while (is.get(c)) {
    if (c == '#') {
      std::string line;
      std::getline(is, line);
      on_comment(line);
      if (!tok.empty()) return true;
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!tok.empty()) return true;
      continue;
    }
    tok.push_back(c);
  }
  return !tok.empty();
}

int parse_int(const std::string& tok, const char* what) {
  std::size_t used = 0;
  int v = 0;
  try {
    v = std::stoi(tok, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != tok.size() || tok.empty()) throw InvalidInput(std::string("PGM: bad ") + what + " '" + tok + "'");
  return v;
}

Graymap read_graymap(std::istream& is) {
  Graymap g;
  auto comment = [&](const std::string& line) {
    const std::string key = " domain ";
    if (line.rfind(key, 0) == 0) g.domain_id = line.substr(key.size());
  };
  std::string tok;
  if (!next_token(is, tok, comment) || tok != "P2") throw InvalidInput("PGM: expected P2 magic");
  if (!next_token(is, tok, comment)) throw InvalidInput("PGM: missing width");
  g.width = parse_int(tok, "width");
  if (!next_token(is, tok, comment)) throw InvalidInput("PGM: missing height");
  g.height = parse_int(tok, "height");
  if (!next_token(is, tok, comment)) throw InvalidInput("PGM: missing maxval");
  g.maxval = parse_int(tok, "maxval");
  if (g.width < 1 || g.height < 1 || g.maxval < 1 || g.maxval > 65535) throw InvalidInput("PGM: bad header");
  g.values.assign(static_cast<std::size_t>(g.width) * static_cast<std::size_t>(g.height), 0);
  for (int j = g.height - 1; j >= 0; --j) {
    for (int i = 0; i < g.width; ++i) {
      if (!next_token(is, tok, comment)) throw InvalidInput("PGM: truncated pixel data");
      const int v = parse_int(tok, "pixel");
      if (v < 0 || v > g.maxval) throw InvalidInput("PGM: pixel value out of range");
      g.values[static_cast<std::size_t>(j) * static_cast<std::size_t>(g.width) + static_cast<std::size_t>(i)] = v;
    }
  }
  if (next_token(is, tok, comment)) throw InvalidInput("PGM: trailing data");
  return g;
}

void check_grid(const Graymap& g, const GridDomain& d) {
  if (g.width != d.width() || g.height != d.height())
    throw InvalidInput("PGM is " + std::to_string(g.width) + "x" + std::to_string(g.height) + ", domain grid is " +
                       std::to_string(d.width()) + "x" + std::to_string(d.height()));
  if (!g.domain_id.empty() && g.domain_id != d.id())
    throw InvalidInput("PGM belongs to domain '" + g.domain_id + "', not '" + d.id() + "'");
}

}  // namespace

void write_partition_pgm(std::ostream& os, const GridDomain& domain, const Partition& partition) {
  validate_partition(domain, partition);
  if (partition.m > 65535) throw InvalidInput("PGM holds at most 65535 labels");
  std::vector<int> v(partition.labels.size());
  for (std::size_t g = 0; g < v.size(); ++g) v[g] = partition.labels[g] + 1;
  write_graymap(os, domain, "partition m=" + std::to_string(partition.m), partition.m, v);
}

Partition read_partition_pgm(std::istream& is, const GridDomain& domain) {
  const Graymap g = read_graymap(is);
  check_grid(g, domain);
  Partition p;
  p.m = g.maxval;
  p.parent_id = domain.id();
  p.labels.resize(g.values.size());
  for (std::size_t c = 0; c < g.values.size(); ++c) p.labels[c] = g.values[c] - 1;
  validate_partition(domain, p);
  return p;
}

void write_mask_pgm(std::ostream& os, const GridDomain& domain, const SubdomainMask& mask) {
  if (mask.cells.size() != domain.size()) throw InvalidInput("mask does not match the domain grid");
  std::vector<int> v(mask.cells.begin(), mask.cells.end());
  write_graymap(os, domain, "mask", 1, v);
}

SubdomainMask read_mask_pgm(std::istream& is, const GridDomain& domain) {
  const Graymap g = read_graymap(is);
  check_grid(g, domain);
  if (g.maxval != 1) throw InvalidInput("mask PGM must have maxval 1");
  SubdomainMask m{std::vector<std::uint8_t>(g.values.size()), domain.id(), domain.h()};
  for (std::size_t c = 0; c < g.values.size(); ++c) {
    if (g.values[c] && !domain.inside(c)) throw InvalidInput("mask cell " + std::to_string(c) + " lies outside the domain");
    m.cells[c] = static_cast<std::uint8_t>(g.values[c]);
  }
  return m;
}

void write_eigenfunction_pgm(std::ostream& pgm, std::ostream& sidecar, const GridDomain& domain, const EigenResult& eig) {
  if (eig.eigfn.size() != domain.size()) throw InvalidInput("eigenfunction does not match the domain grid");
  const double top = *std::max_element(eig.eigfn.begin(), eig.eigfn.end());
  std::vector<int> v(eig.eigfn.size(), 0);
  if (top > 0.0) {
    for (std::size_t g = 0; g < v.size(); ++g) v[g] = static_cast<int>(std::lround(255.0 * std::max(0.0, eig.eigfn[g]) / top));
  }
  write_graymap(pgm, domain, "eigenfunction", 255, v);
  sidecar << std::setprecision(17) << "lambda1: " << eig.lambda1 << "\nresidual: " << eig.residual
          << "\niterations: " << eig.iterations << "\ncg_iterations: " << eig.cg_iterations << "\nmax_value: " << top << '\n';
}

void save_partition_pgm(const std::filesystem::path& path, const GridDomain& domain, const Partition& partition) {
  std::ofstream f(path);
  if (!f) throw InvalidInput("cannot write " + path.string());
  write_partition_pgm(f, domain, partition);
}

Partition load_partition_pgm(const std::filesystem::path& path, const GridDomain& domain) {
  std::ifstream f(path);
  if (!f) throw InvalidInput("cannot read " + path.string());
  return read_partition_pgm(f, domain);
}

}  // namespace specpart
