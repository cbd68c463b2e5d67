#include "specpart/constructions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>

#include "specpart/errors.hpp"

namespace specpart {

void TilingSpec::validate(int cubes) const {
  switch (kind) {
    case TilingKind::SquareCopies:
      if (k < 1) throw InvalidInput("square copies need k >= 1");
      break;
    case TilingKind::Hexagon:
      if (!(cell_area > 0.0)) throw InvalidInput("hexagon cell area must be positive");
      break;
    case TilingKind::CubeFill:
      if (n < 1) throw InvalidInput("cube fill needs n >= 1");
      if (t < 0) throw InvalidInput("cube fill needs t >= 0");
      if (cubes > 0 && t >= cubes - 1)
        throw InvalidInput("cube fill needs t < k - 1 (t = " + std::to_string(t) + ", k = " + std::to_string(cubes) + ")");
      break;
  }
}

namespace {

void require_unit_square(const GridDomain& d) {
  if (d.width() != d.height() || d.inside_count() != d.size() || d.first_col() != 0 || d.first_row() != 0)
    throw InvalidInput("expected the full unit-square grid, got " + d.id());
}

// Side length in cells of a full square grid holding `labels`.
int square_side(const Partition& p) {
  const auto side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(p.labels.size()))));
  if (static_cast<std::size_t>(side) * static_cast<std::size_t>(side) != p.labels.size())
    throw InvalidInput("base partition is not on a square grid");
  for (int l : p.labels) {
    if (l < 0 || l >= p.m) throw InvalidInput("base partition must label every cell of its square");
  }
  return side;
}

void require_nonempty(const Partition& p, const std::string& what) {
  const auto sizes = p.part_sizes();
  for (std::size_t j = 0; j < sizes.size(); ++j) {
    if (sizes[j] == 0) throw InvalidInput(what + ": part " + std::to_string(j) + " vanishes at this resolution");
  }
}

template <typename F>
void each_neighbor4(const GridDomain& d, std::size_t g, F&& f) {
  const int i = d.col(g), j = d.row(g);
  if (i > 0) f(g - 1);
  if (i + 1 < d.width()) f(g + 1);
  if (j > 0) f(g - static_cast<std::size_t>(d.width()));
  if (j + 1 < d.height()) f(g + static_cast<std::size_t>(d.width()));
}

std::set<int> adjacent_labels(const GridDomain& d, const std::vector<int>& labels, int l) {
  std::set<int> out;
  for (std::size_t g = 0; g < labels.size(); ++g) {
    if (labels[g] != l) continue;
    each_neighbor4(d, g, [&](std::size_t n) {
      if (labels[n] >= 0 && labels[n] != l) out.insert(labels[n]);
    });
  }
  return out;
}

struct HexLabels {
  std::vector<int> labels;
  int count = 0;
};

// Cells labeled by the flat-top hexagon (cube-rounded axial coordinates)
// containing their center; slivers are then merged into neighbours.
HexLabels hex_labels(const GridDomain& d, double cx, double cy, double cell_area) {
  const double s = std::sqrt(2.0 * cell_area / (3.0 * std::sqrt(3.0)));
  HexLabels out;
  out.labels.assign(d.size(), kUnassigned);
  std::map<std::pair<long, long>, int> ids;
  for (std::size_t g = 0; g < d.size(); ++g) {
    if (!d.inside(g)) continue;
    const double x = d.cell_x(d.col(g)) - cx;
    const double y = d.cell_y(d.row(g)) - cy;
    const double q = (2.0 / 3.0) * x / s;
    const double r = (-x / 3.0 + std::sqrt(3.0) / 3.0 * y) / s;
    const double z = -q - r;
    double rq = std::round(q), rr = std::round(r);
    const double rz = std::round(z);
    const double dq = std::abs(rq - q), dr = std::abs(rr - r), dz = std::abs(rz - z);
    if (dq > dr && dq > dz) {
      rq = -rr - rz;
    } else if (dr > dz) {
      rr = -rq - rz;
    }
    const auto key = std::make_pair(std::lround(rq), std::lround(rr));
    auto it = ids.find(key);
    if (it == ids.end()) it = ids.emplace(key, static_cast<int>(ids.size())).first;
    out.labels[g] = it->second;
  }
  int m = static_cast<int>(ids.size());

  const double h2 = d.h() * d.h();
  std::vector<std::size_t> size(static_cast<std::size_t>(m), 0);
  for (int l : out.labels) {
    if (l >= 0) ++size[static_cast<std::size_t>(l)];
  }
  std::vector<char> sliver(static_cast<std::size_t>(m), 0);
  bool any_full = false;
  for (int l = 0; l < m; ++l) {
    sliver[static_cast<std::size_t>(l)] = static_cast<double>(size[static_cast<std::size_t>(l)]) * h2 <
                                          kHexSliverFraction * cell_area;
    any_full = any_full || !sliver[static_cast<std::size_t>(l)];
  }
  if (any_full) {
    // Slivers merge into their lowest adjacent non-sliver; slivers touching only
    // slivers wait until a neighbour has been absorbed.
    for (bool changed = true; changed;) {
      changed = false;
      for (int l = 0; l < m; ++l) {
        if (!sliver[static_cast<std::size_t>(l)] || size[static_cast<std::size_t>(l)] == 0) continue;
        int into = -1;
        for (int b : adjacent_labels(d, out.labels, l)) {
          if (!sliver[static_cast<std::size_t>(b)]) {
            into = b;
            break;
          }
        }
        if (into < 0) continue;
        for (int& v : out.labels) {
          if (v == l) v = into;
        }
        size[static_cast<std::size_t>(into)] += size[static_cast<std::size_t>(l)];
        size[static_cast<std::size_t>(l)] = 0;
        changed = true;
      }
    }
  }
  Partition p{std::move(out.labels), m, d.id()};
  compact_labels(p);
  out.labels = std::move(p.labels);
  out.count = p.m;
  return out;
}

}  // namespace

Partition tile_square_copies(const GridDomain& unit_square, const Partition& base, int k) {
  require_unit_square(unit_square);
  validate_partition(unit_square, base);
  if (k < 1) throw InvalidInput("k must be >= 1");
  const int res = unit_square.width();
  if (res % k != 0)
    throw InvalidInput("resolution " + std::to_string(res) + " is not divisible by k = " + std::to_string(k));
  const int block = res / k;
  Partition out;
  out.m = base.m * k * k;
  out.parent_id = unit_square.id();
  out.labels.assign(unit_square.size(), kUnassigned);
  for (int j = 0; j < res; ++j) {
    const int bj = j / block, sj = (j % block) * k + k / 2;
    for (int i = 0; i < res; ++i) {
      const int bi = i / block, si = (i % block) * k + k / 2;
      out.labels[unit_square.index(i, j)] = base.labels[unit_square.index(si, sj)] + base.m * (bj * k + bi);
    }
  }
  require_nonempty(out, "square copies");
  return out;
}

Partition square_block_partition(const GridDomain& unit_square, int k) {
  require_unit_square(unit_square);
  const int res = unit_square.width();
  if (k < 1 || k > res) throw InvalidInput("block count must satisfy 1 <= k <= resolution");
  std::vector<int> block(static_cast<std::size_t>(res));
  for (int b = 0, i = 0; b < k; ++b) {
    const int end = static_cast<int>(std::lround(static_cast<double>(res) * (b + 1) / k));
    for (; i < end; ++i) block[static_cast<std::size_t>(i)] = b;
  }
  Partition out;
  out.m = k * k;
  out.parent_id = unit_square.id();
  out.labels.assign(unit_square.size(), kUnassigned);
  for (int j = 0; j < res; ++j) {
    for (int i = 0; i < res; ++i)
      out.labels[unit_square.index(i, j)] = block[static_cast<std::size_t>(j)] * k + block[static_cast<std::size_t>(i)];
  }
  return out;
}

HexTiling hexagon_tiling_partition(const GridDomain& domain, int m) {
  if (m < 4) throw InvalidInput("hexagon tiling needs m >= 4");
  if (static_cast<std::size_t>(m) > domain.inside_count()) throw InvalidInput("more parts than inside cells");
  double cx = 0.0, cy = 0.0;
  for (std::size_t g = 0; g < domain.size(); ++g) {
    if (!domain.inside(g)) continue;
    cx += domain.cell_x(domain.col(g));
    cy += domain.cell_y(domain.row(g));
  }
  cx /= static_cast<double>(domain.inside_count());
  cy /= static_cast<double>(domain.inside_count());

  const double nominal = domain.measured_area() / m;
  HexLabels best;
  double best_f = 0.0;
  int best_gap = std::numeric_limits<int>::max();
  // f = 1, 1 - 0.01, 1 + 0.01, 1 - 0.02, ...
  for (int step = 0; step <= 60; ++step) {
    const int sign = step % 2 == 1 ? -1 : 1;
    const double f = 1.0 + sign * 0.01 * ((step + 1) / 2);
    HexLabels cand = hex_labels(domain, cx, cy, nominal * f);
    const int gap = std::abs(cand.count - m);
    if (gap < best_gap) {
      best_gap = gap;
      best_f = f;
      best = std::move(cand);
      if (gap == 0) break;
    }
  }

  HexTiling out;
  out.cell_area = nominal * best_f;
  out.tiles = best.count;
  Partition p{std::move(best.labels), best.count, domain.id()};
  while (p.m > m) {
    const auto sizes = p.part_sizes();
    const int from = static_cast<int>(std::min_element(sizes.begin(), sizes.end()) - sizes.begin());
    const auto nb = adjacent_labels(domain, p.labels, from);
    const int into = nb.empty() ? (from == 0 ? 1 : 0) : *nb.begin();
    for (int& l : p.labels) {
      if (l == from) l = into;
    }
    compact_labels(p);
    out.adjusted = true;
  }
  while (p.m < m) {
    const auto sizes = p.part_sizes();
    const int big = static_cast<int>(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
    if (sizes[static_cast<std::size_t>(big)] < 2) throw InvalidInput("domain too small for the requested parts");
    std::vector<int> cols;
    for (std::size_t g = 0; g < p.labels.size(); ++g) {
      if (p.labels[g] == big) cols.push_back(domain.col(g));
    }
    std::nth_element(cols.begin(), cols.begin() + static_cast<long>(cols.size() / 2), cols.end());
    const int median = cols[cols.size() / 2];
    std::size_t moved = 0;
    for (std::size_t g = 0; g < p.labels.size(); ++g) {
      if (p.labels[g] == big && domain.col(g) >= median) {
        p.labels[g] = p.m;
        ++moved;
      }
    }
    if (moved == sizes[static_cast<std::size_t>(big)]) {
      // A single column: split by rows instead.
      std::size_t half = moved / 2, seen = 0;
      for (std::size_t g = 0; g < p.labels.size(); ++g) {
        if (p.labels[g] == p.m && seen++ < half) p.labels[g] = big;
      }
    }
    ++p.m;
    out.adjusted = true;
  }
  out.partition = std::move(p);
  return out;
}

CubeFill cube_fill_partition(const DyadicCover& cover, const std::map<int, Partition>& base_partitions, int n, int t,
                             int resolution) {
  const int k = static_cast<int>(cover.k());
  if (k < 2) throw InvalidInput("cube fill needs at least 2 inner cubes, the cover has " + std::to_string(k));
  TilingSpec spec;
  spec.kind = TilingKind::CubeFill;
  spec.n = n;
  spec.t = t;
  spec.validate(k);
  const double cells = std::ldexp(static_cast<double>(resolution), -cover.level);
  const auto side = static_cast<long>(std::lround(cells));
  if (std::abs(cells - static_cast<double>(side)) > 1e-9 || side < 4)
    throw InvalidInput("cubes of level " + std::to_string(cover.level) + " are not whole blocks of at least 4 cells at resolution " +
                       std::to_string(resolution));
  auto base_for = [&](int count) -> const Partition& {
    auto it = base_partitions.find(count);
    if (it == base_partitions.end()) throw InvalidInput("missing base partition with " + std::to_string(count) + " parts");
    return it->second;
  };
  const Partition& pn = base_for(n);
  const Partition* pt = t > 0 ? &base_for(t) : nullptr;
  const int rn = square_side(pn);
  const int rt = pt ? square_side(*pt) : 0;

  DyadicCover used = cover;
  used.boundary.clear();
  if (t == 0) used.inner.pop_back();
  std::map<std::pair<long, long>, int> slot;
  for (std::size_t q = 0; q < used.inner.size(); ++q) slot[{used.inner[q].ix, used.inner[q].iy}] = static_cast<int>(q);

  CubeFill out{build_domain(ShapeSpec::cube_union(used), resolution), {}, n, t, t == 0};
  const GridDomain& d = out.domain;
  Partition& p = out.partition;
  p.m = (k - 1) * n + t;
  p.parent_id = d.id();
  p.labels.assign(d.size(), kUnassigned);
  for (std::size_t g = 0; g < d.size(); ++g) {
    if (!d.inside(g)) continue;
    const long gi = d.first_col() + d.col(g), gj = d.first_row() + d.row(g);
    const long ix = gi / side, iy = gj / side;
    const int q = slot.at({ix, iy});
    const long li = gi - ix * side, lj = gj - iy * side;
    const bool last = q == k - 1;
    const Partition& b = last ? *pt : pn;
    const int rb = last ? rt : rn;
    const auto si = static_cast<long>((static_cast<double>(li) + 0.5) * rb / static_cast<double>(side));
    const auto sj = static_cast<long>((static_cast<double>(lj) + 0.5) * rb / static_cast<double>(side));
    const int local = b.labels[static_cast<std::size_t>(sj * rb + si)];
    p.labels[g] = last ? (k - 1) * n + local : q * n + local;
  }
  require_nonempty(p, "cube fill");
  return out;
}

Partition extend_to_domain(const GridDomain& from, const Partition& partition, const GridDomain& to) {
  validate_partition(from, partition);
  if (std::abs(from.h() - to.h()) > 1e-15 * to.h()) throw InvalidInput("grids have different cell sizes");
  Partition out;
  out.m = partition.m;
  out.parent_id = to.id();
  out.labels.assign(to.size(), kUnassigned);
  const long di = to.first_col() - from.first_col(), dj = to.first_row() - from.first_row();
  for (std::size_t g = 0; g < to.size(); ++g) {
    if (!to.inside(g)) continue;
    const long i = to.col(g) + di, j = to.row(g) + dj;
    if (i < 0 || j < 0 || i >= from.width() || j >= from.height()) continue;
    const int l = partition.labels[from.index(static_cast<int>(i), static_cast<int>(j))];
    if (l < 0) continue;
    out.labels[g] = l;
  }
  fill_nearest_labels(to, out.labels);
  require_nonempty(out, "extension");
  return out;
}

double cube_fill_bound(const DyadicCover& cover, int n, double l_n, int t, double l_t) {
  const double k = static_cast<double>(cover.k());
  const double q = cover.cube_area();
  const double m = (k - 1.0) * n + t;
  return ((k - 1.0) * n * n * l_n / q + static_cast<double>(t) * t * l_t / q) / (m * m);
}

std::pair<int, int> cube_fill_counts(int m, std::size_t cubes) {
  if (cubes < 2) throw InvalidInput("cube fill needs at least 2 inner cubes");
  const int per = static_cast<int>(cubes) - 1;
  if (m < per) throw InvalidInput("m = " + std::to_string(m) + " is smaller than k - 1 = " + std::to_string(per));
  return {m / per, m % per};
}

}  // namespace specpart
