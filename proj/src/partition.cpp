#include "specpart/partition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "specpart/errors.hpp"
#include "specpart/parallel.hpp"

namespace specpart {

SubdomainMask Partition::part_mask(const GridDomain& domain, int label) const {
  SubdomainMask mask{std::vector<std::uint8_t>(labels.size(), 0), domain.id(), domain.h()};
  for (std::size_t g = 0; g < labels.size(); ++g) mask.cells[g] = labels[g] == label;
  return mask;
}

std::vector<std::size_t> Partition::part_sizes() const {
  std::vector<std::size_t> sizes(static_cast<std::size_t>(std::max(m, 0)), 0);
  for (int l : labels) {
    if (l >= 0 && l < m) ++sizes[static_cast<std::size_t>(l)];
  }
  return sizes;
}

void validate_partition(const GridDomain& domain, const Partition& partition) {
  if (partition.labels.size() != domain.size()) throw InvalidInput("partition does not match the domain grid");
  if (partition.m < 1) throw InvalidInput("partition must have at least one part");
  if (partition.parent_id != domain.id())
    throw InvalidInput("partition belongs to '" + partition.parent_id + "', not '" + domain.id() + "'");
  for (std::size_t g = 0; g < domain.size(); ++g) {
    const int l = partition.labels[g];
    if (domain.inside(g)) {
      if (l < 0 || l >= partition.m) {
        std::ostringstream os;
        os << "inside cell " << g << " carries label " << l << " outside 0.." << partition.m - 1;
        throw InvalidInput(os.str());
      }
    } else if (l != kUnassigned) {
      throw InvalidInput("cell " + std::to_string(g) + " outside the domain carries a label");
    }
  }
  const auto sizes = partition.part_sizes();
  for (std::size_t j = 0; j < sizes.size(); ++j) {
    if (sizes[j] == 0) throw InvalidInput("part " + std::to_string(j) + " is empty");
  }
}

EnergyReport make_report(std::vector<double> per_part_lambda) {
  EnergyReport r;
  r.m = static_cast<int>(per_part_lambda.size());
  double raw = 0.0;
  for (double v : per_part_lambda) raw += v;
  const double m2 = static_cast<double>(r.m) * static_cast<double>(r.m);
  r.l1_normalized = raw / m2;
  r.sum_lambda = r.l1_normalized * m2;
  r.per_part_lambda = std::move(per_part_lambda);
  return r;
}

std::vector<EigenResult> part_eigenpairs(const GridDomain& domain, const Partition& partition, double tol,
                                         const std::vector<EigenResult>* warm) {
  std::vector<EigenResult> out;
  out.reserve(static_cast<std::size_t>(partition.m));
  for (int j = 0; j < partition.m; ++j) {
    const auto mask = partition.part_mask(domain, j);
    if (mask.empty()) throw InvalidInput("part " + std::to_string(j) + " is empty");
    EigenOptions opts;
    opts.tol = tol;
    if (warm && static_cast<std::size_t>(j) < warm->size() && !(*warm)[static_cast<std::size_t>(j)].eigfn.empty())
      opts.initial = (*warm)[static_cast<std::size_t>(j)].eigfn;
    out.push_back(first_eigenpair(domain, mask, opts));
  }
  return out;
}

EnergyReport l1_energy(const GridDomain& domain, const Partition& partition, double tol) {
  validate_partition(domain, partition);
  const auto eigs = part_eigenpairs(domain, partition, tol);
  std::vector<double> lambdas;
  for (const auto& e : eigs) lambdas.push_back(e.lambda1);
  return make_report(std::move(lambdas));
}

SegregatedField project_to_sigma(const GridDomain& domain, const std::vector<std::vector<double>>& field) {
  if (field.empty()) throw InvalidInput("field has no components");
  for (const auto& c : field) {
    if (c.size() != domain.size()) throw InvalidInput("field dimensions do not match the domain grid");
  }
  const std::size_t m = field.size();
  SegregatedField out;
  out.m = static_cast<int>(m);
  out.components.assign(m, std::vector<double>(domain.size(), 0.0));
  bool any = false;
  for (std::size_t g = 0; g < domain.size(); ++g) {
    std::size_t best = 0;
    double best_abs = std::abs(field[0][g]);
    for (std::size_t j = 1; j < m; ++j) {
      const double a = std::abs(field[j][g]);
      if (a > best_abs) {
        best = j;
        best_abs = a;
      }
    }
    if (best_abs > 0.0) {
      out.components[best][g] = field[best][g];
      any = true;
    }
  }
  if (!any) throw InvalidInput("all field components are identically zero");
  for (auto& c : out.components) {
    const double n2 = l2_norm_squared(domain, c);
    if (n2 > 0.0) {
      const double s = 1.0 / std::sqrt(n2);
      for (double& v : c) v *= s;
    }
  }
  return out;
}

void fill_nearest_labels(const GridDomain& domain, std::vector<int>& labels) {
  const int w = domain.width(), h = domain.height();
  std::vector<int> lab(labels.size(), kUnassigned);
  std::vector<std::size_t> frontier;
  bool missing = false;
  for (std::size_t g = 0; g < labels.size(); ++g) {
    if (labels[g] >= 0) {
      lab[g] = labels[g];
      frontier.push_back(g);
    } else if (domain.inside(g)) {
      missing = true;
    }
  }
  if (!missing) return;
  if (frontier.empty()) throw InvalidInput("no labeled cell to propagate from");

  // Breadth-first layers of the 8-neighbourhood are exact Chebyshev distance
  // shells; taking the minimum label per shell resolves ties to the lowest label.
  std::vector<int> next_lab(labels.size(), std::numeric_limits<int>::max());
  std::vector<std::size_t> next;
  while (!frontier.empty()) {
    next.clear();
    for (std::size_t g : frontier) {
      const int i = domain.col(g), j = domain.row(g);
      for (int dj = -1; dj <= 1; ++dj) {
        for (int di = -1; di <= 1; ++di) {
          const int ni = i + di, nj = j + dj;
          if (ni < 0 || nj < 0 || ni >= w || nj >= h) continue;
          const std::size_t n = domain.index(ni, nj);
          if (lab[n] != kUnassigned) continue;
          if (next_lab[n] == std::numeric_limits<int>::max()) next.push_back(n);
          next_lab[n] = std::min(next_lab[n], lab[g]);
        }
      }
    }
    for (std::size_t n : next) {
      lab[n] = next_lab[n];
      if (domain.inside(n) && labels[n] < 0) labels[n] = lab[n];
    }
    frontier.swap(next);
  }
}

Partition partition_from_field(const GridDomain& domain, const SegregatedField& field) {
  if (static_cast<int>(field.components.size()) != field.m || field.m < 1)
    throw InvalidInput("segregated field has inconsistent component count");
  Partition p;
  p.m = field.m;
  p.parent_id = domain.id();
  p.labels.assign(domain.size(), kUnassigned);
  for (std::size_t g = 0; g < domain.size(); ++g) {
    if (!domain.inside(g)) continue;
    for (int j = 0; j < field.m; ++j) {
      if (field.components[static_cast<std::size_t>(j)][g] != 0.0) {
        if (p.labels[g] != kUnassigned) throw InvalidInput("field is not segregated at cell " + std::to_string(g));
        p.labels[g] = j;
      }
    }
  }
  fill_nearest_labels(domain, p.labels);
  return p;
}

Partition voronoi_partition(const GridDomain& domain, int m, std::uint64_t seed, int lloyd_iters) {
  if (m < 1) throw InvalidInput("m must be >= 1");
  std::vector<std::size_t> cells;
  for (std::size_t g = 0; g < domain.size(); ++g) {
    if (domain.inside(g)) cells.push_back(g);
  }
  if (static_cast<std::size_t>(m) > cells.size()) throw InvalidInput("more parts than inside cells");
  std::mt19937_64 rng(seed);
  for (int k = 0; k < m; ++k) {
    std::uniform_int_distribution<std::size_t> pick(static_cast<std::size_t>(k), cells.size() - 1);
    std::swap(cells[static_cast<std::size_t>(k)], cells[pick(rng)]);
  }
  std::vector<Point> seeds;
  for (int k = 0; k < m; ++k) {
    const std::size_t g = cells[static_cast<std::size_t>(k)];
    seeds.push_back({static_cast<double>(domain.col(g)), static_cast<double>(domain.row(g))});
  }
  Partition p;
  p.m = m;
  p.parent_id = domain.id();
  p.labels.assign(domain.size(), kUnassigned);
  auto assign = [&] {
    for (std::size_t g : cells) {
      const double i = domain.col(g), j = domain.row(g);
      double best = std::numeric_limits<double>::max();
      int lab = 0;
      for (int k = 0; k < m; ++k) {
        const double di = i - seeds[static_cast<std::size_t>(k)].x;
        const double dj = j - seeds[static_cast<std::size_t>(k)].y;
        const double d = di * di + dj * dj;
        if (d < best) {
          best = d;
          lab = k;
        }
      }
      p.labels[g] = lab;
    }
  };
  assign();
  for (int it = 0; it < lloyd_iters; ++it) {
    std::vector<Point> c(static_cast<std::size_t>(m));
    std::vector<double> n(static_cast<std::size_t>(m), 0.0);
    for (std::size_t g : cells) {
      const auto l = static_cast<std::size_t>(p.labels[g]);
      c[l].x += domain.col(g);
      c[l].y += domain.row(g);
      n[l] += 1.0;
    }
    for (std::size_t k = 0; k < c.size(); ++k) {
      if (n[k] > 0.0) seeds[k] = {c[k].x / n[k], c[k].y / n[k]};
    }
    assign();
  }
  return p;
}

void compact_labels(Partition& partition) {
  std::vector<int> remap(static_cast<std::size_t>(std::max(partition.m, 0)), kUnassigned);
  for (int l : partition.labels) {
    if (l >= 0) remap[static_cast<std::size_t>(l)] = 0;
  }
  int next = 0;
  for (int& r : remap) {
    if (r == 0) r = next++;
  }
  for (int& l : partition.labels) {
    if (l >= 0) l = remap[static_cast<std::size_t>(l)];
  }
  partition.m = next;
}

namespace {

template <typename F>
void for_each_neighbor4(const GridDomain& d, std::size_t g, F&& f) {
  const int i = d.col(g), j = d.row(g);
  if (i > 0) f(g - 1);
  if (i + 1 < d.width()) f(g + 1);
  if (j > 0) f(g - static_cast<std::size_t>(d.width()));
  if (j + 1 < d.height()) f(g + static_cast<std::size_t>(d.width()));
}

struct State {
  std::vector<int> labels;
  std::vector<EigenResult> eigs;
  double energy = 0.0;
};

double total(const std::vector<EigenResult>& eigs) {
  double s = 0.0;
  for (const auto& e : eigs) s += e.lambda1;
  return s;
}

// Keeps, for every label, the 4-connected component carrying the most
// eigenfunction mass; the other components are handed to the nearest parts.
void keep_main_components(const GridDomain& domain, std::vector<int>& labels, int m,
                          const std::vector<EigenResult>* eigs) {
  for (int pass = 0; pass < 3; ++pass) {
    std::vector<int> comp(labels.size(), -1);
    std::vector<int> comp_label;
    std::vector<double> comp_mass;
    std::vector<std::size_t> comp_size;
    std::vector<std::size_t> stack;
    for (std::size_t g = 0; g < labels.size(); ++g) {
      if (labels[g] < 0 || comp[g] >= 0) continue;
      const int id = static_cast<int>(comp_label.size());
      const int l = labels[g];
      const std::vector<double>* u =
          eigs && static_cast<std::size_t>(l) < eigs->size() ? &(*eigs)[static_cast<std::size_t>(l)].eigfn : nullptr;
      double mass = 0.0;
      std::size_t size = 0;
      comp[g] = id;
      stack.assign(1, g);
      while (!stack.empty()) {
        const std::size_t c = stack.back();
        stack.pop_back();
        ++size;
        if (u && !u->empty()) mass += (*u)[c] * (*u)[c];
        for_each_neighbor4(domain, c, [&](std::size_t n) {
          if (comp[n] < 0 && labels[n] == l) {
            comp[n] = id;
            stack.push_back(n);
          }
        });
      }
      comp_label.push_back(l);
      comp_mass.push_back(mass);
      comp_size.push_back(size);
    }
    std::vector<int> keep(static_cast<std::size_t>(m), -1);
    bool split = false;
    for (std::size_t c = 0; c < comp_label.size(); ++c) {
      int& k = keep[static_cast<std::size_t>(comp_label[c])];
      if (k < 0) {
        k = static_cast<int>(c);
        continue;
      }
      split = true;
      const auto kc = static_cast<std::size_t>(k);
      if (comp_mass[c] > comp_mass[kc] || (comp_mass[c] == comp_mass[kc] && comp_size[c] > comp_size[kc]))
        k = static_cast<int>(c);
    }
    if (!split) return;
    for (std::size_t g = 0; g < labels.size(); ++g) {
      if (labels[g] >= 0 && keep[static_cast<std::size_t>(labels[g])] != comp[g]) labels[g] = kUnassigned;
    }
    fill_nearest_labels(domain, labels);
  }
}

// An empty label is reseeded at the inside cell maximizing
// lambda(own part) * distance to the nearest part centroid.
void repair_empty_parts(const GridDomain& domain, std::vector<int>& labels, int m,
                        const std::vector<EigenResult>* eigs) {
  std::vector<std::size_t> sizes(static_cast<std::size_t>(m), 0);
  for (int l : labels) {
    if (l >= 0) ++sizes[static_cast<std::size_t>(l)];
  }
  for (int e = 0; e < m; ++e) {
    if (sizes[static_cast<std::size_t>(e)] > 0) continue;
    std::vector<double> cx(static_cast<std::size_t>(m), 0.0), cy(static_cast<std::size_t>(m), 0.0);
    for (std::size_t g = 0; g < labels.size(); ++g) {
      if (labels[g] < 0) continue;
      cx[static_cast<std::size_t>(labels[g])] += domain.col(g);
      cy[static_cast<std::size_t>(labels[g])] += domain.row(g);
    }
    for (std::size_t j = 0; j < sizes.size(); ++j) {
      if (sizes[j] > 0) {
        cx[j] /= static_cast<double>(sizes[j]);
        cy[j] /= static_cast<double>(sizes[j]);
      }
    }
    double best = -1.0;
    std::size_t at = labels.size();
    for (std::size_t g = 0; g < labels.size(); ++g) {
      const int l = labels[g];
      if (l < 0 || sizes[static_cast<std::size_t>(l)] <= 1) continue;
      double dmin = std::numeric_limits<double>::max();
      for (std::size_t j = 0; j < sizes.size(); ++j) {
        if (sizes[j] == 0) continue;
        dmin = std::min(dmin, std::hypot(domain.col(g) - cx[j], domain.row(g) - cy[j]));
      }
      const double lam = eigs && static_cast<std::size_t>(l) < eigs->size() ? (*eigs)[static_cast<std::size_t>(l)].lambda1 : 1.0;
      const double score = lam * dmin;
      if (score > best) {
        best = score;
        at = g;
      }
    }
    if (at == labels.size()) throw NumericalFailure("cannot reseed empty part: every part is a single cell");
    --sizes[static_cast<std::size_t>(labels[at])];
    labels[at] = e;
    sizes[static_cast<std::size_t>(e)] = 1;
  }
}

// Argmax of the one-ring extended eigenfunctions. For a cell of part a next to
// part b, u_b is extended by its mean over the neighbours of the cell that lie
// in b. Returns the proposed labels and each cell's gain (extended value minus
// the current value) for cells that switch.
std::vector<int> argmax_reassign(const GridDomain& domain, const State& s, std::vector<double>& gain) {
  std::vector<int> out = s.labels;
  gain.assign(s.labels.size(), 0.0);
  int nl[4];
  std::size_t ng[4];
  for (std::size_t g = 0; g < s.labels.size(); ++g) {
    const int a = s.labels[g];
    if (a < 0) continue;
    int k = 0;
    for_each_neighbor4(domain, g, [&](std::size_t n) {
      if (s.labels[n] >= 0 && s.labels[n] != a) {
        nl[k] = s.labels[n];
        ng[k] = n;
        ++k;
      }
    });
    if (k == 0) continue;
    const double own = s.eigs[static_cast<std::size_t>(a)].eigfn[g];
    int best = a;
    double best_val = own;
    for (int q = 0; q < k; ++q) {
      const int b = nl[q];
      bool seen = false;
      for (int r = 0; r < q; ++r) seen = seen || nl[r] == b;
      if (seen) continue;
      double sum = 0.0;
      int cnt = 0;
      for (int r = q; r < k; ++r) {
        if (nl[r] == b) {
          sum += s.eigs[static_cast<std::size_t>(b)].eigfn[ng[r]];
          ++cnt;
        }
      }
      const double ext = sum / cnt;
      if (ext > best_val || (ext == best_val && b < best)) {
        best = b;
        best_val = ext;
      }
    }
    if (best != a) {
      out[g] = best;
      gain[g] = best_val - own;
    }
  }
  return out;
}

// Relative decrease required to accept a state: well above the error of
// eigenvalues solved to search_eigen_tol.
constexpr double kAcceptMargin = 1e-9;
// Relative window of search energy within which states are re-solved at the
// final tolerance before picking the winner.
constexpr double kFinalWindow = 1e-4;

struct StartResult {
  State best;
  int iterations = 0;
  std::vector<double> accepted;
};

StartResult refine(const GridDomain& domain, int m, std::vector<int> labels, const OptimizerOptions& opts) {
  State cur;
  cur.labels = std::move(labels);
  keep_main_components(domain, cur.labels, m, nullptr);
  repair_empty_parts(domain, cur.labels, m, nullptr);
  Partition p{cur.labels, m, domain.id()};
  cur.eigs = part_eigenpairs(domain, p, opts.search_eigen_tol);
  cur.energy = total(cur.eigs);

  StartResult res;
  res.accepted.push_back(cur.energy);
  std::vector<double> gain;
  // Size of the move subset tried first: twice the last accepted one.
  std::size_t trial = std::numeric_limits<std::size_t>::max();
  for (int it = 0; it < opts.max_outer_iters; ++it) {
    std::vector<int> prop = argmax_reassign(domain, cur, gain);
    keep_main_components(domain, prop, m, &cur.eigs);
    repair_empty_parts(domain, prop, m, &cur.eigs);

    std::vector<std::size_t> changed;
    for (std::size_t g = 0; g < prop.size(); ++g) {
      if (prop[g] != cur.labels[g]) changed.push_back(g);
    }
    if (changed.empty()) break;
    std::stable_sort(changed.begin(), changed.end(),
                     [&](std::size_t x, std::size_t y) { return gain[x] > gain[y]; });

    bool accepted = false;
    State cand;
    // Strongest moves first, halving the subset after each rejection.
    std::size_t take = std::min(trial, changed.size());
    for (;; take = (take + 1) / 2) {
      cand.labels = cur.labels;
      for (std::size_t q = 0; q < take; ++q) cand.labels[changed[q]] = prop[changed[q]];
      if (take < changed.size()) {
        keep_main_components(domain, cand.labels, m, &cur.eigs);
        repair_empty_parts(domain, cand.labels, m, &cur.eigs);
      }
      std::vector<char> dirty(static_cast<std::size_t>(m), 0);
      bool any = false;
      for (std::size_t g = 0; g < cand.labels.size(); ++g) {
        if (cand.labels[g] != cur.labels[g]) {
          dirty[static_cast<std::size_t>(cand.labels[g])] = 1;
          dirty[static_cast<std::size_t>(cur.labels[g])] = 1;
          any = true;
        }
      }
      if (any) {
        cand.eigs = cur.eigs;
        Partition cp{cand.labels, m, domain.id()};
        for (int j = 0; j < m; ++j) {
          if (!dirty[static_cast<std::size_t>(j)]) continue;
          EigenOptions eo;
          eo.tol = opts.search_eigen_tol;
          eo.initial = cur.eigs[static_cast<std::size_t>(j)].eigfn;
          cand.eigs[static_cast<std::size_t>(j)] = first_eigenpair(domain, cp.part_mask(domain, j), eo);
        }
        cand.energy = total(cand.eigs);
        if (cand.energy < cur.energy * (1.0 - kAcceptMargin)) {
          accepted = true;
          break;
        }
      }
      if (take == 1) break;
    }
    if (!accepted) break;
    trial = take > std::numeric_limits<std::size_t>::max() / 2 ? take : 2 * take;
    const double improvement = cur.energy - cand.energy;
    cur = std::move(cand);
    res.accepted.push_back(cur.energy);
    res.iterations = it + 1;
    if (improvement <= opts.tol * cur.energy) break;
  }
  res.best = std::move(cur);
  return res;
}

}  // namespace

OptimizerResult optimize_partition(const GridDomain& domain, int m, std::uint64_t seed, const OptimizerOptions& opts) {
  if (m < 1) throw InvalidInput("m must be >= 1");
  if (static_cast<std::size_t>(m) * 16 > domain.inside_count())
    throw InvalidInput("m = " + std::to_string(m) + " is too large for a grid with " +
                       std::to_string(domain.inside_count()) + " inside cells");
  for (const auto& p : opts.initial_partitions) {
    validate_partition(domain, p);
    if (p.m != m) throw InvalidInput("initial partition has " + std::to_string(p.m) + " parts, expected " + std::to_string(m));
  }

  // m = 1 admits a single partition.
  const int random_starts = m == 1 ? 1 : std::max(1, opts.restarts);
  const std::size_t starts = static_cast<std::size_t>(random_starts) + opts.initial_partitions.size();
  std::vector<std::vector<int>> inits(starts);
  parallel_for(starts, opts.jobs, [&](std::size_t s) {
    if (s < static_cast<std::size_t>(random_starts)) {
      inits[s] = voronoi_partition(domain, m, seed + s, opts.lloyd_iters).labels;
    } else {
      inits[s] = opts.initial_partitions[s - static_cast<std::size_t>(random_starts)].labels;
    }
    keep_main_components(domain, inits[s], m, nullptr);
    repair_empty_parts(domain, inits[s], m, nullptr);
  });
  // Starts that coincide (Lloyd often converges to the same seeds) share one refinement.
  std::vector<std::size_t> same_as(starts);
  std::vector<std::size_t> unique;
  for (std::size_t s = 0; s < starts; ++s) {
    same_as[s] = s;
    for (std::size_t u : unique) {
      if (inits[u] == inits[s]) {
        same_as[s] = u;
        break;
      }
    }
    if (same_as[s] == s) unique.push_back(s);
  }
  std::vector<StartResult> results(starts);
  parallel_for(unique.size(), opts.jobs, [&](std::size_t q) {
    const std::size_t s = unique[q];
    results[s] = refine(domain, m, std::move(inits[s]), opts);
  });
  for (std::size_t s = 0; s < starts; ++s) {
    if (same_as[s] != s) results[s] = results[same_as[s]];
  }

  // Search energies carry the loose solve error, so the near-best states and
  // the caller's own partitions (unrefined) are compared at eigen_tol.
  double best_search = results[0].best.energy;
  for (const auto& r : results) best_search = std::min(best_search, r.best.energy);
  struct Final {
    std::size_t start;
    const std::vector<int>* labels;
    EnergyReport report;
  };
  std::vector<Final> finals;
  for (std::size_t s : unique) {
    if (results[s].best.energy <= best_search * (1.0 + kFinalWindow)) finals.push_back({s, &results[s].best.labels, {}});
  }
  for (std::size_t i = 0; i < opts.initial_partitions.size(); ++i)
    finals.push_back({static_cast<std::size_t>(random_starts) + i, &opts.initial_partitions[i].labels, {}});
  parallel_for(finals.size(), opts.jobs, [&](std::size_t f) {
    finals[f].report = l1_energy(domain, Partition{*finals[f].labels, m, domain.id()}, opts.eigen_tol);
  });
  std::size_t pick = 0;
  for (std::size_t f = 1; f < finals.size(); ++f) {
    if (finals[f].report.sum_lambda < finals[pick].report.sum_lambda) pick = f;
  }
  const std::size_t win = finals[pick].start;
  OptimizerResult out;
  out.partition = Partition{*finals[pick].labels, m, domain.id()};
  out.report = std::move(finals[pick].report);
  out.best_seed = win < static_cast<std::size_t>(random_starts)
                      ? static_cast<long>(seed + win)
                      : -1 - static_cast<long>(win - static_cast<std::size_t>(random_starts));
  out.iterations = results[win].iterations;
  for (auto& r : results) out.accepted_energies.push_back(std::move(r.accepted));
  return out;
}

namespace {

std::set<int> neighbor_labels(const GridDomain& domain, const std::vector<int>& labels, int l) {
  std::set<int> out;
  for (std::size_t g = 0; g < labels.size(); ++g) {
    if (labels[g] != l) continue;
    for_each_neighbor4(domain, g, [&](std::size_t n) {
      if (labels[n] >= 0 && labels[n] != l) out.insert(labels[n]);
    });
  }
  return out;
}

}  // namespace

Partition group_subdomains(const GridDomain& domain, const Partition& partition, int m, GroupPolicy policy) {
  validate_partition(domain, partition);
  if (m < 1 || m >= partition.m)
    throw InvalidInput("grouping target must satisfy 1 <= m < M (m = " + std::to_string(m) + ", M = " +
                       std::to_string(partition.m) + ")");
  Partition p = partition;
  int count = p.m;
  std::vector<double> lambda;
  std::map<std::pair<int, int>, double> union_lambda;  // lambda1 of part a joined with part b, a < b
  if (policy == GroupPolicy::LeastEnergy) {
    for (const auto& e : part_eigenpairs(domain, p)) lambda.push_back(e.lambda1);
  }
  while (count > m) {
    const auto sizes = p.part_sizes();
    int from = -1, into = -1;
    if (policy == GroupPolicy::SmallestIntoNeighbor) {
      for (int j = 0; j < p.m; ++j) {
        if (sizes[static_cast<std::size_t>(j)] == 0) continue;
        if (from < 0 || sizes[static_cast<std::size_t>(j)] < sizes[static_cast<std::size_t>(from)]) from = j;
      }
      const auto nb = neighbor_labels(domain, p.labels, from);
      if (!nb.empty()) {
        into = *nb.begin();
      } else {
        for (int j = 0; j < p.m; ++j) {
          if (j != from && sizes[static_cast<std::size_t>(j)] > 0) {
            into = j;
            break;
          }
        }
      }
    } else {
      double best = std::numeric_limits<double>::max();
      double best_lambda = 0.0;
      for (int a = 0; a < p.m; ++a) {
        if (sizes[static_cast<std::size_t>(a)] == 0) continue;
        for (int b : neighbor_labels(domain, p.labels, a)) {
          if (b <= a) continue;
          auto hit = union_lambda.find({a, b});
          if (hit == union_lambda.end()) {
            SubdomainMask mask = p.part_mask(domain, a);
            for (std::size_t g = 0; g < p.labels.size(); ++g) {
              if (p.labels[g] == b) mask.cells[g] = 1;
            }
            hit = union_lambda.emplace(std::pair{a, b}, first_eigenpair(domain, mask).lambda1).first;
          }
          const double merged = hit->second;
          const double cost = merged - lambda[static_cast<std::size_t>(a)] - lambda[static_cast<std::size_t>(b)];
          if (cost < best) {
            best = cost;
            best_lambda = merged;
            into = a;
            from = b;
          }
        }
      }
      if (into < 0) {
        // no adjacent pair left: fall back to merging the smallest part
        return group_subdomains(domain, [&] {
          Partition q = p;
          compact_labels(q);
          return q;
        }(), m, GroupPolicy::SmallestIntoNeighbor);
      }
      lambda[static_cast<std::size_t>(into)] = best_lambda;
      std::erase_if(union_lambda, [&](const auto& e) {
        return e.first.first == into || e.first.second == into || e.first.first == from || e.first.second == from;
      });
    }
    for (int& l : p.labels) {
      if (l == from) l = into;
    }
    --count;
  }
  compact_labels(p);
  return p;
}

}  // namespace specpart
