#include "specpart/glue.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>

#include "specpart/constants.hpp"
#include "specpart/errors.hpp"
#include "specpart/parallel.hpp"

namespace specpart {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// x - gamma_x at the center of local column i.
double rel_x(const GridDomain& d, int i, const StripConfig& cfg) { return d.cell_x(i) - cfg.gamma_x; }

bool in_d1p(double x, const StripConfig& cfg) { return x <= -cfg.delta / 2; }
bool in_d2p(double x, const StripConfig& cfg) { return x >= cfg.delta / 2; }

std::vector<double> column_mass(const GridDomain& d, std::span<const double> u) {
  std::vector<double> col(static_cast<std::size_t>(d.width()), 0.0);
  const double h2 = d.h() * d.h();
  for (std::size_t g = 0; g < d.size(); ++g) col[static_cast<std::size_t>(d.col(g))] += u[g] * u[g] * h2;
  return col;
}

double mass_between(const GridDomain& d, const std::vector<double>& col, double lo, double hi, const StripConfig& cfg) {
  double s = 0.0;
  for (int i = 0; i < d.width(); ++i) {
    const double x = rel_x(d, i, cfg);
    if (x > lo && x < hi) s += col[static_cast<std::size_t>(i)];
  }
  return s;
}

const char* class_name(PartClass c) {
  switch (c) {
    case PartClass::A: return "A";
    case PartClass::B: return "B";
    case PartClass::C: return "C";
  }
  return "?";
}

const char* side_name(Side s) {
  switch (s) {
    case Side::V: return "v";
    case Side::W: return "w";
    case Side::None: return "-";
  }
  return "?";
}

}  // namespace

void StripConfig::validate(const GridDomain& domain) const {
  if (!(delta > 0.0)) throw InvalidInput("strip width delta must be positive");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw InvalidInput("epsilon must lie in (0, 1)");
  const double h = domain.h();
  const double face = gamma_x / h;
  if (std::abs(face - std::round(face)) > 1e-9) throw InvalidInput("gamma_x must lie on a grid column face");
  const double left = static_cast<double>(domain.first_col()) * h;
  const double right = static_cast<double>(domain.first_col() + domain.width()) * h;
  if (!(gamma_x > left && gamma_x < right)) throw InvalidInput("gamma_x lies outside the domain's x-range");
  bool l = false, r = false;
  for (std::size_t g = 0; g < domain.size(); ++g) {
    if (!domain.inside(g)) continue;
    (rel_x(domain, domain.col(g), *this) < 0.0 ? l : r) = true;
  }
  if (!l || !r) throw InvalidInput("gamma_x does not separate the domain");
  int cols = 0;
  for (int i = 0; i < domain.width(); ++i) cols += std::abs(rel_x(domain, i, *this)) < delta / 2;
  if (cols < 4) throw InvalidInput("strip spans fewer than 4 grid columns");
}

double StripConfig::claim_constant() const { return 640.0 / (epsilon * delta * delta); }

OffsetChoice select_half_mass_offset(const GridDomain& domain, std::span<const double> u, const StripConfig& cfg) {
  if (u.size() != domain.size()) throw InvalidInput("function does not match the domain grid");
  const auto col = column_mass(domain, u);
  OffsetChoice out;
  for (double c : col) out.total_mass += c;
  const double half = cfg.delta / 2;
  const double limit = 0.5 * out.total_mass * (1.0 + 1e-12);
  auto mass_at = [&](double r) { return mass_between(domain, col, r, r + half, cfg); };
  out.endpoint_ok = mass_at(-half) <= limit || mass_at(0.0) <= limit;

  std::vector<double> candidates;
  const double h = domain.h();
  for (int i = 0; -half + i * h < -1e-12 * h; ++i) candidates.push_back(-half + i * h);
  candidates.push_back(0.0);
  for (double r : candidates) {
    const double m = mass_at(r);
    if (m <= limit) {
      out.r = r;
      out.half_mass = m;
      return out;
    }
  }
  // Unreachable when the two endpoint halves are disjoint; keep the smaller.
  const double a = mass_at(-half), b = mass_at(0.0);
  out.r = a <= b ? -half : 0.0;
  out.half_mass = std::min(a, b);
  return out;
}

Cutoff build_cutoff(const GridDomain& domain, double r, const StripConfig& cfg) {
  const double h = domain.h();
  if (cfg.delta / 2 < 4 * h) throw InvalidInput("delta under-resolved: fewer than 4 columns in the half strip");
  if (r < -cfg.delta / 2 - 1e-12 || r > 1e-12) throw InvalidInput("offset r must lie in [-delta/2, 0]");
  const double quarter = cfg.delta / 4;
  const double cut = cfg.gamma_x + r + quarter;
  Cutoff out;
  out.cut_col = static_cast<int>(static_cast<long>(std::floor(cut / h + 1e-12)) - domain.first_col());
  std::vector<double> col(static_cast<std::size_t>(domain.width()));
  for (int i = 0; i < domain.width(); ++i)
    col[static_cast<std::size_t>(i)] = i == out.cut_col ? 0.0 : std::min(1.0, std::abs(domain.cell_x(i) - cut) / quarter);
  for (int i = 0; i + 1 < domain.width(); ++i)
    out.max_slope = std::max(out.max_slope, std::abs(col[static_cast<std::size_t>(i + 1)] - col[static_cast<std::size_t>(i)]) / h);
  out.xi.resize(domain.size());
  for (std::size_t g = 0; g < domain.size(); ++g) out.xi[g] = col[static_cast<std::size_t>(domain.col(g))];
  return out;
}

ClaimCheck check_claim(const GridDomain& domain, const SubdomainMask& part, std::span<const double> u,
                       std::span<const double> xi, double lambda, const StripConfig& cfg) {
  std::vector<double> f(domain.size());
  bool any = false;
  for (std::size_t g = 0; g < f.size(); ++g) {
    f[g] = xi[g] * u[g];
    any = any || f[g] != 0.0;
  }
  if (!any) throw InvalidInput("xi u vanishes identically on the part");
  ClaimCheck out;
  out.ratio = rayleigh_quotient(domain, f, part);
  out.triggered = out.ratio >= (1.0 + cfg.epsilon / 5) * lambda;
  out.bound_ok = !out.triggered || lambda <= cfg.claim_constant();
  return out;
}

Classification classify_subdomains(const GridDomain& domain, const Partition& partition, const StripConfig& cfg,
                                   const std::vector<EigenResult>& eigs, int jobs) {
  validate_partition(domain, partition);
  cfg.validate(domain);
  if (eigs.size() != static_cast<std::size_t>(partition.m)) throw InvalidInput("one eigenpair per part is required");

  const auto m = static_cast<std::size_t>(partition.m);
  std::vector<char> meets1(m, 0), meets2(m, 0);
  for (std::size_t g = 0; g < domain.size(); ++g) {
    const int l = partition.labels[g];
    if (l < 0) continue;
    const double x = rel_x(domain, domain.col(g), cfg);
    if (in_d1p(x, cfg)) meets1[static_cast<std::size_t>(l)] = 1;
    if (in_d2p(x, cfg)) meets2[static_cast<std::size_t>(l)] = 1;
  }

  Classification out;
  out.parts.resize(m);
  parallel_for(m, jobs, [&](std::size_t j) {
    PartRecord& p = out.parts[j];
    p.label = static_cast<int>(j);
    p.lambda1 = eigs[j].lambda1;
    p.cls = meets1[j] && meets2[j] ? PartClass::C : (meets2[j] ? PartClass::B : PartClass::A);
    const auto& u = eigs[j].eigfn;
    p.offset = select_half_mass_offset(domain, u, cfg);
    const Cutoff cut = build_cutoff(domain, p.offset.r, cfg);
    p.cut_col = cut.cut_col;
    p.max_slope = cut.max_slope;
    if (p.cls != PartClass::C) return;

    const SubdomainMask mask = partition.part_mask(domain, static_cast<int>(j));
    p.claim = check_claim(domain, mask, u, cut.xi, p.lambda1, cfg);
    p.in_d = p.claim.triggered;
    std::vector<double> left(domain.size(), 0.0), right(domain.size(), 0.0);
    for (std::size_t g = 0; g < domain.size(); ++g) {
      const int c = domain.col(g);
      if (c < cut.cut_col) left[g] = cut.xi[g] * u[g];
      if (c > cut.cut_col) right[g] = cut.xi[g] * u[g];
    }
    const double n1 = l2_norm_squared(domain, left), n2 = l2_norm_squared(domain, right);
    p.tau1 = n1 > 0.0 ? dirichlet_energy(domain, left, mask) / n1 : kInf;
    p.tau2 = n2 > 0.0 ? dirichlet_energy(domain, right, mask) / n2 : kInf;
    if (!p.in_d) p.side = p.tau1 <= p.tau2 ? Side::V : Side::W;
  });
  for (const auto& p : out.parts) {
    switch (p.cls) {
      case PartClass::A: out.A.push_back(p.label); break;
      case PartClass::B: out.B.push_back(p.label); break;
      case PartClass::C: out.C.push_back(p.label); break;
    }
    if (p.in_d) out.D.push_back(p.label);
    if (p.side == Side::V) out.E.push_back(p.label);
    if (p.side == Side::W) out.F.push_back(p.label);
  }
  return out;
}

SplitResult split_and_assign(const GridDomain& domain, const Partition& partition, const std::vector<EigenResult>& eigs,
                             const Classification& cls, const StripConfig& cfg) {
  SplitResult out;
  auto add = [&](bool to_v, int label, std::vector<double> f) {
    const SubdomainMask mask = partition.part_mask(domain, label);
    const double n2 = l2_norm_squared(domain, f);
    if (!(n2 > 0.0))
      throw NumericalFailure("kept piece of part " + std::to_string(label) + " has zero mass (discretization fault)");
    const double s = 1.0 / std::sqrt(n2);
    for (double& x : f) x *= s;
    const double e = dirichlet_energy(domain, f, mask);
    if (to_v) {
      out.v.components.push_back(std::move(f));
      out.v_source.push_back(label);
      out.v_energy.push_back(e);
    } else {
      out.w.components.push_back(std::move(f));
      out.w_source.push_back(label);
      out.w_energy.push_back(e);
    }
  };
  for (int l : cls.A) add(true, l, eigs[static_cast<std::size_t>(l)].eigfn);
  for (int l : cls.B) add(false, l, eigs[static_cast<std::size_t>(l)].eigfn);
  for (int l : cls.C) {
    const PartRecord& p = cls.parts[static_cast<std::size_t>(l)];
    if (p.in_d) continue;
    const Cutoff cut = build_cutoff(domain, p.offset.r, cfg);
    const auto& u = eigs[static_cast<std::size_t>(l)].eigfn;
    std::vector<double> f(domain.size(), 0.0);
    for (std::size_t g = 0; g < domain.size(); ++g) {
      const int c = domain.col(g);
      if (p.side == Side::V ? c < cut.cut_col : c > cut.cut_col) f[g] = cut.xi[g] * u[g];
    }
    add(p.side == Side::V, l, std::move(f));
  }
  // A parts come first in v, then E pieces (same for B and F in w).
  out.m1 = static_cast<int>(out.v.components.size());
  out.m2 = static_cast<int>(out.w.components.size());
  out.v.m = out.m1;
  out.w.m = out.m2;
  return out;
}

bool ChainReport::all_ok() const {
  return chain_ok && convexity_ok && factor_ok && endpoints_ok && slope_ok && claim_ok &&
         count_ok && supports_ok && cut_ok && counts_ok;
}

ChainReport energy_chain_check(const GridDomain& domain, const Partition& partition, const std::vector<EigenResult>& eigs,
                               const Classification& cls, const SplitResult& split, const StripConfig& cfg) {
  ChainReport r;
  r.m = partition.m;
  r.count_a = static_cast<int>(cls.A.size());
  r.count_b = static_cast<int>(cls.B.size());
  r.count_c = static_cast<int>(cls.C.size());
  r.count_d = static_cast<int>(cls.D.size());
  r.count_e = static_cast<int>(cls.E.size());
  r.count_f = static_cast<int>(cls.F.size());
  r.m1 = split.m1;
  r.m2 = split.m2;

  for (std::size_t g = 0; g < domain.size(); ++g) {
    if (!domain.inside(g)) continue;
    ++r.cells_total;
    if (rel_x(domain, domain.col(g), cfg) < 0.0) ++r.cells_left;
  }
  r.alpha = static_cast<double>(r.cells_left) / static_cast<double>(r.cells_total);

  std::vector<double> energy(static_cast<std::size_t>(partition.m));
  for (int j = 0; j < partition.m; ++j)
    energy[static_cast<std::size_t>(j)] =
        dirichlet_energy(domain, eigs[static_cast<std::size_t>(j)].eigfn, partition.part_mask(domain, j));
  for (const auto& p : cls.parts) {
    const double e = energy[static_cast<std::size_t>(p.label)];
    r.sum_all += e;
    if (p.cls == PartClass::A) r.sum_a += e;
    if (p.cls == PartClass::B) r.sum_b += e;
    if (p.cls == PartClass::C) (p.in_d ? r.sum_d : r.sum_c_minus_d) += e;
  }
  double v_total = 0.0, w_total = 0.0;
  for (std::size_t q = 0; q < split.v_energy.size(); ++q) {
    v_total += split.v_energy[q];
    if (cls.parts[static_cast<std::size_t>(split.v_source[q])].cls == PartClass::C) r.sum_e += split.v_energy[q];
  }
  for (std::size_t q = 0; q < split.w_energy.size(); ++q) {
    w_total += split.w_energy[q];
    if (cls.parts[static_cast<std::size_t>(split.w_source[q])].cls == PartClass::C) r.sum_f += split.w_energy[q];
  }

  const double m2 = static_cast<double>(r.m) * r.m;
  const double grow = 1.0 + cfg.epsilon / 5;
  r.lhs = r.sum_all / m2;
  r.line1 = (r.sum_a + r.sum_b + r.sum_c_minus_d) / m2;
  r.line2 = (r.sum_a + r.sum_b + (r.sum_e + r.sum_f) / grow) / m2;
  r.mid = (r.sum_a + r.sum_e + r.sum_b + r.sum_f) / (m2 * grow);
  // Adjacent lines can coincide (no C parts, or no A and B parts), so the
  // comparisons allow for the rounding of the sums.
  const auto geq = [](double a, double b) { return a >= b - 1e-12 * std::abs(b); };
  r.line1_ok = geq(r.lhs, r.line1);
  r.line2_ok = geq(r.line1, r.line2);
  r.mid_ok = geq(r.line2, r.mid);
  r.chain_ok = r.line1_ok && r.line2_ok && r.mid_ok;
  r.chain_ratio = r.mid > 0.0 ? r.lhs / r.mid : kInf;

  r.c_min = kInf;
  if (r.m1 > 0) {
    r.c_left = r.alpha * v_total / (static_cast<double>(r.m1) * r.m1);
    r.c_min = std::min(r.c_min, r.c_left);
  }
  if (r.m2 > 0) {
    r.c_right = (1.0 - r.alpha) * w_total / (static_cast<double>(r.m2) * r.m2);
    r.c_min = std::min(r.c_min, r.c_right);
  }
  if (r.c_min == kInf) r.c_min = 0.0;

  // alpha = L/N: m1^2 N R + m2^2 N L >= (m1 + m2)^2 L R with R = N - L.
  const __int128 N = r.cells_total, L = r.cells_left, R = N - L;
  const __int128 a = r.m1, b = r.m2;
  r.convexity_ok = a * a * N * R + b * b * N * L >= (a + b) * (a + b) * L * R;

  r.factor = (1.0 - cfg.epsilon / 4) * (1.0 - cfg.epsilon / 5) / grow;
  r.factor_ok = r.factor >= 1.0 - cfg.epsilon;
  r.count_ratio_sq = std::pow(static_cast<double>(r.m - r.count_d) / r.m, 2);
  r.large_m_ok = r.count_ratio_sq >= 1.0 - cfg.epsilon / 5;
  r.limit_rhs = r.factor * r.c_min;
  r.limit_step_ok = r.lhs >= r.limit_rhs;

  r.endpoints_ok = true;
  r.claim_ok = true;
  r.cut_ok = true;
  for (const auto& p : cls.parts) {
    r.endpoints_ok = r.endpoints_ok && p.offset.endpoint_ok;
    r.max_slope = std::max(r.max_slope, p.max_slope);
    if (p.cls == PartClass::C) r.claim_ok = r.claim_ok && p.claim.bound_ok;
  }
  r.slope_ok = r.max_slope <= 8.0 / cfg.delta;
  r.claim_constant = cfg.claim_constant();
  const double fk_area = kPi * kBesselJ01 * kBesselJ01 * cfg.epsilon * cfg.delta * cfg.delta / 640.0;
  r.count_bound = static_cast<int>(std::ceil(domain.measured_area() / fk_area));
  r.count_ok = r.count_d <= r.count_bound;

  r.supports_ok = true;
  auto check_support = [&](const SegregatedField& f, const std::vector<int>& source, bool left) {
    for (std::size_t q = 0; q < f.components.size(); ++q) {
      const auto& c = f.components[q];
      const PartRecord& p = cls.parts[static_cast<std::size_t>(source[q])];
      for (std::size_t g = 0; g < c.size(); ++g) {
        if (c[g] == 0.0) continue;
        const double x = rel_x(domain, domain.col(g), cfg);
        if (left ? in_d2p(x, cfg) : in_d1p(x, cfg)) r.supports_ok = false;
        if (p.cls == PartClass::C && domain.col(g) == p.cut_col) r.cut_ok = false;
      }
    }
  };
  check_support(split.v, split.v_source, true);
  check_support(split.w, split.w_source, false);
  r.counts_ok = r.m1 + r.m2 == r.m - r.count_d;
  return r;
}

void write_chain_report(std::ostream& os, const ChainReport& r, const StripConfig& cfg) {
  auto yes = [](bool b) { return b ? "yes" : "no"; };
  os << std::setprecision(12);
  os << "gamma_x: " << cfg.gamma_x << "\n"
     << "delta: " << cfg.delta << "\n"
     << "epsilon: " << cfg.epsilon << "\n"
     << "m: " << r.m << "\n"
     << "count_A: " << r.count_a << "\n"
     << "count_B: " << r.count_b << "\n"
     << "count_C: " << r.count_c << "\n"
     << "count_D: " << r.count_d << "\n"
     << "count_E: " << r.count_e << "\n"
     << "count_F: " << r.count_f << "\n"
     << "m1: " << r.m1 << "\n"
     << "m2: " << r.m2 << "\n"
     << "alpha: " << r.alpha << "\n"
     << "sum_all: " << r.sum_all << "\n"
     << "sum_A: " << r.sum_a << "\n"
     << "sum_B: " << r.sum_b << "\n"
     << "sum_C_minus_D: " << r.sum_c_minus_d << "\n"
     << "sum_D: " << r.sum_d << "\n"
     << "sum_E: " << r.sum_e << "\n"
     << "sum_F: " << r.sum_f << "\n"
     << "lhs: " << r.lhs << "\n"
     << "line1: " << r.line1 << "\n"
     << "line2: " << r.line2 << "\n"
     << "mid: " << r.mid << "\n"
     << "line1_ok: " << yes(r.line1_ok) << "\n"
     << "line2_ok: " << yes(r.line2_ok) << "\n"
     << "mid_ok: " << yes(r.mid_ok) << "\n"
     << "chain_ratio: " << r.chain_ratio << "\n"
     << "chain_ok: " << yes(r.chain_ok) << "\n"
     << "convexity_ok: " << yes(r.convexity_ok) << "\n"
     << "factor: " << r.factor << "\n"
     << "factor_ok: " << yes(r.factor_ok) << "\n"
     << "c_left: " << r.c_left << "\n"
     << "c_right: " << r.c_right << "\n"
     << "c_min: " << r.c_min << "\n"
     << "count_ratio_sq: " << r.count_ratio_sq << "\n"
     << "large_m_ok: " << yes(r.large_m_ok) << "\n"
     << "limit_rhs: " << r.limit_rhs << "\n"
     << "limit_step_ok: " << yes(r.limit_step_ok) << "\n"
     << "endpoints_ok: " << yes(r.endpoints_ok) << "\n"
     << "max_slope: " << r.max_slope << "\n"
     << "slope_ok: " << yes(r.slope_ok) << "\n"
     << "claim_constant: " << r.claim_constant << "\n"
     << "claim_ok: " << yes(r.claim_ok) << "\n"
     << "count_bound: " << r.count_bound << "\n"
     << "count_ok: " << yes(r.count_ok) << "\n"
     << "supports_ok: " << yes(r.supports_ok) << "\n"
     << "cut_ok: " << yes(r.cut_ok) << "\n"
     << "counts_ok: " << yes(r.counts_ok) << "\n"
     << "verdict: " << (r.all_ok() ? "holds" : "fails") << "\n";
}

void write_part_csv(std::ostream& os, const Classification& cls) {
  os << "label,class,in_d,lambda1,r,endpoint_ok,ratio,triggered,tau1,tau2,assignment\n" << std::setprecision(12);
  for (const auto& p : cls.parts) {
    const bool c = p.cls == PartClass::C;
    os << p.label << ',' << class_name(p.cls) << ',' << (p.in_d ? 1 : 0) << ',' << p.lambda1 << ',' << p.offset.r << ','
       << (p.offset.endpoint_ok ? 1 : 0) << ',';
    if (c) {
      os << p.claim.ratio << ',' << (p.claim.triggered ? 1 : 0) << ',' << p.tau1 << ',' << p.tau2;
    } else {
      os << ",,,";
    }
    const Side s = p.cls == PartClass::A ? Side::V : p.cls == PartClass::B ? Side::W : p.side;
    os << ',' << side_name(s) << '\n';
  }
}

GlueRun glue_verify(const GridDomain& domain, const Partition& partition, const StripConfig& cfg, double eigen_tol, int jobs) {
  validate_partition(domain, partition);
  cfg.validate(domain);
  GlueRun run;
  run.eigs.resize(static_cast<std::size_t>(partition.m));
  parallel_for(run.eigs.size(), jobs, [&](std::size_t j) {
    run.eigs[j] = first_eigenpair(domain, partition.part_mask(domain, static_cast<int>(j)), eigen_tol);
  });
  run.classification = classify_subdomains(domain, partition, cfg, run.eigs, jobs);
  run.split = split_and_assign(domain, partition, run.eigs, run.classification, cfg);
  run.report = energy_chain_check(domain, partition, run.eigs, run.classification, run.split, cfg);
  return run;
}

}  // namespace specpart
