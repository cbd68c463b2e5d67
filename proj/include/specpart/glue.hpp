#pragma once

// Cut-and-glue verification across a vertical line Gamma = {x = gamma_x}.
//
// With S the strip |x - gamma_x| < delta/2, D1' = {x <= gamma_x - delta/2} and
// D2' = {x >= gamma_x + delta/2} (cell centers), parts of a partition are
// classified as A (miss D2'), B (miss D1') or C (meet both). Each C part gets
// a half-mass offset r, a cut-off xi vanishing on the column at
// gamma_x + r + delta/4, and the Rayleigh test of xi u against
// (1 + eps/5) lambda. Parts failing it form D; the others are cut along the
// zero column and their cheaper side joins v (left) or w (right). The chain
// report evaluates every inequality of the energy argument on these fields.
//
// Offsets r and the cut position are relative to gamma_x.

#include <iosfwd>
#include <vector>

#include "specpart/eigensolver.hpp"
#include "specpart/grid.hpp"
#include "specpart/partition.hpp"

namespace specpart {

struct StripConfig {
  double gamma_x = 0.5;
  double delta = 0.1;
  double epsilon = 0.2;

  // Gamma must be a column face strictly inside the domain's x-range with
  // inside cells on both sides; the strip must span at least 4 columns.
  void validate(const GridDomain& domain) const;
  // 640 / (eps delta^2)
  double claim_constant() const;
};

enum class PartClass { A, B, C };

struct OffsetChoice {
  double r = 0.0;
  double half_mass = 0.0;    // integral of u^2 over the part within (r, r + delta/2)
  double total_mass = 0.0;   // integral of u^2 over the part
  bool endpoint_ok = false;  // r = -delta/2 or r = 0 already satisfies the bound
};

// Lowest candidate r in {-delta/2 + i h} u {0}, within [-delta/2, 0], whose
// half strip carries at most half of the mass of u.
OffsetChoice select_half_mass_offset(const GridDomain& domain, std::span<const double> u, const StripConfig& cfg);

struct Cutoff {
  std::vector<double> xi;  // grid-sized
  int cut_col = 0;         // local column forced to zero
  double max_slope = 0.0;  // largest |forward difference| / h
};

// xi = min(1, |x - (gamma_x + r + delta/4)| / (delta/4)) with xi = 0 on the
// column containing gamma_x + r + delta/4.
Cutoff build_cutoff(const GridDomain& domain, double r, const StripConfig& cfg);

struct ClaimCheck {
  double ratio = 0.0;      // Rayleigh quotient of xi u on the part
  bool triggered = false;  // ratio >= (1 + eps/5) lambda
  bool bound_ok = true;    // not triggered, or lambda <= 640 / (eps delta^2)
};

ClaimCheck check_claim(const GridDomain& domain, const SubdomainMask& part, std::span<const double> u,
                       std::span<const double> xi, double lambda, const StripConfig& cfg);

enum class Side { None, V, W };

struct PartRecord {
  int label = 0;
  PartClass cls = PartClass::A;
  bool in_d = false;
  double lambda1 = 0.0;
  OffsetChoice offset;  // every part
  int cut_col = 0;
  double max_slope = 0.0;
  // C parts only
  ClaimCheck claim;
  double tau1 = 0.0;  // left piece
  double tau2 = 0.0;  // right piece
  Side side = Side::None;
};

struct Classification {
  std::vector<int> A, B, C, D, E, F;  // labels; E and F name the part whose piece was kept
  std::vector<PartRecord> parts;      // indexed by label
};

// Parts that meet neither D1' nor D2' (they lie inside the strip) are put in A.
Classification classify_subdomains(const GridDomain& domain, const Partition& partition, const StripConfig& cfg,
                                   const std::vector<EigenResult>& eigs, int jobs = 1);

struct SplitResult {
  SegregatedField v;  // on the left: A parts, then E pieces
  SegregatedField w;  // on the right: B parts, then F pieces
  std::vector<int> v_source, w_source;   // part label of each component
  std::vector<double> v_energy, w_energy;  // integral of |grad|^2 of each unit-norm component
  int m1 = 0;
  int m2 = 0;
};

SplitResult split_and_assign(const GridDomain& domain, const Partition& partition, const std::vector<EigenResult>& eigs,
                             const Classification& cls, const StripConfig& cfg);

struct ChainReport {
  int m = 0;
  int count_a = 0, count_b = 0, count_c = 0, count_d = 0, count_e = 0, count_f = 0;
  int m1 = 0, m2 = 0;
  double alpha = 0.0;  // area of D1 / area of the domain
  long long cells_left = 0, cells_total = 0;

  // Sums of integrals of |grad|^2.
  double sum_all = 0.0, sum_a = 0.0, sum_b = 0.0, sum_c_minus_d = 0.0, sum_d = 0.0;
  double sum_e = 0.0, sum_f = 0.0;  // v and w energies of the kept pieces

  double lhs = 0.0;     // sum_all / m^2
  double line1 = 0.0;   // (sum_a + sum_b + sum_c_minus_d) / m^2
  double line2 = 0.0;   // (sum_a + sum_b + (sum_e + sum_f) / (1 + eps/5)) / m^2
  double mid = 0.0;     // (sum_a + sum_e + sum_b + sum_f) / (m^2 (1 + eps/5))
  bool line1_ok = false, line2_ok = false, mid_ok = false;

  double chain_ratio = 0.0;  // lhs / mid
  bool chain_ok = false;     // lhs >= line1 >= line2 >= mid

  bool convexity_ok = false;  // m1^2/alpha + m2^2/(1-alpha) >= (m1+m2)^2, exact
  double factor = 0.0;        // (1 - eps/4)(1 - eps/5)/(1 + eps/5)
  bool factor_ok = false;     // factor >= 1 - eps

  // The last steps of the argument hold only as m grows; they are reported
  // but not part of the verdict. c_left and c_right are the normalized
  // energies of v and w rescaled to unit area, c_min the smaller one.
  double c_left = 0.0, c_right = 0.0, c_min = 0.0;
  double count_ratio_sq = 0.0;  // ((m - #D) / m)^2
  bool large_m_ok = false;      // count_ratio_sq >= 1 - eps/5
  double limit_rhs = 0.0;       // factor * c_min
  bool limit_step_ok = false;   // lhs >= limit_rhs

  // Structural checks.
  bool endpoints_ok = false;
  double max_slope = 0.0;
  bool slope_ok = false;  // max_slope <= 8 / delta
  double claim_constant = 0.0;
  bool claim_ok = false;
  int count_bound = 0;  // ceil(|Omega| / (pi j01^2 eps delta^2 / 640))
  bool count_ok = false;
  bool supports_ok = false;  // supp v misses D2', supp w misses D1'
  bool cut_ok = false;       // kept pieces vanish on their cut column
  bool counts_ok = false;    // m1 + m2 = m - #D

  bool all_ok() const;
};

ChainReport energy_chain_check(const GridDomain& domain, const Partition& partition, const std::vector<EigenResult>& eigs,
                               const Classification& cls, const SplitResult& split, const StripConfig& cfg);

// key: value lines
void write_chain_report(std::ostream& os, const ChainReport& r, const StripConfig& cfg);
// label,class,in_d,lambda1,r,endpoint_ok,ratio,triggered,tau1,tau2,assignment
void write_part_csv(std::ostream& os, const Classification& cls);

struct GlueRun {
  std::vector<EigenResult> eigs;
  Classification classification;
  SplitResult split;
  ChainReport report;
};

GlueRun glue_verify(const GridDomain& domain, const Partition& partition, const StripConfig& cfg, double eigen_tol = 1e-7,
                    int jobs = 1);

}  // namespace specpart
