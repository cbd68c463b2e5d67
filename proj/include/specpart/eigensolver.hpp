#pragma once

// First Dirichlet eigenpair of the 5-point Laplacian on a cell mask.
//
// The Dirichlet condition is imposed on the cell faces that separate the mask
// from its complement: the value across such a face is the mirror image -u, so
// a mask cell with k outside neighbours carries diagonal 4 + k. The quadratic
// form is therefore
//
//   E(f) = sum over interior edges (f_a - f_b)^2 + sum over boundary faces 2 f_a^2
//
// which is the discrete integral of |grad f|^2 with f vanishing on the mask
// boundary. Integrals of f^2 carry the cell area h^2.

#include <cstddef>
#include <span>
#include <vector>

#include "specpart/grid.hpp"

namespace specpart {

struct EigenResult {
  double lambda1 = 0.0;
  std::vector<double> eigfn;  // grid-sized, zero outside the mask, sum eigfn^2 h^2 = 1
  int iterations = 0;         // inverse-iteration steps
  long cg_iterations = 0;     // total CG steps
  double residual = 0.0;      // ||A u - lambda u|| / (lambda ||u||)
};

struct EigenOptions {
  double tol = 1e-7;
  int max_cg_iters = 10000;   // per linear solve
  int max_iterations = 400;   // inverse-iteration steps
  // Grid-sized starting vector; its absolute value restricted to the mask is used.
  std::span<const double> initial{};
  // Without an initial vector, large masks start from the prolongated solution
  // on a 2x coarser mask.
  bool nested_start = true;
};

EigenResult first_eigenpair(const GridDomain& domain, const SubdomainMask& mask, double tol = 1e-7);
EigenResult first_eigenpair(const GridDomain& domain, const SubdomainMask& mask, const EigenOptions& opts);

// Discrete integral of |grad f|^2 over the mask (f taken as zero outside it).
double dirichlet_energy(const GridDomain& domain, std::span<const double> f, const SubdomainMask& mask);

// Discrete integral of f^2.
double l2_norm_squared(const GridDomain& domain, std::span<const double> f);

// dirichlet_energy / l2_norm_squared; f must vanish outside the mask.
double rayleigh_quotient(const GridDomain& domain, std::span<const double> f, const SubdomainMask& mask);

// Eigenvalue after dilating the domain by t: lambda / t^2.
double scale_eigenvalue(double lambda, double t);

// pi j01^2 / area: the disk with the given area, a lower bound for every planar
// domain of that area.
double faber_krahn_lower_bound(double area);

// Richardson extrapolation from values at h and h/ratio for an error ~ h^order.
double richardson_extrapolate(double coarse, double fine, double ratio = 2.0, double order = 2.0);

// Observed convergence order from values at h, h/2 and the exact limit.
double observed_order(double coarse, double fine, double exact);

}  // namespace specpart
