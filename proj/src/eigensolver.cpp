#include "specpart/eigensolver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>

#include "specpart/constants.hpp"
#include "specpart/errors.hpp"
#include "specpart/simd.hpp"

namespace specpart {
namespace {

constexpr std::size_t kNestedThreshold = 4096;

struct Lattice {
  int width;
  int height;
  std::span<const std::uint8_t> mask;
};

// Mask cells copied into a box padded by one cell on every side.
class MaskedOperator {
 public:
  explicit MaskedOperator(const Lattice& lat) : lat_(lat) {
    int i0 = lat.width, i1 = -1, j0 = lat.height, j1 = -1;
    for (int j = 0; j < lat.height; ++j) {
      for (int i = 0; i < lat.width; ++i) {
        if (cell(i, j)) {
          i0 = std::min(i0, i);
          i1 = std::max(i1, i);
          j0 = std::min(j0, j);
          j1 = std::max(j1, j);
        }
      }
    }
    if (i1 < 0) throw InvalidInput("empty subdomain");
    bi_ = i0 - 1;
    bj_ = j0 - 1;
    stride_ = static_cast<std::size_t>(i1 - i0 + 3);
    rows_ = static_cast<std::size_t>(j1 - j0 + 3);
    n_ = stride_ * rows_;
    diag_.assign(n_, 0.0);
    coef_.assign(n_, 0.0);
    for (int j = j0; j <= j1; ++j) {
      for (int i = i0; i <= i1; ++i) {
        if (!cell(i, j)) continue;
        const int outside = !cell(i - 1, j) + !cell(i + 1, j) + !cell(i, j - 1) + !cell(i, j + 1);
        const std::size_t b = box(i, j);
        diag_[b] = 4.0 + outside;
        coef_[b] = 1.0;
        ++count_;
      }
    }
  }

  std::size_t n() const { return n_; }
  std::size_t count() const { return count_; }

  void apply(const double* x, double* y) const {
    simd::kernels().apply_stencil(diag_.data(), coef_.data(), x, y, stride_, n_);
  }

  void gather(std::span<const double> grid, std::vector<double>& out) const {
    out.assign(n_, 0.0);
    for_each_cell([&](std::size_t b, std::size_t g) { out[b] = grid[g]; });
  }

  void scatter(const std::vector<double>& boxv, std::vector<double>& grid) const {
    grid.assign(static_cast<std::size_t>(lat_.width) * static_cast<std::size_t>(lat_.height), 0.0);
    for_each_cell([&](std::size_t b, std::size_t g) { grid[g] = boxv[b]; });
  }

  template <typename F>
  void for_each_cell(F&& f) const {
    for (std::size_t r = 1; r + 1 < rows_; ++r) {
      for (std::size_t c = 1; c + 1 < stride_; ++c) {
        const std::size_t b = r * stride_ + c;
        if (coef_[b] == 0.0) continue;
        const std::size_t g = static_cast<std::size_t>(bj_ + static_cast<int>(r)) * static_cast<std::size_t>(lat_.width) +
                              static_cast<std::size_t>(bi_ + static_cast<int>(c));
        f(b, g);
      }
    }
  }

 private:
  bool cell(int i, int j) const {
    return i >= 0 && j >= 0 && i < lat_.width && j < lat_.height &&
           lat_.mask[static_cast<std::size_t>(j) * static_cast<std::size_t>(lat_.width) + static_cast<std::size_t>(i)] != 0;
  }
  std::size_t box(int i, int j) const {
    return static_cast<std::size_t>(j - bj_) * stride_ + static_cast<std::size_t>(i - bi_);
  }

  Lattice lat_;
  int bi_ = 0, bj_ = 0;
  std::size_t stride_ = 0, rows_ = 0, n_ = 0, count_ = 0;
  std::vector<double> diag_, coef_;
};

// Solves A y = b by conjugate gradients starting from y. Returns the step count.
int conjugate_gradient(const MaskedOperator& op, const std::vector<double>& b, std::vector<double>& y,
                       double rel_tol, int max_iters) {
  const auto& k = simd::kernels();
  const std::size_t n = op.n();
  std::vector<double> r(n), p(n), q(n);
  op.apply(y.data(), q.data());
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - q[i];
  const double bb = k.dot(b.data(), b.data(), n);
  const double target = rel_tol * rel_tol * bb;
  double rr = k.dot(r.data(), r.data(), n);
  p = r;
  int it = 0;
  while (rr > target && it < max_iters) {
    op.apply(p.data(), q.data());
    const double pq = k.dot(p.data(), q.data(), n);
    if (!(pq > 0.0)) break;
    const double alpha = rr / pq;
    const double rr_new = k.cg_update(alpha, p.data(), q.data(), y.data(), r.data(), n);
    k.xpay(r.data(), rr_new / rr, p.data(), n);
    rr = rr_new;
    ++it;
  }
  return it;
}

struct BoxEigen {
  double mu = 0.0;  // eigenvalue of the unscaled stencil
  std::vector<double> x;
  int iterations = 0;
  long cg_iterations = 0;
  double residual = 0.0;
};

// x is normalized; returns mu = x.Ax and the relative residual.
std::pair<double, double> rayleigh_and_residual(const MaskedOperator& op, const std::vector<double>& x,
                                                std::vector<double>& ax) {
  const auto& k = simd::kernels();
  op.apply(x.data(), ax.data());
  const double mu = k.dot(x.data(), ax.data(), op.n());
  double res2 = 0.0;
  for (std::size_t i = 0; i < op.n(); ++i) {
    const double d = ax[i] - mu * x[i];
    res2 += d * d;
  }
  return {mu, std::sqrt(res2) / mu};
}

// Lowest eigenpair of a small symmetric matrix (row-major, n x n) by cyclic
// Jacobi rotations.
std::pair<double, std::vector<double>> smallest_symmetric(std::vector<double> a, std::size_t n) {
  std::vector<double> v(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) v[i * n + i] = 1.0;
  for (int sweep = 0; sweep < 50; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) off += a[p * n + q] * a[p * n + q];
    }
    if (off < 1e-30) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a[p * n + q];
        if (apq == 0.0) continue;
        const double theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k * n + p], akq = a[k * n + q];
          a[k * n + p] = c * akp - s * akq;
          a[k * n + q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p * n + k], aqk = a[q * n + k];
          a[p * n + k] = c * apk - s * aqk;
          a[q * n + k] = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v[k * n + p], vkq = v[k * n + q];
          v[k * n + p] = c * vkp - s * vkq;
          v[k * n + q] = s * vkp + c * vkq;
        }
      }
    }
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < n; ++i) {
    if (a[i * n + i] < a[best * n + best]) best = i;
  }
  std::vector<double> c(n);
  for (std::size_t k = 0; k < n; ++k) c[k] = v[k * n + best];
  return {a[best * n + best], c};
}

// Inverse iteration in which each step takes the lowest Ritz vector of
// span{previous x, x, A^-1 x}. The extra direction keeps the step count low
// when the first two eigenvalues are close, as on parts with two lobes.
BoxEigen inverse_iteration(const MaskedOperator& op, std::vector<double> x, double tol, int max_iters,
                           int max_cg) {
  const auto& k = simd::kernels();
  const std::size_t n = op.n();
  double nrm = std::sqrt(k.dot(x.data(), x.data(), n));
  if (!(nrm > 0.0)) throw NumericalFailure("inverse iteration: zero starting vector");
  k.scale(1.0 / nrm, x.data(), n);

  std::vector<double> ax(n), y(n), prev;
  std::vector<std::vector<double>> basis, abasis;
  BoxEigen out;
  auto [mu, res] = rayleigh_and_residual(op, x, ax);
  double best = res;
  while (res > tol && out.iterations < max_iters) {
    // Start from the Rayleigh-scaled iterate; the solve only needs to beat the
    // current eigen-residual by a margin.
    for (std::size_t i = 0; i < n; ++i) y[i] = x[i] / mu;
    const double cg_tol = std::clamp(1e-2 * res, 1e-13, 1e-3);
    out.cg_iterations += conjugate_gradient(op, x, y, cg_tol, max_cg);
    nrm = std::sqrt(k.dot(y.data(), y.data(), n));
    if (!(nrm > 0.0) || !std::isfinite(nrm)) break;

    // Orthonormal basis by two passes of Gram-Schmidt; nearly dependent
    // directions are dropped.
    basis.clear();
    for (const std::vector<double>* src : {&y, &x, &prev}) {
      if (src->empty()) continue;
      std::vector<double> v = *src;
      const double v0 = std::sqrt(k.dot(v.data(), v.data(), n));
      for (int pass = 0; pass < 2; ++pass) {
        for (const auto& b : basis) k.axpy(-k.dot(b.data(), v.data(), n), b.data(), v.data(), n);
      }
      const double vn = std::sqrt(k.dot(v.data(), v.data(), n));
      if (!(vn > 1e-8 * v0)) continue;
      k.scale(1.0 / vn, v.data(), n);
      basis.push_back(std::move(v));
    }
    const std::size_t p = basis.size();
    abasis.resize(p);
    std::vector<double> h(p * p);
    for (std::size_t i = 0; i < p; ++i) {
      abasis[i].resize(n);
      op.apply(basis[i].data(), abasis[i].data());
      for (std::size_t j = 0; j <= i; ++j) h[i * p + j] = h[j * p + i] = k.dot(basis[j].data(), abasis[i].data(), n);
    }
    const auto c = smallest_symmetric(std::move(h), p).second;
    prev = x;
    std::fill(x.begin(), x.end(), 0.0);
    for (std::size_t i = 0; i < p; ++i) k.axpy(c[i], basis[i].data(), x.data(), n);
    nrm = std::sqrt(k.dot(x.data(), x.data(), n));
    if (!(nrm > 0.0) || !std::isfinite(nrm)) break;
    k.scale(1.0 / nrm, x.data(), n);
    std::tie(mu, res) = rayleigh_and_residual(op, x, ax);
    best = std::min(best, res);
    ++out.iterations;
  }
  if (res > tol) {
    std::ostringstream os;
    os << "inverse iteration did not converge after " << out.iterations << " steps (residual " << best
       << ", tol " << tol << ")";
    throw NumericalFailure(os.str(), best);
  }
  out.mu = mu;
  out.x = std::move(x);
  out.residual = res;
  return out;
}

// Coarse mask: a coarse cell is kept when at least two of its four children are.
std::vector<std::uint8_t> coarsen(const Lattice& lat, int& cw, int& ch) {
  cw = (lat.width + 1) / 2;
  ch = (lat.height + 1) / 2;
  std::vector<std::uint8_t> out(static_cast<std::size_t>(cw) * static_cast<std::size_t>(ch), 0);
  for (int J = 0; J < ch; ++J) {
    for (int I = 0; I < cw; ++I) {
      int c = 0;
      for (int dj = 0; dj < 2; ++dj) {
        for (int di = 0; di < 2; ++di) {
          const int i = 2 * I + di, j = 2 * J + dj;
          if (i < lat.width && j < lat.height &&
              lat.mask[static_cast<std::size_t>(j) * static_cast<std::size_t>(lat.width) + static_cast<std::size_t>(i)])
            ++c;
        }
      }
      out[static_cast<std::size_t>(J) * static_cast<std::size_t>(cw) + static_cast<std::size_t>(I)] = c >= 2;
    }
  }
  return out;
}

// Grid-sized starting vector for `lat`.
std::vector<double> starting_vector(const Lattice& lat, std::size_t count, bool nested) {
  const std::size_t size = static_cast<std::size_t>(lat.width) * static_cast<std::size_t>(lat.height);
  std::vector<double> ones(size, 0.0);
  for (std::size_t g = 0; g < size; ++g) ones[g] = lat.mask[g] ? 1.0 : 0.0;
  if (!nested || count < kNestedThreshold) return ones;

  int cw = 0, ch = 0;
  const auto cmask = coarsen(lat, cw, ch);
  const Lattice clat{cw, ch, cmask};
  const std::size_t ccount = static_cast<std::size_t>(std::count(cmask.begin(), cmask.end(), 1));
  if (ccount == 0) return ones;
  std::vector<double> coarse;
  try {
    MaskedOperator cop(clat);
    std::vector<double> cx;
    cop.gather(starting_vector(clat, ccount, true), cx);
    auto ce = inverse_iteration(cop, std::move(cx), 1e-4, 200, 10000);
    cop.scatter(ce.x, coarse);
  } catch (const NumericalFailure&) {
    return ones;
  }
  std::vector<double> fine(size, 0.0);
  double total = 0.0;
  for (int j = 0; j < lat.height; ++j) {
    for (int i = 0; i < lat.width; ++i) {
      const std::size_t g = static_cast<std::size_t>(j) * static_cast<std::size_t>(lat.width) + static_cast<std::size_t>(i);
      if (!lat.mask[g]) continue;
      fine[g] = std::abs(coarse[static_cast<std::size_t>(j / 2) * static_cast<std::size_t>(cw) + static_cast<std::size_t>(i / 2)]);
      total += fine[g];
    }
  }
  return total > 0.0 ? fine : ones;
}

void check_mask(const GridDomain& domain, const SubdomainMask& mask) {
  if (mask.cells.size() != domain.size()) throw InvalidInput("mask does not match the domain grid");
  for (std::size_t g = 0; g < mask.cells.size(); ++g) {
    if (mask.cells[g] && !domain.inside(g)) throw InvalidInput("mask cell " + std::to_string(g) + " lies outside the domain");
  }
}

}  // namespace

EigenResult first_eigenpair(const GridDomain& domain, const SubdomainMask& mask, double tol) {
  EigenOptions opts;
  opts.tol = tol;
  return first_eigenpair(domain, mask, opts);
}

EigenResult first_eigenpair(const GridDomain& domain, const SubdomainMask& mask, const EigenOptions& opts) {
  check_mask(domain, mask);
  if (!(opts.tol > 0.0) || opts.tol > 1e-3) throw InvalidInput("eigen tolerance must lie in (0, 1e-3]");
  const Lattice lat{domain.width(), domain.height(), mask.cells};
  MaskedOperator op(lat);  // throws on empty mask

  std::vector<double> start;
  bool usable = false;
  if (!opts.initial.empty()) {
    if (opts.initial.size() != domain.size()) throw InvalidInput("initial vector does not match the domain grid");
    start.assign(domain.size(), 0.0);
    for (std::size_t g = 0; g < domain.size(); ++g) {
      if (mask.cells[g]) {
        start[g] = std::abs(opts.initial[g]);
        usable = usable || start[g] > 0.0;
      }
    }
  }
  if (!usable) start = starting_vector(lat, op.count(), opts.nested_start);

  std::vector<double> x;
  op.gather(start, x);
  BoxEigen be = inverse_iteration(op, std::move(x), opts.tol, opts.max_iterations, opts.max_cg_iters);

  EigenResult out;
  op.scatter(be.x, out.eigfn);
  double sum = 0.0;
  for (double v : out.eigfn) sum += v;
  const double sign = sum < 0.0 ? -1.0 : 1.0;
  // Round-off can leave tiny negative values on components the iteration has
  // not resolved; the first eigenfunction is nonnegative.
  for (double& v : out.eigfn) v = std::max(0.0, sign * v);
  const double norm2 = l2_norm_squared(domain, out.eigfn);
  if (!(norm2 > 0.0)) throw NumericalFailure("eigenfunction vanished after sign normalization", be.residual);
  const double s = 1.0 / std::sqrt(norm2);
  for (double& v : out.eigfn) v *= s;
  out.lambda1 = rayleigh_quotient(domain, out.eigfn, mask);
  out.iterations = be.iterations;
  out.cg_iterations = be.cg_iterations;
  out.residual = be.residual;
  return out;
}

double dirichlet_energy(const GridDomain& domain, std::span<const double> f, const SubdomainMask& mask) {
  check_mask(domain, mask);
  if (f.size() != domain.size()) throw InvalidInput("function does not match the domain grid");
  const int w = domain.width(), hgt = domain.height();
  auto in = [&](int i, int j) {
    return i >= 0 && j >= 0 && i < w && j < hgt && mask.cells[domain.index(i, j)] != 0;
  };
  double e = 0.0;
  for (int j = 0; j < hgt; ++j) {
    for (int i = 0; i < w; ++i) {
      if (!in(i, j)) continue;
      const double v = f[domain.index(i, j)];
      // right and up edges once each; faces to the complement carry 2 v^2
      if (in(i + 1, j)) {
        const double d = f[domain.index(i + 1, j)] - v;
        e += d * d;
      } else {
        e += 2.0 * v * v;
      }
      if (in(i, j + 1)) {
        const double d = f[domain.index(i, j + 1)] - v;
        e += d * d;
      } else {
        e += 2.0 * v * v;
      }
      if (!in(i - 1, j)) e += 2.0 * v * v;
      if (!in(i, j - 1)) e += 2.0 * v * v;
    }
  }
  return e;
}

double l2_norm_squared(const GridDomain& domain, std::span<const double> f) {
  double s = 0.0;
  for (double v : f) s += v * v;
  return s * domain.h() * domain.h();
}

double rayleigh_quotient(const GridDomain& domain, std::span<const double> f, const SubdomainMask& mask) {
  check_mask(domain, mask);
  if (f.size() != domain.size()) throw InvalidInput("function does not match the domain grid");
  for (std::size_t g = 0; g < f.size(); ++g) {
    if (!mask.cells[g] && f[g] != 0.0) throw InvalidInput("function is nonzero outside the mask");
  }
  const double m = l2_norm_squared(domain, f);
  if (!(m > 0.0)) throw InvalidInput("Rayleigh quotient of an identically zero function");
  return dirichlet_energy(domain, f, mask) / m;
}

double scale_eigenvalue(double lambda, double t) {
  if (!(t > 0.0)) throw InvalidInput("scale factor must be positive");
  return lambda / (t * t);
}

double faber_krahn_lower_bound(double area) {
  if (!(area > 0.0)) throw InvalidInput("area must be positive");
  return kPi * kBesselJ01 * kBesselJ01 / area;
}

double richardson_extrapolate(double coarse, double fine, double ratio, double order) {
  const double r = std::pow(ratio, order);
  return (r * fine - coarse) / (r - 1.0);
}

double observed_order(double coarse, double fine, double exact) {
  return std::log2(std::abs(coarse - exact) / std::abs(fine - exact));
}

}  // namespace specpart
