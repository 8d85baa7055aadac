#include "invit/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "invit/error.hpp"
#include "invit/format.hpp"

namespace invit {

void SolverConfig::validate() const {
  if (!(tolerance > 0.0 && tolerance < 1.0)) {
    throw InvalidInput("solver tolerance must lie in (0,1), got " + format_g17(tolerance));
  }
}

Vector solve_spd(const SymSparseMatrix& a, std::span<const double> b, const SolverConfig& cfg,
                 SolveReport* report) {
  cfg.validate();
  const std::size_t n = a.dimension();
  if (b.size() != n) throw InvalidInput("right-hand side length does not match matrix");
  const std::size_t max_it = cfg.max_iterations > 0 ? cfg.max_iterations : 10 * std::max<std::size_t>(n, 1);

  Vector x(n, 0.0);
  const double bnorm = norm2(b);
  if (bnorm == 0.0) {
    if (report) *report = {0, 0.0};
    return x;
  }

  Vector inv_diag = a.diagonal_entries();
  for (std::size_t i = 0; i < n; ++i) {
    if (!(inv_diag[i] > 0.0)) {
      throw SolverError("non-positive diagonal entry " + std::to_string(i) + "; matrix is not SPD", 0, 1.0);
    }
    inv_diag[i] = 1.0 / inv_diag[i];
  }

  Vector r(n), z(n), p(n), q(n);
  std::size_t it = 0;
  double residual = 1.0;
  for (;;) {
    a.multiply(x, q);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - q[i];
    residual = norm2(r) / bnorm;
    if (residual <= cfg.tolerance) break;
    if (it >= max_it) {
      if (report) *report = {it, residual};
      throw SolverError("conjugate gradients did not converge in " + std::to_string(it) +
                            " iterations (relative residual " + format_g17(residual) + ")",
                        it, residual);
    }

    for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
    p = z;
    double rz = dot(r, z);
    while (it < max_it) {
      a.multiply(p, q);
      const double curvature = dot(p, q);
      if (!(curvature > 0.0)) {
        throw SolverError("negative curvature direction; matrix is not positive definite", it,
                          norm2(r) / bnorm);
      }
      const double alpha = rz / curvature;
      axpy(alpha, p, x);
      axpy(-alpha, q, r);
      ++it;
      if (norm2(r) <= cfg.tolerance * bnorm) break;
      for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
      const double rz_next = dot(r, z);
      const double beta = rz_next / rz;
      rz = rz_next;
      for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }
  }
  if (report) *report = {it, residual};
  return x;
}

SymmetricEigen jacobi_eigen(DenseMatrix a, double tolerance, int max_sweeps) {
  const std::size_t n = a.size();
  DenseMatrix v(n);
  for (std::size_t i = 0; i < n; ++i) v(i, i) = 1.0;

  const auto off_norm = [&a, n] {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) s += a(i, j) * a(i, j);
    return std::sqrt(2.0 * s);
  };
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) total += a(i, j) * a(i, j);
  total = std::sqrt(total);

  int sweep = 0;
  for (; sweep < max_sweeps && off_norm() > tolerance * total; ++sweep) {
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  if (off_norm() > tolerance * total) {
    throw SolverError("Jacobi eigensolver did not converge in " + std::to_string(max_sweeps) + " sweeps",
                      static_cast<std::size_t>(sweep), off_norm() / total);
  }

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&a](std::size_t i, std::size_t j) { return a(i, i) < a(j, j); });
  SymmetricEigen out{Vector(n), DenseMatrix(n)};
  for (std::size_t j = 0; j < n; ++j) {
    out.values[j] = a(order[j], order[j]);
    for (std::size_t i = 0; i < n; ++i) out.vectors(i, j) = v(i, order[j]);
  }
  return out;
}

namespace {

// Number of eigenvalues of the symmetric tridiagonal (d, e) below sigma.
std::size_t sturm_count(const Vector& d, const Vector& e, double sigma) {
  constexpr double tiny = std::numeric_limits<double>::min();
  std::size_t count = 0;
  double q = d[0] - sigma;
  if (q < 0.0) ++count;
  for (std::size_t i = 1; i < d.size(); ++i) {
    if (q == 0.0) q = tiny;
    q = d[i] - sigma - e[i - 1] * e[i - 1] / q;
    if (q < 0.0) ++count;
  }
  return count;
}

// Solves (T - sigma I) y = b by Gaussian elimination with partial pivoting.
// The active row always has nonzeros in columns (i, i+1) only; U gets up to
// two superdiagonals.
Vector tridiagonal_shifted_solve(const Vector& d, const Vector& e, double sigma, Vector b, double pivot_floor) {
  const std::size_t n = d.size();
  Vector u0(n), u1(n, 0.0), u2(n, 0.0);
  double cur_d = d[0] - sigma;
  double cur_e = n > 1 ? e[0] : 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double sub = e[i];
    const double next_d = d[i + 1] - sigma;
    const double next_e = i + 2 < n ? e[i + 1] : 0.0;
    if (std::abs(sub) > std::abs(cur_d)) {
      u0[i] = sub;
      u1[i] = next_d;
      u2[i] = next_e;
      const double factor = cur_d / sub;
      std::swap(b[i], b[i + 1]);
      b[i + 1] -= factor * b[i];
      cur_d = cur_e - factor * next_d;
      cur_e = -factor * next_e;
    } else {
      if (std::abs(cur_d) < pivot_floor) cur_d = pivot_floor;
      u0[i] = cur_d;
      u1[i] = cur_e;
      const double factor = sub / cur_d;
      b[i + 1] -= factor * b[i];
      cur_d = next_d - factor * cur_e;
      cur_e = next_e;
    }
  }
  u0[n - 1] = std::abs(cur_d) < pivot_floor ? pivot_floor : cur_d;

  Vector y(n);
  for (std::size_t k = n; k-- > 0;) {
    double s = b[k];
    if (k + 1 < n) s -= u1[k] * y[k + 1];
    if (k + 2 < n) s -= u2[k] * y[k + 2];
    y[k] = s / u0[k];
  }
  return y;
}

// Householder reduction of a symmetric matrix to tridiagonal form, using the
// lower triangle only. Returns (d, e) and the reflector vectors.
struct Tridiagonal {
  Vector d;
  Vector e;
  std::vector<Vector> reflectors;  // reflectors[k] acts on indices k+1..n-1
};

Tridiagonal tridiagonalize(DenseMatrix& a) {
  const std::size_t n = a.size();
  Tridiagonal t{Vector(n), Vector(n > 0 ? n - 1 : 0), {}};
  t.reflectors.reserve(n > 2 ? n - 2 : 0);
  Vector v, p;
  for (std::size_t k = 0; k + 2 < n; ++k) {
    const std::size_t m = n - k - 1;
    v.assign(m, 0.0);
    double xnorm = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      v[i] = a(k + 1 + i, k);
      xnorm += v[i] * v[i];
    }
    xnorm = std::sqrt(xnorm);
    const double alpha = v[0] > 0.0 ? -xnorm : xnorm;
    v[0] -= alpha;
    const double vnorm = norm2(v);
    if (vnorm == 0.0 || xnorm == 0.0) {
      t.e[k] = v[0] + alpha;
      t.reflectors.emplace_back(m, 0.0);
      continue;
    }
    for (double& x : v) x /= vnorm;
    t.e[k] = alpha;

    // p = S v over the trailing block, reading the lower triangle once.
    p.assign(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
      const double* row = &a(k + 1 + i, k + 1);
      double s = 0.0;
      for (std::size_t j = 0; j < i; ++j) {
        s += row[j] * v[j];
        p[j] += row[j] * v[i];
      }
      p[i] += s + row[i] * v[i];
    }
    const double kappa = dot(v, p);
    for (std::size_t i = 0; i < m; ++i) p[i] -= kappa * v[i];  // p becomes w
    for (std::size_t i = 0; i < m; ++i) {
      double* row = &a(k + 1 + i, k + 1);
      const double vi = 2.0 * v[i];
      const double wi = 2.0 * p[i];
      for (std::size_t j = 0; j <= i; ++j) row[j] -= vi * p[j] + wi * v[j];
    }
    t.reflectors.push_back(v);
  }
  for (std::size_t i = 0; i < n; ++i) t.d[i] = a(i, i);
  if (n >= 2) t.e[n - 2] = a(n - 1, n - 2);
  return t;
}

// X <- L^{-1} X for lower-triangular L and a square right-hand side block,
// processed in row panels for cache reuse.
void forward_substitute(const DenseMatrix& l, DenseMatrix& x) {
  const std::size_t n = l.size();
  constexpr std::size_t panel = 32;
  for (std::size_t i0 = 0; i0 < n; i0 += panel) {
    const std::size_t i1 = std::min(n, i0 + panel);
    for (std::size_t k = 0; k < i0; ++k) {
      const auto xk = x.row(k);
      for (std::size_t i = i0; i < i1; ++i) {
        const double lik = l(i, k);
        if (lik != 0.0) axpy(-lik, xk, x.row(i));
      }
    }
    for (std::size_t i = i0; i < i1; ++i) {
      for (std::size_t k = i0; k < i; ++k) {
        const double lik = l(i, k);
        if (lik != 0.0) axpy(-lik, x.row(k), x.row(i));
      }
      const double inv = 1.0 / l(i, i);
      for (double& value : x.row(i)) value *= inv;
    }
  }
}

}  // namespace

EigenPair symmetric_smallest_eigpair(DenseMatrix a) {
  const std::size_t n = a.size();
  if (n == 0) throw InvalidInput("empty matrix");
  if (n == 1) return {a(0, 0), Vector{1.0}};
  Tridiagonal t = tridiagonalize(a);

  double lo = std::numeric_limits<double>::max();
  double hi = std::numeric_limits<double>::lowest();
  double scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double radius = (i > 0 ? std::abs(t.e[i - 1]) : 0.0) + (i + 1 < n ? std::abs(t.e[i]) : 0.0);
    lo = std::min(lo, t.d[i] - radius);
    hi = std::max(hi, t.d[i] + radius);
    scale = std::max(scale, std::abs(t.d[i]) + radius);
  }
  const double eps = std::numeric_limits<double>::epsilon();
  lo -= eps * scale;
  hi += eps * scale;
  for (int iter = 0; iter < 300; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (sturm_count(t.d, t.e, mid) >= 1) hi = mid; else lo = mid;
  }
  const double lambda = 0.5 * (lo + hi);

  Vector y(n, 1.0);
  const double floor = eps * std::max(scale, std::numeric_limits<double>::min());
  for (int iter = 0; iter < 4; ++iter) {
    y = tridiagonal_shifted_solve(t.d, t.e, lambda, y, floor);
    const double norm = norm2(y);
    for (double& value : y) value /= norm;
  }

  // Back-transform: y <- H_0 H_1 ... H_{n-3} y.
  for (std::size_t k = t.reflectors.size(); k-- > 0;) {
    const Vector& v = t.reflectors[k];
    std::span<double> tail(y.data() + k + 1, v.size());
    const double proj = 2.0 * dot(v, tail);
    axpy(-proj, v, tail);
  }
  return {lambda, y};
}

EigenPair dense_smallest_eigpair(const SymSparseMatrix& a, const SymSparseMatrix& m,
                                 const DirichletConstraint* constraint, DenseEigenMethod method) {
  const std::size_t n = a.dimension();
  if (m.dimension() != n) throw InvalidInput("stiffness and mass dimensions differ");

  std::vector<std::size_t> free;
  std::vector<std::size_t> position(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    if (constraint && constraint->contains(i)) continue;
    position[i] = free.size();
    free.push_back(i);
  }
  const std::size_t nf = free.size();
  if (nf == 0) throw InvalidInput("no unconstrained degrees of freedom");
  if (nf > kDenseEigenLimit) {
    throw InvalidInput("dense eigen oracle limited to dimension " + std::to_string(kDenseEigenLimit) +
                       ", got " + std::to_string(nf));
  }

  const auto densify = [&](const SymSparseMatrix& s) {
    DenseMatrix d(nf);
    const auto rows = s.row_offsets();
    const auto cols = s.column_indices();
    const auto vals = s.values();
    for (std::size_t fi = 0; fi < nf; ++fi) {
      const std::size_t i = free[fi];
      for (std::size_t p = rows[i]; p < rows[i + 1]; ++p) {
        const std::size_t fj = position[cols[p]];
        if (fj < nf) d(fi, fj) = vals[p];
      }
    }
    return d;
  };

  // Cholesky factor of the restricted mass matrix, in the lower triangle.
  DenseMatrix l = densify(m);
  for (std::size_t j = 0; j < nf; ++j) {
    const auto lj = l.row(j);
    double diag = lj[j] - dot(lj.first(j), lj.first(j));
    if (!(diag > 0.0)) throw InvalidInput("mass matrix is not positive definite");
    diag = std::sqrt(diag);
    lj[j] = diag;
    for (std::size_t i = j + 1; i < nf; ++i) {
      const auto li = l.row(i);
      li[j] = (li[j] - dot(li.first(j), lj.first(j))) / diag;
    }
  }
  for (std::size_t i = 0; i < nf; ++i)
    for (std::size_t j = i + 1; j < nf; ++j) l(i, j) = 0.0;

  // C = L^{-1} A L^{-T}; A symmetric gives C = L^{-1} (L^{-1} A)^T.
  DenseMatrix c = densify(a);
  forward_substitute(l, c);
  for (std::size_t i = 0; i < nf; ++i)
    for (std::size_t j = i + 1; j < nf; ++j) std::swap(c(i, j), c(j, i));
  forward_substitute(l, c);
  for (std::size_t i = 0; i < nf; ++i) {
    for (std::size_t j = i + 1; j < nf; ++j) {
      const double avg = 0.5 * (c(i, j) + c(j, i));
      c(i, j) = c(j, i) = avg;
    }
  }

  EigenPair reduced;
  if (method == DenseEigenMethod::Jacobi) {
    SymmetricEigen all = jacobi_eigen(std::move(c));
    reduced.value = all.values[0];
    reduced.vector.resize(nf);
    for (std::size_t i = 0; i < nf; ++i) reduced.vector[i] = all.vectors(i, 0);
  } else {
    reduced = symmetric_smallest_eigpair(std::move(c));
  }

  // u_free = L^{-T} y by back substitution.
  Vector uf = reduced.vector;
  for (std::size_t i = nf; i-- > 0;) {
    double s = uf[i];
    for (std::size_t k = i + 1; k < nf; ++k) s -= l(k, i) * uf[k];
    uf[i] = s / l(i, i);
  }

  Vector u(n, 0.0);
  for (std::size_t fi = 0; fi < nf; ++fi) u[free[fi]] = uf[fi];
  const Vector mu = m * u;
  double weight = 0.0;
  for (std::size_t i = 0; i < n; ++i) weight += mu[i];
  const double norm = std::sqrt(dot(u, mu));
  const double sign = weight < 0.0 ? -1.0 : 1.0;
  for (double& value : u) value *= sign / norm;
  return {a.quadratic_form(u) / m.quadratic_form(u), u};
}

}  // namespace invit
