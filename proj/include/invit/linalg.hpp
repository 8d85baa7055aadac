#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "invit/assembly.hpp"
#include "invit/sparse.hpp"

namespace invit {

struct SolverConfig {
  double tolerance = 1e-12;         // relative residual ||Ax-b|| / ||b||
  std::size_t max_iterations = 0;   // 0 means 10 * dimension

  void validate() const;
};

struct SolveReport {
  std::size_t iterations = 0;
  double relative_residual = 0.0;
};

/// Jacobi-preconditioned conjugate gradients for symmetric positive definite A.
///
/// Converges on the true residual: when the recurrence says "done" the
/// residual is recomputed and the iteration restarted if needed. Throws
/// SolverError on non-convergence (with the achieved residual) or when a
/// search direction has non-positive curvature.
Vector solve_spd(const SymSparseMatrix& a, std::span<const double> b, const SolverConfig& cfg = {},
                 SolveReport* report = nullptr);

/// Row-major dense square matrix.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  explicit DenseMatrix(std::size_t n) : n_(n), data_(n * n, 0.0) {}

  std::size_t size() const noexcept { return n_; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * n_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }
  std::span<double> row(std::size_t i) { return {data_.data() + i * n_, n_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * n_, n_}; }

 private:
  std::size_t n_ = 0;
  std::vector<double> data_;
};

struct SymmetricEigen {
  Vector values;        // ascending
  DenseMatrix vectors;  // column j is the eigenvector of values[j]
};

/// Cyclic Jacobi rotations; all eigenpairs of a small symmetric matrix.
SymmetricEigen jacobi_eigen(DenseMatrix a, double tolerance = 1e-14, int max_sweeps = 100);

struct EigenPair {
  double value = 0.0;
  Vector vector;
};

/// Smallest eigenpair of a dense symmetric matrix.
EigenPair symmetric_smallest_eigpair(DenseMatrix a);

enum class DenseEigenMethod { Tridiagonal, Jacobi };

inline constexpr std::size_t kDenseEigenLimit = 5000;

/// Smallest eigenpair of A u = lambda M u, restricted to the unconstrained
/// vertices when a constraint is given (constrained entries of u are zero).
///
/// Densifies, reduces with the Cholesky factor of M and solves the standard
/// symmetric problem: Householder tridiagonalisation with Sturm bisection
/// and inverse iteration by default, or Jacobi rotations. The vector is
/// M-normalised and signed so that its M-weighted mean is positive; the value
/// is the Rayleigh quotient of that vector.
EigenPair dense_smallest_eigpair(const SymSparseMatrix& a, const SymSparseMatrix& m,
                                 const DirichletConstraint* constraint = nullptr,
                                 DenseEigenMethod method = DenseEigenMethod::Tridiagonal);

}  // namespace invit
