#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace invit {

using Vector = std::vector<double>;

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
/// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);
Vector scaled(std::span<const double> x, double alpha);

struct Triplet {
  std::size_t row = 0;
  std::size_t col = 0;
  double value = 0.0;
};

/// Symmetric sparse matrix in compressed-row form holding both triangles.
///
/// Off-diagonal entries are accumulated once and mirrored, so (i,j) and (j,i)
/// are bitwise equal.
class SymSparseMatrix {
 public:
  SymSparseMatrix() = default;

  /// Builds from entries with row <= col (others are swapped into the upper
  /// triangle). Duplicates are summed in input order, which makes the result
  /// deterministic.
  static SymSparseMatrix from_upper_triplets(std::size_t dim, std::vector<Triplet> entries);
  static SymSparseMatrix identity(std::size_t dim);
  static SymSparseMatrix diagonal(std::span<const double> diag);

  std::size_t dimension() const noexcept { return dim_; }
  std::size_t nonzeros() const noexcept { return values_.size(); }

  /// Entry lookup; zero outside the sparsity pattern.
  double operator()(std::size_t i, std::size_t j) const;

  void multiply(std::span<const double> x, std::span<double> y) const;
  Vector operator*(std::span<const double> x) const;
  double quadratic_form(std::span<const double> x) const;
  double bilinear(std::span<const double> x, std::span<const double> y) const;

  Vector diagonal_entries() const;
  bool is_symmetric() const;

  /// Pattern union sum; stays exactly symmetric.
  friend SymSparseMatrix operator+(const SymSparseMatrix& a, const SymSparseMatrix& b);
  SymSparseMatrix scaled(double alpha) const;

  std::span<const std::size_t> row_offsets() const noexcept { return row_ptr_; }
  std::span<const std::size_t> column_indices() const noexcept { return cols_; }
  std::span<const double> values() const noexcept { return values_; }

 private:
  std::size_t dim_ = 0;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<std::size_t> cols_;
  std::vector<double> values_;
};

}  // namespace invit
