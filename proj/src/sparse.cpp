#include "invit/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "invit/error.hpp"

namespace invit {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

Vector scaled(std::span<const double> x, double alpha) {
  Vector out(x.begin(), x.end());
  for (double& v : out) v *= alpha;
  return out;
}

SymSparseMatrix SymSparseMatrix::from_upper_triplets(std::size_t dim, std::vector<Triplet> entries) {
  for (auto& t : entries) {
    if (t.row >= dim || t.col >= dim) {
      throw InvalidInput("matrix entry (" + std::to_string(t.row) + "," + std::to_string(t.col) +
                         ") outside dimension " + std::to_string(dim));
    }
    if (t.row > t.col) std::swap(t.row, t.col);
  }
  std::stable_sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });

  // Merge duplicates into the upper triangle, preserving accumulation order.
  std::vector<Triplet> upper;
  upper.reserve(entries.size());
  for (const auto& t : entries) {
    if (!upper.empty() && upper.back().row == t.row && upper.back().col == t.col) {
      upper.back().value += t.value;
    } else {
      upper.push_back(t);
    }
  }

  std::vector<std::size_t> count(dim, 0);
  for (const auto& t : upper) {
    ++count[t.row];
    if (t.row != t.col) ++count[t.col];
  }
  SymSparseMatrix m;
  m.dim_ = dim;
  m.row_ptr_.assign(dim + 1, 0);
  for (std::size_t i = 0; i < dim; ++i) m.row_ptr_[i + 1] = m.row_ptr_[i] + count[i];
  m.cols_.resize(m.row_ptr_[dim]);
  m.values_.resize(m.row_ptr_[dim]);

  // Lower-triangle mirrors first (their columns are smaller), then the upper
  // entries; both passes visit columns in increasing order per row.
  std::vector<std::size_t> fill(m.row_ptr_.begin(), m.row_ptr_.end() - 1);
  for (const auto& t : upper) {
    if (t.row == t.col) continue;
    m.cols_[fill[t.col]] = t.row;
    m.values_[fill[t.col]++] = t.value;
  }
  for (const auto& t : upper) {
    m.cols_[fill[t.row]] = t.col;
    m.values_[fill[t.row]++] = t.value;
  }
  return m;
}

SymSparseMatrix SymSparseMatrix::identity(std::size_t dim) {
  return diagonal(Vector(dim, 1.0));
}

SymSparseMatrix SymSparseMatrix::diagonal(std::span<const double> diag) {
  std::vector<Triplet> t;
  t.reserve(diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) t.push_back({i, i, diag[i]});
  return from_upper_triplets(diag.size(), std::move(t));
}

double SymSparseMatrix::operator()(std::size_t i, std::size_t j) const {
  const auto first = cols_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i]);
  const auto last = cols_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i + 1]);
  const auto it = std::lower_bound(first, last, j);
  if (it == last || *it != j) return 0.0;
  return values_[static_cast<std::size_t>(it - cols_.begin())];
}

void SymSparseMatrix::multiply(std::span<const double> x, std::span<double> y) const {
  for (std::size_t i = 0; i < dim_; ++i) {
    double s = 0.0;
    for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) s += values_[p] * x[cols_[p]];
    y[i] = s;
  }
}

Vector SymSparseMatrix::operator*(std::span<const double> x) const {
  Vector y(dim_);
  multiply(x, y);
  return y;
}

double SymSparseMatrix::quadratic_form(std::span<const double> x) const { return bilinear(x, x); }

double SymSparseMatrix::bilinear(std::span<const double> x, std::span<const double> y) const {
  double s = 0.0;
  for (std::size_t i = 0; i < dim_; ++i) {
    double row = 0.0;
    for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) row += values_[p] * y[cols_[p]];
    s += x[i] * row;
  }
  return s;
}

Vector SymSparseMatrix::diagonal_entries() const {
  Vector d(dim_);
  for (std::size_t i = 0; i < dim_; ++i) d[i] = (*this)(i, i);
  return d;
}

bool SymSparseMatrix::is_symmetric() const {
  for (std::size_t i = 0; i < dim_; ++i) {
    for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) {
      if ((*this)(cols_[p], i) != values_[p]) return false;
    }
  }
  return true;
}

SymSparseMatrix operator+(const SymSparseMatrix& a, const SymSparseMatrix& b) {
  if (a.dim_ != b.dim_) throw InvalidInput("matrix dimensions differ in sum");
  SymSparseMatrix m;
  m.dim_ = a.dim_;
  m.row_ptr_.assign(a.dim_ + 1, 0);
  m.cols_.reserve(a.cols_.size() + b.cols_.size());
  m.values_.reserve(a.cols_.size() + b.cols_.size());
  for (std::size_t i = 0; i < a.dim_; ++i) {
    std::size_t p = a.row_ptr_[i];
    std::size_t q = b.row_ptr_[i];
    while (p < a.row_ptr_[i + 1] || q < b.row_ptr_[i + 1]) {
      const std::size_t ca = p < a.row_ptr_[i + 1] ? a.cols_[p] : a.dim_;
      const std::size_t cb = q < b.row_ptr_[i + 1] ? b.cols_[q] : b.dim_;
      if (ca == cb) {
        m.cols_.push_back(ca);
        m.values_.push_back(a.values_[p++] + b.values_[q++]);
      } else if (ca < cb) {
        m.cols_.push_back(ca);
        m.values_.push_back(a.values_[p++]);
      } else {
        m.cols_.push_back(cb);
        m.values_.push_back(b.values_[q++]);
      }
    }
    m.row_ptr_[i + 1] = m.cols_.size();
  }
  return m;
}

SymSparseMatrix SymSparseMatrix::scaled(double alpha) const {
  SymSparseMatrix m = *this;
  for (double& v : m.values_) v *= alpha;
  return m;
}

}  // namespace invit
