// Compressed-sparse-row matrices with a coordinate-list builder, the small
// set of algebraic operations the schemes need, and a Matrix Market dump.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "tfe/mesh.hpp"

namespace tfe {

class SparseOperator {
public:
  SparseOperator() = default;
  SparseOperator(Index rows, Index cols) : rows_(rows), cols_(cols) {}

  Index rows() const { return rows_; }
  Index cols() const { return cols_; }
  Index nnz() const { return static_cast<Index>(vals_.size()); }

  const std::vector<Index>& row_ptr() const { return row_ptr_; }
  const std::vector<Index>& col_idx() const { return col_idx_; }
  const std::vector<double>& values() const { return vals_; }
  std::vector<double>& values() { return vals_; }

  // y = A x  /  y += alpha * A x
  void apply(const double* x, double* y) const;
  void apply_add(const double* x, double* y, double alpha = 1.0) const;
  std::vector<double> apply(const std::vector<double>& x) const;

  // y = A^T x
  void apply_transpose(const double* x, double* y) const;
  std::vector<double> apply_transpose(const std::vector<double>& x) const;

  SparseOperator transposed() const;
  // this + alpha * other (matching shapes)
  SparseOperator plus(const SparseOperator& other, double alpha = 1.0) const;
  SparseOperator scaled(double alpha) const;
  // this * other
  SparseOperator multiply(const SparseOperator& other) const;

  // Row sums (mass lumping).
  std::vector<double> row_sums() const;
  double coeff(Index r, Index c) const;  // 0 if not stored
  double max_abs() const;

  // Scale row r / column c by d[r] / d[c] in place.
  void scale_rows(const std::vector<double>& d);
  void scale_cols(const std::vector<double>& d);

  // Matrix Market coordinate format (1-based, "%.17g" entries).
  void write_matrix_market(std::ostream& os, const std::string& comment = "") const;

  static SparseOperator identity(Index n, double value = 1.0);
  static SparseOperator diagonal(const std::vector<double>& d);

  friend class CooBuilder;

private:
  Index rows_ = 0;
  Index cols_ = 0;
  std::vector<Index> row_ptr_;
  std::vector<Index> col_idx_;
  std::vector<double> vals_;
};

// Accumulates (row, col, value) triplets and compresses to CSR with sorted
// columns, merged duplicates, and exact zeros dropped.  Deterministic for a
// fixed insertion order.
class CooBuilder {
public:
  CooBuilder(Index rows, Index cols) : rows_(rows), cols_(cols) {}

  void add(Index r, Index c, double v) {
    entries_.push_back({r, c, v});
  }
  SparseOperator compress(bool drop_zeros = true) const;

private:
  struct Entry {
    Index r, c;
    double v;
  };
  Index rows_;
  Index cols_;
  std::vector<Entry> entries_;
};

}  // namespace tfe
