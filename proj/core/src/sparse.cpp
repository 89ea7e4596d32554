#include "tfe/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace tfe {

void SparseOperator::apply(const double* x, double* y) const {
  for (Index r = 0; r < rows_; ++r) {
    double s = 0.0;
    for (Index k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k)
      s += vals_[k] * x[col_idx_[k]];
    y[r] = s;
  }
}

void SparseOperator::apply_add(const double* x, double* y, double alpha) const {
  for (Index r = 0; r < rows_; ++r) {
    double s = 0.0;
    for (Index k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k)
      s += vals_[k] * x[col_idx_[k]];
    y[r] += alpha * s;
  }
}

std::vector<double> SparseOperator::apply(const std::vector<double>& x) const {
  if (static_cast<Index>(x.size()) != cols_)
    throw std::invalid_argument("SparseOperator::apply: size mismatch");
  std::vector<double> y(rows_);
  apply(x.data(), y.data());
  return y;
}

void SparseOperator::apply_transpose(const double* x, double* y) const {
  std::fill(y, y + cols_, 0.0);
  for (Index r = 0; r < rows_; ++r)
    for (Index k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k)
      y[col_idx_[k]] += vals_[k] * x[r];
}

std::vector<double> SparseOperator::apply_transpose(
    const std::vector<double>& x) const {
  if (static_cast<Index>(x.size()) != rows_)
    throw std::invalid_argument("SparseOperator::apply_transpose: size mismatch");
  std::vector<double> y(cols_);
  apply_transpose(x.data(), y.data());
  return y;
}

SparseOperator SparseOperator::transposed() const {
  CooBuilder b(cols_, rows_);
  for (Index r = 0; r < rows_; ++r)
    for (Index k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k)
      b.add(col_idx_[k], r, vals_[k]);
  return b.compress(false);
}

SparseOperator SparseOperator::plus(const SparseOperator& other,
                                    double alpha) const {
  if (rows_ != other.rows_ || cols_ != other.cols_)
    throw std::invalid_argument("SparseOperator::plus: shape mismatch");
  CooBuilder b(rows_, cols_);
  for (Index r = 0; r < rows_; ++r) {
    for (Index k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k)
      b.add(r, col_idx_[k], vals_[k]);
    for (Index k = other.row_ptr_[r]; k < other.row_ptr_[r + 1]; ++k)
      b.add(r, other.col_idx_[k], alpha * other.vals_[k]);
  }
  return b.compress();
}

SparseOperator SparseOperator::scaled(double alpha) const {
  SparseOperator out = *this;
  for (double& v : out.vals_) v *= alpha;
  return out;
}

SparseOperator SparseOperator::multiply(const SparseOperator& other) const {
  if (cols_ != other.rows_)
    throw std::invalid_argument("SparseOperator::multiply: shape mismatch");
  CooBuilder b(rows_, other.cols_);
  std::vector<double> acc(other.cols_, 0.0);
  std::vector<Index> touched;
  for (Index r = 0; r < rows_; ++r) {
    touched.clear();
    for (Index k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
      const Index mid = col_idx_[k];
      const double v = vals_[k];
      for (Index k2 = other.row_ptr_[mid]; k2 < other.row_ptr_[mid + 1]; ++k2) {
        const Index c = other.col_idx_[k2];
        if (acc[c] == 0.0) touched.push_back(c);
        acc[c] += v * other.vals_[k2];
      }
    }
    std::sort(touched.begin(), touched.end());
    for (Index c : touched) {
      b.add(r, c, acc[c]);
      acc[c] = 0.0;
    }
  }
  return b.compress();
}

std::vector<double> SparseOperator::row_sums() const {
  std::vector<double> s(rows_, 0.0);
  for (Index r = 0; r < rows_; ++r)
    for (Index k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) s[r] += vals_[k];
  return s;
}

double SparseOperator::coeff(Index r, Index c) const {
  for (Index k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k)
    if (col_idx_[k] == c) return vals_[k];
  return 0.0;
}

double SparseOperator::max_abs() const {
  double m = 0.0;
  for (double v : vals_) m = std::max(m, std::abs(v));
  return m;
}

void SparseOperator::scale_rows(const std::vector<double>& d) {
  for (Index r = 0; r < rows_; ++r)
    for (Index k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) vals_[k] *= d[r];
}

void SparseOperator::scale_cols(const std::vector<double>& d) {
  for (Index k = 0; k < nnz(); ++k) vals_[k] *= d[col_idx_[k]];
}

void SparseOperator::write_matrix_market(std::ostream& os,
                                         const std::string& comment) const {
  os << "%%MatrixMarket matrix coordinate real general\n";
  if (!comment.empty()) os << "% " << comment << "\n";
  os << rows_ << " " << cols_ << " " << nnz() << "\n";
  char buf[64];
  for (Index r = 0; r < rows_; ++r)
    for (Index k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
      std::snprintf(buf, sizeof buf, "%d %d %.17g\n", r + 1, col_idx_[k] + 1,
                    vals_[k]);
      os << buf;
    }
}

SparseOperator SparseOperator::identity(Index n, double value) {
  CooBuilder b(n, n);
  for (Index i = 0; i < n; ++i) b.add(i, i, value);
  return b.compress(false);
}

SparseOperator SparseOperator::diagonal(const std::vector<double>& d) {
  const Index n = static_cast<Index>(d.size());
  CooBuilder b(n, n);
  for (Index i = 0; i < n; ++i) b.add(i, i, d[i]);
  return b.compress(false);
}

SparseOperator CooBuilder::compress(bool drop_zeros) const {
  for (const Entry& e : entries_)
    if (e.r < 0 || e.r >= rows_ || e.c < 0 || e.c >= cols_)
      throw std::out_of_range("CooBuilder: entry out of range");
  std::vector<Index> order(entries_.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = static_cast<Index>(k);
  std::stable_sort(order.begin(), order.end(), [this](Index a, Index b) {
    if (entries_[a].r != entries_[b].r) return entries_[a].r < entries_[b].r;
    return entries_[a].c < entries_[b].c;
  });

  SparseOperator out(rows_, cols_);
  out.row_ptr_.assign(rows_ + 1, 0);
  out.col_idx_.reserve(entries_.size());
  out.vals_.reserve(entries_.size());

  std::size_t k = 0;
  for (Index r = 0; r < rows_; ++r) {
    while (k < order.size() && entries_[order[k]].r == r) {
      const Index c = entries_[order[k]].c;
      double v = 0.0;
      while (k < order.size() && entries_[order[k]].r == r &&
             entries_[order[k]].c == c) {
        v += entries_[order[k]].v;
        ++k;
      }
      if (!drop_zeros || v != 0.0) {
        out.col_idx_.push_back(c);
        out.vals_.push_back(v);
      }
    }
    out.row_ptr_[r + 1] = static_cast<Index>(out.col_idx_.size());
  }
  return out;
}

}  // namespace tfe
