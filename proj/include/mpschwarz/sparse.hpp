#pragma once

// Compressed-sparse-row square matrices in working precision.

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <tuple>
#include <vector>

namespace mpschwarz {

using Vector = Eigen::VectorXd;
using DenseMatrix = Eigen::MatrixXd;

struct Triplet {
  int row;
  int col;
  double value;
};

class SparseMatrix {
 public:
  SparseMatrix() = default;

  SparseMatrix(int n, std::vector<int> row_ptr, std::vector<int> col_idx,
               std::vector<double> values)
      : n_(n),
        row_ptr_(std::move(row_ptr)),
        col_idx_(std::move(col_idx)),
        values_(std::move(values)) {
    validate();
  }

  // Duplicate (row, col) entries are summed.
  static SparseMatrix from_triplets(int n, std::vector<Triplet> triplets) {
    if (n < 0) throw std::invalid_argument("from_triplets: negative dimension");
    std::sort(triplets.begin(), triplets.end(),
              [](const Triplet& a, const Triplet& b) {
                return std::tie(a.row, a.col) < std::tie(b.row, b.col);
              });
    std::vector<int> row_ptr(n + 1, 0), col_idx;
    std::vector<double> values;
    col_idx.reserve(triplets.size());
    values.reserve(triplets.size());
    for (std::size_t k = 0; k < triplets.size();) {
      const int r = triplets[k].row, c = triplets[k].col;
      if (r < 0 || r >= n || c < 0 || c >= n)
        throw std::invalid_argument("from_triplets: index out of range");
      double v = 0.0;
      while (k < triplets.size() && triplets[k].row == r &&
             triplets[k].col == c)
        v += triplets[k++].value;
      col_idx.push_back(c);
      values.push_back(v);
      ++row_ptr[r + 1];
    }
    for (int r = 0; r < n; ++r) row_ptr[r + 1] += row_ptr[r];
    return SparseMatrix(n, std::move(row_ptr), std::move(col_idx),
                        std::move(values));
  }

  static SparseMatrix identity(int n) {
    std::vector<Triplet> t;
    t.reserve(n);
    for (int i = 0; i < n; ++i) t.push_back({i, i, 1.0});
    return from_triplets(n, std::move(t));
  }

  static SparseMatrix from_dense(const DenseMatrix& d, double drop_tol = 0.0) {
    if (d.rows() != d.cols())
      throw std::invalid_argument("from_dense: matrix must be square");
    std::vector<Triplet> t;
    for (int i = 0; i < d.rows(); ++i)
      for (int j = 0; j < d.cols(); ++j)
        if (std::fabs(d(i, j)) > drop_tol || (drop_tol == 0.0 && d(i, j) != 0.0))
          t.push_back({i, j, d(i, j)});
    return from_triplets(static_cast<int>(d.rows()), std::move(t));
  }

  int size() const { return n_; }
  int nnz() const { return static_cast<int>(values_.size()); }
  const std::vector<int>& row_ptr() const { return row_ptr_; }
  const std::vector<int>& col_idx() const { return col_idx_; }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }

  double coeff(int i, int j) const {
    for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
      if (col_idx_[k] == j) return values_[k];
    return 0.0;
  }

  Vector apply(const Vector& x) const {
    if (x.size() != n_)
      throw std::invalid_argument("SparseMatrix::apply: dimension mismatch");
    Vector y = Vector::Zero(n_);
    for (int i = 0; i < n_; ++i) {
      double s = 0.0;
      for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
        s += values_[k] * x[col_idx_[k]];
      y[i] = s;
    }
    return y;
  }

  DenseMatrix to_dense() const {
    DenseMatrix d = DenseMatrix::Zero(n_, n_);
    for (int i = 0; i < n_; ++i)
      for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
        d(i, col_idx_[k]) = values_[k];
    return d;
  }

  Eigen::SparseMatrix<double> to_eigen() const {
    Eigen::SparseMatrix<double> m(n_, n_);
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(values_.size());
    for (int i = 0; i < n_; ++i)
      for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
        t.emplace_back(i, col_idx_[k], values_[k]);
    m.setFromTriplets(t.begin(), t.end());
    return m;
  }

  SparseMatrix transpose() const {
    std::vector<Triplet> t;
    t.reserve(values_.size());
    for (int i = 0; i < n_; ++i)
      for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
        t.push_back({col_idx_[k], i, values_[k]});
    return from_triplets(n_, std::move(t));
  }

  // Exact structural and bitwise value symmetry.
  bool is_symmetric() const {
    const SparseMatrix tr = transpose();
    if (tr.row_ptr_ != row_ptr_ || tr.col_idx_ != col_idx_) return false;
    for (std::size_t k = 0; k < values_.size(); ++k)
      if (values_[k] != tr.values_[k]) return false;
    return true;
  }

  // Extract the square submatrix with rows and columns in `index_set`
  // (sorted). Entries outside the set are dropped.
  SparseMatrix submatrix(const std::vector<int>& index_set) const {
    std::vector<int> pos(n_, -1);
    for (std::size_t k = 0; k < index_set.size(); ++k)
      pos[index_set[k]] = static_cast<int>(k);
    std::vector<Triplet> t;
    for (std::size_t r = 0; r < index_set.size(); ++r) {
      const int i = index_set[r];
      for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
        const int j = pos[col_idx_[k]];
        if (j >= 0) t.push_back({static_cast<int>(r), j, values_[k]});
      }
    }
    return from_triplets(static_cast<int>(index_set.size()), std::move(t));
  }

 private:
  void validate() const {
    if (n_ < 0 || static_cast<int>(row_ptr_.size()) != n_ + 1)
      throw std::invalid_argument("SparseMatrix: bad row_ptr");
    if (col_idx_.size() != values_.size())
      throw std::invalid_argument("SparseMatrix: col_idx/values mismatch");
    for (int i = 0; i < n_; ++i) {
      if (row_ptr_[i] > row_ptr_[i + 1])
        throw std::invalid_argument("SparseMatrix: row_ptr not monotone");
      for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
        if (col_idx_[k] < 0 || col_idx_[k] >= n_)
          throw std::invalid_argument("SparseMatrix: column out of range");
        if (k > row_ptr_[i] && col_idx_[k - 1] >= col_idx_[k])
          throw std::invalid_argument(
              "SparseMatrix: columns not sorted or duplicated");
        if (!std::isfinite(values_[k]))
          throw std::invalid_argument("SparseMatrix: non-finite value");
      }
    }
  }

  int n_ = 0;
  std::vector<int> row_ptr_ = {0};
  std::vector<int> col_idx_;
  std::vector<double> values_;
};

}  // namespace mpschwarz
