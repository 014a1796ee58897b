#pragma once

#define EIGEN_DONT_PARALLELIZE
#include <Eigen/Core>

#include <cstdint>
#include <vector>

namespace topicstab {

// Row-major dense matrix used for the W and H factors.
using DenseMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using DenseVector = Eigen::VectorXd;

// Compressed-row sparse matrix. Column indices are strictly increasing
// within each row and all stored values are finite.
class SparseMatrix {
public:
  SparseMatrix() = default;
  SparseMatrix(std::int64_t rows, std::int64_t cols);

  static SparseMatrix from_triplets(std::int64_t rows, std::int64_t cols,
                                    std::vector<std::int64_t> row_idx,
                                    std::vector<std::int64_t> col_idx,
                                    std::vector<double> values);
  // Dense conversion keeping entries with |v| > 0.
  static SparseMatrix from_dense(const DenseMatrix& d);

  std::int64_t rows() const { return rows_; }
  std::int64_t cols() const { return cols_; }
  std::int64_t nnz() const { return static_cast<std::int64_t>(vals_.size()); }

  const std::vector<std::int64_t>& row_ptr() const { return row_ptr_; }
  const std::vector<std::int64_t>& col_idx() const { return col_idx_; }
  const std::vector<double>& values() const { return vals_; }

  // y = A x  (length rows)
  DenseVector multiply(const DenseVector& x) const;
  // y = A^T x  (length cols)
  DenseVector multiply_transposed(const DenseVector& x) const;
  // A * B where B is cols x k; result rows x k.
  DenseMatrix multiply_dense(const DenseMatrix& b) const;
  // A * B^T where B is k x cols; result rows x k.
  DenseMatrix multiply_dense_transposed(const DenseMatrix& b) const;
  // A^T * B where B is rows x k; result cols x k.
  DenseMatrix transposed_multiply_dense(const DenseMatrix& b) const;
  // sum_{ij} A_ij * (W H)_ij with W rows x k, Ht cols x k.
  double inner_with_product(const DenseMatrix& w, const DenseMatrix& ht) const;

  double frobenius_norm() const;
  // Keeps the given rows, in the given order.
  SparseMatrix select_rows(const std::vector<std::int64_t>& keep) const;
  DenseMatrix to_dense() const;

private:
  std::int64_t rows_ = 0;
  std::int64_t cols_ = 0;
  std::vector<std::int64_t> row_ptr_{0};
  std::vector<std::int64_t> col_idx_;
  std::vector<double> vals_;

  friend class SparseBuilder;
};

// Incremental row-by-row construction.
class SparseBuilder {
public:
  SparseBuilder(std::int64_t rows, std::int64_t cols);
  // Entries must be appended with strictly increasing column index per row.
  void push(std::int64_t col, double value);
  void finish_row();
  SparseMatrix build();

private:
  SparseMatrix m_;
  std::int64_t current_row_ = 0;
  std::int64_t last_col_ = -1;
};

struct SvdResult {
  DenseMatrix u;                       // rows x k
  DenseVector singular_values;         // k, non-increasing, >= 0
  DenseMatrix v;                       // cols x k
};

struct SvdOptions {
  // Below this size the decomposition is computed by a full dense SVD.
  std::int64_t dense_cutoff = 512;
  // Lanczos budget and convergence tolerance on singular-value change.
  int max_iterations = 300;
  double tolerance = 1e-10;
};

// Deterministic top-k singular triplets: dense SVD when
// min(rows, cols) <= dense_cutoff, otherwise Lanczos iteration on the
// smaller Gram operator started from the normalized all-ones vector.
// The sign of each column pair is fixed so that the largest-magnitude
// entry of each U column is positive (ties: lowest index).
SvdResult truncated_svd(const SparseMatrix& a, std::int64_t k,
                        const SvdOptions& opts = {});

// Document folding: A (n x m) times H^T (m x k'), H given as k' x m.
DenseMatrix project(const SparseMatrix& a, const DenseMatrix& h);

}  // namespace topicstab
