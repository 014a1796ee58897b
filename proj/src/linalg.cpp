#include "topicstab/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "topicstab/errors.hpp"

namespace topicstab {

SparseMatrix::SparseMatrix(std::int64_t rows, std::int64_t cols)
    : rows_(rows), cols_(cols), row_ptr_(static_cast<std::size_t>(rows) + 1, 0) {}

SparseMatrix SparseMatrix::from_triplets(std::int64_t rows, std::int64_t cols,
                                         std::vector<std::int64_t> row_idx,
                                         std::vector<std::int64_t> col_idx,
                                         std::vector<double> values) {
  if (row_idx.size() != col_idx.size() || row_idx.size() != values.size()) {
    throw ValidationError("triplet arrays must have equal length");
  }
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (row_idx[a] != row_idx[b]) return row_idx[a] < row_idx[b];
    return col_idx[a] < col_idx[b];
  });
  SparseBuilder b(rows, cols);
  std::int64_t row = 0;
  std::int64_t prev_row = -1, prev_col = -1;
  for (std::size_t idx : order) {
    const std::int64_t r = row_idx[idx], c = col_idx[idx];
    if (r < 0 || r >= rows || c < 0 || c >= cols) {
      throw ValidationError("triplet index out of range");
    }
    if (r == prev_row && c == prev_col) {
      throw ValidationError("duplicate triplet entry");
    }
    while (row < r) {
      b.finish_row();
      ++row;
    }
    b.push(c, values[idx]);
    prev_row = r;
    prev_col = c;
  }
  while (row < rows) {
    b.finish_row();
    ++row;
  }
  return b.build();
}

SparseMatrix SparseMatrix::from_dense(const DenseMatrix& d) {
  SparseBuilder b(d.rows(), d.cols());
  for (std::int64_t i = 0; i < d.rows(); ++i) {
    for (std::int64_t j = 0; j < d.cols(); ++j) {
      if (d(i, j) != 0.0) b.push(j, d(i, j));
    }
    b.finish_row();
  }
  return b.build();
}

DenseVector SparseMatrix::multiply(const DenseVector& x) const {
  if (x.size() != cols_) throw ValidationError("matvec dimension mismatch");
  DenseVector y = DenseVector::Zero(rows_);
  for (std::int64_t i = 0; i < rows_; ++i) {
    double s = 0.0;
    for (std::int64_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) {
      s += vals_[p] * x[col_idx_[p]];
    }
    y[i] = s;
  }
  return y;
}

DenseVector SparseMatrix::multiply_transposed(const DenseVector& x) const {
  if (x.size() != rows_) throw ValidationError("matvec dimension mismatch");
  DenseVector y = DenseVector::Zero(cols_);
  for (std::int64_t i = 0; i < rows_; ++i) {
    const double xi = x[i];
    if (xi == 0.0) continue;
    for (std::int64_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) {
      y[col_idx_[p]] += vals_[p] * xi;
    }
  }
  return y;
}

DenseMatrix SparseMatrix::multiply_dense(const DenseMatrix& b) const {
  if (b.rows() != cols_) throw ValidationError("product dimension mismatch");
  DenseMatrix out = DenseMatrix::Zero(rows_, b.cols());
  for (std::int64_t i = 0; i < rows_; ++i) {
    for (std::int64_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) {
      out.row(i) += vals_[p] * b.row(col_idx_[p]);
    }
  }
  return out;
}

DenseMatrix SparseMatrix::multiply_dense_transposed(const DenseMatrix& b) const {
  if (b.cols() != cols_) throw ValidationError("product dimension mismatch");
  DenseMatrix out = DenseMatrix::Zero(rows_, b.rows());
  for (std::int64_t i = 0; i < rows_; ++i) {
    for (std::int64_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) {
      out.row(i) += vals_[p] * b.col(col_idx_[p]).transpose();
    }
  }
  return out;
}

DenseMatrix SparseMatrix::transposed_multiply_dense(const DenseMatrix& b) const {
  if (b.rows() != rows_) throw ValidationError("product dimension mismatch");
  DenseMatrix out = DenseMatrix::Zero(cols_, b.cols());
  for (std::int64_t i = 0; i < rows_; ++i) {
    for (std::int64_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) {
      out.row(col_idx_[p]) += vals_[p] * b.row(i);
    }
  }
  return out;
}

double SparseMatrix::inner_with_product(const DenseMatrix& w, const DenseMatrix& ht) const {
  if (w.rows() != rows_ || ht.rows() != cols_ || w.cols() != ht.cols()) {
    throw ValidationError("inner product dimension mismatch");
  }
  double s = 0.0;
  for (std::int64_t i = 0; i < rows_; ++i) {
    for (std::int64_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) {
      s += vals_[p] * w.row(i).dot(ht.row(col_idx_[p]));
    }
  }
  return s;
}

double SparseMatrix::frobenius_norm() const {
  double s = 0.0;
  for (double v : vals_) s += v * v;
  return std::sqrt(s);
}

SparseMatrix SparseMatrix::select_rows(const std::vector<std::int64_t>& keep) const {
  SparseBuilder b(static_cast<std::int64_t>(keep.size()), cols_);
  for (std::int64_t r : keep) {
    if (r < 0 || r >= rows_) throw ValidationError("row index out of range");
    for (std::int64_t p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p) {
      b.push(col_idx_[p], vals_[p]);
    }
    b.finish_row();
  }
  return b.build();
}

DenseMatrix SparseMatrix::to_dense() const {
  DenseMatrix d = DenseMatrix::Zero(rows_, cols_);
  for (std::int64_t i = 0; i < rows_; ++i) {
    for (std::int64_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) {
      d(i, col_idx_[p]) = vals_[p];
    }
  }
  return d;
}

SparseBuilder::SparseBuilder(std::int64_t rows, std::int64_t cols) : m_(rows, cols) {
  m_.row_ptr_.assign(1, 0);
}

void SparseBuilder::push(std::int64_t col, double value) {
  if (current_row_ >= m_.rows_) throw ValidationError("builder: too many rows");
  if (col <= last_col_ || col < 0 || col >= m_.cols_) {
    throw ValidationError("builder: columns must be strictly increasing per row");
  }
  if (!std::isfinite(value)) throw ValidationError("builder: non-finite value");
  if (value == 0.0) {
    last_col_ = col;
    return;
  }
  m_.col_idx_.push_back(col);
  m_.vals_.push_back(value);
  last_col_ = col;
}

void SparseBuilder::finish_row() {
  if (current_row_ >= m_.rows_) throw ValidationError("builder: too many rows");
  m_.row_ptr_.push_back(static_cast<std::int64_t>(m_.vals_.size()));
  ++current_row_;
  last_col_ = -1;
}

SparseMatrix SparseBuilder::build() {
  if (current_row_ != m_.rows_) throw ValidationError("builder: row count mismatch");
  return std::move(m_);
}

namespace {

// Largest-magnitude entry of each U column made positive; ties go to the
// lowest index. V columns flip together with their U partner.
void fix_signs(DenseMatrix& u, DenseMatrix& v) {
  for (std::int64_t j = 0; j < u.cols(); ++j) {
    std::int64_t best = 0;
    double best_abs = -1.0;
    for (std::int64_t i = 0; i < u.rows(); ++i) {
      const double a = std::abs(u(i, j));
      if (a > best_abs) {
        best_abs = a;
        best = i;
      }
    }
    if (u(best, j) < 0.0) {
      u.col(j) = -u.col(j);
      v.col(j) = -v.col(j);
    }
  }
}

SvdResult dense_svd(const SparseMatrix& a, std::int64_t k) {
  const DenseMatrix dense = a.to_dense();
  Eigen::BDCSVD<Eigen::MatrixXd> svd(dense, Eigen::ComputeThinU | Eigen::ComputeThinV);
  SvdResult r;
  r.u = svd.matrixU().leftCols(k);
  r.v = svd.matrixV().leftCols(k);
  r.singular_values = svd.singularValues().head(k);
  fix_signs(r.u, r.v);
  return r;
}

// Lanczos tridiagonalization of the smaller Gram operator (A A^T or A^T A)
// with full reorthogonalization. Deterministic: fixed all-ones start
// vector, fixed sweep order, deterministic breakdown recovery via
// canonical basis vectors.
SvdResult lanczos_svd(const SparseMatrix& a, std::int64_t k, const SvdOptions& opts) {
  const bool gram_on_rows = a.rows() <= a.cols();
  const std::int64_t dim = gram_on_rows ? a.rows() : a.cols();
  const auto apply_gram = [&](const DenseVector& x) {
    return gram_on_rows ? a.multiply(a.multiply_transposed(x))
                        : a.multiply_transposed(a.multiply(x));
  };

  const int max_steps = std::min<std::int64_t>(opts.max_iterations, dim);
  std::vector<DenseVector> basis;
  basis.reserve(static_cast<std::size_t>(max_steps));
  std::vector<double> alpha, beta;

  DenseVector q = DenseVector::Ones(dim);
  q /= q.norm();
  basis.push_back(q);

  const auto reorthogonalize = [&](DenseVector& w) {
    for (int pass = 0; pass < 2; ++pass) {
      for (const DenseVector& b : basis) w -= b.dot(w) * b;
    }
  };

  // Deterministic replacement direction when the Krylov space closes early.
  std::int64_t next_canonical = 0;
  const auto fresh_direction = [&](DenseVector& w) -> bool {
    while (next_canonical < dim) {
      w.setZero();
      w[next_canonical++] = 1.0;
      reorthogonalize(w);
      const double n = w.norm();
      if (n > 1e-8) {
        w /= n;
        return true;
      }
    }
    return false;
  };

  DenseVector ritz_prev;
  double scale = 0.0;
  bool converged = false;
  double worst_change = 0.0;
  int stable_steps = 0;

  for (int step = 0; step < max_steps; ++step) {
    DenseVector w = apply_gram(basis.back());
    const double a_j = basis.back().dot(w);
    alpha.push_back(a_j);
    reorthogonalize(w);
    double b_j = w.norm();
    scale = std::max(scale, std::abs(a_j));

    const std::int64_t j = static_cast<std::int64_t>(alpha.size());
    // Ritz values of the current tridiagonal section.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    Eigen::VectorXd diag = Eigen::Map<const Eigen::VectorXd>(alpha.data(), j);
    Eigen::VectorXd sub(std::max<std::int64_t>(j - 1, 0));
    for (std::int64_t i = 0; i + 1 < j; ++i) sub[i] = beta[i];
    es.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
    DenseVector ritz = es.eigenvalues().reverse().head(std::min<std::int64_t>(k, j));

    if (j >= k + 1 && ritz_prev.size() == k) {
      worst_change = 0.0;
      for (std::int64_t i = 0; i < k; ++i) {
        worst_change = std::max(worst_change, std::abs(ritz[i] - ritz_prev[i]));
      }
      // Ritz vectors settle later than Ritz values, so the tolerance must
      // hold over a few consecutive steps.
      stable_steps = worst_change <= opts.tolerance * std::max(1.0, scale)
                         ? stable_steps + 1
                         : 0;
      if (stable_steps >= 3) {
        converged = true;
        break;
      }
    }
    if (ritz.size() == k) ritz_prev = ritz;

    if (static_cast<std::int64_t>(alpha.size()) >= dim) {
      converged = true;  // full space spanned, decomposition exact
      break;
    }
    if (step + 1 >= max_steps) break;

    if (b_j <= 1e-13 * std::max(1.0, scale)) {
      beta.push_back(0.0);
      if (!fresh_direction(w)) {
        converged = true;  // no directions left: operator fully resolved
        break;
      }
      basis.push_back(w);
    } else {
      beta.push_back(b_j);
      basis.push_back(w / b_j);
    }
  }

  if (!converged && static_cast<std::int64_t>(alpha.size()) < dim) {
    throw NumericalError("truncated_svd: Lanczos did not converge within " +
                         std::to_string(opts.max_iterations) +
                         " iterations (last singular-value change " +
                         std::to_string(std::sqrt(std::max(0.0, worst_change))) + ")");
  }

  const std::int64_t j = static_cast<std::int64_t>(alpha.size());
  Eigen::VectorXd diag = Eigen::Map<const Eigen::VectorXd>(alpha.data(), j);
  Eigen::VectorXd sub(std::max<std::int64_t>(j - 1, 0));
  for (std::int64_t i = 0; i + 1 < j; ++i) sub[i] = beta[i];
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, sub);

  SvdResult r;
  r.singular_values.resize(k);
  DenseMatrix gram_vectors(dim, k);
  for (std::int64_t i = 0; i < k; ++i) {
    const std::int64_t src = j - 1 - i;  // eigenvalues ascending
    const double lambda = std::max(0.0, es.eigenvalues()[src]);
    r.singular_values[i] = std::sqrt(lambda);
    DenseVector y = DenseVector::Zero(dim);
    for (std::int64_t b = 0; b < j; ++b) y += es.eigenvectors()(b, src) * basis[b];
    y /= y.norm();
    gram_vectors.col(i) = y;
  }

  DenseMatrix other(gram_on_rows ? a.cols() : a.rows(), k);
  for (std::int64_t i = 0; i < k; ++i) {
    const double sigma = r.singular_values[i];
    DenseVector g = gram_vectors.col(i);
    DenseVector o = gram_on_rows ? a.multiply_transposed(g) : a.multiply(g);
    if (sigma > 1e-13 * std::max(1.0, r.singular_values[0])) {
      other.col(i) = o / sigma;
    } else {
      other.col(i).setZero();
    }
  }

  if (gram_on_rows) {
    r.u = gram_vectors;
    r.v = other;
  } else {
    r.v = gram_vectors;
    r.u = other;
  }
  fix_signs(r.u, r.v);
  return r;
}

}  // namespace

SvdResult truncated_svd(const SparseMatrix& a, std::int64_t k, const SvdOptions& opts) {
  if (k < 1 || k > std::min(a.rows(), a.cols())) {
    throw ValidationError("truncated_svd: k must be in [1, min(rows, cols)]");
  }
  if (std::min(a.rows(), a.cols()) <= opts.dense_cutoff) {
    return dense_svd(a, k);
  }
  return lanczos_svd(a, k, opts);
}

DenseMatrix project(const SparseMatrix& a, const DenseMatrix& h) {
  if (h.cols() != a.cols()) {
    throw ValidationError("project: A columns must match H columns");
  }
  return a.multiply_dense_transposed(h);
}

}  // namespace topicstab
