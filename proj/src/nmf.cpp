#include "topicstab/nmf.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "topicstab/errors.hpp"
#include "topicstab/rng.hpp"

namespace topicstab {

std::string method_name(Method m) {
  switch (m) {
    case Method::kNmfRandom: return "nmf-random";
    case Method::kNmfNndsvd: return "nmf-nndsvd";
    case Method::kEnsembleBasic: return "ensemble-basic";
    case Method::kEnsembleKfold: return "ensemble-kfold";
    case Method::kExternal: return "external";
  }
  throw ValidationError("unknown method enum");
}

Method method_from_name(const std::string& name) {
  if (name == "nmf-random") return Method::kNmfRandom;
  if (name == "nmf-nndsvd") return Method::kNmfNndsvd;
  if (name == "ensemble-basic") return Method::kEnsembleBasic;
  if (name == "ensemble-kfold") return Method::kEnsembleKfold;
  if (name == "external") return Method::kExternal;
  throw ValidationError("unknown method: " + name);
}

std::pair<DenseMatrix, DenseMatrix> random_init(std::int64_t n, std::int64_t m,
                                                std::int64_t k, std::uint64_t seed) {
  if (k < 1) throw ValidationError("random_init: k must be >= 1");
  Rng rng(seed);
  DenseMatrix w(n, k), h(k, m);
  for (std::int64_t i = 0; i < n; ++i)
    for (std::int64_t j = 0; j < k; ++j) w(i, j) = rng.next_open01();
  for (std::int64_t i = 0; i < k; ++i)
    for (std::int64_t j = 0; j < m; ++j) h(i, j) = rng.next_open01();
  return {std::move(w), std::move(h)};
}

std::pair<DenseMatrix, DenseMatrix> nndsvd_init(const SparseMatrix& a, std::int64_t k,
                                                double fill_eps, const SvdOptions& svd_opts) {
  if (k < 1 || k > std::min(a.rows(), a.cols())) {
    throw ValidationError("nndsvd_init: k must be in [1, min(rows, cols)]");
  }
  const SvdResult svd = truncated_svd(a, k, svd_opts);
  DenseMatrix w = DenseMatrix::Zero(a.rows(), k);
  DenseMatrix h = DenseMatrix::Zero(k, a.cols());

  // Leading pair: positive parts scaled by sqrt(sigma_1). For a
  // non-negative matrix the leading vectors are non-negative up to sign,
  // clipping guards against round-off.
  const double s0 = std::sqrt(svd.singular_values[0]);
  for (std::int64_t i = 0; i < a.rows(); ++i) w(i, 0) = s0 * std::max(0.0, svd.u(i, 0));
  for (std::int64_t j = 0; j < a.cols(); ++j) h(0, j) = s0 * std::max(0.0, svd.v(j, 0));

  for (std::int64_t t = 1; t < k; ++t) {
    DenseVector up = svd.u.col(t).cwiseMax(0.0);
    DenseVector un = (-svd.u.col(t)).cwiseMax(0.0);
    DenseVector vp = svd.v.col(t).cwiseMax(0.0);
    DenseVector vn = (-svd.v.col(t)).cwiseMax(0.0);
    const double mp = up.norm() * vp.norm();
    const double mn = un.norm() * vn.norm();
    DenseVector u, v;
    double part_scale;
    if (mp >= mn) {
      u = up;
      v = vp;
      part_scale = mp;
    } else {
      u = un;
      v = vn;
      part_scale = mn;
    }
    if (part_scale <= 0.0) continue;  // zero singular direction: leave zero
    const double lambda = std::sqrt(svd.singular_values[t] * part_scale);
    w.col(t) = (lambda / u.norm()) * u;
    h.row(t) = ((lambda / v.norm()) * v).transpose();
  }

  if (fill_eps > 0.0) {
    w = w.cwiseMax(fill_eps);
    h = h.cwiseMax(fill_eps);
  }
  return {std::move(w), std::move(h)};
}

namespace {

// One cyclic coordinate-descent sweep over factor X (rows x k) for the
// objective ||A - X B||_F with gram = B B^T and target = A B^T. Exact
// per-entry minimization clipped at zero never increases the objective.
// Returns the largest absolute entry change of the sweep.
double ccd_sweep(DenseMatrix& x, const DenseMatrix& gram, const DenseMatrix& target) {
  const std::int64_t rows = x.rows();
  const std::int64_t k = x.cols();
  Eigen::RowVectorXd g(k);
  double max_change = 0.0;
  for (std::int64_t i = 0; i < rows; ++i) {
    g.noalias() = x.row(i) * gram;
    for (std::int64_t r = 0; r < k; ++r) {
      const double denom = gram(r, r);
      if (denom <= 0.0) continue;
      const double updated = std::max(0.0, x(i, r) - (g[r] - target(i, r)) / denom);
      const double delta = updated - x(i, r);
      if (delta != 0.0) {
        g.noalias() += delta * gram.row(r);
        x(i, r) = updated;
        max_change = std::max(max_change, std::abs(delta));
      }
    }
  }
  return max_change;
}

// Solves the nonnegative least-squares subproblem by repeated sweeps until
// entry changes fall below inner_tol relative to the largest entry.
void ccd_solve(DenseMatrix& x, const DenseMatrix& gram, const DenseMatrix& target,
               std::int64_t max_sweeps, double inner_tol) {
  for (std::int64_t s = 0; s < max_sweeps; ++s) {
    const double change = ccd_sweep(x, gram, target);
    const double scale = x.cwiseAbs().maxCoeff();
    if (change <= inner_tol * std::max(scale, 1e-300)) break;
  }
}

double objective(const SparseMatrix& a, double a_norm_sq, const DenseMatrix& w,
                 const DenseMatrix& ht) {
  const DenseMatrix ww = w.transpose() * w;
  const DenseMatrix hh = ht.transpose() * ht;
  const double cross = a.inner_with_product(w, ht);
  const double prod_sq = (ww.array() * hh.array()).sum();
  return std::sqrt(std::max(0.0, a_norm_sq - 2.0 * cross + prod_sq));
}

}  // namespace

TopicModel fit_nmf(const SparseMatrix& a, DenseMatrix w0, DenseMatrix h0,
                   const FitOptions& opts) {
  const std::int64_t n = a.rows(), m = a.cols();
  const std::int64_t k = w0.cols();
  if (w0.rows() != n || h0.rows() != k || h0.cols() != m) {
    throw ValidationError("fit_nmf: factor dimensions inconsistent with A");
  }
  if ((w0.array() < 0.0).any() || (h0.array() < 0.0).any()) {
    throw ValidationError("fit_nmf: initial factors must be non-negative");
  }

  DenseMatrix w = std::move(w0);
  DenseMatrix ht = h0.transpose();  // stored m x k for row-major sweeps
  const double a_norm = a.frobenius_norm();
  const double a_norm_sq = a_norm * a_norm;

  double prev = objective(a, a_norm_sq, w, ht);
  if (opts.objective_trace) {
    opts.objective_trace->clear();
    opts.objective_trace->push_back(prev);
  }

  std::int64_t iterations = 0;
  double current = prev;
  for (std::int64_t iter = 0; iter < opts.max_iter; ++iter) {
    // W subproblem against gram(H) = H H^T, target A H^T.
    ccd_solve(w, ht.transpose() * ht, a.multiply_dense(ht), opts.inner_sweeps,
              opts.inner_tol);
    // H subproblem in transposed layout: gram(W) = W^T W, target A^T W.
    ccd_solve(ht, w.transpose() * w, a.transposed_multiply_dense(w), opts.inner_sweeps,
              opts.inner_tol);
    ++iterations;

    current = objective(a, a_norm_sq, w, ht);
    if (opts.objective_trace) opts.objective_trace->push_back(current);
    if (prev <= 0.0) break;
    if ((prev - current) / prev < opts.tol) break;
    prev = current;
  }

  TopicModel model;
  model.w = std::move(w);
  model.h = ht.transpose();
  model.k = k;
  model.meta.iterations_run = iterations;
  model.meta.final_residual = current;
  return model;
}

std::vector<std::int64_t> descriptor_indices(const TopicModel& model,
                                             std::int64_t topic, std::int64_t t) {
  if (topic < 0 || topic >= model.k) throw ValidationError("topic index out of range");
  if (t < 1) throw ValidationError("descriptor size must be >= 1");
  const std::int64_t m = model.h.cols();
  std::vector<std::int64_t> idx(m);
  std::iota(idx.begin(), idx.end(), std::int64_t{0});
  const auto& h = model.h;
  std::stable_sort(idx.begin(), idx.end(), [&](std::int64_t a, std::int64_t b) {
    return h(topic, a) > h(topic, b);
  });
  idx.resize(std::min(t, m));
  return idx;
}

TopicDescriptor descriptor(const TopicModel& model, std::int64_t topic, std::int64_t t) {
  if (!model.vocab) throw ValidationError("model has no attached vocabulary");
  TopicDescriptor d;
  d.topic_index = topic;
  for (std::int64_t i : descriptor_indices(model, topic, t)) {
    d.terms.push_back(model.vocab->terms[i]);
  }
  return d;
}

Partition partition(const TopicModel& model) {
  Partition p;
  p.assignment.reserve(model.w.rows());
  for (std::int64_t d = 0; d < model.w.rows(); ++d) {
    std::int64_t best = 0;
    double best_w = model.w(d, 0);
    for (std::int64_t t = 1; t < model.k; ++t) {
      if (model.w(d, t) > best_w) {
        best_w = model.w(d, t);
        best = t;
      }
    }
    p.assignment.push_back(best);
  }
  return p;
}

std::vector<std::string> top_documents(const TopicModel& model, std::int64_t topic,
                                       std::int64_t n_docs) {
  if (topic < 0 || topic >= model.k) throw ValidationError("topic index out of range");
  if (!model.doc_ids) throw ValidationError("model has no attached document ids");
  const std::int64_t n = model.w.rows();
  std::vector<std::int64_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::int64_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::int64_t a, std::int64_t b) {
    return model.w(a, topic) > model.w(b, topic);
  });
  idx.resize(std::min(n_docs, n));
  std::vector<std::string> ids;
  ids.reserve(idx.size());
  for (std::int64_t i : idx) ids.push_back((*model.doc_ids)[i]);
  return ids;
}

namespace {

void write_matrix_rows(std::ofstream& out, const DenseMatrix& m) {
  char buf[32];
  for (std::int64_t i = 0; i < m.rows(); ++i) {
    for (std::int64_t j = 0; j < m.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.12g", m(i, j));
      if (j) out << ' ';
      out << buf;
    }
    out << '\n';
  }
}

}  // namespace

void save_model(const TopicModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write model file: " + path.string());
  char checksum[32];
  std::snprintf(checksum, sizeof(checksum), "%016llx",
                static_cast<unsigned long long>(model.vocab_checksum));
  out << "format_version 1\n";
  out << "method " << method_name(model.meta.method) << '\n';
  out << "k " << model.k << '\n';
  out << "n " << model.w.rows() << '\n';
  out << "m " << model.h.cols() << '\n';
  out << "seed " << (model.meta.seed ? std::to_string(*model.meta.seed) : "none") << '\n';
  out << "vocab_checksum " << checksum << '\n';
  out << "H\n";
  write_matrix_rows(out, model.h);
  out << "W\n";
  write_matrix_rows(out, model.w);
}

TopicModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read model file: " + path.string());
  const auto expect_key = [&](const std::string& key) -> std::string {
    std::string k, v;
    if (!(in >> k >> v) || k != key) {
      throw ValidationError("model file " + path.string() + ": expected '" + key + "' entry");
    }
    return v;
  };
  if (expect_key("format_version") != "1") {
    throw ValidationError("unsupported model format version in " + path.string());
  }
  TopicModel model;
  model.meta.method = method_from_name(expect_key("method"));
  model.k = std::stoll(expect_key("k"));
  const std::int64_t n = std::stoll(expect_key("n"));
  const std::int64_t m = std::stoll(expect_key("m"));
  const std::string seed = expect_key("seed");
  if (seed != "none") model.meta.seed = std::stoull(seed);
  model.vocab_checksum = std::stoull(expect_key("vocab_checksum"), nullptr, 16);
  if (model.k < 1 || n < 1 || m < 1) {
    throw ValidationError("model file has invalid dimensions: " + path.string());
  }

  std::string tag;
  in >> tag;
  if (tag != "H") throw ValidationError("model file missing H section: " + path.string());
  model.h.resize(model.k, m);
  for (std::int64_t i = 0; i < model.k; ++i)
    for (std::int64_t j = 0; j < m; ++j)
      if (!(in >> model.h(i, j))) throw ValidationError("model file truncated in H");
  in >> tag;
  if (tag != "W") throw ValidationError("model file missing W section: " + path.string());
  model.w.resize(n, model.k);
  for (std::int64_t i = 0; i < n; ++i)
    for (std::int64_t j = 0; j < model.k; ++j)
      if (!(in >> model.w(i, j))) throw ValidationError("model file truncated in W");

  if ((model.w.array() < 0.0).any() || (model.h.array() < 0.0).any()) {
    throw ValidationError("model file has negative factor entries: " + path.string());
  }
  return model;
}

}  // namespace topicstab
