#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "topicstab/corpus.hpp"
#include "topicstab/linalg.hpp"

namespace topicstab {

enum class Method { kNmfRandom, kNmfNndsvd, kEnsembleBasic, kEnsembleKfold, kExternal };

std::string method_name(Method m);
Method method_from_name(const std::string& name);

struct ModelMeta {
  Method method = Method::kNmfRandom;
  std::optional<std::uint64_t> seed;
  std::int64_t iterations_run = 0;
  double final_residual = 0.0;
};

// Factor pair for one fitted model. W is n x k (document-topic weights),
// H is k x m (topic-term weights), both elementwise non-negative.
struct TopicModel {
  DenseMatrix w;
  DenseMatrix h;
  std::int64_t k = 0;
  ModelMeta meta;
  std::uint64_t vocab_checksum = 0;
  std::shared_ptr<const Vocabulary> vocab;          // may be null for loaded files
  std::shared_ptr<const std::vector<std::string>> doc_ids;  // may be null

  std::int64_t n_docs() const { return w.rows(); }
  std::int64_t n_terms() const { return h.cols(); }
};

struct TopicDescriptor {
  std::int64_t topic_index = 0;
  std::vector<std::string> terms;  // descending weight
};

// Dominant-topic assignment, one entry per document, values in [0, k).
struct Partition {
  std::vector<std::int64_t> assignment;

  std::int64_t size() const { return static_cast<std::int64_t>(assignment.size()); }
};

// Factors with i.i.d. uniform(0,1) entries from mt19937_64(seed); W is
// filled row-major first, then H.
std::pair<DenseMatrix, DenseMatrix> random_init(std::int64_t n, std::int64_t m,
                                                std::int64_t k, std::uint64_t seed);

// NNDSVD (basic variant, zeros kept as zeros). fill_eps > 0 replaces
// zeros with that constant for solvers that lock zero entries.
std::pair<DenseMatrix, DenseMatrix> nndsvd_init(const SparseMatrix& a, std::int64_t k,
                                                double fill_eps = 0.0,
                                                const SvdOptions& svd_opts = {});

struct FitOptions {
  std::int64_t max_iter = 100;
  double tol = 1e-4;
  // Per-subproblem coordinate-descent budget: sweeps stop once the largest
  // entry change falls below inner_tol relative to the largest entry.
  std::int64_t inner_sweeps = 50;
  double inner_tol = 1e-6;
  // When set, receives ||A - WH||_F after initialization and after every
  // iteration (used by the monotonicity property tests).
  std::vector<double>* objective_trace = nullptr;
};

// Alternating nonnegativity-constrained least squares minimizing
// ||A - WH||_F. Each half-step is one cyclic coordinate-descent sweep in
// fixed index order, so the solver is fully deterministic.
TopicModel fit_nmf(const SparseMatrix& a, DenseMatrix w0, DenseMatrix h0,
                   const FitOptions& opts = {});

// Top-t terms of one topic by descending weight; ties broken by
// lexicographic term order. Requires model.vocab.
TopicDescriptor descriptor(const TopicModel& model, std::int64_t topic,
                           std::int64_t t = 10);

// Same ranking, as vocabulary indices; works for models without an
// attached vocabulary (term index order equals lexicographic order
// because vocabularies are sorted).
std::vector<std::int64_t> descriptor_indices(const TopicModel& model,
                                             std::int64_t topic, std::int64_t t = 10);

// argmax over topics of each W row; ties to the lowest topic index.
Partition partition(const TopicModel& model);

// Doc ids sorted by descending W[:, topic]; ties keep document order.
std::vector<std::string> top_documents(const TopicModel& model, std::int64_t topic,
                                       std::int64_t n_docs);

// Model file: plain-text header (format_version, method, k, n, m, seed,
// vocab_checksum) followed by the H rows then the W rows, 12 significant
// digits per value.
void save_model(const TopicModel& model, const std::filesystem::path& path);
TopicModel load_model(const std::filesystem::path& path);

}  // namespace topicstab
