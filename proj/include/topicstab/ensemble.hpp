#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "topicstab/corpus.hpp"
#include "topicstab/nmf.hpp"

namespace topicstab {

enum class EnsembleMode { kBasic, kKfold };

struct EnsembleConfig {
  EnsembleMode mode = EnsembleMode::kBasic;
  std::int64_t k = 2;         // topics per base model
  std::int64_t k_prime = 0;   // final topics; 0 means "same as k"
  std::int64_t r = 100;       // basic-mode members
  std::int64_t p = 10;        // kfold rounds
  std::int64_t f = 10;        // kfold folds
  std::uint64_t master_seed = 1;
  std::int64_t base_max_iter = 100;
  double base_tol = 1e-4;
  int jobs = 1;

  std::int64_t final_k() const { return k_prime > 0 ? k_prime : k; }
};

void validate_config(const EnsembleConfig& cfg);

// r randomly-initialized base models on the full matrix; member i is
// seeded with split_seed(master_seed, i). Returns the H factors in
// member order, identical for any job count. members_out, when given,
// receives the complete base models (used to persist members to disk).
std::vector<DenseMatrix> generate_base_random(const DocTermMatrix& a, std::int64_t k,
                                              std::int64_t r, std::uint64_t master_seed,
                                              std::int64_t max_iter = 100,
                                              double tol = 1e-4, int jobs = 1,
                                              std::vector<TopicModel>* members_out = nullptr);

// p rounds of f folds: each round shuffles the documents with
// split_seed(master_seed, round), then every fold is held out in turn and
// an NNDSVD-initialized model is fitted on the remaining rows. Returns
// p*f H factors over the full vocabulary, ordered by (round, fold).
std::vector<DenseMatrix> generate_base_kfold(const DocTermMatrix& a, std::int64_t k,
                                             std::int64_t p, std::int64_t f,
                                             std::uint64_t master_seed,
                                             std::int64_t max_iter = 100,
                                             double tol = 1e-4, int jobs = 1,
                                             std::vector<TopicModel>* members_out = nullptr);

// Topic-term matrix assembled from the base H factors: one row per base
// topic, member order then topic order.
struct StackedMatrix {
  DenseMatrix m;
  std::vector<std::pair<std::int64_t, std::int64_t>> provenance;  // (member, topic)
};

StackedMatrix stack(const std::vector<DenseMatrix>& factors);

// Second-layer NMF on the stacked matrix with NNDSVD initialization;
// returns the final k' x m topic-term factor.
DenseMatrix integrate(const StackedMatrix& m, std::int64_t k_prime,
                      std::int64_t max_iter = 100, double tol = 1e-4,
                      ModelMeta* meta_out = nullptr);

// generation -> stack -> integrate -> fold documents via W = A H^T.
TopicModel run_ensemble(const DocTermMatrix& a, const EnsembleConfig& cfg,
                        std::vector<std::string>* warnings = nullptr,
                        std::vector<TopicModel>* members_out = nullptr);

}  // namespace topicstab
