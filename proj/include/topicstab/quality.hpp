#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "topicstab/corpus.hpp"
#include "topicstab/nmf.hpp"
#include "topicstab/stability.hpp"

namespace topicstab {

// Document-level binary co-occurrence counts over the full corpus.
class CooccurrenceIndex {
public:
  CooccurrenceIndex(std::int64_t n_docs, std::int64_t n_terms);

  std::int64_t n_docs() const { return n_docs_; }
  std::int64_t count(std::int64_t term) const { return counts_[term]; }
  // Number of documents containing both terms; joint(w, w) == count(w).
  std::int64_t joint(std::int64_t t1, std::int64_t t2) const;

private:
  friend CooccurrenceIndex build_cooccurrence(const Corpus&, const Vocabulary&);

  std::int64_t n_docs_;
  std::vector<std::int64_t> counts_;
  // Upper-triangular pair counts keyed by t1 * n_terms + t2 with t1 < t2.
  std::unordered_map<std::int64_t, std::int64_t> pairs_;
  std::int64_t n_terms_;
};

CooccurrenceIndex build_cooccurrence(const Corpus& corpus, const Vocabulary& vocab);

// NPMI = ln(p12 / (p1 p2)) / -ln(p12) with p12 = (joint + eps) / n,
// clamped to [-1, 1]. Terms co-occurring in every document score 1.
double npmi_pair(const CooccurrenceIndex& idx, std::int64_t t1, std::int64_t t2,
                 double eps = 1e-12);

// Mean NPMI over all term pairs of each topic's top-t descriptor,
// averaged over the k topics.
double coherence(const TopicModel& model, const CooccurrenceIndex& idx,
                 std::int64_t t = 10);

// Per-document category indices against named categories.
struct GroundTruth {
  std::vector<std::int64_t> category;  // one entry per document
  std::vector<std::string> names;
};

// Builds the ground truth from corpus labels; every document must be
// labeled. Category indices follow the sorted order of distinct labels.
GroundTruth ground_truth_from_labels(const Corpus& corpus);

// NMI between a model partition and the ground-truth partition.
double partition_accuracy(const Partition& p, const GroundTruth& gt);

}  // namespace topicstab
