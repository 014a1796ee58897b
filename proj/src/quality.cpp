#include "topicstab/quality.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "topicstab/errors.hpp"

namespace topicstab {

CooccurrenceIndex::CooccurrenceIndex(std::int64_t n_docs, std::int64_t n_terms)
    : n_docs_(n_docs), counts_(n_terms, 0), n_terms_(n_terms) {}

std::int64_t CooccurrenceIndex::joint(std::int64_t t1, std::int64_t t2) const {
  if (t1 < 0 || t1 >= n_terms_ || t2 < 0 || t2 >= n_terms_) {
    throw ValidationError("co-occurrence term index out of range");
  }
  if (t1 == t2) return counts_[t1];
  if (t1 > t2) std::swap(t1, t2);
  const auto it = pairs_.find(t1 * n_terms_ + t2);
  return it == pairs_.end() ? 0 : it->second;
}

CooccurrenceIndex build_cooccurrence(const Corpus& corpus, const Vocabulary& vocab) {
  CooccurrenceIndex idx(corpus.size(), vocab.size());
  std::set<std::int64_t> present;
  for (const auto& doc : corpus.docs) {
    present.clear();
    for (const auto& tok : tokenize(doc.text)) {
      const std::int64_t t = vocab.index_of(tok);
      if (t >= 0) present.insert(t);
    }
    for (auto i = present.begin(); i != present.end(); ++i) {
      ++idx.counts_[*i];
      for (auto j = std::next(i); j != present.end(); ++j) {
        ++idx.pairs_[*i * idx.n_terms_ + *j];
      }
    }
  }
  return idx;
}

double npmi_pair(const CooccurrenceIndex& idx, std::int64_t t1, std::int64_t t2,
                 double eps) {
  const std::int64_t n = idx.n_docs();
  const std::int64_t c1 = idx.count(t1);
  const std::int64_t c2 = idx.count(t2);
  if (c1 == 0 || c2 == 0) {
    throw ValidationError("npmi_pair: term never occurs in the corpus");
  }
  const std::int64_t j = idx.joint(t1, t2);
  if (j >= n) return 1.0;  // both terms in every document, always together
  const double pj = (static_cast<double>(j) + eps) / static_cast<double>(n);
  const double p1 = static_cast<double>(c1) / static_cast<double>(n);
  const double p2 = static_cast<double>(c2) / static_cast<double>(n);
  const double value = std::log(pj / (p1 * p2)) / -std::log(pj);
  return std::clamp(value, -1.0, 1.0);
}

double coherence(const TopicModel& model, const CooccurrenceIndex& idx, std::int64_t t) {
  if (t < 2) throw ValidationError("coherence requires t >= 2");
  double topic_sum = 0.0;
  for (std::int64_t topic = 0; topic < model.k; ++topic) {
    const auto terms = descriptor_indices(model, topic, t);
    double pair_sum = 0.0;
    std::int64_t pairs = 0;
    for (std::size_t a = 0; a < terms.size(); ++a) {
      for (std::size_t b = a + 1; b < terms.size(); ++b) {
        pair_sum += npmi_pair(idx, terms[a], terms[b]);
        ++pairs;
      }
    }
    topic_sum += pairs > 0 ? pair_sum / static_cast<double>(pairs) : 0.0;
  }
  return topic_sum / static_cast<double>(model.k);
}

GroundTruth ground_truth_from_labels(const Corpus& corpus) {
  if (corpus.labels.empty()) throw ValidationError("corpus has no labels");
  std::map<std::string, std::int64_t> index;
  for (const auto& [id, label] : corpus.labels) index.emplace(label, 0);
  std::int64_t next = 0;
  for (auto& [label, idx] : index) idx = next++;

  GroundTruth gt;
  gt.names.reserve(index.size());
  for (const auto& [label, idx] : index) gt.names.push_back(label);
  gt.category.reserve(corpus.docs.size());
  for (const auto& doc : corpus.docs) {
    const auto it = corpus.labels.find(doc.id);
    if (it == corpus.labels.end()) {
      throw ValidationError("document without ground-truth label: " + doc.id);
    }
    gt.category.push_back(index.at(it->second));
  }
  return gt;
}

double partition_accuracy(const Partition& p, const GroundTruth& gt) {
  if (p.size() != static_cast<std::int64_t>(gt.category.size())) {
    throw ValidationError("partition and ground truth must cover the same documents");
  }
  Partition truth;
  truth.assignment = gt.category;
  return nmi(p, truth);
}

}  // namespace topicstab
