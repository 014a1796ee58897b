#pragma once

#include <cstdint>
#include <set>
#include <vector>

#include "topicstab/nmf.hpp"

namespace topicstab {

// Collection of models being compared; all must share k and the
// vocabulary checksum.
struct ModelCollection {
  std::vector<const TopicModel*> models;
  std::int64_t t = 10;

  std::int64_t size() const { return static_cast<std::int64_t>(models.size()); }
};

void validate_collection(const ModelCollection& coll);

struct SimilarityMatrix {
  std::int64_t k = 0;
  std::vector<double> values;  // row-major k x k

  double& at(std::int64_t x, std::int64_t y) { return values[x * k + y]; }
  double at(std::int64_t x, std::int64_t y) const { return values[x * k + y]; }
};

struct MeasureSummary {
  double mean = 0.0;
  double stdev = 0.0;
};

struct StabilityReport {
  MeasureSummary adsd;
  MeasureSummary ats;
  MeasureSummary pnmi;
  std::int64_t r = 0;
  std::int64_t t = 0;
  // Full r x r pairwise matrices (row-major); diagonals hold the
  // self-comparison values (0 for DSD, 1 for TS and NMI).
  std::vector<double> dsd_pairwise;
  std::vector<double> ts_pairwise;
  std::vector<double> nmi_pairwise;
};

// Union of the top-t terms across all k topics, as vocabulary indices.
std::set<std::int64_t> descriptor_set(const TopicModel& model, std::int64_t t);

// |T1 symdiff T2| / (t * k). The literal normalization can exceed 1 for
// large disjoint sets; normalized=true divides by |T1| + |T2| instead,
// which is bounded by [0, 1].
double dsd(const TopicModel& m1, const TopicModel& m2, std::int64_t t,
           bool normalized = false);

double adsd(const ModelCollection& coll, bool normalized = false);

double jaccard(const std::set<std::int64_t>& r1, const std::set<std::int64_t>& r2);

// Permutation pi maximizing sum_x S[x, pi(x)]; ties resolved to the
// lexicographically smallest permutation.
std::vector<std::int64_t> hungarian_match(const SimilarityMatrix& s);

double term_stability(const TopicModel& m1, const TopicModel& m2, std::int64_t t);

double ats(const ModelCollection& coll);

// Mutual information over the joint contingency table normalized by
// sqrt(H(p1) * H(p2)), natural-log entropies. Both partitions
// single-cluster -> 1; exactly one single-cluster -> 0.
double nmi(const Partition& p1, const Partition& p2);

double pnmi(const std::vector<Partition>& partitions);

StabilityReport stability_report(const ModelCollection& coll, bool dsd_normalized = false);

}  // namespace topicstab
