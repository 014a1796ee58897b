#include "topicstab/stability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "topicstab/errors.hpp"

namespace topicstab {

void validate_collection(const ModelCollection& coll) {
  if (coll.size() < 2) throw ValidationError("model collection needs at least 2 models");
  if (coll.t < 1) throw ValidationError("top-terms count must be >= 1");
  const TopicModel* first = coll.models.front();
  for (const TopicModel* m : coll.models) {
    if (m->vocab_checksum != first->vocab_checksum) {
      throw ValidationError("models in a collection must share the vocabulary checksum");
    }
    if (m->k != first->k) {
      throw ValidationError("models in a collection must share k");
    }
  }
}

std::set<std::int64_t> descriptor_set(const TopicModel& model, std::int64_t t) {
  std::set<std::int64_t> s;
  for (std::int64_t topic = 0; topic < model.k; ++topic) {
    for (std::int64_t idx : descriptor_indices(model, topic, t)) s.insert(idx);
  }
  return s;
}

namespace {

void check_pair(const TopicModel& m1, const TopicModel& m2) {
  if (m1.vocab_checksum != m2.vocab_checksum) {
    throw ValidationError("models compare only within one vocabulary");
  }
  if (m1.k != m2.k) throw ValidationError("models must share k");
}

}  // namespace

double dsd(const TopicModel& m1, const TopicModel& m2, std::int64_t t, bool normalized) {
  check_pair(m1, m2);
  const auto t1 = descriptor_set(m1, t);
  const auto t2 = descriptor_set(m2, t);
  std::vector<std::int64_t> sym;
  std::set_symmetric_difference(t1.begin(), t1.end(), t2.begin(), t2.end(),
                                std::back_inserter(sym));
  if (normalized) {
    const std::size_t total = t1.size() + t2.size();
    if (total == 0) return 0.0;
    return static_cast<double>(sym.size()) / static_cast<double>(total);
  }
  return static_cast<double>(sym.size()) / static_cast<double>(t * m1.k);
}

double adsd(const ModelCollection& coll, bool normalized) {
  validate_collection(coll);
  const std::int64_t r = coll.size();
  double sum = 0.0;
  for (std::int64_t i = 0; i < r; ++i) {
    for (std::int64_t j = i + 1; j < r; ++j) {
      sum += dsd(*coll.models[i], *coll.models[j], coll.t, normalized);
    }
  }
  // Ordered-pair mean; dsd is symmetric so each unordered pair counts twice.
  return 2.0 * sum / (static_cast<double>(r) * static_cast<double>(r - 1));
}

double jaccard(const std::set<std::int64_t>& r1, const std::set<std::int64_t>& r2) {
  if (r1.empty() && r2.empty()) return 0.0;
  std::vector<std::int64_t> inter;
  std::set_intersection(r1.begin(), r1.end(), r2.begin(), r2.end(),
                        std::back_inserter(inter));
  const std::size_t uni = r1.size() + r2.size() - inter.size();
  return static_cast<double>(inter.size()) / static_cast<double>(uni);
}

namespace {

// O(k^3) Hungarian method (shortest augmenting paths with potentials) for
// the max-sum assignment on S.
std::vector<std::int64_t> hungarian_max(const SimilarityMatrix& s) {
  const std::int64_t n = s.k;
  // Costs negated for a minimal-cost formulation; 1-based arrays.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::int64_t> match(n + 1, 0), way(n + 1, 0);
  constexpr double inf = std::numeric_limits<double>::infinity();
  for (std::int64_t i = 1; i <= n; ++i) {
    match[0] = i;
    std::int64_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, false);
    do {
      used[j0] = true;
      const std::int64_t i0 = match[j0];
      double delta = inf;
      std::int64_t j1 = 0;
      for (std::int64_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = -s.at(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::int64_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const std::int64_t j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<std::int64_t> pi(n);
  for (std::int64_t j = 1; j <= n; ++j) pi[match[j] - 1] = j - 1;
  return pi;
}

double matched_total(const SimilarityMatrix& s, const std::vector<std::int64_t>& pi) {
  double total = 0.0;
  for (std::int64_t x = 0; x < s.k; ++x) total += s.at(x, pi[x]);
  return total;
}

// Optimal total of the subproblem over the unused rows/columns.
double best_completion(const SimilarityMatrix& s, const std::vector<std::int64_t>& rows,
                       const std::vector<std::int64_t>& cols) {
  if (rows.empty()) return 0.0;
  SimilarityMatrix sub;
  sub.k = static_cast<std::int64_t>(rows.size());
  sub.values.resize(rows.size() * cols.size());
  for (std::size_t x = 0; x < rows.size(); ++x) {
    for (std::size_t y = 0; y < cols.size(); ++y) {
      sub.values[x * cols.size() + y] = s.at(rows[x], cols[y]);
    }
  }
  return matched_total(sub, hungarian_max(sub));
}

}  // namespace

std::vector<std::int64_t> hungarian_match(const SimilarityMatrix& s) {
  if (s.k < 0 || s.values.size() != static_cast<std::size_t>(s.k) * static_cast<std::size_t>(s.k)) {
    throw ValidationError("similarity matrix must be square");
  }
  if (s.k == 0) return {};
  const double best_total = matched_total(s, hungarian_max(s));
  const double eps = 1e-12 * std::max(1.0, std::abs(best_total));

  // Lexicographically smallest permutation among the optima: fix each row
  // in order to the smallest column that still admits an optimal
  // completion of the remaining rows.
  std::vector<std::int64_t> pi(s.k);
  std::vector<std::int64_t> free_cols(s.k);
  for (std::int64_t j = 0; j < s.k; ++j) free_cols[j] = j;
  double prefix = 0.0;
  for (std::int64_t x = 0; x < s.k; ++x) {
    std::vector<std::int64_t> rest_rows;
    for (std::int64_t r = x + 1; r < s.k; ++r) rest_rows.push_back(r);
    bool fixed = false;
    for (std::size_t c = 0; c < free_cols.size(); ++c) {
      std::vector<std::int64_t> rest_cols = free_cols;
      rest_cols.erase(rest_cols.begin() + static_cast<std::ptrdiff_t>(c));
      const double total =
          prefix + s.at(x, free_cols[c]) + best_completion(s, rest_rows, rest_cols);
      if (total >= best_total - eps) {
        pi[x] = free_cols[c];
        prefix += s.at(x, free_cols[c]);
        free_cols = std::move(rest_cols);
        fixed = true;
        break;
      }
    }
    if (!fixed) throw NumericalError("hungarian_match: no optimal completion found");
  }
  return pi;
}

double term_stability(const TopicModel& m1, const TopicModel& m2, std::int64_t t) {
  check_pair(m1, m2);
  const std::int64_t k = m1.k;
  std::vector<std::set<std::int64_t>> d1(k), d2(k);
  for (std::int64_t topic = 0; topic < k; ++topic) {
    const auto i1 = descriptor_indices(m1, topic, t);
    const auto i2 = descriptor_indices(m2, topic, t);
    d1[topic] = std::set<std::int64_t>(i1.begin(), i1.end());
    d2[topic] = std::set<std::int64_t>(i2.begin(), i2.end());
  }
  SimilarityMatrix s;
  s.k = k;
  s.values.resize(static_cast<std::size_t>(k) * k);
  for (std::int64_t x = 0; x < k; ++x)
    for (std::int64_t y = 0; y < k; ++y) s.at(x, y) = jaccard(d1[x], d2[y]);
  const auto pi = hungarian_match(s);
  double sum = 0.0;
  for (std::int64_t x = 0; x < k; ++x) sum += s.at(x, pi[x]);
  return sum / static_cast<double>(k);
}

double ats(const ModelCollection& coll) {
  validate_collection(coll);
  const std::int64_t r = coll.size();
  double sum = 0.0;
  for (std::int64_t i = 0; i < r; ++i) {
    for (std::int64_t j = i + 1; j < r; ++j) {
      sum += term_stability(*coll.models[i], *coll.models[j], coll.t);
    }
  }
  return 2.0 * sum / (static_cast<double>(r) * static_cast<double>(r - 1));
}

double nmi(const Partition& p1, const Partition& p2) {
  if (p1.size() != p2.size()) throw ValidationError("partitions must have equal length");
  const std::int64_t n = p1.size();
  if (n == 0) throw ValidationError("partitions must be non-empty");
  std::int64_t k1 = 0, k2 = 0;
  for (std::int64_t v : p1.assignment) k1 = std::max(k1, v + 1);
  for (std::int64_t v : p2.assignment) k2 = std::max(k2, v + 1);

  std::vector<std::int64_t> joint(static_cast<std::size_t>(k1) * k2, 0);
  std::vector<std::int64_t> a(k1, 0), b(k2, 0);
  for (std::int64_t d = 0; d < n; ++d) {
    const std::int64_t c1 = p1.assignment[d], c2 = p2.assignment[d];
    ++joint[c1 * k2 + c2];
    ++a[c1];
    ++b[c2];
  }

  // Counts are exact in double precision, so the ratios below round once;
  // identical partitions therefore give bitwise-equal I and H sums.
  double h1 = 0.0, h2 = 0.0, info = 0.0;
  for (std::int64_t c = 0; c < k1; ++c) {
    if (a[c] > 0) {
      h1 += (static_cast<double>(a[c]) / n) * std::log(static_cast<double>(n) / a[c]);
    }
  }
  for (std::int64_t c = 0; c < k2; ++c) {
    if (b[c] > 0) {
      h2 += (static_cast<double>(b[c]) / n) * std::log(static_cast<double>(n) / b[c]);
    }
  }
  for (std::int64_t c1 = 0; c1 < k1; ++c1) {
    for (std::int64_t c2 = 0; c2 < k2; ++c2) {
      const std::int64_t nij = joint[c1 * k2 + c2];
      if (nij == 0) continue;
      info += (static_cast<double>(nij) / n) *
              std::log(static_cast<double>(n * nij) / static_cast<double>(a[c1] * b[c2]));
    }
  }

  const bool z1 = h1 <= 0.0, z2 = h2 <= 0.0;
  if (z1 && z2) return 1.0;
  if (z1 || z2) return 0.0;
  const double denom = (h1 == h2) ? h1 : std::sqrt(h1 * h2);
  return info / denom;
}

double pnmi(const std::vector<Partition>& partitions) {
  const std::int64_t r = static_cast<std::int64_t>(partitions.size());
  if (r < 2) throw ValidationError("pnmi needs at least 2 partitions");
  double sum = 0.0;
  for (std::int64_t i = 0; i < r; ++i) {
    for (std::int64_t j = i + 1; j < r; ++j) {
      sum += nmi(partitions[i], partitions[j]);
    }
  }
  return 2.0 * sum / (static_cast<double>(r) * static_cast<double>(r - 1));
}

namespace {

MeasureSummary summarize_offdiag(const std::vector<double>& pairwise, std::int64_t r) {
  // Mean and population stdev over the unordered pairwise values.
  std::vector<double> vals;
  for (std::int64_t i = 0; i < r; ++i)
    for (std::int64_t j = i + 1; j < r; ++j) vals.push_back(pairwise[i * r + j]);
  MeasureSummary s;
  double sum = 0.0;
  for (double v : vals) sum += v;
  s.mean = sum / static_cast<double>(vals.size());
  double sq = 0.0;
  for (double v : vals) sq += (v - s.mean) * (v - s.mean);
  s.stdev = std::sqrt(sq / static_cast<double>(vals.size()));
  return s;
}

}  // namespace

StabilityReport stability_report(const ModelCollection& coll, bool dsd_normalized) {
  validate_collection(coll);
  const std::int64_t r = coll.size();
  StabilityReport report;
  report.r = r;
  report.t = coll.t;
  report.dsd_pairwise.assign(static_cast<std::size_t>(r) * r, 0.0);
  report.ts_pairwise.assign(static_cast<std::size_t>(r) * r, 1.0);
  report.nmi_pairwise.assign(static_cast<std::size_t>(r) * r, 1.0);

  std::vector<Partition> partitions;
  partitions.reserve(r);
  for (const TopicModel* m : coll.models) partitions.push_back(partition(*m));

  for (std::int64_t i = 0; i < r; ++i) {
    for (std::int64_t j = i + 1; j < r; ++j) {
      const double d = dsd(*coll.models[i], *coll.models[j], coll.t, dsd_normalized);
      const double ts = term_stability(*coll.models[i], *coll.models[j], coll.t);
      const double mi = nmi(partitions[i], partitions[j]);
      report.dsd_pairwise[i * r + j] = report.dsd_pairwise[j * r + i] = d;
      report.ts_pairwise[i * r + j] = report.ts_pairwise[j * r + i] = ts;
      report.nmi_pairwise[i * r + j] = report.nmi_pairwise[j * r + i] = mi;
    }
  }
  report.adsd = summarize_offdiag(report.dsd_pairwise, r);
  report.ats = summarize_offdiag(report.ts_pairwise, r);
  report.pnmi = summarize_offdiag(report.nmi_pairwise, r);
  return report;
}

}  // namespace topicstab
