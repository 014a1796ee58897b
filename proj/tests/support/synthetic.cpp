#include "synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <vector>

#include "topicstab/errors.hpp"
#include "topicstab/rng.hpp"

namespace topicstab::testing {

namespace {

std::string term_name(const char* prefix, std::int64_t group, std::int64_t index) {
  std::string s = prefix;
  s.push_back(static_cast<char>('a' + group));
  s.push_back(static_cast<char>('a' + index / 26));
  s.push_back(static_cast<char>('a' + index % 26));
  return s;
}

// Zipf-like cumulative weights, exponent 0.7 keeps the tail ranks close
// so descriptor boundaries are contested.
std::vector<double> zipf_cumulative(std::int64_t size) {
  std::vector<double> c(size);
  double total = 0.0;
  for (std::int64_t i = 0; i < size; ++i) {
    total += 1.0 / std::pow(static_cast<double>(i + 1), 0.7);
    c[i] = total;
  }
  for (double& v : c) v /= total;
  return c;
}

std::int64_t draw(const std::vector<double>& cumulative, Rng& rng) {
  const double u = rng.next_open01();
  const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  return std::min<std::int64_t>(it - cumulative.begin(),
                                static_cast<std::int64_t>(cumulative.size()) - 1);
}

}  // namespace

Corpus make_synthetic_corpus(const SynthSpec& spec) {
  if (spec.k_topics < 1 || spec.n_docs < 1) {
    throw ValidationError("synthetic corpus needs at least one doc and topic");
  }
  std::vector<std::vector<std::string>> topic_terms(spec.k_topics);
  for (std::int64_t t = 0; t < spec.k_topics; ++t) {
    for (std::int64_t j = 0; j < spec.terms_per_topic; ++j) {
      topic_terms[t].push_back(term_name("top", t, j));
    }
  }
  std::vector<std::string> shared;
  for (std::int64_t j = 0; j < spec.shared_terms; ++j) {
    shared.push_back(term_name("com", 0, j));
  }

  const auto topic_cum = zipf_cumulative(spec.terms_per_topic);
  const auto shared_cum =
      spec.shared_terms > 0 ? zipf_cumulative(spec.shared_terms) : std::vector<double>{};

  Rng rng(spec.seed);
  Corpus corpus;
  for (std::int64_t d = 0; d < spec.n_docs; ++d) {
    const std::int64_t primary = d % spec.k_topics;
    const bool mixed = spec.k_topics > 1 && rng.next_open01() < spec.mix_frac;
    const std::int64_t secondary =
        mixed ? (primary + 1 + static_cast<std::int64_t>(rng.next_below(spec.k_topics - 1))) %
                    spec.k_topics
              : primary;

    const std::int64_t len =
        spec.doc_len_min +
        static_cast<std::int64_t>(rng.next_below(spec.doc_len_max - spec.doc_len_min + 1));
    std::string text;
    for (std::int64_t i = 0; i < len; ++i) {
      const double u = rng.next_open01();
      std::string token;
      if (spec.shared_terms > 0 && u < spec.shared_prob) {
        token = shared[draw(shared_cum, rng)];
      } else if (spec.k_topics > 1 && u < spec.shared_prob + spec.leak_prob) {
        const std::int64_t other =
            (primary + 1 + static_cast<std::int64_t>(rng.next_below(spec.k_topics - 1))) %
            spec.k_topics;
        token = topic_terms[other][draw(topic_cum, rng)];
      } else {
        const std::int64_t t = (mixed && i % 2 == 1) ? secondary : primary;
        token = topic_terms[t][draw(topic_cum, rng)];
      }
      if (!text.empty()) text.push_back(' ');
      text += token;
    }

    char id[16];
    std::snprintf(id, sizeof(id), "d%04lld", static_cast<long long>(d));
    corpus.docs.push_back({id, std::move(text)});
    corpus.labels[id] = std::string("cat") + static_cast<char>('a' + primary);
  }
  return corpus;
}

void write_synthetic_corpus(const Corpus& corpus, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream docs(dir / "corpus.txt", std::ios::binary);
  std::ofstream labels(dir / "labels.tsv", std::ios::binary);
  if (!docs || !labels) throw ValidationError("cannot write synthetic corpus files");
  for (const auto& d : corpus.docs) {
    docs << d.text << '\n';
    labels << d.id << '\t' << corpus.labels.at(d.id) << '\n';
  }
}

}  // namespace topicstab::testing
