#include <memory>
#include <numeric>
#include <set>

#include "doctest.h"
#include "synthetic.hpp"
#include "topicstab/ensemble.hpp"
#include "topicstab/errors.hpp"
#include "topicstab/quality.hpp"
#include "topicstab/stability.hpp"

using namespace topicstab;
using topicstab::testing::SynthSpec;
using topicstab::testing::make_synthetic_corpus;

namespace {

bool bitwise_equal(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  for (std::int64_t i = 0; i < a.size(); ++i)
    if (a.data()[i] != b.data()[i]) return false;
  return true;
}

DocTermMatrix planted_matrix(std::int64_t n_docs, std::int64_t k, std::uint64_t seed,
                             bool disjoint) {
  SynthSpec spec;
  spec.n_docs = n_docs;
  spec.k_topics = k;
  spec.terms_per_topic = 20;
  spec.doc_len_min = 20;
  spec.doc_len_max = 40;
  spec.seed = seed;
  if (disjoint) {
    spec.shared_terms = 0;
    spec.shared_prob = 0.0;
    spec.leak_prob = 0.0;
    spec.mix_frac = 0.0;
  }
  auto corpus = std::make_shared<Corpus>(make_synthetic_corpus(spec));
  auto vocab = std::make_shared<Vocabulary>(build_vocabulary(*corpus, 2));
  return build_matrix(corpus, vocab);
}

std::set<std::int64_t> topic_terms(const DenseMatrix& h, std::int64_t topic,
                                   std::int64_t t) {
  TopicModel m;
  m.k = h.rows();
  m.h = h;
  m.w = DenseMatrix::Zero(1, m.k);
  const auto idx = descriptor_indices(m, topic, t);
  return {idx.begin(), idx.end()};
}

}  // namespace

TEST_CASE("random base generation is deterministic with distinct members") {
  const DocTermMatrix a = planted_matrix(45, 3, 7, false);
  const auto f1 = generate_base_random(a, 3, 4, 99);
  const auto f2 = generate_base_random(a, 3, 4, 99);
  REQUIRE(f1.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(f1[i].rows() == 3);
    CHECK(f1[i].cols() == a.n_terms());
    CHECK(bitwise_equal(f1[i], f2[i]));
    CHECK(f1[i].minCoeff() >= 0.0);
  }
  // Different members differ somewhere.
  CHECK_FALSE(bitwise_equal(f1[0], f1[1]));
  CHECK_THROWS_AS(generate_base_random(a, 3, 1, 99), ValidationError);
}

TEST_CASE("parallel generation matches serial generation") {
  const DocTermMatrix a = planted_matrix(45, 3, 11, false);
  const auto serial = generate_base_random(a, 3, 6, 5, 100, 1e-4, /*jobs=*/1);
  const auto parallel = generate_base_random(a, 3, 6, 5, 100, 1e-4, /*jobs=*/4);
  REQUIRE(serial.size() == parallel.size());
  for (std::size_t i = 0; i < serial.size(); ++i) {
    CHECK(bitwise_equal(serial[i], parallel[i]));
  }
}

TEST_CASE("kfold generation fold arithmetic and determinism") {
  const DocTermMatrix a = planted_matrix(10, 2, 3, true);
  const auto factors = generate_base_kfold(a, 2, 1, 2, 42);
  REQUIRE(factors.size() == 2);  // p=1, f=2
  for (const auto& h : factors) {
    CHECK(h.rows() == 2);
    CHECK(h.cols() == a.n_terms());  // full vocabulary, never subsampled
  }
  const auto again = generate_base_kfold(a, 2, 1, 2, 42);
  CHECK(bitwise_equal(factors[0], again[0]));
  CHECK(bitwise_equal(factors[1], again[1]));

  const auto rounds = generate_base_kfold(a, 2, 3, 2, 42);
  CHECK(rounds.size() == 6);  // p * f members

  CHECK_THROWS_AS(generate_base_kfold(a, 2, 1, 11, 42), ValidationError);
  CHECK_THROWS_AS(generate_base_kfold(a, 6, 1, 2, 42), ValidationError);
}

TEST_CASE("kfold members differ across rounds but share the term space") {
  const DocTermMatrix a = planted_matrix(60, 3, 21, false);
  const auto factors = generate_base_kfold(a, 3, 2, 3, 123, 100, 1e-4, /*jobs=*/3);
  REQUIRE(factors.size() == 6);
  const auto serial = generate_base_kfold(a, 3, 2, 3, 123);
  for (std::size_t i = 0; i < 6; ++i) CHECK(bitwise_equal(factors[i], serial[i]));
}

TEST_CASE("stack lays factors out member-major") {
  std::vector<DenseMatrix> factors;
  for (int i = 0; i < 3; ++i) {
    DenseMatrix h(4, 50);
    for (std::int64_t j = 0; j < h.size(); ++j) {
      h.data()[j] = static_cast<double>(i * 1000 + j);
    }
    factors.push_back(std::move(h));
  }
  const StackedMatrix s = stack(factors);
  CHECK(s.m.rows() == 12);
  CHECK(s.m.cols() == 50);
  REQUIRE(s.provenance.size() == 12);
  for (std::int64_t member = 0; member < 3; ++member) {
    for (std::int64_t topic = 0; topic < 4; ++topic) {
      const std::int64_t row = member * 4 + topic;
      CHECK(s.m.row(row) == factors[member].row(topic));
      CHECK(s.provenance[row] == std::make_pair(member, topic));
    }
  }
  CHECK(s.m.minCoeff() >= 0.0);

  factors[1].resize(4, 49);
  CHECK_THROWS_AS(stack(factors), ValidationError);
}

TEST_CASE("integrating duplicated base factors recovers the base topics") {
  const DocTermMatrix a = planted_matrix(60, 3, 31, true);
  auto [w0, h0] = nndsvd_init(a.weights, 3);
  const TopicModel base = fit_nmf(a.weights, w0, h0);

  const StackedMatrix s = stack({base.h, base.h, base.h, base.h});
  const DenseMatrix h_final = integrate(s, 3);
  CHECK(h_final.minCoeff() >= 0.0);

  // Hungarian-match final topics to base topics on descriptor overlap.
  const std::int64_t t = 5;
  SimilarityMatrix sim;
  sim.k = 3;
  sim.values.resize(9);
  for (std::int64_t x = 0; x < 3; ++x) {
    for (std::int64_t y = 0; y < 3; ++y) {
      sim.at(x, y) = jaccard(topic_terms(h_final, x, t), topic_terms(base.h, y, t));
    }
  }
  const auto pi = hungarian_match(sim);
  for (std::int64_t x = 0; x < 3; ++x) {
    CHECK(topic_terms(h_final, x, t) == topic_terms(base.h, pi[x], t));
  }

  const DenseMatrix h_again = integrate(s, 3);
  CHECK(bitwise_equal(h_final, h_again));
  CHECK_THROWS_AS(integrate(s, 13), ValidationError);
}

TEST_CASE("stacking order does not change the final descriptor sets") {
  const DocTermMatrix a = planted_matrix(80, 3, 77, false);
  const auto factors = generate_base_random(a, 3, 5, 17);
  std::vector<DenseMatrix> permuted = {factors[3], factors[0], factors[4],
                                       factors[1], factors[2]};
  const DenseMatrix h1 = integrate(stack(factors), 3);
  const DenseMatrix h2 = integrate(stack(permuted), 3);

  const std::int64_t t = 8;
  SimilarityMatrix sim;
  sim.k = 3;
  sim.values.resize(9);
  for (std::int64_t x = 0; x < 3; ++x)
    for (std::int64_t y = 0; y < 3; ++y)
      sim.at(x, y) = jaccard(topic_terms(h1, x, t), topic_terms(h2, y, t));
  const auto pi = hungarian_match(sim);
  for (std::int64_t x = 0; x < 3; ++x) {
    CHECK(topic_terms(h1, x, t) == topic_terms(h2, pi[x], t));
  }
}

TEST_CASE("run_ensemble produces a complete model with folded documents") {
  const DocTermMatrix a = planted_matrix(60, 3, 41, true);
  EnsembleConfig cfg;
  cfg.mode = EnsembleMode::kBasic;
  cfg.k = 3;
  cfg.r = 2;
  cfg.master_seed = 5;
  const TopicModel model = run_ensemble(a, cfg);
  CHECK(model.k == 3);
  CHECK(model.meta.method == Method::kEnsembleBasic);
  CHECK(model.w.rows() == a.n_docs());
  CHECK(model.h.cols() == a.n_terms());
  CHECK(model.w.minCoeff() >= 0.0);  // folding keeps non-negativity
  CHECK(model.vocab_checksum == a.vocab->checksum());
  REQUIRE(model.doc_ids);
  CHECK(model.doc_ids->front() == "d0000");
}

TEST_CASE("kfold ensemble is deterministic end to end") {
  const DocTermMatrix a = planted_matrix(50, 3, 51, false);
  EnsembleConfig cfg;
  cfg.mode = EnsembleMode::kKfold;
  cfg.k = 3;
  cfg.p = 2;
  cfg.f = 3;
  cfg.master_seed = 1234;
  cfg.jobs = 1;
  const TopicModel m1 = run_ensemble(a, cfg);
  cfg.jobs = 4;
  const TopicModel m2 = run_ensemble(a, cfg);
  CHECK(bitwise_equal(m1.w, m2.w));
  CHECK(bitwise_equal(m1.h, m2.h));
  CHECK(m1.meta.method == Method::kEnsembleKfold);
  CHECK(m1.meta.seed == 1234);
}

TEST_CASE("kfold ensemble recovers planted topics") {
  const DocTermMatrix a = planted_matrix(90, 3, 61, true);
  EnsembleConfig cfg;
  cfg.mode = EnsembleMode::kKfold;
  cfg.k = 3;
  cfg.p = 2;
  cfg.f = 3;
  cfg.master_seed = 7;
  const TopicModel model = run_ensemble(a, cfg);
  const GroundTruth gt = ground_truth_from_labels(*a.corpus);
  CHECK(partition_accuracy(partition(model), gt) >= 0.95);
}

TEST_CASE("config invariants are enforced") {
  EnsembleConfig cfg;
  cfg.mode = EnsembleMode::kBasic;
  cfg.r = 1;
  CHECK_THROWS_AS(validate_config(cfg), ValidationError);
  cfg.mode = EnsembleMode::kKfold;
  cfg.r = 100;
  cfg.f = 1;
  CHECK_THROWS_AS(validate_config(cfg), ValidationError);
  cfg.f = 10;
  cfg.k = 0;
  CHECK_THROWS_AS(validate_config(cfg), ValidationError);
}
