#include <cmath>
#include <memory>

#include "doctest.h"
#include "topicstab/errors.hpp"
#include "topicstab/quality.hpp"

using namespace topicstab;

namespace {

Corpus corpus_from(const std::vector<std::string>& texts) {
  Corpus c;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    c.docs.push_back({"doc" + std::to_string(i), texts[i]});
  }
  return c;
}

}  // namespace

TEST_CASE("co-occurrence counts document-level joint presence") {
  // "ant" in docs {0,1}, "bee" in {1,2}, n=4.
  const Corpus c = corpus_from({"ant ant", "ant bee", "bee", "cow"});
  const Vocabulary v = build_vocabulary(c, 1);
  const CooccurrenceIndex idx = build_cooccurrence(c, v);
  const std::int64_t ant = v.index_of("ant"), bee = v.index_of("bee"),
                     cow = v.index_of("cow");
  CHECK(idx.n_docs() == 4);
  CHECK(idx.count(ant) == 2);
  CHECK(idx.joint(ant, bee) == 1);
  CHECK(idx.joint(bee, ant) == 1);
  CHECK(idx.joint(ant, ant) == idx.count(ant));
  CHECK(idx.joint(ant, cow) == 0);
}

TEST_CASE("npmi worked example and bounds") {
  // c1=2, c2=2, joint=1, n=4: PMI = ln(1) = 0 so NPMI = 0.
  const Corpus c = corpus_from({"ant bee", "ant", "bee", "cow"});
  const Vocabulary v = build_vocabulary(c, 1);
  const CooccurrenceIndex idx = build_cooccurrence(c, v);
  const std::int64_t ant = v.index_of("ant"), bee = v.index_of("bee"),
                     cow = v.index_of("cow");
  CHECK(npmi_pair(idx, ant, bee) == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(npmi_pair(idx, ant, bee) == npmi_pair(idx, bee, ant));

  // Self-pair of a term not present everywhere approaches 1.
  CHECK(npmi_pair(idx, ant, ant) == doctest::Approx(1.0).epsilon(1e-9));

  // Never co-occurring pair sits near the -1 floor under eps smoothing.
  CHECK(npmi_pair(idx, ant, cow) <= -0.9);
  CHECK(npmi_pair(idx, ant, cow) >= -1.0);
}

TEST_CASE("npmi handles terms present in every document") {
  const Corpus c = corpus_from({"ant bee", "ant bee", "ant bee"});
  const Vocabulary v = build_vocabulary(c, 1);
  const CooccurrenceIndex idx = build_cooccurrence(c, v);
  CHECK(npmi_pair(idx, v.index_of("ant"), v.index_of("bee")) == 1.0);
}

TEST_CASE("coherence averages pair npmi per topic then across topics") {
  // Topic terms that always co-occur in the same documents: coherence 1.
  const Corpus c = corpus_from(
      {"ant bee cow", "ant bee cow", "dog elk fox", "dog elk fox", "pad"});
  const Vocabulary v = build_vocabulary(c, 1);
  const CooccurrenceIndex idx = build_cooccurrence(c, v);

  TopicModel model;
  model.k = 2;
  model.w = DenseMatrix::Zero(1, 2);
  model.h = DenseMatrix::Zero(2, v.size());
  for (const char* t : {"ant", "bee", "cow"}) model.h(0, v.index_of(t)) = 1.0;
  for (const char* t : {"dog", "elk", "fox"}) model.h(1, v.index_of(t)) = 1.0;

  CHECK(coherence(model, idx, 3) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK_THROWS_AS(coherence(model, idx, 1), ValidationError);

  // Coherence is invariant under topic reordering.
  TopicModel swapped = model;
  swapped.h.row(0) = model.h.row(1);
  swapped.h.row(1) = model.h.row(0);
  CHECK(coherence(swapped, idx, 3) == doctest::Approx(coherence(model, idx, 3)));
}

TEST_CASE("coherence of the two-topic mean example") {
  const Corpus c = corpus_from({"ant bee", "ant bee", "ant bee", "dog elk",
                                "dog", "elk", "ant", "bee pad"});
  const Vocabulary v = build_vocabulary(c, 1);
  const CooccurrenceIndex idx = build_cooccurrence(c, v);
  TopicModel model;
  model.k = 2;
  model.w = DenseMatrix::Zero(1, 2);
  model.h = DenseMatrix::Zero(2, v.size());
  model.h(0, v.index_of("ant")) = 2.0;
  model.h(0, v.index_of("bee")) = 1.0;
  model.h(1, v.index_of("dog")) = 2.0;
  model.h(1, v.index_of("elk")) = 1.0;
  const double c0 = npmi_pair(idx, v.index_of("ant"), v.index_of("bee"));
  const double c1 = npmi_pair(idx, v.index_of("dog"), v.index_of("elk"));
  CHECK(coherence(model, idx, 2) == doctest::Approx((c0 + c1) / 2.0).epsilon(1e-12));
}

TEST_CASE("ground truth is derived from corpus labels") {
  Corpus c = corpus_from({"ant", "bee", "cow"});
  c.labels = {{"doc0", "animals"}, {"doc1", "animals"}, {"doc2", "plants"}};
  const GroundTruth gt = ground_truth_from_labels(c);
  CHECK(gt.names == std::vector<std::string>{"animals", "plants"});
  CHECK(gt.category == std::vector<std::int64_t>{0, 0, 1});

  c.labels.erase("doc2");
  CHECK_THROWS_AS(ground_truth_from_labels(c), ValidationError);
  c.labels.clear();
  CHECK_THROWS_AS(ground_truth_from_labels(c), ValidationError);
}

TEST_CASE("partition accuracy delegates to nmi") {
  GroundTruth gt;
  gt.category = {0, 1, 0, 1};
  gt.names = {"x", "y"};

  // Identical up to label renaming.
  Partition renamed{{1, 0, 1, 0}};
  CHECK(partition_accuracy(renamed, gt) == doctest::Approx(1.0).epsilon(1e-12));

  // Single-topic partition against a multi-category truth.
  Partition flat{{0, 0, 0, 0}};
  CHECK(partition_accuracy(flat, gt) == 0.0);

  // The [0,0,1,1] vs [0,1,0,1] contingency gives zero information.
  Partition anti{{0, 0, 1, 1}};
  CHECK(partition_accuracy(anti, gt) == 0.0);

  Partition wrong{{0, 1}};
  CHECK_THROWS_AS(partition_accuracy(wrong, gt), ValidationError);
}
