#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "topicstab/corpus.hpp"
#include "topicstab/errors.hpp"

using namespace topicstab;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) {
    path = fs::temp_directory_path() / ("topicstab_test_" + name);
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

void write(const fs::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  out << content;
}

Corpus repeated_docs(const std::vector<std::string>& texts) {
  Corpus c;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    c.docs.push_back({"doc" + std::to_string(i), texts[i]});
  }
  return c;
}

}  // namespace

TEST_CASE("directory corpus loads in lexicographic order") {
  TempDir dir("corpus_dir");
  write(dir.path / "b.txt", "dog ran");
  write(dir.path / "a.txt", "cat sat");
  const Corpus c = load_corpus(dir.path, CorpusFormat::kDirOfTxt);
  REQUIRE(c.size() == 2);
  CHECK(c.docs[0].id == "a");
  CHECK(c.docs[0].text == "cat sat");
  CHECK(c.docs[1].id == "b");
}

TEST_CASE("line corpus assigns sequential ids") {
  TempDir dir("corpus_lines");
  write(dir.path / "c.txt", "one doc\nsecond doc\nthird doc\n");
  const Corpus c = load_corpus(dir.path / "c.txt", CorpusFormat::kOneDocPerLine);
  REQUIRE(c.size() == 3);
  CHECK(c.docs[0].id == "d0000");
  CHECK(c.docs[1].id == "d0001");
  CHECK(c.docs[2].id == "d0002");
}

TEST_CASE("labels join by doc id and reject unknown ids") {
  TempDir dir("corpus_labels");
  write(dir.path / "a.txt", "cat sat");
  write(dir.path / "b.txt", "dog ran");
  write(dir.path / "labels.tsv", "a\tanimals\nb\tanimals\n");
  const Corpus c = load_corpus(dir.path, CorpusFormat::kDirOfTxt,
                               dir.path / "labels.tsv");
  CHECK(c.labels.at("a") == "animals");

  write(dir.path / "bad.tsv", "zz\tmystery\n");
  CHECK_THROWS_AS(load_corpus(dir.path, CorpusFormat::kDirOfTxt, dir.path / "bad.tsv"),
                  ValidationError);
}

TEST_CASE("missing corpus path and empty corpus are rejected") {
  CHECK_THROWS_AS(load_corpus("/nonexistent/path", CorpusFormat::kDirOfTxt),
                  ValidationError);
  TempDir dir("corpus_empty");
  CHECK_THROWS_AS(load_corpus(dir.path, CorpusFormat::kDirOfTxt), ValidationError);
}

TEST_CASE("tokenizer lowercases, splits on non-alphabetic, keeps length >= 2") {
  const auto tokens = tokenize("The CAT-sat, on 42 mats! a I xy");
  CHECK(tokens == std::vector<std::string>{"the", "cat", "sat", "on", "mats", "xy"});
}

TEST_CASE("vocabulary applies stop-words and the min_df boundary") {
  Corpus c = repeated_docs({"apple banana", "apple cherry", "apple the"});
  const Vocabulary v = build_vocabulary(c, 2);
  CHECK(v.terms == std::vector<std::string>{"apple"});
  CHECK(v.doc_freq == std::vector<std::int64_t>{3});

  // Exactly at the boundary: df == min_df stays, df == min_df - 1 goes.
  std::vector<std::string> docs(25, "filler words");
  for (int i = 0; i < 19; ++i) docs[i] += " widget";
  Corpus c19 = repeated_docs(docs);
  CHECK(build_vocabulary(c19, 20).index_of("widget") == -1);
  docs[19] += " widget";
  Corpus c20 = repeated_docs(docs);
  CHECK(build_vocabulary(c20, 20).index_of("widget") >= 0);
}

TEST_CASE("vocabulary is sorted and rejects the empty result") {
  Corpus c = repeated_docs({"zebra apple", "zebra apple", "zebra apple"});
  const Vocabulary v = build_vocabulary(c, 2);
  CHECK(v.terms == std::vector<std::string>{"apple", "zebra"});
  CHECK_THROWS_AS(build_vocabulary(c, 100), ValidationError);
}

TEST_CASE("matrix applies log tf-idf with unit row normalization") {
  // n=4; "gadget" in 2 docs (idf log2(2)=1), "common" in all 4 (idf 0).
  auto corpus = std::make_shared<Corpus>(repeated_docs(
      {"gadget gadget gadget common", "gadget common", "common", "common"}));
  auto vocab = std::make_shared<Vocabulary>(build_vocabulary(*corpus, 1));
  REQUIRE(vocab->terms == std::vector<std::string>{"common", "gadget"});
  const DocTermMatrix dtm = build_matrix(corpus, vocab);

  // Doc 0: tf(gadget)=3 -> log2(4)*log2(2) = 2.0, sole nonzero -> 1 after norm.
  const DenseMatrix d = dtm.weights.to_dense();
  CHECK(d(0, 1) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(d(0, 0) == 0.0);  // idf of an everywhere-term is 0

  // Docs 2,3 contain only the zero-idf term: zero rows, reported.
  CHECK(dtm.zero_rows == std::vector<std::int64_t>{2, 3});

  // Rows with support have unit norm.
  for (std::int64_t i : {0, 1}) {
    CHECK(std::abs(d.row(i).norm() - 1.0) <= 1e-9);
  }
  CHECK(d.minCoeff() >= 0.0);
}

TEST_CASE("matrix construction is deterministic") {
  auto corpus = std::make_shared<Corpus>(
      repeated_docs({"alpha beta gamma", "beta gamma delta", "gamma delta alpha"}));
  auto vocab = std::make_shared<Vocabulary>(build_vocabulary(*corpus, 1));
  const DocTermMatrix a = build_matrix(corpus, vocab);
  const DocTermMatrix b = build_matrix(corpus, vocab);
  REQUIRE(a.weights.nnz() == b.weights.nnz());
  for (std::int64_t i = 0; i < a.weights.nnz(); ++i) {
    CHECK(a.weights.values()[i] == b.weights.values()[i]);
    CHECK(a.weights.col_idx()[i] == b.weights.col_idx()[i]);
  }
}

TEST_CASE("removing a document never increases doc_freq") {
  Corpus full = repeated_docs({"ant bee", "ant cow", "bee cow", "ant bee cow"});
  Corpus reduced = full;
  reduced.docs.pop_back();
  const Vocabulary vf = build_vocabulary(full, 1);
  const Vocabulary vr = build_vocabulary(reduced, 1);
  for (std::int64_t i = 0; i < vr.size(); ++i) {
    const std::int64_t in_full = vf.index_of(vr.terms[i]);
    REQUIRE(in_full >= 0);
    CHECK(vr.doc_freq[i] <= vf.doc_freq[in_full]);
  }
}

TEST_CASE("vocabulary and matrix files round-trip") {
  TempDir dir("corpus_io");
  Corpus c = repeated_docs({"alpha beta", "alpha beta", "alpha gamma"});
  const Vocabulary v = build_vocabulary(c, 2);
  save_vocabulary(v, dir.path / "vocab.tsv");
  const Vocabulary v2 = load_vocabulary(dir.path / "vocab.tsv");
  CHECK(v2.terms == v.terms);
  CHECK(v2.doc_freq == v.doc_freq);
  CHECK(v2.checksum() == v.checksum());

  auto corpus = std::make_shared<Corpus>(c);
  auto vocab = std::make_shared<Vocabulary>(v);
  const DocTermMatrix dtm = build_matrix(corpus, vocab);
  save_sparse_matrix(dtm.weights, dir.path / "matrix.txt");
  const SparseMatrix m2 = load_sparse_matrix(dir.path / "matrix.txt");
  CHECK(m2.rows() == dtm.weights.rows());
  CHECK(m2.nnz() == dtm.weights.nnz());
  for (std::int64_t i = 0; i < m2.nnz(); ++i) {
    CHECK(m2.values()[i] == doctest::Approx(dtm.weights.values()[i]).epsilon(1e-11));
  }
}

TEST_CASE("default stopword list is the pinned 318-word set") {
  const auto stops = default_stopword_set();
  CHECK(stops.size() == 318);
  CHECK(stops.count("the") == 1);
  CHECK(stops.count("whereupon") == 1);
  CHECK(stops.count("cat") == 0);
}
