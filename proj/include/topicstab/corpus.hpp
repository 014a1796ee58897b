#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "topicstab/linalg.hpp"

namespace topicstab {

struct Document {
  std::string id;
  std::string text;
};

// Ordered documents plus optional ground-truth labels keyed by doc id.
struct Corpus {
  std::vector<Document> docs;
  std::map<std::string, std::string> labels;

  std::int64_t size() const { return static_cast<std::int64_t>(docs.size()); }
};

enum class CorpusFormat { kDirOfTxt, kOneDocPerLine };

// dir-of-txt: every *.txt under the path (recursively), ordered by
// lexicographic relative path; doc id is the relative path without the
// extension. one-doc-per-line: ids d0000, d0001, ...
Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format,
                   const std::optional<std::filesystem::path>& labels_path = {});

// Labels file: `doc_id<TAB>label`, one per line, UTF-8.
void attach_labels(Corpus& corpus, const std::filesystem::path& labels_path);

// Sorted unique terms with their document frequencies.
struct Vocabulary {
  std::vector<std::string> terms;        // lexicographically sorted
  std::vector<std::int64_t> doc_freq;    // per-term document frequency

  std::int64_t size() const { return static_cast<std::int64_t>(terms.size()); }
  // Index of term, or -1 when absent.
  std::int64_t index_of(const std::string& term) const;
  // FNV-1a over the newline-joined term list; stamped into model files.
  std::uint64_t checksum() const;
};

std::unordered_set<std::string> default_stopword_set();

// Lowercase tokens, split on non-alphabetic characters, length >= 2.
std::vector<std::string> tokenize(const std::string& text);

Vocabulary build_vocabulary(const Corpus& corpus, std::int64_t min_df = 20,
                            const std::unordered_set<std::string>& stopwords =
                                default_stopword_set());

// Normalized log TF-IDF document-term matrix:
// entry(d, w) = log2(1 + tf) * log2(n / df), rows scaled to unit L2 norm.
struct DocTermMatrix {
  SparseMatrix weights;                  // n x m
  std::shared_ptr<const Corpus> corpus;
  std::shared_ptr<const Vocabulary> vocab;
  std::vector<std::int64_t> zero_rows;   // documents with no vocabulary terms

  std::int64_t n_docs() const { return weights.rows(); }
  std::int64_t n_terms() const { return weights.cols(); }
};

DocTermMatrix build_matrix(std::shared_ptr<const Corpus> corpus,
                           std::shared_ptr<const Vocabulary> vocab);

// Vocabulary file: `term<TAB>doc_freq` per line.
void save_vocabulary(const Vocabulary& vocab, const std::filesystem::path& path);
Vocabulary load_vocabulary(const std::filesystem::path& path);

// Sparse matrix file: header `n m nnz`, then `row col value` lines.
void save_sparse_matrix(const SparseMatrix& m, const std::filesystem::path& path);
SparseMatrix load_sparse_matrix(const std::filesystem::path& path);

std::uint64_t corpus_checksum(const Corpus& corpus);

}  // namespace topicstab
