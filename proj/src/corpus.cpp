#include "topicstab/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "topicstab/errors.hpp"
#include "topicstab/stopwords.hpp"

namespace topicstab {

namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ValidationError("cannot read file: " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void check_corpus_invariants(const Corpus& corpus) {
  std::unordered_set<std::string> seen;
  for (const auto& d : corpus.docs) {
    if (d.id.empty()) throw ValidationError("empty doc id");
    if (!seen.insert(d.id).second) throw ValidationError("duplicate doc id: " + d.id);
  }
  for (const auto& [id, label] : corpus.labels) {
    if (!seen.count(id)) {
      throw ValidationError("label references unknown doc id: " + id);
    }
  }
}

std::uint64_t fnv1a(std::uint64_t h, const char* data, std::size_t len) {
  for (std::size_t i = 0; i < len; ++i) {
    h ^= static_cast<unsigned char>(data[i]);
    h *= 1099511628211ULL;
  }
  return h;
}

constexpr std::uint64_t kFnvOffset = 14695981039346656037ULL;

}  // namespace

Corpus load_corpus(const fs::path& path, CorpusFormat format,
                   const std::optional<fs::path>& labels_path) {
  if (!fs::exists(path)) throw ValidationError("corpus path does not exist: " + path.string());
  Corpus corpus;
  if (format == CorpusFormat::kDirOfTxt) {
    if (!fs::is_directory(path)) {
      throw ValidationError("expected a directory: " + path.string());
    }
    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(path)) {
      if (entry.is_regular_file() && entry.path().extension() == ".txt") {
        files.push_back(fs::relative(entry.path(), path));
      }
    }
    std::sort(files.begin(), files.end(),
              [](const fs::path& a, const fs::path& b) { return a.generic_string() < b.generic_string(); });
    for (const auto& rel : files) {
      fs::path id_path = rel;
      id_path.replace_extension();
      corpus.docs.push_back({id_path.generic_string(), read_file(path / rel)});
    }
  } else {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot read file: " + path.string());
    std::string line;
    std::size_t i = 0;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      char id[32];
      std::snprintf(id, sizeof(id), "d%04zu", i++);
      corpus.docs.push_back({id, line});
    }
  }
  if (corpus.docs.empty()) throw ValidationError("empty corpus: " + path.string());
  if (labels_path) attach_labels(corpus, *labels_path);
  check_corpus_invariants(corpus);
  return corpus;
}

void attach_labels(Corpus& corpus, const fs::path& labels_path) {
  std::ifstream in(labels_path, std::ios::binary);
  if (!in) throw ValidationError("cannot read labels file: " + labels_path.string());
  std::unordered_set<std::string> known;
  for (const auto& d : corpus.docs) known.insert(d.id);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw ValidationError("labels line " + std::to_string(lineno) + ": expected doc_id<TAB>label");
    }
    std::string id = line.substr(0, tab);
    if (!known.count(id)) {
      throw ValidationError("label references unknown doc id: " + id);
    }
    corpus.labels[std::move(id)] = line.substr(tab + 1);
  }
}

std::int64_t Vocabulary::index_of(const std::string& term) const {
  const auto it = std::lower_bound(terms.begin(), terms.end(), term);
  if (it == terms.end() || *it != term) return -1;
  return it - terms.begin();
}

std::uint64_t Vocabulary::checksum() const {
  std::uint64_t h = kFnvOffset;
  for (const auto& t : terms) {
    h = fnv1a(h, t.data(), t.size());
    h = fnv1a(h, "\n", 1);
  }
  return h;
}

std::unordered_set<std::string> default_stopword_set() {
  std::unordered_set<std::string> s;
  s.reserve(kDefaultStopwords.size());
  for (std::string_view w : kDefaultStopwords) s.emplace(w);
  return s;
}

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char ch : text) {
    const unsigned char c = static_cast<unsigned char>(ch);
    if (c < 128 && std::isalpha(c)) {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else if (!current.empty()) {
      if (current.size() >= 2) tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (current.size() >= 2) tokens.push_back(std::move(current));
  return tokens;
}

Vocabulary build_vocabulary(const Corpus& corpus, std::int64_t min_df,
                            const std::unordered_set<std::string>& stopwords) {
  if (corpus.docs.empty()) throw ValidationError("cannot build vocabulary from empty corpus");
  std::unordered_map<std::string, std::int64_t> df;
  std::unordered_set<std::string> in_doc;
  for (const auto& d : corpus.docs) {
    in_doc.clear();
    for (auto& tok : tokenize(d.text)) {
      if (stopwords.count(tok)) continue;
      if (in_doc.insert(tok).second) ++df[tok];
    }
  }
  Vocabulary vocab;
  for (auto& [term, freq] : df) {
    if (freq >= min_df) vocab.terms.push_back(term);
  }
  if (vocab.terms.empty()) {
    throw ValidationError("vocabulary is empty after filtering (min_df=" +
                          std::to_string(min_df) + ")");
  }
  std::sort(vocab.terms.begin(), vocab.terms.end());
  vocab.doc_freq.reserve(vocab.terms.size());
  for (const auto& t : vocab.terms) vocab.doc_freq.push_back(df.at(t));
  return vocab;
}

DocTermMatrix build_matrix(std::shared_ptr<const Corpus> corpus,
                           std::shared_ptr<const Vocabulary> vocab) {
  const std::int64_t n = corpus->size();
  const std::int64_t m = vocab->size();
  DocTermMatrix result;
  SparseBuilder builder(n, m);
  std::unordered_map<std::int64_t, std::int64_t> tf;
  std::vector<std::pair<std::int64_t, double>> row;
  for (std::int64_t d = 0; d < n; ++d) {
    tf.clear();
    for (const auto& tok : tokenize(corpus->docs[d].text)) {
      const std::int64_t idx = vocab->index_of(tok);
      if (idx >= 0) ++tf[idx];
    }
    row.clear();
    for (const auto& [idx, count] : tf) {
      const double idf = std::log2(static_cast<double>(n) /
                                   static_cast<double>(vocab->doc_freq[idx]));
      const double w = std::log2(1.0 + static_cast<double>(count)) * idf;
      if (w > 0.0) row.emplace_back(idx, w);
    }
    std::sort(row.begin(), row.end());
    double norm_sq = 0.0;
    for (const auto& [idx, w] : row) norm_sq += w * w;
    if (norm_sq > 0.0) {
      const double inv = 1.0 / std::sqrt(norm_sq);
      for (const auto& [idx, w] : row) builder.push(idx, w * inv);
    } else {
      result.zero_rows.push_back(d);
    }
    builder.finish_row();
  }
  result.weights = builder.build();
  result.corpus = std::move(corpus);
  result.vocab = std::move(vocab);
  return result;
}

void save_vocabulary(const Vocabulary& vocab, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write vocabulary file: " + path.string());
  for (std::int64_t i = 0; i < vocab.size(); ++i) {
    out << vocab.terms[i] << '\t' << vocab.doc_freq[i] << '\n';
  }
}

Vocabulary load_vocabulary(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read vocabulary file: " + path.string());
  Vocabulary v;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw ValidationError("malformed vocabulary line: " + line);
    v.terms.push_back(line.substr(0, tab));
    v.doc_freq.push_back(std::stoll(line.substr(tab + 1)));
  }
  if (!std::is_sorted(v.terms.begin(), v.terms.end())) {
    throw ValidationError("vocabulary file is not sorted: " + path.string());
  }
  return v;
}

void save_sparse_matrix(const SparseMatrix& m, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write matrix file: " + path.string());
  out << m.rows() << ' ' << m.cols() << ' ' << m.nnz() << '\n';
  char buf[64];
  for (std::int64_t i = 0; i < m.rows(); ++i) {
    for (std::int64_t p = m.row_ptr()[i]; p < m.row_ptr()[i + 1]; ++p) {
      std::snprintf(buf, sizeof(buf), "%lld %lld %.12g\n",
                    static_cast<long long>(i), static_cast<long long>(m.col_idx()[p]),
                    m.values()[p]);
      out << buf;
    }
  }
}

SparseMatrix load_sparse_matrix(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read matrix file: " + path.string());
  std::int64_t rows, cols, nnz;
  if (!(in >> rows >> cols >> nnz)) throw ValidationError("malformed matrix header");
  std::vector<std::int64_t> ri(nnz), ci(nnz);
  std::vector<double> vals(nnz);
  for (std::int64_t p = 0; p < nnz; ++p) {
    if (!(in >> ri[p] >> ci[p] >> vals[p])) {
      throw ValidationError("matrix file truncated: " + path.string());
    }
  }
  return SparseMatrix::from_triplets(rows, cols, std::move(ri), std::move(ci), std::move(vals));
}

std::uint64_t corpus_checksum(const Corpus& corpus) {
  std::uint64_t h = kFnvOffset;
  for (const auto& d : corpus.docs) {
    h = fnv1a(h, d.id.data(), d.id.size());
    h = fnv1a(h, "\x1f", 1);
    h = fnv1a(h, d.text.data(), d.text.size());
    h = fnv1a(h, "\x1e", 1);
  }
  return h;
}

}  // namespace topicstab
