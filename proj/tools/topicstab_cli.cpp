#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "topicstab/corpus.hpp"
#include "topicstab/ensemble.hpp"
#include "topicstab/errors.hpp"
#include "topicstab/nmf.hpp"
#include "topicstab/quality.hpp"
#include "topicstab/rng.hpp"
#include "topicstab/stability.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace topicstab;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

void refuse_existing(const fs::path& path, bool force) {
  if (!force && fs::exists(path)) {
    throw ValidationError("output exists, pass --force to overwrite: " + path.string());
  }
}

std::string hex64(std::uint64_t value) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

CorpusFormat parse_format(const std::string& name) {
  if (name == "dir") return CorpusFormat::kDirOfTxt;
  if (name == "lines") return CorpusFormat::kOneDocPerLine;
  throw ValidationError("unknown corpus format: " + name + " (expected dir|lines)");
}

void write_text_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << content;
}

std::unordered_set<std::string> load_stopwords_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read stopwords file: " + path.string());
  std::unordered_set<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) words.insert(line);
  }
  return words;
}

struct PreprocessArgs {
  std::string corpus;
  std::string format = "dir";
  std::string labels;
  std::string stopwords;
  std::string out;
  std::int64_t min_df = 20;
  bool force = false;
};

int cmd_preprocess(const PreprocessArgs& args) {
  const fs::path out_dir = args.out;
  fs::create_directories(out_dir);
  for (const char* name : {"vocabulary.tsv", "matrix.txt", "docs.txt", "manifest.json"}) {
    refuse_existing(out_dir / name, args.force);
  }

  std::optional<fs::path> labels_path;
  if (!args.labels.empty()) labels_path = args.labels;
  auto corpus = std::make_shared<Corpus>(
      load_corpus(args.corpus, parse_format(args.format), labels_path));
  const auto stopwords =
      args.stopwords.empty() ? default_stopword_set() : load_stopwords_file(args.stopwords);
  auto vocab = std::make_shared<Vocabulary>(build_vocabulary(*corpus, args.min_df, stopwords));
  const DocTermMatrix dtm = build_matrix(corpus, vocab);

  for (std::int64_t row : dtm.zero_rows) {
    std::cerr << "warning: document " << corpus->docs[row].id
              << " has no vocabulary terms (zero row retained)\n";
  }

  save_vocabulary(*vocab, out_dir / "vocabulary.tsv");
  save_sparse_matrix(dtm.weights, out_dir / "matrix.txt");
  {
    std::string ids;
    for (const auto& d : corpus->docs) {
      ids += d.id;
      ids.push_back('\n');
    }
    write_text_file(out_dir / "docs.txt", ids);
  }
  if (!corpus->labels.empty()) {
    refuse_existing(out_dir / "labels.tsv", args.force);
    std::string lines;
    for (const auto& d : corpus->docs) {
      const auto it = corpus->labels.find(d.id);
      if (it != corpus->labels.end()) {
        lines += d.id;
        lines.push_back('\t');
        lines += it->second;
        lines.push_back('\n');
      }
    }
    write_text_file(out_dir / "labels.tsv", lines);
  }

  json manifest;
  manifest["format_version"] = 1;
  manifest["kind"] = "preprocess";
  manifest["corpus_checksum"] = hex64(corpus_checksum(*corpus));
  manifest["vocab_checksum"] = hex64(vocab->checksum());
  manifest["n_docs"] = dtm.n_docs();
  manifest["n_terms"] = dtm.n_terms();
  manifest["nnz"] = dtm.weights.nnz();
  manifest["min_df"] = args.min_df;
  manifest["stopwords"] = args.stopwords.empty() ? "builtin-318" : args.stopwords;
  manifest["zero_rows"] = dtm.zero_rows;
  write_text_file(out_dir / "manifest.json", manifest.dump(2) + "\n");
  std::cout << "preprocessed " << dtm.n_docs() << " docs, " << dtm.n_terms()
            << " terms, " << dtm.weights.nnz() << " nonzeros -> " << out_dir.string()
            << "\n";
  return 0;
}

struct FitArgs {
  std::string prep;
  std::string out;
  std::string method = "nmf-nndsvd";
  std::int64_t k = 0;
  std::int64_t k_prime = 0;
  std::int64_t repeats = -1;  // -1: method default (100 single, 20 ensemble)
  std::int64_t members = 100;
  std::int64_t rounds = 10;
  std::int64_t folds = 10;
  std::int64_t max_iter = 100;
  double tol = 1e-4;
  std::uint64_t seed = 1;
  std::string seed_mode = "split";
  int jobs = 1;
  bool nndsvd_fill = false;
  bool save_members = false;
  bool force = false;
};

int cmd_fit(const FitArgs& args) {
  if (args.k < 1) throw ValidationError("--k must be >= 1");
  const Method method = method_from_name(args.method);
  if (method == Method::kExternal) {
    throw ValidationError("method 'external' is an import tag, not a fit method");
  }
  const bool is_ensemble =
      method == Method::kEnsembleBasic || method == Method::kEnsembleKfold;
  const std::int64_t repeats = args.repeats >= 1 ? args.repeats : (is_ensemble ? 20 : 100);
  if (args.seed_mode != "split" && args.seed_mode != "fixed") {
    throw ValidationError("--seed-mode must be split or fixed");
  }

  const fs::path prep = args.prep;
  auto vocab = std::make_shared<Vocabulary>(load_vocabulary(prep / "vocabulary.tsv"));
  SparseMatrix weights = load_sparse_matrix(prep / "matrix.txt");
  if (weights.cols() != vocab->size()) {
    throw ValidationError("matrix and vocabulary disagree on the term count");
  }
  DocTermMatrix dtm;
  dtm.weights = std::move(weights);
  dtm.vocab = vocab;
  auto corpus = std::make_shared<Corpus>();  // ids only, for provenance
  {
    std::ifstream ids(prep / "docs.txt", std::ios::binary);
    if (!ids) throw ValidationError("cannot read " + (prep / "docs.txt").string());
    std::string line;
    while (std::getline(ids, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) corpus->docs.push_back({line, ""});
    }
  }
  if (corpus->size() != dtm.weights.rows()) {
    throw ValidationError("docs.txt does not match the matrix row count");
  }
  dtm.corpus = corpus;

  const fs::path out_dir = args.out;
  fs::create_directories(out_dir);
  refuse_existing(out_dir / "manifest.json", args.force);

  std::vector<std::uint64_t> seeds(repeats);
  for (std::int64_t i = 0; i < repeats; ++i) {
    seeds[i] = args.seed_mode == "fixed" ? args.seed
                                         : split_seed(args.seed, static_cast<std::uint64_t>(i));
  }

  std::vector<std::string> model_files(repeats);
  const auto model_path = [&](std::int64_t i) {
    char name[32];
    std::snprintf(name, sizeof(name), "model_%04lld.txt", static_cast<long long>(i));
    return out_dir / name;
  };
  for (std::int64_t i = 0; i < repeats; ++i) {
    refuse_existing(model_path(i), args.force);
    model_files[i] = model_path(i).filename().string();
  }

  const auto fit_single = [&](std::int64_t i) {
    TopicModel model;
    if (method == Method::kNmfRandom) {
      auto [w0, h0] = random_init(dtm.n_docs(), dtm.n_terms(), args.k, seeds[i]);
      FitOptions opts;
      opts.max_iter = args.max_iter;
      opts.tol = args.tol;
      model = fit_nmf(dtm.weights, std::move(w0), std::move(h0), opts);
      model.meta.seed = seeds[i];
    } else {
      auto [w0, h0] =
          nndsvd_init(dtm.weights, args.k, args.nndsvd_fill ? 1e-12 : 0.0);
      FitOptions opts;
      opts.max_iter = args.max_iter;
      opts.tol = args.tol;
      model = fit_nmf(dtm.weights, std::move(w0), std::move(h0), opts);
    }
    model.meta.method = method;
    model.vocab_checksum = vocab->checksum();
    save_model(model, model_path(i));
  };

  const auto fit_ensemble = [&](std::int64_t i) {
    EnsembleConfig cfg;
    cfg.mode =
        method == Method::kEnsembleBasic ? EnsembleMode::kBasic : EnsembleMode::kKfold;
    cfg.k = args.k;
    cfg.k_prime = args.k_prime;
    cfg.r = args.members;
    cfg.p = args.rounds;
    cfg.f = args.folds;
    cfg.master_seed = seeds[i];
    cfg.base_max_iter = args.max_iter;
    cfg.base_tol = args.tol;
    cfg.jobs = args.jobs;
    std::vector<std::string> warnings;
    std::vector<TopicModel> members;
    const TopicModel model =
        run_ensemble(dtm, cfg, &warnings, args.save_members ? &members : nullptr);
    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
    save_model(model, model_path(i));
    if (args.save_members) {
      char sub[32];
      std::snprintf(sub, sizeof(sub), "members_%04lld", static_cast<long long>(i));
      const fs::path member_dir = out_dir / sub;
      fs::create_directories(member_dir);
      for (std::size_t m = 0; m < members.size(); ++m) {
        char name[32];
        std::snprintf(name, sizeof(name), "member_%04zu.txt", m);
        save_model(members[m], member_dir / name);
      }
    }
  };

  if (is_ensemble) {
    // Ensemble members parallelize internally; repeats stay sequential.
    for (std::int64_t i = 0; i < repeats; ++i) fit_ensemble(i);
  } else {
    // Independent repeats parallelize across jobs; seeds are pre-assigned
    // so the outputs are identical for any job count.
    std::vector<std::thread> pool;
    std::atomic<std::int64_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    const int workers =
        std::max(1, std::min<int>(args.jobs, static_cast<int>(repeats)));
    for (int t = 0; t < workers; ++t) {
      pool.emplace_back([&]() {
        for (;;) {
          const std::int64_t i = next.fetch_add(1);
          if (i >= repeats) return;
          try {
            fit_single(i);
          } catch (...) {
            std::lock_guard<std::mutex> lock(error_mutex);
            if (!error) error = std::current_exception();
            return;
          }
        }
      });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
  }

  json manifest;
  manifest["format_version"] = 1;
  manifest["kind"] = "fit";
  manifest["method"] = args.method;
  manifest["k"] = args.k;
  manifest["k_prime"] = args.k_prime > 0 ? args.k_prime : args.k;
  manifest["repeats"] = repeats;
  manifest["master_seed"] = args.seed;
  manifest["seed_mode"] = args.seed_mode;
  manifest["seeds"] = seeds;
  manifest["max_iter"] = args.max_iter;
  manifest["tol"] = args.tol;
  manifest["nndsvd_fill"] = args.nndsvd_fill;
  manifest["vocab_checksum"] = hex64(vocab->checksum());
  manifest["models"] = model_files;
  if (is_ensemble) {
    if (method == Method::kEnsembleBasic) {
      manifest["members"] = args.members;
    } else {
      manifest["rounds"] = args.rounds;
      manifest["folds"] = args.folds;
      manifest["members"] = args.rounds * args.folds;
    }
  }
  write_text_file(out_dir / "manifest.json", manifest.dump(2) + "\n");
  std::cout << "fitted " << repeats << " " << args.method << " model(s) -> "
            << out_dir.string() << "\n";
  return 0;
}

std::vector<fs::path> collect_model_files(const std::vector<std::string>& inputs) {
  std::vector<fs::path> files;
  for (const auto& input : inputs) {
    const fs::path p = input;
    if (fs::is_directory(p)) {
      for (const auto& entry : fs::directory_iterator(p)) {
        if (entry.is_regular_file() &&
            entry.path().filename().string().rfind("model_", 0) == 0 &&
            entry.path().extension() == ".txt") {
          files.push_back(entry.path());
        }
      }
    } else if (fs::exists(p)) {
      files.push_back(p);
    } else {
      throw ValidationError("model path does not exist: " + input);
    }
  }
  std::sort(files.begin(), files.end());
  return files;
}

struct StabilityArgs {
  std::vector<std::string> models;
  std::string out;
  std::int64_t top_terms = 10;
  bool dsd_normalized = false;
  bool pairwise = false;
  bool force = false;
};

void write_pairwise_csv(const fs::path& path, const std::vector<double>& values,
                        std::int64_t r) {
  std::string csv;
  for (std::int64_t i = 0; i < r; ++i) {
    for (std::int64_t j = 0; j < r; ++j) {
      if (j) csv.push_back(',');
      csv += format_double(values[i * r + j]);
    }
    csv.push_back('\n');
  }
  write_text_file(path, csv);
}

int cmd_stability(const StabilityArgs& args) {
  const auto files = collect_model_files(args.models);
  if (files.size() < 2) {
    throw ValidationError("stability needs at least 2 model files");
  }
  std::vector<TopicModel> models;
  models.reserve(files.size());
  for (const auto& f : files) models.push_back(load_model(f));

  ModelCollection coll;
  coll.t = args.top_terms;
  for (const auto& m : models) coll.models.push_back(&m);
  const StabilityReport report = stability_report(coll, args.dsd_normalized);

  const fs::path out = args.out;
  refuse_existing(out, args.force);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  std::string csv = "measure,mean,stdev,r,t\n";
  const auto row = [&](const char* name, const MeasureSummary& s) {
    csv += name;
    csv.push_back(',');
    csv += format_double(s.mean);
    csv.push_back(',');
    csv += format_double(s.stdev);
    csv += "," + std::to_string(report.r) + "," + std::to_string(report.t) + "\n";
  };
  row("adsd", report.adsd);
  row("ats", report.ats);
  row("pnmi", report.pnmi);
  write_text_file(out, csv);

  if (args.pairwise) {
    const fs::path stem = out.parent_path() / out.stem();
    for (const auto& [suffix, values] :
         {std::pair<const char*, const std::vector<double>*>{"_dsd.csv",
                                                             &report.dsd_pairwise},
          {"_ts.csv", &report.ts_pairwise},
          {"_nmi.csv", &report.nmi_pairwise}}) {
      const fs::path p = stem.string() + suffix;
      refuse_existing(p, args.force);
      write_pairwise_csv(p, *values, report.r);
    }
  }
  std::cout << "adsd " << format_double(report.adsd.mean) << " +- "
            << format_double(report.adsd.stdev) << "\n";
  std::cout << "ats " << format_double(report.ats.mean) << " +- "
            << format_double(report.ats.stdev) << "\n";
  std::cout << "pnmi " << format_double(report.pnmi.mean) << " +- "
            << format_double(report.pnmi.stdev) << "\n";
  return 0;
}

struct QualityArgs {
  std::vector<std::string> models;
  std::string prep;
  std::string corpus;
  std::string format = "dir";
  std::string labels;
  std::string out;
  std::int64_t top_terms = 10;
  bool force = false;
};

int cmd_quality(const QualityArgs& args) {
  const auto files = collect_model_files(args.models);
  if (files.empty()) throw ValidationError("quality needs at least 1 model file");
  std::vector<TopicModel> models;
  models.reserve(files.size());
  for (const auto& f : files) models.push_back(load_model(f));

  const fs::path prep = args.prep;
  const Vocabulary vocab = load_vocabulary(prep / "vocabulary.tsv");
  for (std::size_t i = 0; i < models.size(); ++i) {
    if (models[i].vocab_checksum != vocab.checksum()) {
      throw ValidationError("model " + files[i].string() +
                            " does not match the preprocessed vocabulary");
    }
  }

  fs::path labels_path;
  if (!args.labels.empty()) {
    labels_path = args.labels;
  } else if (fs::exists(prep / "labels.tsv")) {
    labels_path = prep / "labels.tsv";
  }
  Corpus corpus = load_corpus(args.corpus, parse_format(args.format),
                              labels_path.empty()
                                  ? std::optional<fs::path>{}
                                  : std::optional<fs::path>{labels_path});
  const CooccurrenceIndex cooc = build_cooccurrence(corpus, vocab);
  const bool with_accuracy = !corpus.labels.empty();
  std::optional<GroundTruth> gt;
  if (with_accuracy) gt = ground_truth_from_labels(corpus);

  const fs::path out = args.out;
  refuse_existing(out, args.force);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());

  std::string csv = "model_id,coherence_npmi,accuracy_nmi,k,t\n";
  std::vector<double> coh, acc;
  for (std::size_t i = 0; i < models.size(); ++i) {
    const double c = coherence(models[i], cooc, args.top_terms);
    coh.push_back(c);
    csv += files[i].stem().string();
    csv.push_back(',');
    csv += format_double(c);
    csv.push_back(',');
    if (with_accuracy) {
      if (models[i].n_docs() != static_cast<std::int64_t>(gt->category.size())) {
        throw ValidationError("model " + files[i].string() +
                              " covers a different document count than the labels");
      }
      const double a = partition_accuracy(partition(models[i]), *gt);
      acc.push_back(a);
      csv += format_double(a);
    }
    csv += "," + std::to_string(models[i].k) + "," + std::to_string(args.top_terms) + "\n";
  }
  const auto mean_stdev = [](const std::vector<double>& v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double sq = 0.0;
    for (double x : v) sq += (x - mean) * (x - mean);
    return std::pair<double, double>(mean, std::sqrt(sq / static_cast<double>(v.size())));
  };
  const auto [cm, cs] = mean_stdev(coh);
  csv += "mean," + format_double(cm) + ",";
  if (with_accuracy) csv += format_double(mean_stdev(acc).first);
  csv += ",,\n";
  csv += "stdev," + format_double(cs) + ",";
  if (with_accuracy) csv += format_double(mean_stdev(acc).second);
  csv += ",,\n";
  write_text_file(out, csv);
  std::cout << "coherence " << format_double(cm);
  if (with_accuracy) std::cout << " accuracy " << format_double(mean_stdev(acc).first);
  std::cout << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ensemble topic modeling via NMF with stability and quality metrics"};
  app.require_subcommand(1);

  PreprocessArgs pre;
  auto* sub_pre = app.add_subcommand("preprocess",
                                     "Build the vocabulary and document-term matrix");
  sub_pre->add_option("--corpus", pre.corpus, "Corpus path")->required();
  sub_pre->add_option("--format", pre.format, "Corpus format: dir|lines");
  sub_pre->add_option("--labels", pre.labels, "Labels file (doc_id<TAB>label)");
  sub_pre->add_option("--min-df", pre.min_df, "Minimum document frequency");
  sub_pre->add_option("--stopwords", pre.stopwords, "Stop-word file (one per line)");
  sub_pre->add_option("--out", pre.out, "Output directory")->required();
  sub_pre->add_flag("--force", pre.force, "Overwrite existing outputs");

  FitArgs fit;
  auto* sub_fit = app.add_subcommand("fit", "Fit topic models");
  sub_fit->add_option("--prep", fit.prep, "Preprocess output directory")->required();
  sub_fit->add_option("--method", fit.method,
                      "nmf-random|nmf-nndsvd|ensemble-basic|ensemble-kfold");
  sub_fit->add_option("--k", fit.k, "Number of topics")->required();
  sub_fit->add_option("--k-prime", fit.k_prime, "Final ensemble topics (default: k)");
  sub_fit->add_option("--repeats", fit.repeats,
                      "Repeat count (default 100 single / 20 ensemble)");
  sub_fit->add_option("--members", fit.members, "Basic-ensemble member count");
  sub_fit->add_option("--rounds", fit.rounds, "K-Fold rounds p");
  sub_fit->add_option("--folds", fit.folds, "K-Fold folds f");
  sub_fit->add_option("--max-iter", fit.max_iter, "NMF iteration cap");
  sub_fit->add_option("--tol", fit.tol, "NMF relative objective tolerance");
  sub_fit->add_option("--seed", fit.seed, "Master seed");
  sub_fit->add_option("--seed-mode", fit.seed_mode,
                      "split: per-repeat derived seeds; fixed: reuse the master seed");
  sub_fit->add_option("--jobs", fit.jobs, "Worker threads");
  sub_fit->add_flag("--nndsvd-fill", fit.nndsvd_fill, "Fill NNDSVD zeros with 1e-12");
  sub_fit->add_flag("--save-members", fit.save_members, "Persist ensemble base models");
  sub_fit->add_option("--out", fit.out, "Output directory")->required();
  sub_fit->add_flag("--force", fit.force, "Overwrite existing outputs");

  StabilityArgs stab;
  auto* sub_stab = app.add_subcommand("stability", "Stability report for a model set");
  sub_stab->add_option("--models", stab.models, "Model files or directories")
      ->required()
      ->expected(-1);
  sub_stab->add_option("--top-terms", stab.top_terms, "Descriptor size t");
  sub_stab->add_flag("--dsd-normalized", stab.dsd_normalized,
                     "Normalize DSD by |T1|+|T2| instead of t*k");
  sub_stab->add_flag("--pairwise", stab.pairwise, "Also write pairwise matrices");
  sub_stab->add_option("--out", stab.out, "Report CSV path")->required();
  sub_stab->add_flag("--force", stab.force, "Overwrite existing outputs");

  QualityArgs qual;
  auto* sub_qual = app.add_subcommand("quality", "Coherence and accuracy report");
  sub_qual->add_option("--models", qual.models, "Model files or directories")
      ->required()
      ->expected(-1);
  sub_qual->add_option("--prep", qual.prep, "Preprocess output directory")->required();
  sub_qual->add_option("--corpus", qual.corpus, "Corpus path")->required();
  sub_qual->add_option("--format", qual.format, "Corpus format: dir|lines");
  sub_qual->add_option("--labels", qual.labels, "Labels file");
  sub_qual->add_option("--top-terms", qual.top_terms, "Descriptor size t");
  sub_qual->add_option("--out", qual.out, "Report CSV path")->required();
  sub_qual->add_flag("--force", qual.force, "Overwrite existing outputs");

  try {
    app.parse(argc, argv);
    if (sub_pre->parsed()) return cmd_preprocess(pre);
    if (sub_fit->parsed()) return cmd_fit(fit);
    if (sub_stab->parsed()) return cmd_stability(stab);
    if (sub_qual->parsed()) return cmd_quality(qual);
    return kExitUsage;
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
}
