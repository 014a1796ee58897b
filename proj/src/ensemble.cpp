#include "topicstab/ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <numeric>
#include <thread>

#include "topicstab/errors.hpp"
#include "topicstab/rng.hpp"

namespace topicstab {

namespace {

// Runs job(i) for i in [0, count) across `jobs` workers. Work is indexed,
// results land in pre-assigned slots, so the outcome is identical for any
// worker count.
void parallel_for_index(std::int64_t count, int jobs,
                        const std::function<void(std::int64_t)>& job) {
  if (jobs <= 1 || count <= 1) {
    for (std::int64_t i = 0; i < count; ++i) job(i);
    return;
  }
  std::atomic<std::int64_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  const int workers = static_cast<int>(std::min<std::int64_t>(jobs, count));
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int t = 0; t < workers; ++t) {
    pool.emplace_back([&]() {
      for (;;) {
        const std::int64_t i = next.fetch_add(1);
        if (i >= count) return;
        try {
          job(i);
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

}  // namespace

void validate_config(const EnsembleConfig& cfg) {
  if (cfg.k < 1) throw ValidationError("ensemble: k must be >= 1");
  if (cfg.final_k() < 1) throw ValidationError("ensemble: k' must be >= 1");
  if (cfg.mode == EnsembleMode::kBasic && cfg.r < 2) {
    throw ValidationError("basic ensemble requires r >= 2 members");
  }
  if (cfg.mode == EnsembleMode::kKfold && (cfg.f < 2 || cfg.p < 1)) {
    throw ValidationError("kfold ensemble requires f >= 2 and p >= 1");
  }
}

std::vector<DenseMatrix> generate_base_random(const DocTermMatrix& a, std::int64_t k,
                                              std::int64_t r, std::uint64_t master_seed,
                                              std::int64_t max_iter, double tol, int jobs,
                                              std::vector<TopicModel>* members_out) {
  if (r < 2) throw ValidationError("generate_base_random: r must be >= 2");
  std::vector<DenseMatrix> factors(r);
  if (members_out) members_out->assign(r, {});
  parallel_for_index(r, jobs, [&](std::int64_t i) {
    const std::uint64_t seed = split_seed(master_seed, static_cast<std::uint64_t>(i));
    auto [w0, h0] = random_init(a.n_docs(), a.n_terms(), k, seed);
    FitOptions opts;
    opts.max_iter = max_iter;
    opts.tol = tol;
    TopicModel model = fit_nmf(a.weights, std::move(w0), std::move(h0), opts);
    factors[i] = model.h;
    if (members_out) {
      model.meta.method = Method::kNmfRandom;
      model.meta.seed = seed;
      model.vocab_checksum = a.vocab->checksum();
      (*members_out)[i] = std::move(model);
    }
  });
  return factors;
}

std::vector<DenseMatrix> generate_base_kfold(const DocTermMatrix& a, std::int64_t k,
                                             std::int64_t p, std::int64_t f,
                                             std::uint64_t master_seed,
                                             std::int64_t max_iter, double tol, int jobs,
                                             std::vector<TopicModel>* members_out) {
  const std::int64_t n = a.n_docs();
  if (f < 2 || p < 1) throw ValidationError("generate_base_kfold: need f >= 2 and p >= 1");
  if (f > n) throw ValidationError("generate_base_kfold: more folds than documents");
  const std::int64_t smallest_train = n - (n / f + (n % f > 0 ? 1 : 0));
  if (k > std::min(smallest_train, a.n_terms())) {
    throw ValidationError("generate_base_kfold: k exceeds the smallest training subsample");
  }

  // Fold index lists are precomputed per round so member jobs are
  // independent of scheduling.
  struct Member {
    std::vector<std::int64_t> train_rows;
  };
  std::vector<Member> members;
  members.reserve(static_cast<std::size_t>(p) * f);
  for (std::int64_t round = 0; round < p; ++round) {
    std::vector<std::int64_t> order(n);
    std::iota(order.begin(), order.end(), std::int64_t{0});
    Rng rng(split_seed(master_seed, static_cast<std::uint64_t>(round)));
    shuffle(order, rng);
    // First (n mod f) folds take one extra document.
    std::int64_t start = 0;
    std::vector<std::pair<std::int64_t, std::int64_t>> fold_ranges;
    for (std::int64_t fold = 0; fold < f; ++fold) {
      const std::int64_t size = n / f + (fold < n % f ? 1 : 0);
      fold_ranges.emplace_back(start, start + size);
      start += size;
    }
    for (std::int64_t fold = 0; fold < f; ++fold) {
      Member m;
      m.train_rows.reserve(n - (fold_ranges[fold].second - fold_ranges[fold].first));
      for (std::int64_t i = 0; i < n; ++i) {
        if (i >= fold_ranges[fold].first && i < fold_ranges[fold].second) continue;
        m.train_rows.push_back(order[i]);
      }
      std::sort(m.train_rows.begin(), m.train_rows.end());
      members.push_back(std::move(m));
    }
  }

  std::vector<DenseMatrix> factors(members.size());
  if (members_out) members_out->assign(members.size(), {});
  parallel_for_index(static_cast<std::int64_t>(members.size()), jobs, [&](std::int64_t i) {
    const SparseMatrix sub = a.weights.select_rows(members[i].train_rows);
    auto [w0, h0] = nndsvd_init(sub, k);
    FitOptions opts;
    opts.max_iter = max_iter;
    opts.tol = tol;
    TopicModel model = fit_nmf(sub, std::move(w0), std::move(h0), opts);
    factors[i] = model.h;
    if (members_out) {
      model.meta.method = Method::kNmfNndsvd;
      model.vocab_checksum = a.vocab->checksum();
      (*members_out)[i] = std::move(model);
    }
  });
  return factors;
}

StackedMatrix stack(const std::vector<DenseMatrix>& factors) {
  if (factors.empty()) throw ValidationError("stack: no factors given");
  const std::int64_t m = factors.front().cols();
  std::int64_t total = 0;
  for (const auto& h : factors) {
    if (h.cols() != m) throw ValidationError("stack: factors must share the term count");
    total += h.rows();
  }
  StackedMatrix s;
  s.m.resize(total, m);
  s.provenance.reserve(total);
  std::int64_t row = 0;
  for (std::size_t member = 0; member < factors.size(); ++member) {
    for (std::int64_t topic = 0; topic < factors[member].rows(); ++topic) {
      s.m.row(row++) = factors[member].row(topic);
      s.provenance.emplace_back(static_cast<std::int64_t>(member), topic);
    }
  }
  return s;
}

DenseMatrix integrate(const StackedMatrix& m, std::int64_t k_prime,
                      std::int64_t max_iter, double tol, ModelMeta* meta_out) {
  if (k_prime < 1 || k_prime > std::min(m.m.rows(), m.m.cols())) {
    throw ValidationError("integrate: k' must be in [1, min(rows, terms)]");
  }
  const SparseMatrix sparse = SparseMatrix::from_dense(m.m);
  auto [w0, h0] = nndsvd_init(sparse, k_prime);
  FitOptions opts;
  opts.max_iter = max_iter;
  opts.tol = tol;
  TopicModel fitted = fit_nmf(sparse, std::move(w0), std::move(h0), opts);
  if (meta_out) *meta_out = fitted.meta;
  return std::move(fitted.h);
}

TopicModel run_ensemble(const DocTermMatrix& a, const EnsembleConfig& cfg,
                        std::vector<std::string>* warnings,
                        std::vector<TopicModel>* members_out) {
  validate_config(cfg);
  std::vector<DenseMatrix> factors;
  if (cfg.mode == EnsembleMode::kBasic) {
    factors = generate_base_random(a, cfg.k, cfg.r, cfg.master_seed, cfg.base_max_iter,
                                   cfg.base_tol, cfg.jobs, members_out);
  } else {
    factors = generate_base_kfold(a, cfg.k, cfg.p, cfg.f, cfg.master_seed,
                                  cfg.base_max_iter, cfg.base_tol, cfg.jobs, members_out);
  }

  StackedMatrix stacked = stack(factors);
  if (warnings) {
    for (std::int64_t i = 0; i < stacked.m.rows(); ++i) {
      if (stacked.m.row(i).maxCoeff() <= 0.0) {
        warnings->push_back("degenerate base topic: member " +
                            std::to_string(stacked.provenance[i].first) + " topic " +
                            std::to_string(stacked.provenance[i].second) +
                            " has an all-zero term row");
      }
    }
  }

  ModelMeta integration_meta;
  DenseMatrix h_final =
      integrate(stacked, cfg.final_k(), cfg.base_max_iter, cfg.base_tol, &integration_meta);

  TopicModel model;
  model.w = project(a.weights, h_final);
  model.h = std::move(h_final);
  model.k = cfg.final_k();
  model.meta.method =
      cfg.mode == EnsembleMode::kBasic ? Method::kEnsembleBasic : Method::kEnsembleKfold;
  model.meta.seed = cfg.master_seed;
  model.meta.iterations_run = integration_meta.iterations_run;
  model.meta.final_residual = integration_meta.final_residual;
  model.vocab_checksum = a.vocab->checksum();
  model.vocab = a.vocab;
  auto ids = std::make_shared<std::vector<std::string>>();
  ids->reserve(a.corpus->docs.size());
  for (const auto& d : a.corpus->docs) ids->push_back(d.id);
  model.doc_ids = std::move(ids);
  return model;
}

}  // namespace topicstab
