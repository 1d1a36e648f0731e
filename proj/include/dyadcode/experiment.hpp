#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dyadcode/corpus.hpp"
#include "dyadcode/error.hpp"
#include "dyadcode/evalstats.hpp"
#include "dyadcode/lexicon.hpp"
#include "dyadcode/matrix.hpp"
#include "dyadcode/parallel.hpp"
#include "dyadcode/rng.hpp"
#include "dyadcode/svm.hpp"
#include "dyadcode/tfidf.hpp"
#include "dyadcode/vectors.hpp"

namespace dyadcode {

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

enum class FeatureKind { Acoustic, TfIdf, Lexicon, Embeddings, EmbeddingsPlusAcoustic };

inline std::string_view kind_name(FeatureKind k) {
  switch (k) {
    case FeatureKind::Acoustic: return "acoustic";
    case FeatureKind::TfIdf: return "tfidf";
    case FeatureKind::Lexicon: return "lexicon";
    case FeatureKind::Embeddings: return "embeddings";
    case FeatureKind::EmbeddingsPlusAcoustic: return "embeddings+acoustic";
  }
  return "?";
}

inline std::string_view default_label(FeatureKind k) {
  switch (k) {
    case FeatureKind::Acoustic: return "Acoustic";
    case FeatureKind::TfIdf: return "TF-IDF + ngrams";
    case FeatureKind::Lexicon: return "Lexicon";
    case FeatureKind::Embeddings: return "Embeddings";
    case FeatureKind::EmbeddingsPlusAcoustic: return "Embeddings and Acoustic";
  }
  return "?";
}

inline FeatureKind parse_feature_kind(std::string_view s) {
  for (auto k : {FeatureKind::Acoustic, FeatureKind::TfIdf, FeatureKind::Lexicon, FeatureKind::Embeddings,
                 FeatureKind::EmbeddingsPlusAcoustic}) {
    if (kind_name(k) == s) return k;
  }
  throw ConfigError("unknown feature set '" + std::string(s) +
                    "' (expected acoustic, tfidf, lexicon, embeddings or embeddings+acoustic)");
}

struct FeatureSetSpec {
  FeatureKind kind = FeatureKind::Lexicon;
  std::string label;  // display label; defaults to default_label(kind)
  std::filesystem::path lexicon_path;
  std::filesystem::path embeddings_path;
  std::filesystem::path acoustic_path;

  std::string display_label() const { return label.empty() ? std::string(default_label(kind)) : label; }

  void validate() const {
    const auto need = [&](const std::filesystem::path& p, const char* what) {
      if (p.empty())
        throw ConfigError("feature set '" + std::string(kind_name(kind)) + "' requires a " + what + " path");
    };
    switch (kind) {
      case FeatureKind::Lexicon: need(lexicon_path, "lexicon"); break;
      case FeatureKind::Embeddings: need(embeddings_path, "embeddings"); break;
      case FeatureKind::Acoustic: need(acoustic_path, "acoustic"); break;
      case FeatureKind::EmbeddingsPlusAcoustic:
        need(embeddings_path, "embeddings");
        need(acoustic_path, "acoustic");
        break;
      case FeatureKind::TfIdf: break;
    }
  }
};

struct ExperimentConfig {
  std::filesystem::path corpus_path;
  std::vector<FeatureSetSpec> feature_sets;
  std::vector<double> c_grid{0.1, 1.0, 10.0, 100.0};
  std::size_t k_outer = 5;
  std::size_t k_inner = 3;
  std::size_t n_runs = 20;
  std::uint64_t base_seed = 0;
  double tol = 1e-3;
  std::size_t max_iter = 100000;
  std::size_t max_features = 1000;
  std::size_t cache_rows = 0;
  std::size_t threads = 0;  // 0: hardware concurrency

  void validate() const {
    if (k_outer < 2) throw ConfigError("k_outer must be >= 2");
    if (k_inner < 2) throw ConfigError("k_inner must be >= 2");
    if (n_runs < 1) throw ConfigError("n_runs must be >= 1");
    if (c_grid.empty()) throw ConfigError("c_grid must not be empty");
    for (double c : c_grid) {
      if (!(c > 0.0) || !std::isfinite(c)) throw ConfigError("c_grid values must be positive");
    }
    if (!(tol > 0.0)) throw ConfigError("tol must be positive");
    if (max_features < 1) throw ConfigError("max_features must be >= 1");
    for (const auto& fs : feature_sets) fs.validate();
  }

  SolverConfig solver(double C) const { return {C, tol, max_iter, cache_rows}; }
};

// ---------------------------------------------------------------------------
// Grouped folds
// ---------------------------------------------------------------------------

struct FoldPlan {
  std::size_t k = 0;
  std::map<std::string, std::size_t> assignments;  // couple id -> fold

  std::size_t fold_of(const std::string& couple) const { return assignments.at(couple); }

  friend bool operator==(const FoldPlan&, const FoldPlan&) = default;
};

// couple_ids holds one entry per sequence. Couples are shuffled by seed,
// ordered by sequence count (largest first, shuffle order among equals), then
// each goes to the fold with the fewest sequences so far (lowest index on ties).
inline FoldPlan grouped_kfold(std::span<const std::string> couple_ids, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw ConfigError("grouped_kfold: k must be >= 2");
  std::map<std::string, std::size_t> sizes;
  for (const auto& c : couple_ids) ++sizes[c];
  if (sizes.size() < k)
    throw DataError("grouped_kfold: " + std::to_string(sizes.size()) + " couples cannot fill " + std::to_string(k) +
                    " folds");

  std::vector<std::pair<std::string, std::size_t>> couples(sizes.begin(), sizes.end());
  Rng rng(seed);
  rng.shuffle(std::span(couples));
  std::stable_sort(couples.begin(), couples.end(), [](const auto& a, const auto& b) { return a.second > b.second; });

  FoldPlan plan;
  plan.k = k;
  std::vector<std::size_t> load(k, 0);
  for (const auto& [couple, size] : couples) {
    const auto fold = static_cast<std::size_t>(std::min_element(load.begin(), load.end()) - load.begin());
    load[fold] += size;
    plan.assignments.emplace(couple, fold);
  }
  return plan;
}

// Sequence positions (into `members`) split into train/test for one fold.
struct FoldSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

inline FoldSplit split_fold(std::span<const std::size_t> members, std::span<const std::string> couple_of,
                            const FoldPlan& plan, std::size_t fold) {
  FoldSplit split;
  for (auto idx : members) (plan.fold_of(couple_of[idx]) == fold ? split.test : split.train).push_back(idx);
  return split;
}

// ---------------------------------------------------------------------------
// Fold-local featurization
// ---------------------------------------------------------------------------

struct FoldFeatures {
  Matrix train;
  Matrix test;
  double gamma = 1.0;
};

// Turns corpus rows into train/test matrices for one split. Everything that
// is fitted (TF-IDF vocabulary, scaler, default gamma) sees training rows only.
class FeaturePipeline {
 public:
  // Precomputed per-sequence features, z-scored per fold.
  static FeaturePipeline from_matrix(Matrix X) {
    FeaturePipeline p;
    p.static_ = std::move(X);
    return p;
  }

  // Raw transcripts; the vocabulary is refit per training split.
  static FeaturePipeline tfidf(std::vector<std::string> texts, std::size_t max_features) {
    FeaturePipeline p;
    p.texts_ = std::move(texts);
    p.max_features_ = max_features;
    return p;
  }

  std::size_t size() const noexcept { return static_ ? static_->rows() : texts_.size(); }

  FoldFeatures prepare(std::span<const std::size_t> train, std::span<const std::size_t> test) const {
    FoldFeatures out;
    if (static_) {
      const auto scaler = fit_scaler(static_->select_rows(train));
      out.train = apply_scaler(scaler, static_->select_rows(train));
      out.test = apply_scaler(scaler, static_->select_rows(test));
    } else {
      std::vector<std::string_view> train_texts;
      train_texts.reserve(train.size());
      for (auto i : train) train_texts.push_back(texts_[i]);
      const auto vocab = fit_vocabulary(train_texts, max_features_);
      out.train = transform_rows(train, vocab);
      out.test = transform_rows(test, vocab);
    }
    out.gamma = default_gamma(out.train);
    return out;
  }

 private:
  Matrix transform_rows(std::span<const std::size_t> rows, const Vocabulary& vocab) const {
    Matrix m(rows.size(), vocab.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const auto v = transform(texts_[rows[r]], vocab);
      std::copy(v.begin(), v.end(), m.row(r).begin());
    }
    return m;
  }

  std::optional<Matrix> static_;
  std::vector<std::string> texts_;
  std::size_t max_features_ = 1000;
};

inline Matrix lexicon_matrix(const Corpus& corpus, const Lexicon& lexicon) {
  Matrix X(corpus.size(), lexicon.category_count());
  for (std::size_t r = 0; r < corpus.size(); ++r) {
    const auto f = featurize(corpus[r].transcript, lexicon);
    std::copy(f.values.begin(), f.values.end(), X.row(r).begin());
  }
  return X;
}

inline FeaturePipeline make_pipeline(const Corpus& corpus, const FeatureSetSpec& spec, std::size_t max_features) {
  spec.validate();
  switch (spec.kind) {
    case FeatureKind::Lexicon:
      return FeaturePipeline::from_matrix(lexicon_matrix(corpus, load_lexicon(spec.lexicon_path)));
    case FeatureKind::TfIdf: {
      std::vector<std::string> texts;
      texts.reserve(corpus.size());
      for (const auto& s : corpus) texts.push_back(s.transcript);
      return FeaturePipeline::tfidf(std::move(texts), max_features);
    }
    case FeatureKind::Embeddings: {
      const VectorTable t[] = {load_vector_table(spec.embeddings_path)};
      return FeaturePipeline::from_matrix(align(corpus, t).X);
    }
    case FeatureKind::Acoustic: {
      const VectorTable t[] = {load_vector_table(spec.acoustic_path)};
      return FeaturePipeline::from_matrix(align(corpus, t).X);
    }
    case FeatureKind::EmbeddingsPlusAcoustic: {
      const VectorTable t[] = {load_vector_table(spec.embeddings_path), load_vector_table(spec.acoustic_path)};
      return FeaturePipeline::from_matrix(align(corpus, t).X);
    }
  }
  throw ConfigError("unhandled feature kind");
}

// ---------------------------------------------------------------------------
// Nested cross-validation
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<Code> labels_at(std::span<const Code> labels, std::span<const std::size_t> idx) {
  std::vector<Code> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(labels[i]);
  return out;
}

inline void require_both_labels(std::span<const Code> labels, const std::string& where) {
  const bool pos = std::find(labels.begin(), labels.end(), Code::Positive) != labels.end();
  const bool neg = std::find(labels.begin(), labels.end(), Code::Negative) != labels.end();
  if (!pos || !neg) throw DataError(where + " contains a single label");
}

}  // namespace detail

struct NestedCvTrace {
  std::size_t unconverged_fits = 0;
  std::vector<std::vector<double>> inner_scores;  // [outer fold][C index] mean inner balanced accuracy
};

// One nested-CV run: grouped outer folds; on each outer-train partition a
// grouped inner CV picks C (highest mean inner balanced accuracy, smallest C
// on ties), the model is refit with it and scores the outer-test couples.
// Predictions of all outer folds are pooled into one confusion matrix.
inline RunScore nested_cv(const Corpus& corpus, const FeaturePipeline& features, const ExperimentConfig& config,
                          std::size_t run_index, NestedCvTrace* trace = nullptr) {
  config.validate();
  if (features.size() != corpus.size()) throw DataError("feature rows do not match the corpus");
  const std::uint64_t seed = config.base_seed + run_index;

  std::vector<std::string> couple_of;
  std::vector<Code> labels;
  couple_of.reserve(corpus.size());
  labels.reserve(corpus.size());
  for (const auto& s : corpus) {
    couple_of.push_back(s.couple_id);
    labels.push_back(s.code);
  }
  std::vector<double> grid = config.c_grid;
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  std::vector<std::size_t> all(corpus.size());
  std::iota(all.begin(), all.end(), 0);
  const auto outer = grouped_kfold(couple_of, config.k_outer, seed);

  RunScore score;
  score.run_index = run_index;
  score.seed = seed;
  NestedCvTrace local;
  local.inner_scores.resize(config.k_outer);

  for (std::size_t f = 0; f < config.k_outer; ++f) {
    const std::string where = "outer fold " + std::to_string(f);
    const auto split = split_fold(all, couple_of, outer, f);
    const auto train_labels = detail::labels_at(labels, split.train);
    detail::require_both_labels(train_labels, where + " training partition");

    // Inner model selection on the outer-train couples only.
    std::vector<std::string> inner_couples;
    inner_couples.reserve(split.train.size());
    for (auto i : split.train) inner_couples.push_back(couple_of[i]);
    const auto inner = grouped_kfold(inner_couples, config.k_inner, derive_seed(seed, f + 1));
    std::vector<double> score_sum(grid.size(), 0.0);
    for (std::size_t g = 0; g < config.k_inner; ++g) {
      const std::string inner_where = where + ", inner fold " + std::to_string(g);
      const auto inner_split = split_fold(split.train, couple_of, inner, g);
      const auto itrain_labels = detail::labels_at(labels, inner_split.train);
      const auto ival_labels = detail::labels_at(labels, inner_split.test);
      detail::require_both_labels(itrain_labels, inner_where + " training partition");
      detail::require_both_labels(ival_labels, inner_where + " validation partition");

      const auto ff = features.prepare(inner_split.train, inner_split.test);
      const auto weights = balanced_weights(itrain_labels);
      KernelCache cache(ff.train, KernelSpec::rbf(ff.gamma), config.cache_rows);
      for (std::size_t c = 0; c < grid.size(); ++c) {
        const auto model = train_svm(ff.train, itrain_labels, config.solver(grid[c]), cache, weights);
        if (!model.info.converged) ++local.unconverged_fits;
        score_sum[c] += balanced_accuracy(confusion_matrix(ival_labels, model.predict(ff.test)));
      }
    }
    std::size_t best = 0;
    for (std::size_t c = 0; c < grid.size(); ++c) {
      local.inner_scores[f].push_back(score_sum[c] / static_cast<double>(config.k_inner));
      if (local.inner_scores[f][c] > local.inner_scores[f][best]) best = c;
    }
    score.selected_c.push_back(grid[best]);

    const auto ff = features.prepare(split.train, split.test);
    const auto model = train_svm(ff.train, train_labels, config.solver(grid[best]), KernelSpec::rbf(ff.gamma),
                                 balanced_weights(train_labels));
    if (!model.info.converged) ++local.unconverged_fits;
    score.confusion.merge(confusion_matrix(detail::labels_at(labels, split.test), model.predict(ff.test)));
  }
  score.balanced_accuracy = balanced_accuracy(score.confusion);
  if (trace) *trace = std::move(local);
  return score;
}

// ---------------------------------------------------------------------------
// Repeated runs and comparison
// ---------------------------------------------------------------------------

struct ResultsRow {
  std::string feature_set;
  double mean = 0.0;
  std::optional<double> se;  // needs >= 2 runs
  std::size_t n_runs = 0;
  std::vector<RunScore> runs;

  std::vector<double> scores() const {
    std::vector<double> out;
    for (const auto& r : runs) out.push_back(r.balanced_accuracy);
    return out;
  }
};

struct ResultsTable {
  std::vector<ResultsRow> rows;

  const ResultsRow& find(const std::string& feature_set) const {
    for (const auto& r : rows) {
      if (r.feature_set == feature_set) return r;
    }
    throw DataError("no results for feature set '" + feature_set + "'");
  }
};

inline ResultsRow summarize(std::string feature_set, std::vector<RunScore> runs) {
  ResultsRow row;
  row.feature_set = std::move(feature_set);
  row.runs = std::move(runs);
  row.n_runs = row.runs.size();
  const auto s = row.scores();
  row.mean = mean(s);
  if (s.size() >= 2) row.se = standard_error(s);
  return row;
}

// n_runs nested-CV runs with seeds base_seed + run_index; runs execute on
// config.threads workers and are merged by run index.
inline ResultsRow run_experiment(const Corpus& corpus, const FeaturePipeline& features,
                                 const ExperimentConfig& config, std::string feature_set) {
  config.validate();
  std::vector<RunScore> runs(config.n_runs);
  parallel_for(config.n_runs, config.threads, [&](std::size_t r) {
    try {
      runs[r] = nested_cv(corpus, features, config, r);
    } catch (const DataError& e) {
      throw DataError("run " + std::to_string(r) + ": " + e.what());
    }
  });
  return summarize(std::move(feature_set), std::move(runs));
}

// Loads the corpus, drops sequences without speech and evaluates every
// configured feature set with the same fold randomizations.
inline ResultsTable run_experiment(const ExperimentConfig& config) {
  config.validate();
  if (config.feature_sets.empty()) throw ConfigError("no feature sets configured");
  const auto corpus = drop_empty(load_corpus(config.corpus_path));
  ResultsTable table;
  for (const auto& fs : config.feature_sets) {
    const auto pipeline = make_pipeline(corpus, fs, config.max_features);
    table.rows.push_back(run_experiment(corpus, pipeline, config, fs.display_label()));
  }
  return table;
}

// Paired Wilcoxon over run-level balanced accuracies. Runs must be paired by
// seed (the same fold randomizations).
inline WilcoxonResult compare_models(const ResultsRow& a, const ResultsRow& b) {
  if (a.runs.size() != b.runs.size())
    throw DataError("compare: run counts differ (" + std::to_string(a.runs.size()) + " vs " +
                    std::to_string(b.runs.size()) + ")");
  for (std::size_t i = 0; i < a.runs.size(); ++i) {
    if (a.runs[i].seed != b.runs[i].seed)
      throw DataError("compare: run " + std::to_string(i) + " seeds differ (" + std::to_string(a.runs[i].seed) +
                      " vs " + std::to_string(b.runs[i].seed) + ")");
  }
  const auto sa = a.scores();
  const auto sb = b.scores();
  return wilcoxon_signed_rank(sa, sb);
}

}  // namespace dyadcode
