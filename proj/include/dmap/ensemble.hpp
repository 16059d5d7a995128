#pragma once

// 25-combination paired cross-validation with per-subject ensemble voting.
//
// Each class of the training pool is shuffled and cut into five folds. Combination (i, j)
// validates on normal fold i plus abnormal fold j and trains on the other eight folds. Every
// held-out test subject receives one vote per combination; the final call is abnormal when the
// fraction of abnormal votes exceeds the threshold (0.5 by default, a strict majority of 25).

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dmap/classifiers.hpp"
#include "dmap/embedder.hpp"
#include "dmap/error.hpp"
#include "dmap/metrics.hpp"
#include "dmap/tensor.hpp"

namespace dmap {

inline constexpr int kFoldsPerClass = 5;
inline constexpr int kCombos = kFoldsPerClass * kFoldsPerClass;

/// How the fixed test set is chosen. Explicit ids win over count, count over fraction.
struct TestSelection {
  std::vector<std::string> ids;
  std::optional<std::size_t> count;
  std::optional<double> fraction;
};

struct FoldPlan {
  std::array<std::vector<std::size_t>, kFoldsPerClass> normal_folds;
  std::array<std::vector<std::size_t>, kFoldsPerClass> abnormal_folds;
  std::vector<std::pair<int, int>> combos;  // (normal fold, abnormal fold), row-major
  std::vector<std::size_t> test_set;        // dataset indices, ascending
  std::uint64_t seed = 0;

  std::vector<std::size_t> validation(int combo) const {
    const auto [i, j] = combos.at(static_cast<std::size_t>(combo));
    std::vector<std::size_t> out = normal_folds[static_cast<std::size_t>(i)];
    const auto& b = abnormal_folds[static_cast<std::size_t>(j)];
    out.insert(out.end(), b.begin(), b.end());
    std::sort(out.begin(), out.end());
    return out;
  }

  std::vector<std::size_t> training(int combo) const {
    const auto [i, j] = combos.at(static_cast<std::size_t>(combo));
    std::vector<std::size_t> out;
    for (int f = 0; f < kFoldsPerClass; ++f) {
      if (f != i) {
        const auto& a = normal_folds[static_cast<std::size_t>(f)];
        out.insert(out.end(), a.begin(), a.end());
      }
      if (f != j) {
        const auto& b = abnormal_folds[static_cast<std::size_t>(f)];
        out.insert(out.end(), b.begin(), b.end());
      }
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  /// Every sample outside the test set.
  std::vector<std::size_t> pool() const {
    std::vector<std::size_t> out;
    for (const auto& f : normal_folds) out.insert(out.end(), f.begin(), f.end());
    for (const auto& f : abnormal_folds) out.insert(out.end(), f.begin(), f.end());
    std::sort(out.begin(), out.end());
    return out;
  }
};

/// First sample without a label, if any.
inline std::optional<std::string> first_unlabeled(const Dataset& dataset) {
  for (const auto& s : dataset)
    if (!s.label) return s.id;
  return std::nullopt;
}

inline void require_labels(const Dataset& dataset) {
  if (auto id = first_unlabeled(dataset))
    throw Error(ErrorCode::InvalidArgument, "sample '" + *id + "' has no label");
}

inline FoldPlan build_fold_plan(const Dataset& dataset, const TestSelection& test,
                                std::uint64_t seed) {
  require_labels(dataset);
  const std::size_t n = dataset.size();
  std::array<std::vector<std::size_t>, 2> by_class;
  for (std::size_t i = 0; i < n; ++i) by_class[static_cast<std::size_t>(*dataset[i].label)].push_back(i);

  std::mt19937_64 rng(seed);
  for (auto& members : by_class) std::shuffle(members.begin(), members.end(), rng);

  FoldPlan plan;
  plan.seed = seed;
  std::vector<bool> in_test(n, false);
  if (!test.ids.empty()) {
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < n; ++i) index.emplace(dataset[i].id, i);
    for (const auto& id : test.ids) {
      auto it = index.find(id);
      if (it == index.end())
        throw Error(ErrorCode::InvalidArgument, "test id '" + id + "' is not in the dataset");
      in_test[it->second] = true;
    }
  } else {
    std::size_t total = 0;
    if (test.count) {
      total = *test.count;
    } else if (test.fraction) {
      if (!(*test.fraction >= 0.0 && *test.fraction < 1.0))
        throw Error(ErrorCode::InvalidArgument, "test fraction must be in [0, 1)");
      total = static_cast<std::size_t>(std::llround(*test.fraction * static_cast<double>(n)));
    }
    if (total >= n) throw Error(ErrorCode::TooFewSamples, "test set would consume every sample");
    // Stratified: class quotas proportional to class size, remainder to the larger fraction.
    std::array<std::size_t, 2> quota{};
    std::array<double, 2> frac{};
    for (std::size_t c = 0; c < 2; ++c) {
      const double exact = static_cast<double>(total) * static_cast<double>(by_class[c].size()) /
                           static_cast<double>(n);
      quota[c] = static_cast<std::size_t>(std::floor(exact));
      frac[c] = exact - std::floor(exact);
    }
    if (quota[0] + quota[1] < total) ++quota[frac[1] > frac[0] ? 1 : 0];
    for (std::size_t c = 0; c < 2; ++c)
      for (std::size_t r = 0; r < quota[c] && r < by_class[c].size(); ++r) in_test[by_class[c][r]] = true;
  }
  for (std::size_t i = 0; i < n; ++i)
    if (in_test[i]) plan.test_set.push_back(i);

  for (std::size_t c = 0; c < 2; ++c) {
    std::vector<std::size_t> members;
    for (auto i : by_class[c])
      if (!in_test[i]) members.push_back(i);
    if (members.size() < static_cast<std::size_t>(kFoldsPerClass))
      throw Error(ErrorCode::TooFewSamples, "class " + std::to_string(c) + " has " +
                                                std::to_string(members.size()) +
                                                " training samples; at least 5 are required");
    auto& folds = c == 0 ? plan.normal_folds : plan.abnormal_folds;
    for (std::size_t f = 0; f < static_cast<std::size_t>(kFoldsPerClass); ++f) {
      const std::size_t lo = f * members.size() / kFoldsPerClass;
      const std::size_t hi = (f + 1) * members.size() / kFoldsPerClass;
      folds[f].assign(members.begin() + static_cast<std::ptrdiff_t>(lo),
                      members.begin() + static_cast<std::ptrdiff_t>(hi));
      std::sort(folds[f].begin(), folds[f].end());
    }
  }
  for (int i = 0; i < kFoldsPerClass; ++i)
    for (int j = 0; j < kFoldsPerClass; ++j) plan.combos.emplace_back(i, j);
  return plan;
}

struct FoldResult {
  int combo = 0;
  int fold_i = 0;
  int fold_j = 0;
  Metrics validation;
  Metrics training;
  std::vector<std::string> test_ids;
  std::vector<int> test_votes;
  std::vector<double> test_scores;
};

namespace detail {

inline std::vector<int> labels_at(const Dataset& dataset, const std::vector<std::size_t>& idx) {
  std::vector<int> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(*dataset[i].label);
  return out;
}

}  // namespace detail

/// Fits the embedder on the combination's training folds, places validation and test samples by
/// out-of-sample extension, fits the classifier on the training coordinates and records one
/// vote per test subject. `standardized` holds per-sample standardized tensors.
inline FoldResult run_fold(const FoldPlan& plan, int combo, const EmbedderSpec& spec,
                           ClassifierKind classifier, const Dataset& standardized) {
  if (combo < 0 || combo >= static_cast<int>(plan.combos.size()))
    throw Error(ErrorCode::IndexOutOfRange, "combination index " + std::to_string(combo) +
                                                " outside 0.." + std::to_string(kCombos - 1));
  try {
    FoldResult result;
    result.combo = combo;
    result.fold_i = plan.combos[static_cast<std::size_t>(combo)].first;
    result.fold_j = plan.combos[static_cast<std::size_t>(combo)].second;

    const auto train_idx = plan.training(combo);
    const auto valid_idx = plan.validation(combo);
    const auto train_labels = detail::labels_at(standardized, train_idx);
    const auto valid_labels = detail::labels_at(standardized, valid_idx);

    const TrainedEmbedding embedding = fit(spec, to_matrix(standardized, train_idx));
    const Classifier model = fit_classifier(classifier, embedding.coords(), train_labels);

    result.training = compute_metrics(model.predict(embedding.coords()).labels, train_labels);
    const Eigen::MatrixXd valid_coords = embedding.extend_rows(to_matrix(standardized, valid_idx));
    result.validation = compute_metrics(model.predict(valid_coords).labels, valid_labels);

    if (!plan.test_set.empty()) {
      const Eigen::MatrixXd test_coords = embedding.extend_rows(to_matrix(standardized, plan.test_set));
      Prediction pred = model.predict(test_coords);
      for (auto i : plan.test_set) result.test_ids.push_back(standardized[i].id);
      result.test_votes = std::move(pred.labels);
      result.test_scores = std::move(pred.scores);
    }
    return result;
  } catch (const Error& e) {
    throw e.within("combination " + std::to_string(combo));
  }
}

struct VoteRecord {
  std::string subject_id;
  std::vector<int> votes;  // one per combination, in combination order
  double proportion = 0.0;
  int final = 0;
  std::optional<int> true_label;
  std::optional<double> age;

  std::size_t abnormal_votes() const {
    return static_cast<std::size_t>(std::count(votes.begin(), votes.end(), 1));
  }
};

/// Final call for a vote count out of `kCombos`.
inline int vote_decision(std::size_t abnormal_votes, double threshold = 0.5) {
  const double p = static_cast<double>(abnormal_votes) / static_cast<double>(kCombos);
  return p > threshold ? 1 : 0;
}

/// Collects each test subject's votes across combinations. Labels and ages are attached from
/// `dataset` when given. Throws IncompleteVotes unless every subject has exactly 25 votes.
inline std::vector<VoteRecord> aggregate_votes(std::vector<FoldResult> results,
                                               const Dataset* dataset = nullptr,
                                               double threshold = 0.5) {
  std::stable_sort(results.begin(), results.end(),
                   [](const FoldResult& a, const FoldResult& b) { return a.combo < b.combo; });
  std::vector<VoteRecord> records;
  std::unordered_map<std::string, std::size_t> slot;
  for (const auto& r : results) {
    if (r.test_ids.size() != r.test_votes.size())
      throw Error(ErrorCode::LengthMismatch, "fold result has mismatched ids and votes");
    for (std::size_t s = 0; s < r.test_ids.size(); ++s) {
      auto [it, inserted] = slot.emplace(r.test_ids[s], records.size());
      if (inserted) records.push_back(VoteRecord{r.test_ids[s], {}, 0.0, 0, std::nullopt, std::nullopt});
      records[it->second].votes.push_back(r.test_votes[s]);
    }
  }
  std::unordered_map<std::string, std::size_t> index;
  if (dataset)
    for (std::size_t i = 0; i < dataset->size(); ++i) index.emplace((*dataset)[i].id, i);
  for (auto& rec : records) {
    if (rec.votes.size() != static_cast<std::size_t>(kCombos))
      throw Error(ErrorCode::IncompleteVotes, "subject '" + rec.subject_id + "' has " +
                                                  std::to_string(rec.votes.size()) +
                                                  " votes, expected 25");
    rec.proportion = static_cast<double>(rec.abnormal_votes()) / static_cast<double>(kCombos);
    rec.final = vote_decision(rec.abnormal_votes(), threshold);
    if (auto it = index.find(rec.subject_id); it != index.end()) {
      rec.true_label = (*dataset)[it->second].label;
      rec.age = (*dataset)[it->second].age;
    }
  }
  return records;
}

/// Metrics of the final calls against true labels.
inline Metrics vote_metrics(const std::vector<VoteRecord>& records) {
  std::vector<int> pred, truth;
  for (const auto& r : records) {
    if (!r.true_label) continue;
    pred.push_back(r.final);
    truth.push_back(*r.true_label);
  }
  return compute_metrics(pred, truth);
}

// ---------------------------------------------------------------------------------------------
// Two-model comparison and false-negative review

struct ConfusionCell {
  std::size_t count = 0;
  std::vector<std::string> ids;
};

/// cells[true label][model A call][model B call]
struct TwoModelConfusion {
  std::array<std::array<std::array<ConfusionCell, 2>, 2>, 2> cells;

  const ConfusionCell& at(int label, int call_a, int call_b) const {
    return cells[static_cast<std::size_t>(label)][static_cast<std::size_t>(call_a)]
                [static_cast<std::size_t>(call_b)];
  }
  /// Cell indexed by correctness instead of call.
  const ConfusionCell& by_correctness(int label, bool a_correct, bool b_correct) const {
    return at(label, a_correct ? label : 1 - label, b_correct ? label : 1 - label);
  }
};

inline TwoModelConfusion two_model_confusion(const std::vector<VoteRecord>& a,
                                             const std::vector<VoteRecord>& b) {
  std::unordered_map<std::string, const VoteRecord*> b_index;
  for (const auto& r : b) b_index.emplace(r.subject_id, &r);
  if (a.size() != b.size() || b_index.size() != b.size())
    throw Error(ErrorCode::SubjectSetMismatch, "models were scored on different subjects");
  TwoModelConfusion out;
  for (const auto& ra : a) {
    auto it = b_index.find(ra.subject_id);
    if (it == b_index.end())
      throw Error(ErrorCode::SubjectSetMismatch, "subject '" + ra.subject_id + "' missing from model B");
    const VoteRecord& rb = *it->second;
    if (!ra.true_label || !rb.true_label || *ra.true_label != *rb.true_label)
      throw Error(ErrorCode::SubjectSetMismatch,
                  "subject '" + ra.subject_id + "' lacks a consistent true label");
    auto& cell = out.cells[static_cast<std::size_t>(*ra.true_label)][static_cast<std::size_t>(ra.final)]
                          [static_cast<std::size_t>(rb.final)];
    ++cell.count;
    cell.ids.push_back(ra.subject_id);
  }
  return out;
}

struct DiagnosisRow {
  std::string id;
  std::optional<double> age;
  double proportion = 0.0;
};

/// Abnormal subjects called normal, highest vote proportion first.
inline std::vector<DiagnosisRow> diagnosis_table(const std::vector<VoteRecord>& records) {
  std::vector<DiagnosisRow> rows;
  for (const auto& r : records)
    if (r.true_label && *r.true_label == 1 && r.final == 0)
      rows.push_back({r.subject_id, r.age, r.proportion});
  std::stable_sort(rows.begin(), rows.end(),
                   [](const DiagnosisRow& x, const DiagnosisRow& y) { return x.proportion > y.proportion; });
  return rows;
}

// ---------------------------------------------------------------------------------------------
// Whole cross-validation run

struct CrossvalConfig {
  EmbedderSpec embedder;
  ClassifierKind classifier = ClassifierKind::LDA;
  double threshold = 0.5;
  unsigned threads = 1;
  TestSelection test;
  std::uint64_t seed = 0;
  bool export_embedding = true;
};

struct MetricSummary {
  std::optional<double> mean;
  std::optional<double> sdev;  // population standard deviation
};

struct ValidationSummary {
  MetricSummary accuracy, sensitivity, specificity, precision;
};

inline MetricSummary summarize(const std::vector<std::optional<double>>& values) {
  std::vector<double> v;
  for (const auto& x : values)
    if (x) v.push_back(*x);
  MetricSummary s;
  if (v.empty()) return s;
  double sum = 0.0;
  for (double x : v) sum += x;
  const double mean = sum / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  s.mean = mean;
  s.sdev = std::sqrt(ss / static_cast<double>(v.size()));
  return s;
}

inline ValidationSummary summarize_validation(const std::vector<FoldResult>& folds) {
  std::vector<std::optional<double>> acc, sens, spec, prec;
  for (const auto& f : folds) {
    acc.push_back(f.validation.accuracy);
    sens.push_back(f.validation.sensitivity);
    spec.push_back(f.validation.specificity);
    prec.push_back(f.validation.precision);
  }
  return {summarize(acc), summarize(sens), summarize(spec), summarize(prec)};
}

struct CrossvalResult {
  FoldPlan plan;
  std::vector<FoldResult> folds;  // combination order
  std::vector<VoteRecord> votes;  // test-set order
  std::optional<Metrics> test_metrics;
  ValidationSummary validation;
  std::vector<std::string> embedding_ids;
  Eigen::MatrixXd embedding;  // pool fit + extended test samples, dataset order
};

/// Runs the 25 combinations on up to `threads` workers. Results do not depend on the worker
/// count: each combination writes only its own slot.
inline std::vector<FoldResult> run_all_folds(const FoldPlan& plan, const EmbedderSpec& spec,
                                             ClassifierKind classifier, const Dataset& standardized,
                                             unsigned threads) {
  const int total = static_cast<int>(plan.combos.size());
  std::vector<FoldResult> results(static_cast<std::size_t>(total));
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (int c = next++; c < total; c = next++) {
      try {
        results[static_cast<std::size_t>(c)] = run_fold(plan, c, spec, classifier, standardized);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = total;
      }
    }
  };
  const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(total)));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  return results;
}

inline CrossvalResult run_crossval(const Dataset& dataset, const CrossvalConfig& config) {
  if (!(config.threshold > 0.0 && config.threshold < 1.0))
    throw Error(ErrorCode::Configuration, "vote threshold must be in (0, 1)");
  require_labels(dataset);
  const Dataset standardized = standardize_all(dataset);

  CrossvalResult result;
  result.plan = build_fold_plan(standardized, config.test, config.seed);
  result.folds = run_all_folds(result.plan, config.embedder, config.classifier, standardized, config.threads);
  result.validation = summarize_validation(result.folds);
  if (!result.plan.test_set.empty()) {
    result.votes = aggregate_votes(result.folds, &dataset, config.threshold);
    result.test_metrics = vote_metrics(result.votes);
  }

  if (config.export_embedding) {
    const auto pool = result.plan.pool();
    const TrainedEmbedding embedding = fit(config.embedder, to_matrix(standardized, pool));
    result.embedding.resize(static_cast<Eigen::Index>(dataset.size()), config.embedder.k);
    const Eigen::MatrixXd& pool_coords = embedding.coords();
    for (std::size_t r = 0; r < pool.size(); ++r)
      result.embedding.row(static_cast<Eigen::Index>(pool[r])) = pool_coords.row(static_cast<Eigen::Index>(r));
    if (!result.plan.test_set.empty()) {
      const Eigen::MatrixXd test_coords =
          embedding.extend_rows(to_matrix(standardized, result.plan.test_set));
      for (std::size_t r = 0; r < result.plan.test_set.size(); ++r)
        result.embedding.row(static_cast<Eigen::Index>(result.plan.test_set[r])) =
            test_coords.row(static_cast<Eigen::Index>(r));
    }
    for (const auto& s : dataset) result.embedding_ids.push_back(s.id);
  }
  return result;
}

}  // namespace dmap
