#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "csiact/classifiers/model.hpp"
#include "csiact/dataset.hpp"
#include "csiact/evaluation.hpp"
#include "csiact/seeding.hpp"

namespace csiact {

struct Protocol {
  enum class Type { CrossValidation, Split };
  Type type = Type::CrossValidation;
  int k = 10;                 // CrossValidation only
  double test_fraction = 0.3; // Split only
  std::uint64_t seed = 42;

  static Protocol cv(int k, std::uint64_t seed) { return {Type::CrossValidation, k, 0.0, seed}; }
  static Protocol split(double fraction, std::uint64_t seed) { return {Type::Split, 0, fraction, seed}; }

  /// Same experiment shape; seeds may differ.
  bool comparable_with(const Protocol& o) const noexcept {
    if (type != o.type) return false;
    return type == Type::CrossValidation ? k == o.k : test_fraction == o.test_fraction;
  }

  bool operator==(const Protocol&) const = default;
};

struct FoldResult {
  ConfusionMatrix confusion;
  MetricsReport metrics;

  bool operator==(const FoldResult&) const = default;
};

struct ClassifierResult {
  ModelKind kind = ModelKind::Forest;
  // CV: mean over folds (accuracy is the mean fold accuracy). Split: the
  // metrics of the single test partition.
  MetricsReport metrics;
  // Summed fold matrices for CV; the test-partition matrix for a split.
  ConfusionMatrix confusion;
  MetricsReport pooled_metrics;
  std::vector<FoldResult> folds;

  bool operator==(const ClassifierResult&) const = default;
};

struct DatasetSummary {
  std::size_t rows = 0;
  std::size_t width = 0;
  std::vector<std::string> labels;
  std::size_t test_rows = 0;  // rows evaluated per run (sum over folds for CV)

  bool operator==(const DatasetSummary&) const = default;
};

struct ExperimentResult {
  Protocol protocol;
  DatasetSummary dataset;
  std::vector<ClassifierResult> classifiers;

  const ClassifierResult* find(ModelKind kind) const {
    for (const auto& c : classifiers)
      if (c.kind == kind) return &c;
    return nullptr;
  }

  bool operator==(const ExperimentResult&) const = default;
};

using ProgressFn = std::function<void(const std::string&)>;

namespace experiment_detail {

/// Predictions on `test` for each requested kind, trained on `train`.
/// An ensemble request reuses the member predictions instead of refitting.
inline std::map<ModelKind, std::vector<ClassId>> fit_and_predict(const DesignMatrix& train, const DesignMatrix& test,
                                                                 const ClassifierSpec& hyper,
                                                                 const std::vector<ModelKind>& kinds,
                                                                 std::uint64_t seed) {
  const bool want_ensemble = std::find(kinds.begin(), kinds.end(), ModelKind::Ensemble) != kinds.end();
  std::map<ModelKind, std::vector<ClassId>> out;
  for (auto kind : {ModelKind::Forest, ModelKind::Mlp, ModelKind::Knn, ModelKind::Svm}) {
    const bool wanted = std::find(kinds.begin(), kinds.end(), kind) != kinds.end();
    if (!wanted && !want_ensemble) continue;
    ClassifierSpec spec = hyper;
    spec.kind = kind;
    out[kind] = fit(spec, train, seed).predict(test.rows);
  }
  if (want_ensemble) {
    const std::vector<std::vector<ClassId>> members = {out[ModelKind::Forest], out[ModelKind::Mlp],
                                                       out[ModelKind::Knn], out[ModelKind::Svm]};
    out[ModelKind::Ensemble] = combine_votes(members);
  }
  return out;
}

inline std::uint64_t fold_seed(std::uint64_t seed, int fold) noexcept {
  return derive_seed(derive_seed(seed, "fold"), static_cast<std::uint64_t>(fold));
}

inline std::uint64_t split_fit_seed(std::uint64_t seed) noexcept { return derive_seed(seed, "fit"); }

inline DatasetSummary summarize(const DesignMatrix& dm, std::size_t test_rows) {
  return {dm.size(), dm.width(), dm.dictionary.names(), test_rows};
}

}  // namespace experiment_detail

/// Kinds evaluable on the given data: all five for binary labels; the linear
/// SVM (and so the ensemble) needs exactly two classes.
inline std::vector<ModelKind> default_kinds(const DesignMatrix& dm) {
  if (dm.dictionary.size() == 2) return {kAllModelKinds.begin(), kAllModelKinds.end()};
  return {ModelKind::Forest, ModelKind::Knn, ModelKind::Mlp};
}

/// k-fold CV over several classifiers. Each fold fits on the other k-1 folds
/// and predicts the held-out fold.
inline ExperimentResult run_cross_validation(const DesignMatrix& dm, int k, const ClassifierSpec& hyper,
                                             const std::vector<ModelKind>& kinds, std::uint64_t seed,
                                             const ProgressFn& progress = {}) {
  const auto plan = kfold_partition(dm.size(), k, seed);
  ExperimentResult result;
  result.protocol = Protocol::cv(k, seed);
  result.dataset = experiment_detail::summarize(dm, dm.size());
  for (auto kind : kinds) {
    ClassifierResult cr;
    cr.kind = kind;
    cr.confusion = ConfusionMatrix(dm.dictionary);
    result.classifiers.push_back(std::move(cr));
  }

  for (int fold = 0; fold < k; ++fold) {
    if (progress) progress("fold " + std::to_string(fold + 1) + "/" + std::to_string(k));
    const auto train = dm.subset(plan.train_rows(fold));
    const auto test = dm.subset(plan.test_rows(fold));
    auto predictions =
        experiment_detail::fit_and_predict(train, test, hyper, kinds, experiment_detail::fold_seed(seed, fold));
    for (auto& cr : result.classifiers) {
      FoldResult fr{confusion(test.labels, predictions.at(cr.kind), dm.dictionary), {}};
      fr.metrics = metrics(fr.confusion);
      cr.confusion += fr.confusion;
      cr.folds.push_back(std::move(fr));
    }
  }

  for (auto& cr : result.classifiers) {
    std::vector<MetricsReport> per_fold;
    for (const auto& f : cr.folds) per_fold.push_back(f.metrics);
    cr.metrics = mean_of(per_fold);
    cr.pooled_metrics = metrics(cr.confusion);
  }
  return result;
}

inline ExperimentResult run_cross_validation(const DesignMatrix& dm, int k, const ClassifierSpec& spec,
                                             std::uint64_t seed) {
  return run_cross_validation(dm, k, spec, {spec.kind}, seed);
}

/// Single seeded split: fit on the train part, score the test part.
inline ExperimentResult run_train_test_split(const DesignMatrix& dm, double test_fraction, const ClassifierSpec& hyper,
                                             const std::vector<ModelKind>& kinds, std::uint64_t seed,
                                             const ProgressFn& progress = {}) {
  const auto idx = split_indices(dm.size(), test_fraction, seed);
  const auto train = dm.subset(idx.train);
  const auto test = dm.subset(idx.test);
  if (progress) progress("training on " + std::to_string(train.size()) + " rows");
  auto predictions =
      experiment_detail::fit_and_predict(train, test, hyper, kinds, experiment_detail::split_fit_seed(seed));

  ExperimentResult result;
  result.protocol = Protocol::split(test_fraction, seed);
  result.dataset = experiment_detail::summarize(dm, test.size());
  for (auto kind : kinds) {
    ClassifierResult cr;
    cr.kind = kind;
    cr.confusion = confusion(test.labels, predictions.at(kind), dm.dictionary);
    cr.metrics = metrics(cr.confusion);
    cr.pooled_metrics = cr.metrics;
    result.classifiers.push_back(std::move(cr));
  }
  return result;
}

inline ExperimentResult run_train_test_split(const DesignMatrix& dm, double test_fraction, const ClassifierSpec& spec,
                                             std::uint64_t seed) {
  return run_train_test_split(dm, test_fraction, spec, {spec.kind}, seed);
}

// ---------------------------------------------------------------------------
// Dataset comparison

struct ComparisonRow {
  ModelKind kind = ModelKind::Forest;
  double accuracy_a = 0.0;
  double accuracy_b = 0.0;
  double delta_pp = 0.0;  // (a - b) in percentage points

  bool operator==(const ComparisonRow&) const = default;
};

struct Comparison {
  Protocol protocol;
  std::vector<ComparisonRow> rows;

  bool operator==(const Comparison&) const = default;
};

inline Comparison compare_datasets(const ExperimentResult& a, const ExperimentResult& b) {
  if (!a.protocol.comparable_with(b.protocol))
    throw Error(Errc::ProtocolMismatch, "results come from different evaluation protocols");
  if (a.classifiers.size() != b.classifiers.size())
    throw Error(Errc::ProtocolMismatch, "results cover different classifier sets");
  Comparison out;
  out.protocol = a.protocol;
  for (const auto& ca : a.classifiers) {
    const auto* cb = b.find(ca.kind);
    if (!cb) throw Error(Errc::ProtocolMismatch, "classifier sets differ");
    out.rows.push_back({ca.kind, ca.metrics.accuracy, cb->metrics.accuracy,
                        (ca.metrics.accuracy - cb->metrics.accuracy) * 100.0});
  }
  return out;
}

}  // namespace csiact
