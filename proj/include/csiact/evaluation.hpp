#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "csiact/error.hpp"
#include "csiact/labels.hpp"

namespace csiact {

/// counts[actual][predicted], rows and columns in label-dictionary order
/// (for activity data: sitting, standing).
struct ConfusionMatrix {
  LabelDictionary labels;
  std::vector<std::vector<std::int64_t>> counts;

  explicit ConfusionMatrix(LabelDictionary dict = LabelDictionary::activities())
      : labels(std::move(dict)), counts(labels.size(), std::vector<std::int64_t>(labels.size(), 0)) {}

  ConfusionMatrix(LabelDictionary dict, std::vector<std::vector<std::int64_t>> c)
      : labels(std::move(dict)), counts(std::move(c)) {
    if (counts.size() != labels.size())
      throw Error(Errc::LengthMismatch, "confusion matrix shape does not match label count");
    for (const auto& row : counts)
      if (row.size() != labels.size())
        throw Error(Errc::LengthMismatch, "confusion matrix shape does not match label count");
  }

  std::size_t n_classes() const noexcept { return counts.size(); }

  std::int64_t total() const noexcept {
    std::int64_t t = 0;
    for (const auto& row : counts)
      for (auto c : row) t += c;
    return t;
  }

  std::int64_t correct() const noexcept {
    std::int64_t t = 0;
    for (std::size_t i = 0; i < counts.size(); ++i) t += counts[i][i];
    return t;
  }

  ConfusionMatrix& operator+=(const ConfusionMatrix& other) {
    if (other.labels != labels) throw Error(Errc::LengthMismatch, "confusion matrices over different labels");
    for (std::size_t a = 0; a < counts.size(); ++a)
      for (std::size_t p = 0; p < counts.size(); ++p) counts[a][p] += other.counts[a][p];
    return *this;
  }

  bool operator==(const ConfusionMatrix&) const = default;
};

inline ConfusionMatrix confusion(std::span<const ClassId> actual, std::span<const ClassId> predicted,
                                 const LabelDictionary& labels = LabelDictionary::activities()) {
  if (actual.size() != predicted.size())
    throw Error(Errc::LengthMismatch, std::to_string(actual.size()) + " actual vs " +
                                          std::to_string(predicted.size()) + " predicted labels");
  if (actual.empty()) throw Error(Errc::EmptyInput, "no labels to compare");
  ConfusionMatrix cm(labels);
  const auto n = static_cast<ClassId>(labels.size());
  for (std::size_t i = 0; i < actual.size(); ++i) {
    if (actual[i] < 0 || actual[i] >= n || predicted[i] < 0 || predicted[i] >= n)
      throw Error(Errc::UnknownLabel, "class id outside the label dictionary");
    ++cm.counts[static_cast<std::size_t>(actual[i])][static_cast<std::size_t>(predicted[i])];
  }
  return cm;
}

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  bool operator==(const ClassMetrics&) const = default;
};

struct MetricsReport {
  double accuracy = 0.0;
  double precision_macro = 0.0;
  double recall_macro = 0.0;
  double f1_macro = 0.0;
  std::vector<ClassMetrics> per_class;
  // Set when some precision, recall or F1 denominator was zero and the
  // component was reported as 0.
  bool zero_division = false;

  bool operator==(const MetricsReport&) const = default;
};

/// Accuracy plus per-class precision/recall/F1 and their unweighted means.
inline MetricsReport metrics(const ConfusionMatrix& cm) {
  const auto total = cm.total();
  if (total <= 0) throw Error(Errc::EmptyMatrix, "confusion matrix has no counts");
  MetricsReport r;
  r.accuracy = static_cast<double>(cm.correct()) / static_cast<double>(total);
  const std::size_t n = cm.n_classes();
  r.per_class.resize(n);
  for (std::size_t c = 0; c < n; ++c) {
    const auto tp = cm.counts[c][c];
    std::int64_t fp = 0;
    std::int64_t fn = 0;
    for (std::size_t o = 0; o < n; ++o) {
      if (o == c) continue;
      fp += cm.counts[o][c];
      fn += cm.counts[c][o];
    }
    auto& m = r.per_class[c];
    if (tp + fp > 0) m.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    else r.zero_division = true;
    if (tp + fn > 0) m.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
    else r.zero_division = true;
    if (m.precision + m.recall > 0.0) m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
    else r.zero_division = true;
    r.precision_macro += m.precision;
    r.recall_macro += m.recall;
    r.f1_macro += m.f1;
  }
  r.precision_macro /= static_cast<double>(n);
  r.recall_macro /= static_cast<double>(n);
  r.f1_macro /= static_cast<double>(n);
  return r;
}

/// Field-wise mean of several reports (used to average CV folds).
inline MetricsReport mean_of(std::span<const MetricsReport> reports) {
  if (reports.empty()) throw Error(Errc::EmptyInput, "no reports to average");
  MetricsReport out;
  out.per_class.resize(reports.front().per_class.size());
  for (const auto& r : reports) {
    out.accuracy += r.accuracy;
    out.precision_macro += r.precision_macro;
    out.recall_macro += r.recall_macro;
    out.f1_macro += r.f1_macro;
    out.zero_division = out.zero_division || r.zero_division;
    for (std::size_t c = 0; c < out.per_class.size(); ++c) {
      out.per_class[c].precision += r.per_class[c].precision;
      out.per_class[c].recall += r.per_class[c].recall;
      out.per_class[c].f1 += r.per_class[c].f1;
    }
  }
  const auto n = static_cast<double>(reports.size());
  out.accuracy /= n;
  out.precision_macro /= n;
  out.recall_macro /= n;
  out.f1_macro /= n;
  for (auto& c : out.per_class) {
    c.precision /= n;
    c.recall /= n;
    c.f1 /= n;
  }
  return out;
}

}  // namespace csiact
