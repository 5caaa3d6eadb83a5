#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "csiact/classifiers/forest.hpp"
#include "csiact/classifiers/knn.hpp"
#include "csiact/classifiers/mlp.hpp"
#include "csiact/classifiers/svm.hpp"
#include "csiact/seeding.hpp"

namespace csiact {

struct EnsembleModel {
  ForestModel forest;
  MlpModel mlp;
  KnnModel knn;
  SvmModel svm;

  std::size_t width() const noexcept { return forest.width; }
  bool operator==(const EnsembleModel&) const = default;
};

/// Member order doubles as the tie-break priority: forest, mlp, knn, svm.
inline constexpr std::array<std::string_view, 4> kEnsembleTieBreakOrder = {"forest", "mlp", "knn", "svm"};

/// Plurality over member votes given in priority order. Among labels tied
/// for the most votes, the one backed by the highest-priority member wins.
inline ClassId vote_with_priority(std::span<const ClassId> votes) {
  std::vector<int> counts;
  for (ClassId v : votes) {
    if (static_cast<std::size_t>(v) >= counts.size()) counts.resize(static_cast<std::size_t>(v) + 1, 0);
    ++counts[static_cast<std::size_t>(v)];
  }
  int top = 0;
  for (int c : counts) top = std::max(top, c);
  for (ClassId v : votes)
    if (counts[static_cast<std::size_t>(v)] == top) return v;
  return votes.front();
}

/// Combines per-member prediction vectors (in priority order) row by row.
inline std::vector<ClassId> combine_votes(std::span<const std::vector<ClassId>> member_predictions) {
  const std::size_t n = member_predictions.front().size();
  std::vector<ClassId> out(n);
  std::vector<ClassId> votes(member_predictions.size());
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t m = 0; m < member_predictions.size(); ++m) votes[m] = member_predictions[m][r];
    out[r] = vote_with_priority(votes);
  }
  return out;
}

inline std::vector<ClassId> predict_ensemble(const EnsembleModel& model, const Matrix& rows) {
  check_width(rows, model.width());
  const std::array<std::vector<ClassId>, 4> members = {
      predict_forest(model.forest, rows), predict_mlp(model.mlp, rows), predict_knn(model.knn, rows),
      predict_svm(model.svm, rows)};
  return combine_votes(members);
}

}  // namespace csiact
