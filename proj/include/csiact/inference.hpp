#pragma once

#include <algorithm>
#include <map>
#include <string>

#include "csiact/classifiers/model.hpp"
#include "csiact/dataset.hpp"

namespace csiact {

/// Sample-level outcome of classifying every subcarrier row of one capture.
struct CapturePrediction {
  std::string label;
  std::map<std::string, int> per_row_votes;  // every model label, zero counts included
  double row_agreement = 0.0;                // winning vote share

  bool operator==(const CapturePrediction&) const = default;
};

/// Rows are truncated or zero-padded to the model width, each row is
/// predicted, and the sample label is the plurality. A tied plurality goes
/// to the lowest class id (the lexicographically first label).
inline CapturePrediction classify_capture(const TrainedModel& model, const CsiSample& sample) {
  if (sample.traces.empty()) throw Error(Errc::EmptyInput, "capture has no subcarrier rows");
  const auto predictions = model.predict(sample_rows(sample, model.width()));
  std::vector<int> votes(model.labels.size(), 0);
  for (auto p : predictions) ++votes[static_cast<std::size_t>(p)];
  const auto best = std::max_element(votes.begin(), votes.end()) - votes.begin();

  CapturePrediction out;
  out.label = model.labels.name(static_cast<ClassId>(best));
  for (std::size_t c = 0; c < votes.size(); ++c) out.per_row_votes[model.labels.name(static_cast<ClassId>(c))] = votes[c];
  out.row_agreement = static_cast<double>(votes[static_cast<std::size_t>(best)]) / static_cast<double>(predictions.size());
  return out;
}

}  // namespace csiact
