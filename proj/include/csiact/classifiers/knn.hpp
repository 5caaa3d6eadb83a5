#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include "csiact/classifiers/common.hpp"
#include "csiact/dataset.hpp"
#include "csiact/error.hpp"

namespace csiact {

struct KnnParams {
  int k = 5;

  bool operator==(const KnnParams&) const = default;
};

/// Memorized training set; prediction is brute-force Euclidean search.
struct KnnModel {
  int k = 5;
  Matrix rows;
  std::vector<ClassId> labels;
  std::size_t n_classes = 0;

  std::size_t width() const noexcept { return rows.cols(); }
  bool operator==(const KnnModel&) const = default;
};

inline double knn_distance(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    throw Error(Errc::WidthMismatch, "vectors of length " + std::to_string(x.size()) + " and " +
                                         std::to_string(y.size()));
  return std::sqrt(squared_distance(x, y));
}

inline KnnModel fit_knn(const DesignMatrix& data, const KnnParams& params) {
  if (params.k < 1) throw Error(Errc::BadConfig, "k must be >= 1");
  if (data.size() == 0) throw Error(Errc::DegenerateData, "cannot fit KNN on zero rows");
  if (static_cast<std::size_t>(params.k) > data.size())
    throw Error(Errc::BadConfig, "k exceeds the number of stored rows");
  return KnnModel{params.k, data.rows, data.labels, std::max<std::size_t>(data.dictionary.size(), 1)};
}

namespace knn_detail {

/// Plurality among the first `k` neighbours (ordered nearest first). A tied
/// vote drops the farthest neighbour and votes again.
inline ClassId vote(std::span<const std::pair<double, std::size_t>> neighbours,
                    std::span<const ClassId> labels, std::size_t n_classes) {
  std::vector<int> counts(n_classes);
  for (std::size_t k = neighbours.size(); k > 0; --k) {
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t i = 0; i < k; ++i) ++counts[static_cast<std::size_t>(labels[neighbours[i].second])];
    const int top = *std::max_element(counts.begin(), counts.end());
    if (std::count(counts.begin(), counts.end(), top) == 1)
      return static_cast<ClassId>(std::find(counts.begin(), counts.end(), top) - counts.begin());
  }
  return labels[neighbours.front().second];
}

}  // namespace knn_detail

/// Distance ties resolve toward the lower stored-row index.
inline std::vector<ClassId> predict_knn(const KnnModel& model, const Matrix& rows) {
  check_width(rows, model.width());
  const std::size_t n = model.rows.rows();
  const auto k = static_cast<std::size_t>(model.k);
  std::vector<std::pair<double, std::size_t>> dist(n);
  std::vector<ClassId> out(rows.rows());
  for (std::size_t q = 0; q < rows.rows(); ++q) {
    const auto query = rows.row(q);
    for (std::size_t i = 0; i < n; ++i) dist[i] = {knn_distance(query, model.rows.row(i)), i};
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
    out[q] = knn_detail::vote(std::span(dist).first(k), model.labels, model.n_classes);
  }
  return out;
}

}  // namespace csiact
