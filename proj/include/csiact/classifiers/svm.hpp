#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include "csiact/classifiers/common.hpp"
#include "csiact/dataset.hpp"
#include "csiact/error.hpp"

namespace csiact {

struct SvmParams {
  double lambda = 1e-4;
  double learning_rate = 1e-3;
  int epochs = 200;

  bool operator==(const SvmParams&) const = default;
};

/// Linear SVM. Class 0 ("sitting" for CSI data) is the positive side.
struct SvmModel {
  Scaler scaler;
  std::vector<double> w;
  double b = 0.0;
  SvmParams params;

  std::size_t width() const noexcept { return w.size(); }
  bool operator==(const SvmModel&) const = default;
};

inline constexpr ClassId kSvmPositiveClass = 0;
inline constexpr ClassId kSvmNegativeClass = 1;

/// w . u + b on an already standardized row.
inline double svm_decision(std::span<const double> w, double b, std::span<const double> u) noexcept {
  return dot(w, u) + b;
}

/// Positive iff w . u + b > 0; a zero decision value is negative.
constexpr ClassId svm_class(double decision) noexcept {
  return decision > 0.0 ? kSvmPositiveClass : kSvmNegativeClass;
}

/// Stochastic sub-gradient descent on hinge loss + lambda * |w|^2 over
/// standardized features, one shuffled pass per epoch.
inline SvmModel fit_svm(const DesignMatrix& data, const SvmParams& params, std::uint64_t seed) {
  if (data.dictionary.size() != 2)
    throw Error(Errc::NotBinary, "linear SVM needs exactly 2 classes, got " +
                                     std::to_string(data.dictionary.size()));
  if (data.size() == 0) throw Error(Errc::DegenerateData, "cannot fit SVM on zero rows");
  if (params.epochs < 0 || !(params.learning_rate > 0.0) || !(params.lambda >= 0.0))
    throw Error(Errc::BadConfig, "invalid SVM hyperparameters");

  SvmModel model;
  model.params = params;
  model.scaler = Scaler::fit(data.rows);
  const Matrix x = model.scaler.transform(data.rows);
  const std::size_t n = x.rows();
  model.w.assign(x.cols(), 0.0);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  const double shrink = 1.0 - params.learning_rate * 2.0 * params.lambda;
  // w is kept as scale * v so the per-step decay is O(1).
  std::vector<double> v(x.cols(), 0.0);
  double scale = 1.0;
  for (int epoch = 0; epoch < params.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (auto i : order) {
      const auto u = x.row(i);
      const double y = data.labels[i] == kSvmPositiveClass ? 1.0 : -1.0;
      const double margin = y * (scale * dot(v, u) + model.b);
      scale *= shrink;
      if (margin < 1.0) {
        const double step = params.learning_rate * y / scale;
        for (std::size_t j = 0; j < v.size(); ++j) v[j] += step * u[j];
        model.b += params.learning_rate * y;
      }
      if (scale < 1e-6) {
        for (double& vj : v) vj *= scale;
        scale = 1.0;
      }
    }
  }
  for (double& vj : v) vj *= scale;
  model.w = std::move(v);
  return model;
}

inline std::vector<ClassId> predict_svm(const SvmModel& model, const Matrix& rows) {
  check_width(rows, model.width());
  const Matrix x = model.scaler.transform(rows);
  std::vector<ClassId> out(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) out[r] = svm_class(svm_decision(model.w, model.b, x.row(r)));
  return out;
}

}  // namespace csiact
