#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include "csiact/classifiers/common.hpp"
#include "csiact/dataset.hpp"
#include "csiact/error.hpp"
#include "csiact/seeding.hpp"

namespace csiact {

struct MlpParams {
  int hidden_size = 100;
  double learning_rate = 1e-3;
  int epochs = 200;
  int batch_size = 32;
  // Training stops once the epoch loss fails to improve by `tolerance` for
  // more than `patience` consecutive epochs.
  double tolerance = 1e-4;
  int patience = 10;

  bool operator==(const MlpParams&) const = default;
};

/// Parameters of a one-hidden-layer network (relu hidden, softmax output).
/// Weight matrices are (fan_out x fan_in).
struct MlpWeights {
  Matrix hidden_weights;
  AlignedVector hidden_bias;
  Matrix output_weights;
  AlignedVector output_bias;

  bool operator==(const MlpWeights&) const = default;
};

struct MlpModel {
  Scaler scaler;
  MlpWeights weights;
  MlpParams params;
  std::uint64_t seed = 0;
  int epochs_run = 0;

  std::size_t width() const noexcept { return weights.hidden_weights.cols(); }
  std::size_t n_classes() const noexcept { return weights.output_bias.size(); }
  bool operator==(const MlpModel&) const = default;
};

namespace mlp_detail {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;
using ConstVectorMap = Eigen::Map<const Eigen::VectorXd>;

inline ConstMatrixMap view(const Matrix& m) {
  return {m.data().data(), static_cast<Eigen::Index>(m.rows()), static_cast<Eigen::Index>(m.cols())};
}
inline MatrixMap view(Matrix& m) {
  return {m.data().data(), static_cast<Eigen::Index>(m.rows()), static_cast<Eigen::Index>(m.cols())};
}
inline ConstVectorMap view(const AlignedVector& v) {
  return {v.data(), static_cast<Eigen::Index>(v.size())};
}
inline Eigen::Map<Eigen::VectorXd> view(AlignedVector& v) {
  return {v.data(), static_cast<Eigen::Index>(v.size())};
}

/// Logits for a batch of standardized rows.
inline RowMatrix forward(const MlpWeights& w, const Eigen::Ref<const RowMatrix>& x, RowMatrix* hidden_out) {
  RowMatrix hidden = (x * view(w.hidden_weights).transpose()).rowwise() + view(w.hidden_bias).transpose();
  hidden = hidden.cwiseMax(0.0);
  RowMatrix logits = (hidden * view(w.output_weights).transpose()).rowwise() + view(w.output_bias).transpose();
  if (hidden_out) *hidden_out = std::move(hidden);
  return logits;
}

inline void softmax_rows(RowMatrix& z) {
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    const double m = z.row(r).maxCoeff();
    z.row(r) = (z.row(r).array() - m).exp();
    z.row(r) /= z.row(r).sum();
  }
}

}  // namespace mlp_detail

inline MlpWeights zero_like(const MlpWeights& w) {
  return {Matrix(w.hidden_weights.rows(), w.hidden_weights.cols()),
          AlignedVector(w.hidden_bias.size(), 0.0),
          Matrix(w.output_weights.rows(), w.output_weights.cols()),
          AlignedVector(w.output_bias.size(), 0.0)};
}

/// Mean cross-entropy of the batch; when `grad` is non-null it receives the
/// analytic gradient with respect to every parameter.
inline double mlp_loss(const MlpWeights& w, const Eigen::Ref<const mlp_detail::RowMatrix>& x,
                       std::span<const ClassId> y, MlpWeights* grad) {
  using namespace mlp_detail;
  const auto batch = static_cast<double>(x.rows());
  RowMatrix hidden;
  RowMatrix probs = forward(w, x, &hidden);
  softmax_rows(probs);

  double loss = 0.0;
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double p = probs(r, y[static_cast<std::size_t>(r)]);
    loss -= std::log(std::max(p, std::numeric_limits<double>::min()));
  }
  loss /= batch;
  if (!grad) return loss;

  RowMatrix d_logits = probs;
  for (Eigen::Index r = 0; r < x.rows(); ++r) d_logits(r, y[static_cast<std::size_t>(r)]) -= 1.0;
  d_logits /= batch;

  if (grad->hidden_weights.cols() != w.hidden_weights.cols() || grad->hidden_bias.size() != w.hidden_bias.size() ||
      grad->output_bias.size() != w.output_bias.size())
    *grad = zero_like(w);
  view(grad->output_weights) = d_logits.transpose() * hidden;
  view(grad->output_bias) = d_logits.colwise().sum().transpose();
  RowMatrix d_hidden = d_logits * view(w.output_weights);
  d_hidden = d_hidden.cwiseProduct((hidden.array() > 0.0).cast<double>().matrix());
  view(grad->hidden_weights) = d_hidden.transpose() * x;
  view(grad->hidden_bias) = d_hidden.colwise().sum().transpose();
  return loss;
}

/// Glorot-style uniform(-r, r) weights with r = sqrt(6 / (fan_in + fan_out));
/// biases start at zero.
inline MlpWeights init_mlp_weights(std::size_t n_features, std::size_t hidden, std::size_t n_classes,
                                   std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto fill = [&](Matrix& m) {
    const double r = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
    std::uniform_real_distribution<double> dist(-r, r);
    for (double& v : m.data()) v = dist(rng);
  };
  MlpWeights w{Matrix(hidden, n_features), AlignedVector(hidden, 0.0), Matrix(n_classes, hidden),
               AlignedVector(n_classes, 0.0)};
  fill(w.hidden_weights);
  fill(w.output_weights);
  return w;
}

namespace mlp_detail {

/// Adam state over the flattened parameter set.
class Adam {
 public:
  explicit Adam(double lr) : lr_(lr) {}

  void step(MlpWeights& w, const MlpWeights& g) {
    ++t_;
    if (m_.empty()) {
      m_.assign(4, {});
      v_.assign(4, {});
    }
    update(0, w.hidden_weights.data(), g.hidden_weights.data());
    update(1, w.hidden_bias, g.hidden_bias);
    update(2, w.output_weights.data(), g.output_weights.data());
    update(3, w.output_bias, g.output_bias);
  }

 private:
  // Plain scalar loop: the result of every element must not depend on how a
  // vectorized path would split the buffer.
  void update(std::size_t slot, std::span<double> p, std::span<const double> g) {
    auto& m = m_[slot];
    auto& v = v_[slot];
    if (m.empty()) {
      m.assign(p.size(), 0.0);
      v.assign(p.size(), 0.0);
    }
    const double c1 = 1.0 - std::pow(kBeta1, t_);
    const double c2 = 1.0 - std::pow(kBeta2, t_);
    const double step = lr_ * std::sqrt(c2) / c1;
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = kBeta1 * m[i] + (1.0 - kBeta1) * g[i];
      v[i] = kBeta2 * v[i] + (1.0 - kBeta2) * g[i] * g[i];
      p[i] -= step * m[i] / (std::sqrt(v[i]) + kEps);
    }
  }

  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;
  double lr_;
  int t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

}  // namespace mlp_detail

inline MlpModel fit_mlp(const DesignMatrix& data, const MlpParams& params, std::uint64_t seed) {
  if (data.size() == 0 || data.width() == 0) throw Error(Errc::DegenerateData, "empty training data");
  if (data.dictionary.size() < 2) throw Error(Errc::DegenerateData, "MLP needs at least 2 classes");
  if (params.hidden_size < 1 || params.batch_size < 1 || params.epochs < 0 || !(params.learning_rate > 0.0))
    throw Error(Errc::BadConfig, "invalid MLP hyperparameters");

  using namespace mlp_detail;
  MlpModel model;
  model.params = params;
  model.seed = seed;
  model.scaler = Scaler::fit(data.rows);
  const Matrix x = model.scaler.transform(data.rows);
  model.weights = init_mlp_weights(x.cols(), static_cast<std::size_t>(params.hidden_size),
                                   data.dictionary.size(), derive_seed(seed, "init"));

  const std::size_t n = x.rows();
  const auto batch = std::min<std::size_t>(static_cast<std::size_t>(params.batch_size), n);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(derive_seed(seed, "batches"));
  Adam adam(params.learning_rate);
  RowMatrix xb;
  std::vector<ClassId> yb;
  MlpWeights grad;

  double best_loss = std::numeric_limits<double>::infinity();
  int stalled = 0;
  for (int epoch = 0; epoch < params.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t len = std::min(batch, n - start);
      xb.resize(static_cast<Eigen::Index>(len), static_cast<Eigen::Index>(x.cols()));
      yb.resize(len);
      for (std::size_t i = 0; i < len; ++i) {
        const auto src = x.row(order[start + i]);
        std::copy(src.begin(), src.end(), xb.row(static_cast<Eigen::Index>(i)).data());
        yb[i] = data.labels[order[start + i]];
      }
      epoch_loss += mlp_loss(model.weights, xb, yb, &grad) * static_cast<double>(len);
      adam.step(model.weights, grad);
    }
    epoch_loss /= static_cast<double>(n);
    model.epochs_run = epoch + 1;

    stalled = epoch_loss > best_loss - params.tolerance ? stalled + 1 : 0;
    best_loss = std::min(best_loss, epoch_loss);
    if (stalled > params.patience) break;
  }
  return model;
}

/// Mean cross-entropy of the model on a labeled matrix (raw features).
inline double mlp_dataset_loss(const MlpModel& model, const DesignMatrix& data) {
  const Matrix x = model.scaler.transform(data.rows);
  return mlp_loss(model.weights, mlp_detail::view(x), data.labels, nullptr);
}

/// Argmax of the logits; ties go to the lower class id.
inline std::vector<ClassId> predict_mlp(const MlpModel& model, const Matrix& rows) {
  check_width(rows, model.width());
  const Matrix x = model.scaler.transform(rows);
  const auto logits = mlp_detail::forward(model.weights, mlp_detail::view(x), nullptr);
  std::vector<ClassId> out(rows.rows());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < logits.cols(); ++c)
      if (logits(r, c) > logits(r, best)) best = c;
    out[static_cast<std::size_t>(r)] = static_cast<ClassId>(best);
  }
  return out;
}

}  // namespace csiact
