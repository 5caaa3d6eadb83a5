#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "csiact/classifiers/ensemble.hpp"
#include "csiact/classifiers/forest.hpp"
#include "csiact/classifiers/knn.hpp"
#include "csiact/classifiers/mlp.hpp"
#include "csiact/classifiers/svm.hpp"
#include "csiact/seeding.hpp"

namespace csiact {

enum class ModelKind { Forest, Knn, Svm, Mlp, Ensemble };

inline constexpr std::array<ModelKind, 5> kAllModelKinds = {ModelKind::Forest, ModelKind::Knn, ModelKind::Svm,
                                                           ModelKind::Mlp, ModelKind::Ensemble};

constexpr std::string_view to_string(ModelKind kind) noexcept {
  switch (kind) {
    case ModelKind::Forest: return "forest";
    case ModelKind::Knn: return "knn";
    case ModelKind::Svm: return "svm";
    case ModelKind::Mlp: return "mlp";
    case ModelKind::Ensemble: return "ensemble";
  }
  return "unknown";
}

/// Row labels used in the text tables.
constexpr std::string_view display_name(ModelKind kind) noexcept {
  switch (kind) {
    case ModelKind::Forest: return "Random Forest";
    case ModelKind::Knn: return "K nearest Neighbours";
    case ModelKind::Svm: return "Support Vector Machine";
    case ModelKind::Mlp: return "Neural network model";
    case ModelKind::Ensemble: return "Ensemble Classifier";
  }
  return "unknown";
}

inline std::optional<ModelKind> parse_model_kind(std::string_view name) noexcept {
  for (auto kind : kAllModelKinds)
    if (to_string(kind) == name) return kind;
  return std::nullopt;
}

/// Hyperparameters for every kind; `kind` selects which are used.
struct ClassifierSpec {
  ModelKind kind = ModelKind::Forest;
  ForestParams forest;
  KnnParams knn;
  SvmParams svm;
  MlpParams mlp;
};

/// Tagged union over the five trained classifier kinds plus the label
/// dictionary the class ids refer to.
struct TrainedModel {
  std::variant<ForestModel, KnnModel, SvmModel, MlpModel, EnsembleModel> payload;
  LabelDictionary labels;

  ModelKind kind() const noexcept { return static_cast<ModelKind>(payload.index()); }

  std::size_t width() const {
    return std::visit(
        [](const auto& m) -> std::size_t {
          if constexpr (requires { m.width(); })
            return m.width();
          else
            return m.width;
        },
        payload);
  }

  std::vector<ClassId> predict(const Matrix& rows) const {
    return std::visit(
        [&](const auto& m) {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, ForestModel>) return predict_forest(m, rows);
          else if constexpr (std::is_same_v<T, KnnModel>) return predict_knn(m, rows);
          else if constexpr (std::is_same_v<T, SvmModel>) return predict_svm(m, rows);
          else if constexpr (std::is_same_v<T, MlpModel>) return predict_mlp(m, rows);
          else return predict_ensemble(m, rows);
        },
        payload);
  }

  bool operator==(const TrainedModel&) const = default;
};

static_assert(std::is_same_v<std::variant_alternative_t<static_cast<std::size_t>(ModelKind::Ensemble),
                                                        decltype(TrainedModel::payload)>,
                             EnsembleModel>);

/// Seed each member kind trains with, so a standalone model and the same
/// kind inside an ensemble are identical given the same base seed.
inline std::uint64_t member_seed(std::uint64_t seed, ModelKind kind) noexcept {
  return derive_seed(seed, to_string(kind));
}

inline ForestModel fit_forest_member(const ClassifierSpec& spec, const DesignMatrix& data, std::uint64_t seed) {
  return fit_forest(data, spec.forest, member_seed(seed, ModelKind::Forest));
}
inline SvmModel fit_svm_member(const ClassifierSpec& spec, const DesignMatrix& data, std::uint64_t seed) {
  return fit_svm(data, spec.svm, member_seed(seed, ModelKind::Svm));
}
inline MlpModel fit_mlp_member(const ClassifierSpec& spec, const DesignMatrix& data, std::uint64_t seed) {
  return fit_mlp(data, spec.mlp, member_seed(seed, ModelKind::Mlp));
}

inline TrainedModel fit(const ClassifierSpec& spec, const DesignMatrix& data, std::uint64_t seed) {
  TrainedModel out{ForestModel{}, data.dictionary};
  switch (spec.kind) {
    case ModelKind::Forest: out.payload = fit_forest_member(spec, data, seed); break;
    case ModelKind::Knn: out.payload = fit_knn(data, spec.knn); break;
    case ModelKind::Svm: out.payload = fit_svm_member(spec, data, seed); break;
    case ModelKind::Mlp: out.payload = fit_mlp_member(spec, data, seed); break;
    case ModelKind::Ensemble: {
      // SVM first: it is the member that rejects non-binary data.
      auto svm = fit_svm_member(spec, data, seed);
      out.payload = EnsembleModel{fit_forest_member(spec, data, seed), fit_mlp_member(spec, data, seed),
                                  fit_knn(data, spec.knn), std::move(svm)};
      break;
    }
  }
  return out;
}

/// Fraction of rows where the prediction equals the label.
inline double accuracy_on(const TrainedModel& model, const DesignMatrix& data) {
  const auto pred = model.predict(data.rows);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == data.labels[i];
  return pred.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(pred.size());
}

}  // namespace csiact
