#pragma once

#include <chrono>
#include <ctime>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "json.hpp"

#include "csiact/classifiers/model.hpp"
#include "csiact/dataset.hpp"
#include "csiact/io.hpp"
#include "csiact/sha256.hpp"

namespace csiact {

inline constexpr int kModelFormatVersion = 1;
inline constexpr std::string_view kModelExtension = ".csimodel";

struct ModelSchema {
  std::size_t feature_width = 0;
  LabelDictionary labels;

  bool operator==(const ModelSchema&) const = default;
};

/// Versioned, self-describing container around a trained model.
struct ModelEnvelope {
  int format_version = kModelFormatVersion;
  TrainedModel model;
  std::string created_at;
  std::string training_fingerprint;

  ModelKind kind() const noexcept { return model.kind(); }
  ModelSchema schema() const { return {model.width(), model.labels}; }
};

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline std::string training_fingerprint(const DesignMatrix& training) {
  return sha256_hex(canonical_serialization(training));
}

inline ModelEnvelope make_envelope(TrainedModel model, const DesignMatrix& training,
                                   std::string created_at = utc_timestamp()) {
  return {kModelFormatVersion, std::move(model), std::move(created_at), training_fingerprint(training)};
}

namespace store_detail {

using nlohmann::json;

[[noreturn]] inline void corrupt(const std::string& what) { throw Error(Errc::CorruptModel, what); }

inline void require(bool ok, const char* what) {
  if (!ok) corrupt(what);
}

inline json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) rows.push_back(std::vector<double>(m.row(r).begin(), m.row(r).end()));
  return rows;
}

inline Matrix matrix_from(const json& j) {
  auto rows = j.get<std::vector<std::vector<double>>>();
  try {
    return Matrix::from_rows(rows);
  } catch (const Error&) {
    corrupt("ragged matrix in model payload");
  }
}

inline json scaler_json(const Scaler& s) { return {{"mean", s.mean}, {"scale", s.scale}}; }

inline Scaler scaler_from(const json& j) {
  Scaler s{j.at("mean").get<std::vector<double>>(), j.at("scale").get<std::vector<double>>()};
  require(s.mean.size() == s.scale.size(), "scaler mean/scale length mismatch");
  return s;
}

inline json forest_json(const ForestModel& m) {
  json trees = json::array();
  for (const auto& t : m.trees) {
    json feature = json::array(), threshold = json::array(), left = json::array(), right = json::array(),
         weight = json::array(), impurity = json::array(), counts = json::array();
    for (const auto& n : t.nodes) {
      feature.push_back(n.feature);
      threshold.push_back(n.threshold);
      left.push_back(n.left);
      right.push_back(n.right);
      weight.push_back(n.weight);
      impurity.push_back(n.impurity);
      counts.push_back(n.class_counts);
    }
    trees.push_back({{"feature", feature},
                     {"threshold", threshold},
                     {"left", left},
                     {"right", right},
                     {"weight", weight},
                     {"impurity", impurity},
                     {"class_counts", counts}});
  }
  return {{"n_trees", m.params.n_trees},
          {"max_depth", m.params.max_depth ? json(*m.params.max_depth) : json(nullptr)},
          {"min_samples_split", m.params.min_samples_split},
          {"feature_subset_size", m.feature_subset_size},
          {"seed", m.seed},
          {"width", m.width},
          {"n_classes", m.n_classes},
          {"feature_importances", m.feature_importances},
          {"trees", trees}};
}

inline ForestModel forest_from(const json& j) {
  ForestModel m;
  m.params.n_trees = j.at("n_trees").get<int>();
  if (!j.at("max_depth").is_null()) m.params.max_depth = j.at("max_depth").get<int>();
  m.params.min_samples_split = j.at("min_samples_split").get<int>();
  m.feature_subset_size = j.at("feature_subset_size").get<int>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.width = j.at("width").get<std::size_t>();
  m.n_classes = j.at("n_classes").get<std::size_t>();
  m.feature_importances = j.at("feature_importances").get<std::vector<double>>();
  require(m.feature_importances.size() == m.width, "feature_importances length != width");
  for (const auto& t : j.at("trees")) {
    auto feature = t.at("feature").get<std::vector<int>>();
    auto threshold = t.at("threshold").get<std::vector<double>>();
    auto left = t.at("left").get<std::vector<int>>();
    auto right = t.at("right").get<std::vector<int>>();
    auto weight = t.at("weight").get<std::vector<double>>();
    auto impurity = t.at("impurity").get<std::vector<double>>();
    auto counts = t.at("class_counts").get<std::vector<std::vector<int>>>();
    const auto n = feature.size();
    require(n > 0 && threshold.size() == n && left.size() == n && right.size() == n && weight.size() == n &&
                impurity.size() == n && counts.size() == n,
            "tree arrays differ in length");
    DecisionTree tree;
    for (std::size_t i = 0; i < n; ++i) {
      TreeNode node{feature[i], threshold[i], left[i], right[i], weight[i], impurity[i], std::move(counts[i])};
      require(node.class_counts.size() == m.n_classes, "leaf class counts do not match n_classes");
      if (!node.is_leaf()) {
        // Children always follow their parent in the flattened layout.
        require(static_cast<std::size_t>(node.feature) < m.width, "split feature out of range");
        require(node.left > static_cast<int>(i) && node.right > static_cast<int>(i) &&
                    static_cast<std::size_t>(node.left) < n && static_cast<std::size_t>(node.right) < n,
                "child index out of range");
      }
      tree.nodes.push_back(std::move(node));
    }
    m.trees.push_back(std::move(tree));
  }
  require(m.trees.size() == static_cast<std::size_t>(m.params.n_trees), "tree count mismatch");
  return m;
}

inline json knn_json(const KnnModel& m) {
  return {{"k", m.k}, {"n_classes", m.n_classes}, {"labels", m.labels}, {"rows", matrix_json(m.rows)}};
}

inline KnnModel knn_from(const json& j) {
  KnnModel m;
  m.k = j.at("k").get<int>();
  m.n_classes = j.at("n_classes").get<std::size_t>();
  m.labels = j.at("labels").get<std::vector<ClassId>>();
  m.rows = matrix_from(j.at("rows"));
  require(m.labels.size() == m.rows.rows(), "knn label count != stored rows");
  require(m.k >= 1 && static_cast<std::size_t>(m.k) <= m.rows.rows(), "knn k out of range");
  for (auto l : m.labels) require(l >= 0 && static_cast<std::size_t>(l) < m.n_classes, "knn label out of range");
  return m;
}

inline json svm_json(const SvmModel& m) {
  return {{"lambda", m.params.lambda}, {"learning_rate", m.params.learning_rate}, {"epochs", m.params.epochs},
          {"w", m.w}, {"b", m.b}, {"scaler", scaler_json(m.scaler)}};
}

inline SvmModel svm_from(const json& j) {
  SvmModel m;
  m.params = {j.at("lambda").get<double>(), j.at("learning_rate").get<double>(), j.at("epochs").get<int>()};
  m.w = j.at("w").get<std::vector<double>>();
  m.b = j.at("b").get<double>();
  m.scaler = scaler_from(j.at("scaler"));
  require(m.scaler.mean.size() == m.w.size(), "svm scaler width != weight width");
  return m;
}

inline json mlp_json(const MlpModel& m) {
  const auto& p = m.params;
  return {{"hidden_size", p.hidden_size},
          {"learning_rate", p.learning_rate},
          {"epochs", p.epochs},
          {"batch_size", p.batch_size},
          {"tolerance", p.tolerance},
          {"patience", p.patience},
          {"seed", m.seed},
          {"epochs_run", m.epochs_run},
          {"hidden_weights", matrix_json(m.weights.hidden_weights)},
          {"hidden_bias", m.weights.hidden_bias},
          {"output_weights", matrix_json(m.weights.output_weights)},
          {"output_bias", m.weights.output_bias},
          {"scaler", scaler_json(m.scaler)}};
}

inline MlpModel mlp_from(const json& j) {
  MlpModel m;
  m.params.hidden_size = j.at("hidden_size").get<int>();
  m.params.learning_rate = j.at("learning_rate").get<double>();
  m.params.epochs = j.at("epochs").get<int>();
  m.params.batch_size = j.at("batch_size").get<int>();
  m.params.tolerance = j.at("tolerance").get<double>();
  m.params.patience = j.at("patience").get<int>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.epochs_run = j.at("epochs_run").get<int>();
  m.weights.hidden_weights = matrix_from(j.at("hidden_weights"));
  m.weights.hidden_bias = j.at("hidden_bias").get<AlignedVector>();
  m.weights.output_weights = matrix_from(j.at("output_weights"));
  m.weights.output_bias = j.at("output_bias").get<AlignedVector>();
  m.scaler = scaler_from(j.at("scaler"));
  const auto& w = m.weights;
  require(w.hidden_weights.rows() == static_cast<std::size_t>(m.params.hidden_size) &&
              w.hidden_bias.size() == w.hidden_weights.rows() && w.output_weights.cols() == w.hidden_weights.rows() &&
              w.output_bias.size() == w.output_weights.rows() && m.scaler.mean.size() == w.hidden_weights.cols(),
          "mlp weight shapes are inconsistent");
  return m;
}

inline json payload_json(const TrainedModel& model) {
  return std::visit(
      [](const auto& m) -> json {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, ForestModel>) return forest_json(m);
        else if constexpr (std::is_same_v<T, KnnModel>) return knn_json(m);
        else if constexpr (std::is_same_v<T, SvmModel>) return svm_json(m);
        else if constexpr (std::is_same_v<T, MlpModel>) return mlp_json(m);
        else {
          json order = json::array();
          for (auto name : kEnsembleTieBreakOrder) order.push_back(std::string(name));
          return {{"forest", forest_json(m.forest)},
                  {"mlp", mlp_json(m.mlp)},
                  {"knn", knn_json(m.knn)},
                  {"svm", svm_json(m.svm)},
                  {"tie_break_order", order}};
        }
      },
      model.payload);
}

inline TrainedModel model_from(ModelKind kind, const json& payload, LabelDictionary labels) {
  TrainedModel out{ForestModel{}, std::move(labels)};
  switch (kind) {
    case ModelKind::Forest: out.payload = forest_from(payload); break;
    case ModelKind::Knn: out.payload = knn_from(payload); break;
    case ModelKind::Svm: out.payload = svm_from(payload); break;
    case ModelKind::Mlp: out.payload = mlp_from(payload); break;
    case ModelKind::Ensemble: {
      EnsembleModel e{forest_from(payload.at("forest")), mlp_from(payload.at("mlp")), knn_from(payload.at("knn")),
                      svm_from(payload.at("svm"))};
      require(e.mlp.width() == e.forest.width && e.knn.width() == e.forest.width && e.svm.width() == e.forest.width,
              "ensemble members disagree on feature width");
      out.payload = std::move(e);
      break;
    }
  }
  return out;
}

}  // namespace store_detail

/// Canonical text form: sorted keys, shortest round-trip floats.
inline std::string serialize_model(const ModelEnvelope& env) {
  using nlohmann::json;
  const auto schema = env.schema();
  json j{{"format", "csimodel"},
         {"format_version", env.format_version},
         {"kind", std::string(to_string(env.kind()))},
         {"schema", {{"feature_width", schema.feature_width}, {"labels", schema.labels.names()}}},
         {"payload", store_detail::payload_json(env.model)},
         {"created_at", env.created_at},
         {"training_fingerprint", env.training_fingerprint}};
  return j.dump() + "\n";
}

inline ModelEnvelope parse_model(std::string_view text) {
  using nlohmann::json;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(Errc::CorruptModel, std::string("unparseable model file: ") + e.what());
  }
  try {
    if (!j.is_object() || j.value("format", "") != "csimodel") store_detail::corrupt("not a csimodel file");
    const int version = j.at("format_version").get<int>();
    if (version != kModelFormatVersion)
      throw Error(Errc::VersionMismatch, "model format version " + std::to_string(version) + " is not supported (expected " +
                                             std::to_string(kModelFormatVersion) + ")");
    const auto kind_name = j.at("kind").get<std::string>();
    const auto kind = parse_model_kind(kind_name);
    if (!kind) store_detail::corrupt("unknown model kind '" + kind_name + "'");

    const auto& schema = j.at("schema");
    const auto width = schema.at("feature_width").get<std::size_t>();
    const auto label_names = schema.at("labels").get<std::vector<std::string>>();
    LabelDictionary labels(label_names);
    store_detail::require(labels.names() == label_names, "schema labels must be unique and sorted");
    store_detail::require(width > 0, "feature_width must be positive");

    ModelEnvelope env;
    env.format_version = version;
    env.model = store_detail::model_from(*kind, j.at("payload"), std::move(labels));
    env.created_at = j.at("created_at").get<std::string>();
    env.training_fingerprint = j.at("training_fingerprint").get<std::string>();
    store_detail::require(env.model.width() == width, "payload width does not match schema feature_width");
    return env;
  } catch (const json::exception& e) {
    throw Error(Errc::CorruptModel, std::string("invalid model file: ") + e.what());
  }
}

inline void save_model(const ModelEnvelope& env, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_model(env));
}

inline ModelEnvelope load_model(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) throw Error(Errc::IoFailure, "no model file at " + path.string());
  return parse_model(detail::read_file(path));
}

}  // namespace csiact
