#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "json.hpp"

#include "csiact/experiment.hpp"
#include "csiact/io.hpp"

namespace csiact {

inline constexpr int kReportFormatVersion = 1;

// ---------------------------------------------------------------------------
// JSON schema (keys are emitted in sorted order):
//
// {
//   "format": "csiact-report", "version": 1,
//   "protocol": {"type": "cv"|"split", "k": int, "test_fraction": real, "seed": uint},
//   "dataset": {"rows", "width", "test_rows", "labels": [..]},
//   "classifiers": [{
//     "name": "forest"|"knn"|"svm"|"mlp"|"ensemble",
//     "metrics": Metrics, "pooled_metrics": Metrics,
//     "confusion": {"labels": [..], "counts": [[..]]},   // [actual][predicted]
//     "folds": [{"metrics": Metrics, "confusion": ...}]  // CV only
//   }]
// }
// Metrics := {"accuracy", "precision_macro", "recall_macro", "f1_macro",
//             "zero_division", "per_class": [{"label", "precision", "recall", "f1"}]}

inline nlohmann::json to_json(const ConfusionMatrix& cm) {
  return {{"labels", cm.labels.names()}, {"counts", cm.counts}};
}

inline ConfusionMatrix confusion_from_json(const nlohmann::json& j) {
  return ConfusionMatrix(LabelDictionary(j.at("labels").get<std::vector<std::string>>()),
                         j.at("counts").get<std::vector<std::vector<std::int64_t>>>());
}

inline nlohmann::json to_json(const MetricsReport& m, const std::vector<std::string>& labels) {
  nlohmann::json per_class = nlohmann::json::array();
  for (std::size_t c = 0; c < m.per_class.size(); ++c) {
    per_class.push_back({{"label", labels.at(c)},
                         {"precision", m.per_class[c].precision},
                         {"recall", m.per_class[c].recall},
                         {"f1", m.per_class[c].f1}});
  }
  return {{"accuracy", m.accuracy},         {"precision_macro", m.precision_macro},
          {"recall_macro", m.recall_macro}, {"f1_macro", m.f1_macro},
          {"zero_division", m.zero_division}, {"per_class", per_class}};
}

inline MetricsReport metrics_from_json(const nlohmann::json& j) {
  MetricsReport m;
  m.accuracy = j.at("accuracy").get<double>();
  m.precision_macro = j.at("precision_macro").get<double>();
  m.recall_macro = j.at("recall_macro").get<double>();
  m.f1_macro = j.at("f1_macro").get<double>();
  m.zero_division = j.at("zero_division").get<bool>();
  for (const auto& c : j.at("per_class"))
    m.per_class.push_back({c.at("precision").get<double>(), c.at("recall").get<double>(), c.at("f1").get<double>()});
  return m;
}

inline nlohmann::json to_json(const Protocol& p) {
  nlohmann::json j{{"seed", p.seed}};
  if (p.type == Protocol::Type::CrossValidation) {
    j["type"] = "cv";
    j["k"] = p.k;
  } else {
    j["type"] = "split";
    j["test_fraction"] = p.test_fraction;
  }
  return j;
}

inline Protocol protocol_from_json(const nlohmann::json& j) {
  const auto type = j.at("type").get<std::string>();
  const auto seed = j.at("seed").get<std::uint64_t>();
  if (type == "cv") return Protocol::cv(j.at("k").get<int>(), seed);
  if (type == "split") return Protocol::split(j.at("test_fraction").get<double>(), seed);
  throw Error(Errc::CorruptModel, "unknown protocol type '" + type + "'");
}

inline nlohmann::json to_json(const ExperimentResult& r) {
  nlohmann::json classifiers = nlohmann::json::array();
  for (const auto& c : r.classifiers) {
    nlohmann::json entry{{"name", std::string(to_string(c.kind))},
                         {"metrics", to_json(c.metrics, r.dataset.labels)},
                         {"pooled_metrics", to_json(c.pooled_metrics, r.dataset.labels)},
                         {"confusion", to_json(c.confusion)}};
    if (r.protocol.type == Protocol::Type::CrossValidation) {
      nlohmann::json folds = nlohmann::json::array();
      for (const auto& f : c.folds)
        folds.push_back({{"metrics", to_json(f.metrics, r.dataset.labels)}, {"confusion", to_json(f.confusion)}});
      entry["folds"] = folds;
    }
    classifiers.push_back(std::move(entry));
  }
  return {{"format", "csiact-report"},
          {"version", kReportFormatVersion},
          {"protocol", to_json(r.protocol)},
          {"dataset",
           {{"rows", r.dataset.rows},
            {"width", r.dataset.width},
            {"test_rows", r.dataset.test_rows},
            {"labels", r.dataset.labels}}},
          {"classifiers", classifiers}};
}

inline ExperimentResult report_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "csiact-report") throw Error(Errc::CorruptModel, "not a csiact report");
  if (j.at("version").get<int>() != kReportFormatVersion)
    throw Error(Errc::VersionMismatch, "unsupported report version");
  ExperimentResult r;
  r.protocol = protocol_from_json(j.at("protocol"));
  const auto& d = j.at("dataset");
  r.dataset = {d.at("rows").get<std::size_t>(), d.at("width").get<std::size_t>(),
               d.at("labels").get<std::vector<std::string>>(), d.at("test_rows").get<std::size_t>()};
  for (const auto& c : j.at("classifiers")) {
    ClassifierResult cr;
    const auto name = c.at("name").get<std::string>();
    const auto kind = parse_model_kind(name);
    if (!kind) throw Error(Errc::CorruptModel, "unknown classifier '" + name + "'");
    cr.kind = *kind;
    cr.metrics = metrics_from_json(c.at("metrics"));
    cr.pooled_metrics = metrics_from_json(c.at("pooled_metrics"));
    cr.confusion = confusion_from_json(c.at("confusion"));
    if (c.contains("folds"))
      for (const auto& f : c.at("folds"))
        cr.folds.push_back({confusion_from_json(f.at("confusion")), metrics_from_json(f.at("metrics"))});
    r.classifiers.push_back(std::move(cr));
  }
  return r;
}

inline std::string format_report_json(const ExperimentResult& r) { return to_json(r).dump(2) + "\n"; }

/// Parses report text; malformed JSON or missing keys raise CorruptModel.
inline ExperimentResult parse_report(const std::string& text) {
  try {
    return report_from_json(nlohmann::json::parse(text));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::CorruptModel, std::string("malformed report: ") + e.what());
  }
}

inline void save_report(const ExperimentResult& r, const std::filesystem::path& path) {
  write_file_atomic(path, format_report_json(r));
}

inline ExperimentResult load_report(const std::filesystem::path& path) {
  return parse_report(detail::read_file(path));
}

// ---------------------------------------------------------------------------
// Text tables (two decimal places)

inline std::string format_fixed(double v, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

inline std::string pad_right(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

inline std::string protocol_title(const Protocol& p) {
  if (p.type == Protocol::Type::CrossValidation)
    return "Cross validation results (k=" + std::to_string(p.k) + ", seed=" + std::to_string(p.seed) + ")";
  return "Train test split results (test fraction=" + format_fixed(p.test_fraction) +
         ", seed=" + std::to_string(p.seed) + ")";
}

inline std::string format_results_table(const ExperimentResult& r) {
  std::string out = protocol_title(r.protocol) + "\n";
  out += pad_right("Algorithm", 26) + pad_right("Accuracy", 11) + pad_right("Precision", 11) +
         pad_right("Recall", 9) + "F1-score\n";
  for (const auto& c : r.classifiers) {
    out += pad_right(std::string(display_name(c.kind)), 26) +
           pad_right(format_fixed(c.metrics.accuracy * 100.0) + " %", 11) +
           pad_right(format_fixed(c.metrics.precision_macro), 11) + pad_right(format_fixed(c.metrics.recall_macro), 9) +
           format_fixed(c.metrics.f1_macro) + "\n";
  }
  return out;
}

/// Confusion matrix grid: rows are actual labels, columns predicted labels.
inline std::string format_confusion(const ConfusionMatrix& cm) {
  std::string out = pad_right("actual \\ predicted", 20);
  for (const auto& name : cm.labels.names()) out += pad_right(name, 12);
  out += "\n";
  for (std::size_t a = 0; a < cm.n_classes(); ++a) {
    out += pad_right(cm.labels.name(static_cast<ClassId>(a)), 20);
    for (auto v : cm.counts[a]) out += pad_right(std::to_string(v), 12);
    out += "\n";
  }
  return out;
}

inline nlohmann::json to_json(const Comparison& c) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : c.rows)
    rows.push_back({{"name", std::string(to_string(r.kind))},
                    {"accuracy_a", r.accuracy_a},
                    {"accuracy_b", r.accuracy_b},
                    {"delta_pp", r.delta_pp}});
  return {{"format", "csiact-comparison"}, {"version", kReportFormatVersion}, {"protocol", to_json(c.protocol)},
          {"rows", rows}};
}

inline std::string format_comparison_table(const Comparison& c) {
  std::string out = "Comparison of results (" + std::string(c.protocol.type == Protocol::Type::CrossValidation
                                                                  ? "cross validation"
                                                                  : "train test split") +
                    ")\n";
  out += pad_right("Algorithm", 26) + pad_right("Dataset A", 12) + pad_right("Dataset B", 12) + "Delta (pp)\n";
  for (const auto& r : c.rows) {
    auto delta = format_fixed(r.delta_pp);
    if (delta == "-0.00") delta = "0.00";
    if (delta != "0.00" && delta.front() != '-') delta.insert(0, "+");
    out += pad_right(std::string(display_name(r.kind)), 26) +
           pad_right(format_fixed(r.accuracy_a * 100.0) + " %", 12) +
           pad_right(format_fixed(r.accuracy_b * 100.0) + " %", 12) + delta + "\n";
  }
  return out;
}

}  // namespace csiact
