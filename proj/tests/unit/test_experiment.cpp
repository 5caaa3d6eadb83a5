#include <catch_amalgamated.hpp>

#include <random>

#include "csiact/experiment.hpp"
#include "csiact/report.hpp"
#include "support.hpp"

using namespace csiact;
using csiact::testing::error_code_of;
using csiact::testing::gaussian_blobs;

namespace {

ClassifierSpec quick_spec() {
  ClassifierSpec spec;
  spec.forest.n_trees = 10;
  spec.knn.k = 3;
  spec.svm.epochs = 20;
  spec.mlp.hidden_size = 8;
  spec.mlp.epochs = 20;
  return spec;
}

const std::vector<ModelKind> all_kinds(kAllModelKinds.begin(), kAllModelKinds.end());

DesignMatrix constant_label(std::size_t n) {
  std::mt19937_64 rng(9);
  auto dm = csiact::testing::random_matrix(n, 4, 2, rng);
  for (auto& l : dm.labels) l = 1;
  return dm;
}

// Hand-built result carrying only the accuracies of each classifier.
ExperimentResult with_accuracies(Protocol protocol, const std::vector<std::pair<ModelKind, double>>& rows) {
  ExperimentResult r;
  r.protocol = protocol;
  r.dataset = {3840, 525, LabelDictionary::activities().names(), 3840};
  for (auto [kind, acc] : rows) {
    ClassifierResult c;
    c.kind = kind;
    c.metrics.accuracy = acc;
    c.metrics.per_class.resize(2);
    c.pooled_metrics = c.metrics;
    c.confusion = ConfusionMatrix(LabelDictionary::activities());
    r.classifiers.push_back(c);
  }
  return r;
}

}  // namespace

TEST_CASE("a constant-label dataset scores 1.0 in every fold") {
  const auto dm = constant_label(40);
  auto spec = quick_spec();
  spec.mlp = MlpParams{};
  const auto cv = run_cross_validation(dm, 5, spec, all_kinds, 3);
  REQUIRE(cv.classifiers.size() == 5);
  for (const auto& c : cv.classifiers) {
    INFO(to_string(c.kind));
    CHECK(c.metrics.accuracy == 1.0);
    for (const auto& f : c.folds) CHECK(f.metrics.accuracy == 1.0);
  }
  const auto split = run_train_test_split(dm, 0.3, spec, all_kinds, 3);
  for (const auto& c : split.classifiers) CHECK(c.metrics.accuracy == 1.0);
}

TEST_CASE("cross-validation bookkeeping") {
  const auto dm = gaussian_blobs(37, 3, 0.7, 20);
  const auto r = run_cross_validation(dm, 10, quick_spec(), all_kinds, 5);
  CHECK(r.protocol == Protocol::cv(10, 5));
  CHECK(r.dataset.rows == 74);
  CHECK(r.dataset.test_rows == 74);
  for (const auto& c : r.classifiers) {
    REQUIRE(c.folds.size() == 10);
    ConfusionMatrix sum(dm.dictionary);
    double mean_acc = 0.0;
    for (const auto& f : c.folds) {
      sum += f.confusion;
      mean_acc += f.metrics.accuracy;
    }
    CHECK(sum == c.confusion);
    CHECK(c.confusion.total() == 74);
    CHECK(c.metrics.accuracy == Catch::Approx(mean_acc / 10.0).epsilon(1e-14));
    CHECK(c.pooled_metrics == metrics(c.confusion));
  }
}

TEST_CASE("the set of requested kinds does not change any one kind's results") {
  const auto dm = gaussian_blobs(20, 3, 0.5, 21);
  const auto r = run_cross_validation(dm, 4, quick_spec(), all_kinds, 8);
  const auto only_forest = run_cross_validation(dm, 4, quick_spec(), {ModelKind::Forest}, 8);
  CHECK(*r.find(ModelKind::Forest) == only_forest.classifiers.front());
}

TEST_CASE("experiments are deterministic in their seed") {
  const auto dm = gaussian_blobs(25, 3, 0.5, 22);
  CHECK(run_cross_validation(dm, 5, quick_spec(), all_kinds, 1) ==
        run_cross_validation(dm, 5, quick_spec(), all_kinds, 1));
  CHECK(run_train_test_split(dm, 0.3, quick_spec(), all_kinds, 1) ==
        run_train_test_split(dm, 0.3, quick_spec(), all_kinds, 1));
}

TEST_CASE("a split scores the rounded test fraction") {
  const auto dm = gaussian_blobs(50, 2, 1.0, 23);
  const auto r = run_train_test_split(dm, 0.3, quick_spec(), {ModelKind::Knn}, 2);
  CHECK(r.dataset.test_rows == 30);
  CHECK(r.classifiers.front().confusion.total() == 30);
  CHECK(r.classifiers.front().folds.empty());
  CHECK(error_code_of([&] { run_train_test_split(dm, 1.5, quick_spec(), {ModelKind::Knn}, 2); }) ==
        Errc::BadFraction);
}

TEST_CASE("multi-class data runs the kinds that support it") {
  std::mt19937_64 rng(4);
  const auto dm = csiact::testing::random_matrix(60, 3, 3, rng);
  const auto kinds = default_kinds(dm);
  CHECK(kinds == std::vector<ModelKind>{ModelKind::Forest, ModelKind::Knn, ModelKind::Mlp});
  const auto r = run_cross_validation(dm, 3, quick_spec(), kinds, 1);
  for (const auto& c : r.classifiers) CHECK(c.confusion.n_classes() == 3);
  CHECK(default_kinds(gaussian_blobs(5, 2, 1.0, 1)).size() == 5);
}

TEST_CASE("compare_datasets reproduces the random forest delta") {
  const auto a = with_accuracies(Protocol::cv(10, 42), {{ModelKind::Forest, 0.9247}, {ModelKind::Knn, 0.90}});
  const auto b = with_accuracies(Protocol::cv(10, 7), {{ModelKind::Knn, 0.90}, {ModelKind::Forest, 0.9120}});
  const auto cmp = compare_datasets(a, b);
  REQUIRE(cmp.rows.size() == 2);
  CHECK(cmp.rows[0].kind == ModelKind::Forest);
  CHECK(cmp.rows[0].delta_pp == Catch::Approx(1.27).margin(1e-9));
  CHECK(cmp.rows[1].delta_pp == 0.0);
  const auto table = format_comparison_table(cmp);
  CHECK(table.find("92.47 %") != std::string::npos);
  CHECK(table.find("91.20 %") != std::string::npos);
  CHECK(table.find("+1.27") != std::string::npos);
  CHECK(to_json(cmp)["rows"][0]["name"] == "forest");
}

TEST_CASE("comparing a result with itself gives zero deltas") {
  const auto dm = gaussian_blobs(15, 2, 1.0, 24);
  const auto r = run_cross_validation(dm, 3, quick_spec(), all_kinds, 1);
  for (const auto& row : compare_datasets(r, r).rows) CHECK(row.delta_pp == 0.0);
  CHECK(format_comparison_table(compare_datasets(r, r)).find("+") == std::string::npos);
}

TEST_CASE("comparisons across protocols or classifier sets are refused") {
  const auto cv = with_accuracies(Protocol::cv(10, 1), {{ModelKind::Forest, 0.9}});
  const auto split = with_accuracies(Protocol::split(0.3, 1), {{ModelKind::Forest, 0.9}});
  const auto cv5 = with_accuracies(Protocol::cv(5, 1), {{ModelKind::Forest, 0.9}});
  const auto knn = with_accuracies(Protocol::cv(10, 1), {{ModelKind::Knn, 0.9}});
  CHECK(error_code_of([&] { compare_datasets(cv, split); }) == Errc::ProtocolMismatch);
  CHECK(error_code_of([&] { compare_datasets(cv, cv5); }) == Errc::ProtocolMismatch);
  CHECK(error_code_of([&] { compare_datasets(cv, knn); }) == Errc::ProtocolMismatch);
}

TEST_CASE("reports round-trip through JSON text") {
  const auto dm = gaussian_blobs(15, 2, 0.6, 25);
  for (const auto& r : {run_cross_validation(dm, 3, quick_spec(), all_kinds, 2),
                        run_train_test_split(dm, 0.3, quick_spec(), all_kinds, 2)}) {
    const auto text = format_report_json(r);
    const auto back = parse_report(text);
    CHECK(back == r);
    CHECK(format_report_json(back) == text);
  }
  CHECK(error_code_of([] { parse_report("{"); }) == Errc::CorruptModel);
  CHECK(error_code_of([] { parse_report(R"({"format":"csiact-report","version":2})"); }) == Errc::VersionMismatch);

  csiact::testing::TempDir dir;
  const auto r = run_train_test_split(dm, 0.3, quick_spec(), {ModelKind::Svm}, 2);
  save_report(r, dir / "report.json");
  CHECK(load_report(dir / "report.json") == r);
  CHECK(csiact::testing::read_text(dir / "report.json") == format_report_json(r));
}

TEST_CASE("results table shows accuracies as percentages with two decimals") {
  auto r = with_accuracies(Protocol::cv(10, 42), {{ModelKind::Forest, 0.0}});
  r.classifiers[0].metrics = metrics(ConfusionMatrix(LabelDictionary::activities(), {{1821, 99}, {190, 1730}}));
  const auto table = format_results_table(r);
  CHECK(table.find("Random Forest") != std::string::npos);
  CHECK(table.find("92.47 %") != std::string::npos);
  CHECK(table.find("0.93") != std::string::npos);
  CHECK(table.find("seed=42") != std::string::npos);
  const auto grid = format_confusion(r.classifiers[0].confusion);
  CHECK(grid.find("sitting") != std::string::npos);
}
