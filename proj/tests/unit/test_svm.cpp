#include <catch_amalgamated.hpp>

#include <random>

#include "csiact/classifiers/svm.hpp"
#include "support.hpp"

using namespace csiact;
using csiact::testing::error_code_of;
using csiact::testing::gaussian_blobs;

TEST_CASE("decision rule examples") {
  const std::vector<double> w{1.0, 0.0};
  CHECK(svm_decision(w, 0.0, std::vector<double>{2.0, 0.0}) == 2.0);
  CHECK(svm_class(svm_decision(w, 0.0, std::vector<double>{2.0, 0.0})) == kSvmPositiveClass);
  CHECK(svm_class(svm_decision(w, 0.0, std::vector<double>{-2.0, 0.0})) == kSvmNegativeClass);
  // The boundary itself is on the negative side.
  CHECK(svm_class(svm_decision(w, 0.0, std::vector<double>{0.0, 5.0})) == kSvmNegativeClass);
  CHECK(kSvmPositiveClass == LabelDictionary::activities().id("sitting"));
}

TEST_CASE("fit_svm separates two blobs of 20 rows") {
  const auto dm = gaussian_blobs(10, 2, 3.0, 12);
  const auto m = fit_svm(dm, {}, 1);
  const auto pred = predict_svm(m, dm.rows);

  // The toy set must be linearly separable for the check to mean anything:
  // the blob centres' bisector separates every point.
  int separable = 0;
  for (std::size_t i = 0; i < dm.size(); ++i) {
    const double s = dm.rows(i, 0) + dm.rows(i, 1);
    separable += (s < 0.0) == (dm.labels[i] == 0);
  }
  REQUIRE(separable == 20);

  int hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == dm.labels[i];
  CHECK(hits >= 19);
}

TEST_CASE("predictions agree with the sign of the standardized decision value") {
  const auto dm = gaussian_blobs(40, 5, 0.5, 13);
  const auto m = fit_svm(dm, {.epochs = 20}, 4);
  std::mt19937_64 rng(6);
  const auto queries = csiact::testing::random_matrix(200, 5, 2, rng);
  const auto pred = predict_svm(m, queries.rows);
  for (std::size_t r = 0; r < queries.size(); ++r) {
    double decision = m.b;
    for (std::size_t c = 0; c < 5; ++c)
      decision += m.w[c] * (queries.rows(r, c) - m.scaler.mean[c]) / m.scaler.scale[c];
    CHECK(pred[r] == (decision > 0.0 ? 0 : 1));
  }
}

TEST_CASE("fit_svm stores a standardizing scaler") {
  const auto dm = gaussian_blobs(25, 3, 1.0, 14);
  const auto m = fit_svm(dm, {.epochs = 5}, 1);
  const auto x = m.scaler.transform(dm.rows);
  for (std::size_t c = 0; c < 3; ++c) {
    double mean = 0.0, sq = 0.0;
    for (std::size_t r = 0; r < x.rows(); ++r) mean += x(r, c);
    mean /= static_cast<double>(x.rows());
    for (std::size_t r = 0; r < x.rows(); ++r) sq += (x(r, c) - mean) * (x(r, c) - mean);
    CHECK(mean == Catch::Approx(0.0).margin(1e-12));
    CHECK(sq / static_cast<double>(x.rows()) == Catch::Approx(1.0));
  }
}

TEST_CASE("fit_svm is deterministic and rejects non-binary data") {
  const auto dm = gaussian_blobs(20, 3, 1.0, 15);
  CHECK(fit_svm(dm, {.epochs = 10}, 5) == fit_svm(dm, {.epochs = 10}, 5));
  CHECK(!(fit_svm(dm, {.epochs = 10}, 5) == fit_svm(dm, {.epochs = 10}, 6)));

  std::mt19937_64 rng(1);
  const auto three = csiact::testing::random_matrix(12, 2, 3, rng);
  CHECK(error_code_of([&] { fit_svm(three, {}, 1); }) == Errc::NotBinary);
  CHECK(error_code_of([&] { fit_svm(dm, {.learning_rate = 0.0}, 1); }) == Errc::BadConfig);
  const auto m = fit_svm(dm, {.epochs = 1}, 1);
  CHECK(error_code_of([&] { predict_svm(m, Matrix::from_rows({{1.0}})); }) == Errc::WidthMismatch);
}
