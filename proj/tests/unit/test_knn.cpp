#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "csiact/classifiers/knn.hpp"
#include "support.hpp"

using namespace csiact;
using csiact::testing::error_code_of;
using csiact::testing::make_matrix;

namespace {

// All-pairs oracle: stable sort by distance, then plurality over the k
// nearest, shrinking k while the vote is tied.
ClassId oracle_predict(const DesignMatrix& train, std::span<const double> q, int k, std::size_t n_classes) {
  std::vector<std::pair<double, std::size_t>> d;
  for (std::size_t i = 0; i < train.size(); ++i) {
    double s = 0.0;
    for (std::size_t c = 0; c < q.size(); ++c) s += (q[c] - train.rows(i, c)) * (q[c] - train.rows(i, c));
    d.emplace_back(std::sqrt(s), i);
  }
  std::stable_sort(d.begin(), d.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  for (int kk = k; kk >= 1; --kk) {
    std::vector<int> votes(n_classes, 0);
    for (int i = 0; i < kk; ++i) ++votes[static_cast<std::size_t>(train.labels[d[static_cast<std::size_t>(i)].second])];
    const int top = *std::max_element(votes.begin(), votes.end());
    if (std::count(votes.begin(), votes.end(), top) == 1)
      return static_cast<ClassId>(std::max_element(votes.begin(), votes.end()) - votes.begin());
  }
  return train.labels[d.front().second];
}

}  // namespace

TEST_CASE("knn_distance examples") {
  CHECK(knn_distance(std::vector<double>{0, 0}, std::vector<double>{3, 4}) == 5.0);
  const std::vector<double> x{1.5, -2.0, 7.0};
  CHECK(knn_distance(x, x) == 0.0);
  CHECK(knn_distance(std::vector<double>{1, 1, 1}, std::vector<double>{2, 2, 2}) == Catch::Approx(std::sqrt(3.0)));
  CHECK(error_code_of([] { knn_distance(std::vector<double>{1, 2}, std::vector<double>{1}); }) ==
        Errc::WidthMismatch);
}

TEST_CASE("predict_knn examples") {
  SECTION("k=1 picks the nearest row") {
    const auto m = fit_knn(make_matrix({{0, 0}, {10, 10}}, {0, 1}), {.k = 1});
    CHECK(predict_knn(m, Matrix::from_rows({{1, 1}})) == std::vector<ClassId>{0});
  }
  SECTION("k=3 majority") {
    const auto m = fit_knn(make_matrix({{0}, {1}, {2}, {50}}, {0, 0, 1, 1}), {.k = 3});
    CHECK(predict_knn(m, Matrix::from_rows({{0.5}})) == std::vector<ClassId>{0});
  }
  SECTION("query equal to a stored row with k=1") {
    const auto m = fit_knn(make_matrix({{1, 2}, {3, 4}, {5, 6}}, {0, 1, 0}), {.k = 1});
    CHECK(predict_knn(m, Matrix::from_rows({{3, 4}})) == std::vector<ClassId>{1});
  }
  SECTION("distance ties go to the lower stored index") {
    const auto m = fit_knn(make_matrix({{1}, {-1}}, {1, 0}), {.k = 1});
    CHECK(predict_knn(m, Matrix::from_rows({{0}})) == std::vector<ClassId>{1});
    const auto swapped = fit_knn(make_matrix({{-1}, {1}}, {0, 1}), {.k = 1});
    CHECK(predict_knn(swapped, Matrix::from_rows({{0}})) == std::vector<ClassId>{0});
  }
  SECTION("a tied vote drops the farthest neighbour") {
    const auto m = fit_knn(make_matrix({{0}, {3}, {4}, {9}}, {1, 0, 0, 1}), {.k = 4});
    // 2-2 at k=4, then 2-1 for class 0 among the three nearest to 2.5.
    CHECK(predict_knn(m, Matrix::from_rows({{2.5}})) == std::vector<ClassId>{0});
    const auto pair = fit_knn(make_matrix({{0}, {2}}, {1, 0}), {.k = 2});
    CHECK(predict_knn(pair, Matrix::from_rows({{0.4}})) == std::vector<ClassId>{1});
  }
}

TEST_CASE("fit_knn and predict_knn argument checks") {
  const auto dm = make_matrix({{0, 0}, {1, 1}}, {0, 1});
  CHECK(error_code_of([&] { fit_knn(dm, {.k = 0}); }) == Errc::BadConfig);
  CHECK(error_code_of([&] { fit_knn(dm, {.k = 3}); }) == Errc::BadConfig);
  const auto m = fit_knn(dm, {.k = 2});
  CHECK(error_code_of([&] { predict_knn(m, Matrix::from_rows({{1, 2, 3}})); }) == Errc::WidthMismatch);
}

TEST_CASE("predict_knn matches the brute-force oracle on 200 random instances") {
  std::mt19937_64 rng(2024);
  int instances = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto n = std::uniform_int_distribution<std::size_t>(1, 50)(rng);
    const auto d = std::uniform_int_distribution<std::size_t>(1, 8)(rng);
    const auto classes = std::uniform_int_distribution<std::size_t>(2, 4)(rng);
    auto train = csiact::testing::random_matrix(n, d, classes, rng);
    auto queries = csiact::testing::random_matrix(5, d, classes, rng);
    if (trial % 2) {
      // Coarse integer grid: plenty of exact distance ties.
      for (double& v : train.rows.data()) v = std::floor(v * 4.0);
      for (double& v : queries.rows.data()) v = std::floor(v * 4.0);
    }
    const int k = std::uniform_int_distribution<int>(1, static_cast<int>(std::min<std::size_t>(n, 9)))(rng);
    const auto model = fit_knn(train, {.k = k});
    const auto pred = predict_knn(model, queries.rows);
    for (std::size_t q = 0; q < queries.size(); ++q)
      CHECK(pred[q] == oracle_predict(train, queries.rows.row(q), k, classes));
    ++instances;
  }
  CHECK(instances == 200);
}

TEST_CASE("predict_knn ignores the order of stored rows without ties") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    const auto train = csiact::testing::random_matrix(30, 4, 2, rng);
    const auto queries = csiact::testing::random_matrix(20, 4, 2, rng);
    std::vector<std::size_t> perm(train.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    // Odd k on binary labels never produces a tied vote.
    const auto a = predict_knn(fit_knn(train, {.k = 5}), queries.rows);
    const auto b = predict_knn(fit_knn(train.subset(perm), {.k = 5}), queries.rows);
    CHECK(a == b);
  }
}
