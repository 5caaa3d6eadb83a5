#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "csiact/classifiers/common.hpp"
#include "csiact/dataset.hpp"
#include "csiact/error.hpp"
#include "csiact/seeding.hpp"

namespace csiact {

/// A node of a flattened decision tree. Leaves have feature == -1.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;  // rows with x[feature] <= threshold go left
  int left = -1;
  int right = -1;
  double weight = 0.0;    // W_j: fraction of the tree's bootstrap rows reaching the node
  double impurity = 0.0;  // C_j: Gini impurity
  std::vector<int> class_counts;

  bool is_leaf() const noexcept { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // root at 0

  const TreeNode& leaf_for(std::span<const double> row) const {
    const TreeNode* node = &nodes.front();
    while (!node->is_leaf())
      node = &nodes[static_cast<std::size_t>(row[static_cast<std::size_t>(node->feature)] <= node->threshold
                                                 ? node->left
                                                 : node->right)];
    return *node;
  }

  bool operator==(const DecisionTree&) const = default;
};

struct ForestParams {
  int n_trees = 100;
  std::optional<int> max_depth;
  int min_samples_split = 2;

  bool operator==(const ForestParams&) const = default;
};

struct ForestModel {
  std::vector<DecisionTree> trees;
  ForestParams params;
  int feature_subset_size = 1;
  std::uint64_t seed = 0;
  std::vector<double> feature_importances;
  std::size_t width = 0;
  std::size_t n_classes = 0;

  bool operator==(const ForestModel&) const = default;
};

/// Gini impurity of a class-count vector.
inline double gini(std::span<const int> counts) noexcept {
  double total = 0.0;
  for (int c : counts) total += c;
  if (total <= 0.0) return 0.0;
  double sum_sq = 0.0;
  for (int c : counts) sum_sq += (c / total) * (c / total);
  return 1.0 - sum_sq;
}

/// Node importance W_j C_j - W_left C_left - W_right C_right.
inline double node_importance(const TreeNode& node, const TreeNode& left, const TreeNode& right) noexcept {
  return node.weight * node.impurity - left.weight * left.impurity - right.weight * right.impurity;
}

namespace forest_detail {

struct SplitCandidate {
  int feature = -1;
  double threshold = 0.0;
  double score = -1.0;  // sum_c left_c^2 / n_left + sum_c right_c^2 / n_right (higher is purer)
};

class TreeBuilder {
 public:
  // `columns` holds the training matrix feature-major: columns[f * n + r].
  TreeBuilder(const DesignMatrix& data, std::span<const double> columns, const ForestParams& params,
              int subset_size, std::size_t n_classes, std::uint64_t seed)
      : data_(data), columns_(columns), params_(params), subset_size_(subset_size), n_classes_(n_classes),
        rng_(seed) {
    features_.resize(data.width());
    std::iota(features_.begin(), features_.end(), 0);
  }

  /// Grows a tree on a bootstrap resample given as row multiplicities.
  /// Duplicated rows are carried once with their count, which yields the same
  /// splits as materializing every copy.
  DecisionTree build(const std::vector<int>& multiplicity) {
    rows_.clear();
    mult_ = multiplicity;
    std::int64_t total = 0;
    for (std::uint32_t r = 0; r < multiplicity.size(); ++r) {
      if (multiplicity[r] > 0) rows_.push_back(r);
      total += multiplicity[r];
    }
    total_ = static_cast<double>(total);
    tree_ = {};
    struct Pending {
      int node;
      std::size_t begin, end;
      int depth;
    };
    std::vector<Pending> stack;
    stack.push_back({make_node(0, rows_.size()), 0, rows_.size(), 0});
    while (!stack.empty()) {
      auto [node_id, begin, end, depth] = stack.back();
      stack.pop_back();
      const auto& node = tree_.nodes[static_cast<std::size_t>(node_id)];
      const int n = std::accumulate(node.class_counts.begin(), node.class_counts.end(), 0);
      if (node.impurity <= 0.0 || n < params_.min_samples_split ||
          (params_.max_depth && depth >= *params_.max_depth))
        continue;

      auto split = best_split(begin, end);
      if (split.feature < 0) continue;

      const auto col = column(split.feature);
      auto mid = std::partition(rows_.begin() + static_cast<std::ptrdiff_t>(begin),
                                rows_.begin() + static_cast<std::ptrdiff_t>(end),
                                [&](std::uint32_t r) { return col[r] <= split.threshold; });
      const auto split_at = static_cast<std::size_t>(mid - rows_.begin());
      const int left = make_node(begin, split_at);
      const int right = make_node(split_at, end);
      auto& parent = tree_.nodes[static_cast<std::size_t>(node_id)];
      parent.feature = split.feature;
      parent.threshold = split.threshold;
      parent.left = left;
      parent.right = right;
      stack.push_back({right, split_at, end, depth + 1});
      stack.push_back({left, begin, split_at, depth + 1});
    }
    return std::move(tree_);
  }

 private:
  int make_node(std::size_t begin, std::size_t end) {
    TreeNode node;
    node.class_counts.assign(n_classes_, 0);
    int n = 0;
    for (std::size_t i = begin; i < end; ++i) {
      node.class_counts[static_cast<std::size_t>(data_.labels[rows_[i]])] += mult_[rows_[i]];
      n += mult_[rows_[i]];
    }
    node.weight = static_cast<double>(n) / total_;
    node.impurity = gini(node.class_counts);
    tree_.nodes.push_back(std::move(node));
    return static_cast<int>(tree_.nodes.size() - 1);
  }

  // Features are drawn without replacement; constant features do not count
  // toward the subset size, so a node keeps searching until it has examined
  // subset_size informative features or run out of candidates.
  SplitCandidate best_split(std::size_t begin, std::size_t end) {
    SplitCandidate best;
    int informative = 0;
    std::size_t remaining = features_.size();
    while (remaining > 0 && informative < subset_size_) {
      std::uniform_int_distribution<std::size_t> pick(0, remaining - 1);
      const std::size_t j = pick(rng_);
      std::swap(features_[j], features_[remaining - 1]);
      const int feature = features_[--remaining];
      if (evaluate_feature(feature, begin, end, best)) ++informative;
    }
    return best;
  }

  std::span<const double> column(int feature) const {
    return columns_.subspan(static_cast<std::size_t>(feature) * data_.size(), data_.size());
  }

  bool evaluate_feature(int feature, std::size_t begin, std::size_t end, SplitCandidate& best) {
    const auto col = column(feature);
    const std::size_t n = end - begin;  // distinct rows
    double lo = col[rows_[begin]];
    double hi = lo;
    for (std::size_t i = begin + 1; i < end; ++i) {
      const double v = col[rows_[i]];
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (!(lo < hi)) return false;

    // Order among equal values is irrelevant: thresholds only fall between
    // distinct values.
    pairs_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto r = rows_[begin + i];
      pairs_[i] = {col[r], data_.labels[r], mult_[r]};
    }
    std::sort(pairs_.begin(), pairs_.end(), [](const Entry& a, const Entry& b) { return a.value < b.value; });

    left_.assign(n_classes_, 0);
    right_.assign(n_classes_, 0);
    int weight = 0;
    for (const auto& p : pairs_) {
      right_[static_cast<std::size_t>(p.label)] += p.weight;
      weight += p.weight;
    }
    const double n_total = weight;
    double left_sq = 0.0;
    double right_sq = 0.0;
    for (int c : right_) right_sq += static_cast<double>(c) * c;

    double n_left = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const auto c = static_cast<std::size_t>(pairs_[i].label);
      const double w = pairs_[i].weight;
      left_sq += w * (2.0 * left_[c] + w);
      right_sq -= w * (2.0 * right_[c] - w);
      left_[c] += pairs_[i].weight;
      right_[c] -= pairs_[i].weight;
      n_left += w;
      if (!(pairs_[i].value < pairs_[i + 1].value)) continue;
      const double score = left_sq / n_left + right_sq / (n_total - n_left);
      if (score > best.score) {
        double threshold = pairs_[i].value + (pairs_[i + 1].value - pairs_[i].value) / 2.0;
        if (!(threshold < pairs_[i + 1].value)) threshold = pairs_[i].value;
        best = {feature, threshold, score};
      }
    }
    return true;
  }

  const DesignMatrix& data_;
  std::span<const double> columns_;
  ForestParams params_;
  int subset_size_;
  std::size_t n_classes_;
  std::mt19937_64 rng_;
  std::vector<int> features_;
  std::vector<std::uint32_t> rows_;  // distinct bootstrap rows
  std::vector<int> mult_;
  double total_ = 0.0;
  DecisionTree tree_;
  struct Entry {
    double value;
    ClassId label;
    int weight;
  };
  std::vector<Entry> pairs_;
  std::vector<int> left_, right_;
};

}  // namespace forest_detail

/// Sum of node importances per feature over every split of every tree,
/// normalized to 1 when any split exists.
inline std::vector<double> feature_importances(std::span<const DecisionTree> trees, std::size_t width) {
  std::vector<double> imp(width, 0.0);
  for (const auto& tree : trees) {
    for (const auto& node : tree.nodes) {
      if (node.is_leaf()) continue;
      imp[static_cast<std::size_t>(node.feature)] +=
          node_importance(node, tree.nodes[static_cast<std::size_t>(node.left)],
                          tree.nodes[static_cast<std::size_t>(node.right)]);
    }
  }
  const double total = std::accumulate(imp.begin(), imp.end(), 0.0);
  if (total > 0.0)
    for (double& v : imp) v /= total;
  return imp;
}

/// Random forest of Gini trees on bootstrap resamples with a per-split
/// random feature subset of size ceil(sqrt(width)).
inline ForestModel fit_forest(const DesignMatrix& data, const ForestParams& params, std::uint64_t seed) {
  if (data.size() == 0) throw Error(Errc::DegenerateData, "cannot fit a forest on zero rows");
  if (data.width() == 0) throw Error(Errc::DegenerateData, "cannot fit a forest on zero features");
  if (params.n_trees < 1) throw Error(Errc::BadConfig, "n_trees must be >= 1");
  if (params.max_depth && *params.max_depth < 0) throw Error(Errc::BadConfig, "max_depth must be >= 0");

  ForestModel model;
  model.params = params;
  model.seed = seed;
  model.width = data.width();
  model.n_classes = std::max<std::size_t>(data.dictionary.size(), 1);
  model.feature_subset_size =
      static_cast<int>(std::ceil(std::sqrt(static_cast<double>(data.width()))));

  const std::size_t n = data.size();
  std::vector<double> columns(n * data.width());
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t f = 0; f < data.width(); ++f) columns[f * n + r] = data.rows(r, f);

  // Bootstrap draws index a content-sorted row order, so the fitted forest
  // does not depend on how the training rows happen to be ordered.
  std::vector<std::uint32_t> canonical(n);
  std::iota(canonical.begin(), canonical.end(), 0u);
  std::sort(canonical.begin(), canonical.end(), [&](std::uint32_t a, std::uint32_t b) {
    const auto ra = data.rows.row(a);
    const auto rb = data.rows.row(b);
    const auto cmp = std::lexicographical_compare_three_way(ra.begin(), ra.end(), rb.begin(), rb.end());
    if (cmp != 0) return cmp < 0;
    return data.labels[a] < data.labels[b];
  });

  model.trees.reserve(static_cast<std::size_t>(params.n_trees));
  for (int t = 0; t < params.n_trees; ++t) {
    const auto tree_seed = derive_seed(seed, static_cast<std::uint64_t>(t));
    std::mt19937_64 rng(tree_seed);
    std::uniform_int_distribution<std::uint32_t> pick(0, static_cast<std::uint32_t>(n - 1));
    std::vector<int> bootstrap(n, 0);
    for (std::size_t i = 0; i < n; ++i) ++bootstrap[canonical[pick(rng)]];
    forest_detail::TreeBuilder builder(data, columns, params, model.feature_subset_size, model.n_classes,
                                       derive_seed(tree_seed, "splits"));
    model.trees.push_back(builder.build(bootstrap));
  }
  model.feature_importances = feature_importances(model.trees, model.width);
  return model;
}

/// Majority class of a leaf; ties go to the lower class id.
inline ClassId leaf_label(const TreeNode& leaf) noexcept {
  return static_cast<ClassId>(std::max_element(leaf.class_counts.begin(), leaf.class_counts.end()) -
                              leaf.class_counts.begin());
}

/// Plurality over tree votes; ties go to the label with the larger summed
/// leaf counts, then to the lexicographically first label.
inline std::vector<ClassId> predict_forest(const ForestModel& model, const Matrix& rows) {
  check_width(rows, model.width);
  std::vector<ClassId> out(rows.rows());
  std::vector<int> votes(model.n_classes);
  std::vector<long> leaf_mass(model.n_classes);
  for (std::size_t r = 0; r < rows.rows(); ++r) {
    std::fill(votes.begin(), votes.end(), 0);
    std::fill(leaf_mass.begin(), leaf_mass.end(), 0);
    for (const auto& tree : model.trees) {
      const auto& leaf = tree.leaf_for(rows.row(r));
      ++votes[static_cast<std::size_t>(leaf_label(leaf))];
      for (std::size_t c = 0; c < model.n_classes; ++c) leaf_mass[c] += leaf.class_counts[c];
    }
    std::size_t best = 0;
    for (std::size_t c = 1; c < model.n_classes; ++c) {
      if (votes[c] > votes[best] || (votes[c] == votes[best] && leaf_mass[c] > leaf_mass[best])) best = c;
    }
    out[r] = static_cast<ClassId>(best);
  }
  return out;
}

}  // namespace csiact
