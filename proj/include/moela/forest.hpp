// SPDX-License-Identifier: Apache-2.0
//
// Regression random forest: bootstrap-resampled CART trees with
// variance-reduction splits over a random third of the features per node.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "moela/error.hpp"
#include "moela/rng.hpp"

namespace moela {

struct TrainingSample {
  std::vector<double> features;
  double label = 0.0;
  friend bool operator==(const TrainingSample&, const TrainingSample&) = default;
};

struct ForestParams {
  int tree_count = 100;
  int max_depth = 12;
  int min_leaf = 4;
  friend bool operator==(const ForestParams&, const ForestParams&) = default;
};

struct TreeNode {
  int feature = -1;  // -1 for leaves
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct RegressionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  double predict(std::span<const double> x) const {
    int i = 0;
    while (nodes[i].feature >= 0) i = x[nodes[i].feature] <= nodes[i].threshold ? nodes[i].left : nodes[i].right;
    return nodes[i].value;
  }
  friend bool operator==(const RegressionTree&, const RegressionTree&) = default;
};

struct Forest {
  int feature_count = 0;
  ForestParams params;
  std::vector<RegressionTree> trees;
  friend bool operator==(const Forest&, const Forest&) = default;
};

namespace detail {

class TreeBuilder {
 public:
  TreeBuilder(std::span<const TrainingSample> data, const ForestParams& params, Rng& rng)
      : data_(data), params_(params), rng_(rng) {
    const int d = static_cast<int>(data[0].features.size());
    features_.resize(d);
    std::iota(features_.begin(), features_.end(), 0);
    mtry_ = std::max(1, (d + 2) / 3);
  }

  RegressionTree build(std::vector<int> rows) {
    RegressionTree tree;
    nodes_ = &tree.nodes;
    grow(rows, 0);
    return tree;
  }

 private:
  int grow(std::vector<int>& rows, int depth) {
    const int id = static_cast<int>(nodes_->size());
    nodes_->emplace_back();
    double sum = 0.0, sq = 0.0;
    for (int r : rows) {
      sum += data_[r].label;
      sq += data_[r].label * data_[r].label;
    }
    const double n = static_cast<double>(rows.size());
    const double mean = sum / n;
    (*nodes_)[id].value = mean;
    const double sse = sq - sum * mean;
    const int min_leaf = params_.min_leaf;
    if (depth >= params_.max_depth || static_cast<int>(rows.size()) < 2 * min_leaf || sse <= 1e-12 * (1.0 + sq))
      return id;

    // Partial Fisher-Yates: the first mtry_ entries become this node's subset.
    for (int i = 0; i < mtry_; ++i)
      std::swap(features_[i], features_[uniform_int(rng_, i, static_cast<int>(features_.size()) - 1)]);

    double best_gain = 0.0;
    int best_feature = -1;
    double best_threshold = 0.0;
    std::vector<std::pair<double, double>> column(rows.size());
    for (int fi = 0; fi < mtry_; ++fi) {
      const int f = features_[fi];
      for (std::size_t i = 0; i < rows.size(); ++i)
        column[i] = {data_[rows[i]].features[f], data_[rows[i]].label};
      std::sort(column.begin(), column.end());
      double left_sum = 0.0, left_sq = 0.0;
      for (std::size_t i = 0; i + 1 < column.size(); ++i) {
        left_sum += column[i].second;
        left_sq += column[i].second * column[i].second;
        const auto nl = static_cast<double>(i + 1);
        const double nr = n - nl;
        if (nl < min_leaf || nr < min_leaf) continue;
        if (!(column[i].first < column[i + 1].first)) continue;
        const double right_sum = sum - left_sum;
        const double right_sq = sq - left_sq;
        const double child_sse =
            (left_sq - left_sum * left_sum / nl) + (right_sq - right_sum * right_sum / nr);
        const double gain = sse - child_sse;
        if (gain > best_gain) {
          best_gain = gain;
          best_feature = f;
          double t = column[i].first + 0.5 * (column[i + 1].first - column[i].first);
          if (!(t < column[i + 1].first)) t = column[i].first;
          best_threshold = t;
        }
      }
    }
    if (best_feature < 0) return id;

    std::vector<int> left, right;
    for (int r : rows) (data_[r].features[best_feature] <= best_threshold ? left : right).push_back(r);
    rows.clear();
    rows.shrink_to_fit();
    const int l = grow(left, depth + 1);
    const int rgt = grow(right, depth + 1);
    auto& node = (*nodes_)[id];
    node.feature = best_feature;
    node.threshold = best_threshold;
    node.left = l;
    node.right = rgt;
    return id;
  }

  std::span<const TrainingSample> data_;
  const ForestParams& params_;
  Rng& rng_;
  std::vector<int> features_;
  int mtry_ = 1;
  std::vector<TreeNode>* nodes_ = nullptr;
};

}  // namespace detail

inline Forest rf_train(std::span<const TrainingSample> data, const ForestParams& params,
                       std::uint64_t seed) {
  if (data.size() < 2) throw Error(ErrorCode::InsufficientData, "need at least two samples");
  const std::size_t d = data[0].features.size();
  for (const auto& s : data)
    if (s.features.size() != d) throw Error(ErrorCode::DimMismatch, "ragged feature vectors");
  if (params.tree_count < 1 || params.max_depth < 0 || params.min_leaf < 1)
    throw Error(ErrorCode::BadConfig, "invalid forest hyperparameters");
  Forest forest;
  forest.feature_count = static_cast<int>(d);
  forest.params = params;
  forest.trees.reserve(params.tree_count);
  const int n = static_cast<int>(data.size());
  for (int t = 0; t < params.tree_count; ++t) {
    auto rng = make_rng(derive_seed(seed, {static_cast<std::uint64_t>(t)}));
    std::vector<int> rows(n);
    for (auto& r : rows) r = uniform_int(rng, 0, n - 1);
    detail::TreeBuilder builder(data, params, rng);
    forest.trees.push_back(builder.build(std::move(rows)));
  }
  return forest;
}

inline double rf_predict(const Forest& forest, std::span<const double> features) {
  if (static_cast<int>(features.size()) != forest.feature_count)
    throw Error(ErrorCode::DimMismatch, "feature length " + std::to_string(features.size()) +
                                            " vs trained " + std::to_string(forest.feature_count));
  if (forest.trees.empty()) return 0.0;
  double s = 0.0;
  for (const auto& t : forest.trees) s += t.predict(features);
  return s / static_cast<double>(forest.trees.size());
}

}  // namespace moela
