#ifndef ACWB_TREE_HPP_
#define ACWB_TREE_HPP_

#include <cstdint>
#include <vector>

#include "acwb/common.hpp"
#include "acwb/data.hpp"

namespace acwb {

struct TreeNode {
  // -1 marks a leaf.
  int feature = -1;
  // Numeric split: x <= threshold goes left.
  double threshold = 0.0;
  // Categorical split: left_levels[code] != 0 goes left; codes past the end go right.
  std::vector<std::uint8_t> left_levels;
  int left = -1;
  int right = -1;
  double value = 0.0;

  bool is_leaf() const { return feature < 0; }
};

// Binary regression tree over the columns of a preprocessed dataset; feature
// indices refer to column positions.
struct RegressionTree {
  std::vector<TreeNode> nodes;

  double predict_row(const Dataset& ds, Index row) const;
  Vector predict(const Dataset& ds) const;
  void add_prediction(const Dataset& ds, Vector& f, double scale) const;
  int depth() const;
};

struct TreeOptions {
  int max_depth = 6;
  int min_leaf = 10;
  // Features tried per split; 0 means all.
  int features_per_split = 0;
};

// Greedy CART growth on squared error. Numeric columns are presorted once so
// that each depth level costs one pass per feature.
class TreeFitter {
 public:
  explicit TreeFitter(const Dataset& ds);

  // weights: per-row multiplicity (empty = all ones). The rng is only used
  // for per-node feature subsampling.
  RegressionTree fit(const Vector& residuals, const TreeOptions& options, const Vector& weights = {},
                     Rng* rng = nullptr) const;

  Index n_rows() const { return n_; }
  int n_features() const { return static_cast<int>(columns_.size()); }

 private:
  struct FeatureData {
    bool numeric = true;
    const Vector* values = nullptr;
    const std::vector<std::int32_t>* codes = nullptr;
    int n_levels = 0;
    std::vector<Index> order;  // numeric: rows sorted by value
  };

  Index n_ = 0;
  std::vector<FeatureData> columns_;
};

RegressionTree fit_regression_tree(const Dataset& ds, const Vector& residuals, int max_depth, int min_leaf);

}  // namespace acwb

#endif  // ACWB_TREE_HPP_
