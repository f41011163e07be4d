#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "qsl/binary_io.hpp"

namespace qsl {

struct ForestConfig {
  int trees = 100;
  /// Negative means unlimited.
  int max_depth = -1;
  int min_samples_split = 2;
  /// Features tried per split; 0 means floor(sqrt(d)).
  int max_features = 0;
  /// Each tree sees a bootstrap resample; otherwise every tree sees all rows.
  bool bootstrap = true;
};

struct TreeNode {
  double threshold = 0.0;
  int feature = -1;  // -1 marks a leaf
  int left = -1;
  int right = -1;
  int label = 0;
};

/// CART tree; x goes left when x[feature] <= threshold.
struct DecisionTree {
  std::vector<TreeNode> nodes;
  int predict(const double* x) const;
};

struct RandomForest {
  int num_classes = 0;
  int num_features = 0;
  ForestConfig config;
  std::vector<DecisionTree> trees;

  /// Fraction of trees voting for each class.
  Eigen::VectorXd votes(const Eigen::VectorXd& x) const;
  /// Majority vote; ties go to the lowest class index.
  int predict(const Eigen::VectorXd& x) const;
  void write(ByteWriter& w) const;
  static RandomForest read(ByteReader& r);
};

/// Bagged Gini CART trees with per-split feature subsampling. Tree t draws
/// from a stream derived from (seed, t), so the result does not depend on
/// `threads`.
RandomForest fit_random_forest(const Eigen::MatrixXd& x, const std::vector<int>& labels,
                               const ForestConfig& config, std::uint64_t seed, int threads = 1);

}  // namespace qsl
