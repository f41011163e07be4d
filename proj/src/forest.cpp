#include "qsl/forest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "qsl/random.hpp"

namespace qsl {

namespace {

int majority(const std::vector<int>& counts) {
  return static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double score = 0.0;  // sum over children of n_child * gini_child
};

class TreeBuilder {
 public:
  TreeBuilder(const Eigen::MatrixXd& x, const std::vector<int>& labels, int classes,
              const ForestConfig& config, Rng& rng)
      : x_(x), labels_(labels), classes_(classes), config_(config), rng_(rng) {
    const int d = static_cast<int>(x.cols());
    mtry_ = config.max_features > 0 ? std::min(config.max_features, d)
                                    : std::max(1, static_cast<int>(std::floor(std::sqrt(d))));
    features_.resize(static_cast<std::size_t>(d));
    std::iota(features_.begin(), features_.end(), 0);
  }

  DecisionTree build(std::vector<int> rows) {
    DecisionTree tree;
    grow(tree, rows, 0);
    return tree;
  }

 private:
  int grow(DecisionTree& tree, std::vector<int>& rows, int depth) {
    const int id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    std::vector<int> counts(static_cast<std::size_t>(classes_), 0);
    for (int r : rows) ++counts[static_cast<std::size_t>(labels_[static_cast<std::size_t>(r)])];
    tree.nodes[static_cast<std::size_t>(id)].label = majority(counts);

    const bool pure = std::count(counts.begin(), counts.end(), 0) >= classes_ - 1;
    const bool deep = config_.max_depth >= 0 && depth >= config_.max_depth;
    if (pure || deep || static_cast<int>(rows.size()) < config_.min_samples_split) return id;

    const Split split = best_split(rows, counts);
    if (split.feature < 0) return id;

    std::vector<int> left, right;
    for (int r : rows) {
      (x_(r, split.feature) <= split.threshold ? left : right).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();
    const int l = grow(tree, left, depth + 1);
    const int rr = grow(tree, right, depth + 1);
    TreeNode& node = tree.nodes[static_cast<std::size_t>(id)];
    node.feature = split.feature;
    node.threshold = split.threshold;
    node.left = l;
    node.right = rr;
    return id;
  }

  // Tries mtry random features; keeps drawing when none of them separates
  // the node.
  Split best_split(const std::vector<int>& rows, const std::vector<int>& counts) {
    const std::size_t d = features_.size();
    Split best;
    best.score = std::numeric_limits<double>::infinity();
    std::vector<std::pair<double, int>> order(rows.size());
    std::vector<int> left(static_cast<std::size_t>(classes_));
    for (std::size_t k = 0; k < d; ++k) {
      std::uniform_int_distribution<std::size_t> pick(k, d - 1);
      std::swap(features_[k], features_[pick(rng_)]);
      if (static_cast<int>(k) >= mtry_ && best.feature >= 0) break;
      const int f = features_[k];

      for (std::size_t i = 0; i < rows.size(); ++i) {
        order[i] = {x_(rows[i], f), labels_[static_cast<std::size_t>(rows[i])]};
      }
      std::sort(order.begin(), order.end());
      if (order.front().first == order.back().first) continue;

      std::fill(left.begin(), left.end(), 0);
      const double total = static_cast<double>(rows.size());
      for (std::size_t i = 0; i + 1 < order.size(); ++i) {
        ++left[static_cast<std::size_t>(order[i].second)];
        if (order[i].first == order[i + 1].first) continue;
        const double nl = static_cast<double>(i + 1);
        const double nr = total - nl;
        double sl = 0.0, sr = 0.0;
        for (int c = 0; c < classes_; ++c) {
          const double a = left[static_cast<std::size_t>(c)];
          const double b = counts[static_cast<std::size_t>(c)] - a;
          sl += a * a;
          sr += b * b;
        }
        const double score = (nl - sl / nl) + (nr - sr / nr);
        if (score < best.score) {
          best.score = score;
          best.feature = f;
          best.threshold = 0.5 * (order[i].first + order[i + 1].first);
          // Midpoints can round onto the upper value for adjacent doubles.
          if (best.threshold >= order[i + 1].first) best.threshold = order[i].first;
        }
      }
    }
    return best;
  }

  const Eigen::MatrixXd& x_;
  const std::vector<int>& labels_;
  int classes_;
  const ForestConfig& config_;
  Rng& rng_;
  int mtry_;
  std::vector<int> features_;
};

}  // namespace

int DecisionTree::predict(const double* x) const {
  int i = 0;
  while (nodes[static_cast<std::size_t>(i)].feature >= 0) {
    const TreeNode& n = nodes[static_cast<std::size_t>(i)];
    i = x[n.feature] <= n.threshold ? n.left : n.right;
  }
  return nodes[static_cast<std::size_t>(i)].label;
}

Eigen::VectorXd RandomForest::votes(const Eigen::VectorXd& x) const {
  if (x.size() != num_features) throw std::invalid_argument("RandomForest: feature dimension mismatch");
  Eigen::VectorXd v = Eigen::VectorXd::Zero(num_classes);
  for (const auto& t : trees) v[t.predict(x.data())] += 1.0;
  return v / static_cast<double>(trees.size());
}

int RandomForest::predict(const Eigen::VectorXd& x) const {
  const Eigen::VectorXd v = votes(x);
  Eigen::Index best = 0;
  for (Eigen::Index c = 1; c < v.size(); ++c) {
    if (v[c] > v[best]) best = c;
  }
  return static_cast<int>(best);
}

void RandomForest::write(ByteWriter& w) const {
  w.put<std::int32_t>(num_classes);
  w.put<std::int32_t>(num_features);
  w.put<std::int32_t>(config.trees);
  w.put<std::int32_t>(config.max_depth);
  w.put<std::int32_t>(config.min_samples_split);
  w.put<std::int32_t>(config.max_features);
  w.put<std::uint8_t>(config.bootstrap ? 1 : 0);
  w.put<std::uint64_t>(trees.size());
  for (const auto& t : trees) w.put_span(std::span<const TreeNode>(t.nodes));
}

RandomForest RandomForest::read(ByteReader& r) {
  RandomForest f;
  f.num_classes = r.get<std::int32_t>();
  f.num_features = r.get<std::int32_t>();
  f.config.trees = r.get<std::int32_t>();
  f.config.max_depth = r.get<std::int32_t>();
  f.config.min_samples_split = r.get<std::int32_t>();
  f.config.max_features = r.get<std::int32_t>();
  f.config.bootstrap = r.get<std::uint8_t>() != 0;
  const auto count = r.get<std::uint64_t>();
  if (f.num_classes < 1 || f.num_features < 1) throw std::runtime_error("RandomForest: bad record");
  for (std::uint64_t t = 0; t < count; ++t) {
    DecisionTree tree;
    tree.nodes = r.get_vector<TreeNode>();
    const auto size = static_cast<int>(tree.nodes.size());
    for (const auto& n : tree.nodes) {
      const bool bad = n.feature >= f.num_features || n.label < 0 || n.label >= f.num_classes ||
                       (n.feature >= 0 && (n.left <= 0 || n.left >= size || n.right <= 0 || n.right >= size));
      if (bad) throw std::runtime_error("RandomForest: corrupt tree");
    }
    f.trees.push_back(std::move(tree));
  }
  return f;
}

RandomForest fit_random_forest(const Eigen::MatrixXd& x, const std::vector<int>& labels,
                               const ForestConfig& config, std::uint64_t seed, int threads) {
  if (x.rows() == 0 || x.cols() == 0) throw std::invalid_argument("fit_random_forest: empty data");
  if (static_cast<std::size_t>(x.rows()) != labels.size()) {
    throw std::invalid_argument("fit_random_forest: label count mismatch");
  }
  if (config.trees < 1) throw std::invalid_argument("fit_random_forest: need at least one tree");
  if (*std::min_element(labels.begin(), labels.end()) < 0) {
    throw std::invalid_argument("fit_random_forest: labels must be >= 0");
  }

  RandomForest forest;
  forest.num_classes = *std::max_element(labels.begin(), labels.end()) + 1;
  forest.num_features = static_cast<int>(x.cols());
  forest.config = config;
  forest.trees.resize(static_cast<std::size_t>(config.trees));

  const int n = static_cast<int>(x.rows());
  parallel_for(forest.trees.size(), threads, [&](std::size_t t) {
    Rng rng = make_rng(seed, {t});
    std::uniform_int_distribution<int> draw(0, n - 1);
    std::vector<int> rows(static_cast<std::size_t>(n));
    if (config.bootstrap) {
      for (int& r : rows) r = draw(rng);
    } else {
      std::iota(rows.begin(), rows.end(), 0);
    }
    TreeBuilder builder(x, labels, forest.num_classes, config, rng);
    forest.trees[t] = builder.build(std::move(rows));
  });
  return forest;
}

}  // namespace qsl
