#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <variant>

#include "qsl/features.hpp"
#include "qsl/forest.hpp"
#include "qsl/linear_models.hpp"
#include "qsl/mlp.hpp"

namespace qsl {

enum class ModelKind : std::uint8_t {
  Ridge = 0,
  Lasso = 1,
  KernelRidge = 2,
  KernelLogistic = 3,
  RandomForest = 4,
  Mlp = 5,
};
std::string_view to_string(ModelKind k) noexcept;

enum class KernelKind : std::uint8_t { Rbf = 0, Ntk = 1, Dirichlet = 2 };

/// Dual model f(x) = sum_i alpha_i k(x, x_i) + b. Logistic machines return
/// logits in place of values.
struct KernelMachine {
  KernelKind kernel = KernelKind::Rbf;
  double gamma2 = 1.0;
  int cutoff = 3;
  Eigen::MatrixXd support;    // n x d
  Eigen::MatrixXd alpha;      // n x T
  Eigen::VectorXd intercept;  // T
  Eigen::VectorXd lambda;     // T

  Eigen::MatrixXd gram(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) const;
  Eigen::MatrixXd predict(const Eigen::MatrixXd& rows) const;
  void write(ByteWriter& w) const;
  static KernelMachine read(ByteReader& r);
};

struct Prediction {
  /// Regression targets, or class scores summing to 1.
  Eigen::VectorXd values;
  /// Argmax class for classifiers, -1 for regressors.
  int label = -1;
};

/// A fitted learner together with the input standardization and feature map
/// it was trained on, so prediction starts from raw parameters.
struct TrainedModel {
  ModelKind kind = ModelKind::Ridge;
  Standardizer input;
  FeatureSpec features;
  std::variant<LinearModel, KernelMachine, RandomForest, Mlp> body;

  bool is_classifier() const noexcept;
  Eigen::VectorXd featurize(std::span<const double> x, std::span<const std::uint8_t> v = {}) const;
  Prediction predict(std::span<const double> x, std::span<const std::uint8_t> v = {}) const;
  /// Prediction on already featurized rows.
  Prediction predict_features(const Eigen::VectorXd& phi) const;

  std::string serialize() const;
  static TrainedModel deserialize(std::string_view bytes);
};

}  // namespace qsl
