#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "qsl/binary_io.hpp"

namespace qsl {

struct MlpConfig {
  int width = 128;
  double dropout = 0.5;
  double learning_rate = 1e-3;
  /// Penalty l2 * (||W1||^2 + ||W2||^2); biases are not penalized.
  double l2 = 0.0;
  int batch_size = 32;
  int max_epochs = 1000;
  /// Epochs without validation improvement before stopping.
  int patience = 50;
  double validation_fraction = 0.2;
  bool classification = false;
};

/// FC(d_in x width) -> ReLU -> Dropout -> FC(width x d_out). Classification
/// outputs are logits.
struct Mlp {
  Eigen::MatrixXd w1;  // width x d_in
  Eigen::VectorXd b1;
  Eigen::MatrixXd w2;  // d_out x width
  Eigen::VectorXd b2;
  bool classification = false;
  double l2 = 0.0;

  static Mlp init(int d_in, int width, int d_out, std::uint64_t seed);
  Eigen::Index parameter_count() const noexcept;
  Eigen::VectorXd flatten() const;
  void unflatten(const Eigen::VectorXd& theta);

  /// Rows are samples; dropout is off.
  Eigen::MatrixXd forward(const Eigen::MatrixXd& x) const;
  void write(ByteWriter& w) const;
  static Mlp read(ByteReader& r);
};

/// Mean squared error (regression, averaged over samples and outputs) or mean
/// softmax cross-entropy against one-hot rows, plus the l2 penalty. `mask`
/// (width x n) multiplies the hidden activations when given. Writes the
/// gradient in flatten() order when `grad` is non-null.
double mlp_loss_and_gradient(const Mlp& net, const Eigen::MatrixXd& x, const Eigen::MatrixXd& targets,
                             double l2, const Eigen::MatrixXd* mask, Eigen::VectorXd* grad);

/// Adam on mini-batches with inverted dropout; keeps the parameters with the
/// best held-out objective (penalty included). Throws ConvergenceError when the loss becomes NaN.
Mlp fit_mlp(const Eigen::MatrixXd& x, const Eigen::MatrixXd& targets, const MlpConfig& config,
            std::uint64_t seed);

}  // namespace qsl
