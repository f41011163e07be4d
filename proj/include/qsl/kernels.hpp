#pragma once

#include <Eigen/Dense>

namespace qsl {

/// Rows of `xs` are points. gamma^2 = sum_ij ||x_i - x_j||^2 / (2 n^2);
/// throws when every point coincides.
double heuristic_gamma2(const Eigen::MatrixXd& xs);

/// K_ij = exp(-||a_i - b_j||^2 / (2 gamma^2)).
Eigen::MatrixXd rbf_gram(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double gamma2);

/// Infinite-width NTK of a bias-free ReLU network with two hidden layers
/// (He-scaled, c_sigma = 2).
double ntk_value(const Eigen::VectorXd& x, const Eigen::VectorXd& y);
Eigen::MatrixXd ntk_gram(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/// sum over ||k||_2 <= cutoff of cos(pi k.(x - y)) on the leading
/// min(dim, 4) coordinates.
Eigen::MatrixXd dirichlet_gram(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, int cutoff = 3);

}  // namespace qsl
