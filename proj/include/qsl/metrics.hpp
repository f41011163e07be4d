#pragma once

#include <Eigen/Dense>
#include <vector>

namespace qsl {

/// Rows are test instances, columns the C_ij with i<j (row-major). Per-pair
/// MSE averaged over all N^2 ordered pairs (diagonal contributes 0), then
/// square-rooted.
double rmse_correlation(const Eigen::MatrixXd& predicted, const Eigen::MatrixXd& exact, int nqubits);

/// Rows are test instances, columns the N-1 adjacent pairs.
double rmse_entropy(const Eigen::MatrixXd& predicted, const Eigen::MatrixXd& exact);

double accuracy(const std::vector<int>& predicted, const std::vector<int>& exact);

/// Spearman rank correlation (average ranks for ties).
double spearman(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace qsl
