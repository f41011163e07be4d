#include "qsl/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "qsl/features.hpp"

namespace qsl {

namespace {

constexpr int kNtkDepth = 2;

Eigen::MatrixXd squared_distances(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const Eigen::VectorXd na = a.rowwise().squaredNorm();
  const Eigen::VectorXd nb = b.rowwise().squaredNorm();
  Eigen::MatrixXd d = -2.0 * a * b.transpose();
  d.colwise() += na;
  d.rowwise() += nb.transpose();
  return d.cwiseMax(0.0);
}

Eigen::MatrixXd explicit_rows(const Eigen::MatrixXd& a, int cutoff) {
  Eigen::MatrixXd out;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    const Eigen::VectorXd row = a.row(i).transpose();
    const Eigen::VectorXd f = dirichlet_features(std::span<const double>(row.data(), row.size()), cutoff);
    if (i == 0) out.resize(a.rows(), f.size());
    out.row(i) = f.transpose();
  }
  return out;
}

}  // namespace

double heuristic_gamma2(const Eigen::MatrixXd& xs) {
  const auto n = static_cast<double>(xs.rows());
  if (xs.rows() == 0) throw std::invalid_argument("heuristic_gamma2: no points");
  // sum_ij ||xi - xj||^2 = 2 n sum_i ||xi||^2 - 2 ||sum_i xi||^2
  const double total = 2.0 * n * xs.rowwise().squaredNorm().sum() -
                       2.0 * xs.colwise().sum().squaredNorm();
  const double g = total / (2.0 * n * n);
  if (!(g > 1e-300)) throw std::invalid_argument("heuristic_gamma2: all points coincide");
  return g;
}

Eigen::MatrixXd rbf_gram(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double gamma2) {
  if (!(gamma2 > 0.0)) throw std::invalid_argument("rbf_gram: gamma^2 must be positive");
  if (a.cols() != b.cols()) throw std::invalid_argument("rbf_gram: dimension mismatch");
  return (squared_distances(a, b) / (-2.0 * gamma2)).array().exp().matrix();
}

double ntk_value(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  double kxx = x.squaredNorm();
  double kyy = y.squaredNorm();
  if (kxx == 0.0 || kyy == 0.0) throw std::invalid_argument("ntk: zero-norm input");
  double sigma = x.dot(y);
  double theta = sigma;
  // c_sigma = 2 keeps the diagonal at ||x||^2 through every layer.
  for (int h = 0; h < kNtkDepth; ++h) {
    const double norm = std::sqrt(kxx * kyy);
    const double cosv = std::clamp(sigma / norm, -1.0, 1.0);
    const double angle = std::acos(cosv);
    const double next = norm / std::numbers::pi *
                        (std::sin(angle) + (std::numbers::pi - angle) * cosv);
    const double deriv = (std::numbers::pi - angle) / std::numbers::pi;
    theta = theta * deriv + next;
    sigma = next;
  }
  return theta;
}

Eigen::MatrixXd ntk_gram(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.cols() != b.cols()) throw std::invalid_argument("ntk_gram: dimension mismatch");
  Eigen::MatrixXd k(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    const Eigen::VectorXd x = a.row(i).transpose();
    for (Eigen::Index j = 0; j < b.rows(); ++j) k(i, j) = ntk_value(x, b.row(j).transpose());
  }
  return k;
}

Eigen::MatrixXd dirichlet_gram(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, int cutoff) {
  if (a.cols() != b.cols()) throw std::invalid_argument("dirichlet_gram: dimension mismatch");
  return explicit_rows(a, cutoff) * explicit_rows(b, cutoff).transpose();
}

}  // namespace qsl
