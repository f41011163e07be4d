#include "qsl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace qsl {

namespace {

void require_same_shape(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const char* who) {
  if (a.rows() != b.rows() || a.cols() != b.cols() || a.rows() == 0) {
    throw std::invalid_argument(std::string(who) + ": shape mismatch");
  }
}

std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

}  // namespace

double rmse_correlation(const Eigen::MatrixXd& predicted, const Eigen::MatrixXd& exact, int nqubits) {
  require_same_shape(predicted, exact, "rmse_correlation");
  if (exact.cols() != static_cast<Eigen::Index>(nqubits) * (nqubits - 1) / 2) {
    throw std::invalid_argument("rmse_correlation: expected N(N-1)/2 columns");
  }
  const Eigen::VectorXd per_pair =
      (predicted - exact).array().square().colwise().mean().transpose();
  return std::sqrt(2.0 * per_pair.sum() / (static_cast<double>(nqubits) * nqubits));
}

double rmse_entropy(const Eigen::MatrixXd& predicted, const Eigen::MatrixXd& exact) {
  require_same_shape(predicted, exact, "rmse_entropy");
  return std::sqrt((predicted - exact).array().square().colwise().mean().mean());
}

double accuracy(const std::vector<int>& predicted, const std::vector<int>& exact) {
  if (predicted.size() != exact.size() || exact.empty()) throw std::invalid_argument("accuracy: size mismatch");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < exact.size(); ++i) hits += predicted[i] == exact[i];
  return static_cast<double>(hits) / static_cast<double>(exact.size());
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) throw std::invalid_argument("spearman: need two equal-length series");
  const auto ra = ranks(a);
  const auto rb = ranks(b);
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / static_cast<double>(ra.size());
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / static_cast<double>(rb.size());
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

}  // namespace qsl
