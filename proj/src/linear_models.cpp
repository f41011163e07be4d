#include "qsl/linear_models.hpp"

#include <algorithm>
#include <cmath>

namespace qsl {

namespace {

double soft_threshold(double z, double gamma) noexcept {
  if (z > gamma) return z - gamma;
  if (z < -gamma) return z + gamma;
  return 0.0;
}

void require_rows(const Eigen::MatrixXd& phi, const Eigen::MatrixXd& y, const char* who) {
  if (phi.rows() != y.rows() || phi.rows() == 0) {
    throw std::invalid_argument(std::string(who) + ": Phi and y must have the same nonzero row count");
  }
}

// One coordinate descent pass; returns the largest |delta w_j|.
double cd_pass(const Eigen::MatrixXd& phi, const Eigen::VectorXd& col_sq, double lambda,
               Eigen::VectorXd& w, Eigen::VectorXd& r, bool active_only) {
  const double n = static_cast<double>(phi.rows());
  double max_delta = 0.0;
  for (Eigen::Index j = 0; j < phi.cols(); ++j) {
    if (col_sq[j] == 0.0) continue;
    if (active_only && w[j] == 0.0) continue;
    const double rho = phi.col(j).dot(r) / n + col_sq[j] * w[j];
    const double next = soft_threshold(rho, lambda) / col_sq[j];
    const double delta = next - w[j];
    if (delta != 0.0) {
      r.noalias() -= delta * phi.col(j);
      w[j] = next;
      max_delta = std::max(max_delta, std::abs(delta));
    }
  }
  return max_delta;
}

// Coordinate descent from the given w until a full pass changes no
// coefficient by tol or more.
void lasso_solve(const Eigen::MatrixXd& phi, const Eigen::VectorXd& col_sq, const Eigen::VectorXd& y,
                 double lambda, double tol, int max_sweeps, Eigen::VectorXd& w) {
  Eigen::VectorXd r = y - phi * w;
  double gap = 0.0;
  int sweeps = 0;
  while (sweeps < max_sweeps) {
    gap = cd_pass(phi, col_sq, lambda, w, r, false);
    ++sweeps;
    if (gap < tol) return;
    while (sweeps < max_sweeps) {
      const double inner = cd_pass(phi, col_sq, lambda, w, r, true);
      ++sweeps;
      if (inner < tol) break;
    }
  }
  throw ConvergenceError("fit_lasso: no convergence after " + std::to_string(max_sweeps) +
                             " sweeps (last change " + std::to_string(gap) + ")",
                         gap);
}

}  // namespace

Eigen::MatrixXd LinearModel::predict(const Eigen::MatrixXd& phi) const {
  if (phi.cols() != weights.rows()) throw std::invalid_argument("LinearModel: feature dimension mismatch");
  Eigen::MatrixXd out = phi * weights;
  out.rowwise() += intercept.transpose();
  return out;
}

void LinearModel::write(ByteWriter& w) const {
  write_matrix(w, weights);
  write_vector(w, intercept);
  write_vector(w, lambda);
}

LinearModel LinearModel::read(ByteReader& r) {
  LinearModel m;
  m.weights = read_matrix(r);
  m.intercept = read_vector(r);
  m.lambda = read_vector(r);
  if (m.intercept.size() != m.weights.cols() || m.lambda.size() != m.weights.cols()) {
    throw std::runtime_error("LinearModel: inconsistent shapes");
  }
  return m;
}

LinearModel fit_ridge(const Eigen::MatrixXd& phi, const Eigen::MatrixXd& y, double lambda) {
  require_rows(phi, y, "fit_ridge");
  if (!(lambda >= 0.0)) throw std::invalid_argument("fit_ridge: lambda must be >= 0");
  const auto n = phi.rows();
  const auto p = phi.cols();
  const double shift = static_cast<double>(n) * lambda;

  const bool dual = p > n;
  Eigen::MatrixXd a = dual ? Eigen::MatrixXd(phi * phi.transpose()) : Eigen::MatrixXd(phi.transpose() * phi);
  a.diagonal().array() += shift;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
  const Eigen::VectorXd d = ldlt.vectorD();
  const double scale = std::max(1.0, a.diagonal().cwiseAbs().maxCoeff());
  if (ldlt.info() != Eigen::Success || d.minCoeff() <= 1e-13 * scale * static_cast<double>(a.rows())) {
    throw std::domain_error("fit_ridge: singular normal equations (increase lambda)");
  }

  LinearModel m;
  m.lambda = Eigen::VectorXd::Constant(y.cols(), lambda);
  m.weights = dual ? Eigen::MatrixXd(phi.transpose() * ldlt.solve(y))
                   : Eigen::MatrixXd(ldlt.solve(phi.transpose() * y));
  m.intercept = Eigen::VectorXd::Zero(y.cols());
  return m;
}

LinearModel fit_lasso(const Eigen::MatrixXd& phi, const Eigen::MatrixXd& y, double lambda,
                      double tol, int max_sweeps) {
  require_rows(phi, y, "fit_lasso");
  if (!(lambda >= 0.0)) throw std::invalid_argument("fit_lasso: lambda must be >= 0");
  const double n = static_cast<double>(phi.rows());
  const Eigen::VectorXd col_sq = phi.colwise().squaredNorm().transpose() / n;

  LinearModel m;
  m.lambda = Eigen::VectorXd::Constant(y.cols(), lambda);
  m.weights = Eigen::MatrixXd::Zero(phi.cols(), y.cols());
  m.intercept = Eigen::VectorXd::Zero(y.cols());

  for (Eigen::Index t = 0; t < y.cols(); ++t) {
    Eigen::VectorXd w = Eigen::VectorXd::Zero(phi.cols());
    lasso_solve(phi, col_sq, y.col(t), lambda, tol, max_sweeps, w);
    m.weights.col(t) = w;
  }
  return m;
}

Eigen::MatrixXd lasso_path(const Eigen::MatrixXd& phi, const Eigen::VectorXd& y,
                           const std::vector<double>& lambdas, double tol, int max_sweeps, int* solved) {
  require_rows(phi, y, "lasso_path");
  const double n = static_cast<double>(phi.rows());
  const Eigen::VectorXd col_sq = phi.colwise().squaredNorm().transpose() / n;
  Eigen::MatrixXd out(phi.cols(), static_cast<Eigen::Index>(lambdas.size()));
  Eigen::VectorXd w = Eigen::VectorXd::Zero(phi.cols());
  for (std::size_t k = 0; k < lambdas.size(); ++k) {
    if (!(lambdas[k] >= 0.0)) throw std::invalid_argument("lasso_path: lambda must be >= 0");
    if (solved) {
      try {
        lasso_solve(phi, col_sq, y, lambdas[k], tol, max_sweeps, w);
      } catch (const ConvergenceError&) {
        *solved = static_cast<int>(k);
        return out;
      }
    } else {
      lasso_solve(phi, col_sq, y, lambdas[k], tol, max_sweeps, w);
    }
    out.col(static_cast<Eigen::Index>(k)) = w;
  }
  if (solved) *solved = static_cast<int>(lambdas.size());
  return out;
}

double lasso_kkt_violation(const Eigen::MatrixXd& phi, const Eigen::VectorXd& y,
                           const Eigen::VectorXd& w, double lambda) {
  const Eigen::VectorXd g = phi.transpose() * (y - phi * w) / static_cast<double>(phi.rows());
  double worst = 0.0;
  for (Eigen::Index j = 0; j < w.size(); ++j) {
    const double v = w[j] == 0.0 ? std::max(0.0, std::abs(g[j]) - lambda)
                                 : std::abs(g[j] - lambda * (w[j] > 0 ? 1.0 : -1.0));
    worst = std::max(worst, v);
  }
  return worst;
}

RidgePath::RidgePath(const Eigen::MatrixXd& phi, const Eigen::MatrixXd& y)
    : dual_(phi.cols() > phi.rows()), n_(static_cast<double>(phi.rows())) {
  require_rows(phi, y, "RidgePath");
  const Eigen::MatrixXd g = dual_ ? Eigen::MatrixXd(phi * phi.transpose())
                                  : Eigen::MatrixXd(phi.transpose() * phi);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(g);
  basis_ = eig.eigenvectors();
  eigenvalues_ = eig.eigenvalues().cwiseMax(0.0);
  if (dual_) {
    projected_ = basis_.transpose() * y;
    phi_t_ = phi.transpose();
  } else {
    projected_ = basis_.transpose() * (phi.transpose() * y);
  }
}

Eigen::MatrixXd RidgePath::weights(double lambda) const {
  const double cut = 1e-12 * std::max(1.0, eigenvalues_.maxCoeff());
  Eigen::VectorXd inv(eigenvalues_.size());
  for (Eigen::Index i = 0; i < inv.size(); ++i) {
    const double s = eigenvalues_[i] + n_ * lambda;
    inv[i] = s > cut ? 1.0 / s : 0.0;
  }
  const Eigen::MatrixXd coef = basis_ * (inv.asDiagonal() * projected_);
  return dual_ ? Eigen::MatrixXd(phi_t_ * coef) : coef;
}

Eigen::MatrixXd fit_kernel_ridge(const Eigen::MatrixXd& k, const Eigen::MatrixXd& y, double lambda) {
  if (k.rows() != k.cols() || k.rows() != y.rows()) {
    throw std::invalid_argument("fit_kernel_ridge: shape mismatch");
  }
  if (!(lambda >= 0.0)) throw std::invalid_argument("fit_kernel_ridge: lambda must be >= 0");
  check_psd(k);
  Eigen::MatrixXd a = k;
  a.diagonal().array() += static_cast<double>(k.rows()) * lambda;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
  if (ldlt.info() != Eigen::Success || ldlt.vectorD().minCoeff() <= 0.0) {
    throw std::domain_error("fit_kernel_ridge: singular system (increase lambda)");
  }
  return ldlt.solve(y);
}

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd p = logits;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    p.row(i).array() -= p.row(i).maxCoeff();
    p.row(i) = p.row(i).array().exp().matrix();
    p.row(i) /= p.row(i).sum();
  }
  return p;
}

Eigen::MatrixXd fit_kernel_logistic(const Eigen::MatrixXd& k, const Eigen::MatrixXd& onehot,
                                    double lambda, int steps) {
  if (k.rows() != k.cols() || k.rows() != onehot.rows()) {
    throw std::invalid_argument("fit_kernel_logistic: shape mismatch");
  }
  if (onehot.cols() != 3) throw std::invalid_argument("fit_kernel_logistic: expected 3 classes");
  if (!(lambda >= 0.0) || steps < 0) throw std::invalid_argument("fit_kernel_logistic: bad hyperparameters");
  check_psd(k);
  const double n = static_cast<double>(k.rows());
  const double top = std::max(1e-12, Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(
                                         k, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff());
  const double eta = 1.0 / (top / (2.0 * n) + 2.0 * lambda);

  Eigen::MatrixXd alpha = Eigen::MatrixXd::Zero(k.rows(), 3);
  for (int s = 0; s < steps; ++s) {
    const Eigen::MatrixXd p = softmax_rows(k * alpha);
    alpha -= eta * ((p - onehot) / n + 2.0 * lambda * alpha);
  }
  return alpha;
}

void check_psd(const Eigen::MatrixXd& k, double tol) {
  if (k.rows() != k.cols()) throw std::domain_error("kernel matrix is not square");
  const double norm = std::max(1.0, k.cwiseAbs().maxCoeff());
  if ((k - k.transpose()).cwiseAbs().maxCoeff() > 1e-10 * norm) {
    throw std::domain_error("kernel matrix is not symmetric");
  }
  const Eigen::VectorXd ev =
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(k, Eigen::EigenvaluesOnly).eigenvalues();
  if (ev.size() > 0 && ev.minCoeff() < -tol * std::max(1.0, ev.cwiseAbs().maxCoeff())) {
    throw std::domain_error("kernel matrix is not positive semidefinite (min eigenvalue " +
                            std::to_string(ev.minCoeff()) + ")");
  }
}

void write_matrix(ByteWriter& w, const Eigen::MatrixXd& m) {
  w.put<std::int64_t>(m.rows());
  w.put<std::int64_t>(m.cols());
  w.put_span(std::span<const double>(m.data(), static_cast<std::size_t>(m.size())));
}

Eigen::MatrixXd read_matrix(ByteReader& r) {
  const auto rows = r.get<std::int64_t>();
  const auto cols = r.get<std::int64_t>();
  auto v = r.get_vector<double>();
  if (rows < 0 || cols < 0 || static_cast<std::size_t>(rows * cols) != v.size()) {
    throw std::runtime_error("matrix record has inconsistent shape");
  }
  return Eigen::Map<Eigen::MatrixXd>(v.data(), rows, cols);
}

void write_vector(ByteWriter& w, const Eigen::VectorXd& v) {
  w.put_span(std::span<const double>(v.data(), static_cast<std::size_t>(v.size())));
}

Eigen::VectorXd read_vector(ByteReader& r) {
  auto v = r.get_vector<double>();
  return Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace qsl
