#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

#include "qsl/binary_io.hpp"

namespace qsl {

class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double gap) : std::runtime_error(what), gap_(gap) {}
  double gap() const noexcept { return gap_; }

 private:
  double gap_;
};

/// h(phi) = W^T phi + b, one column per target.
struct LinearModel {
  Eigen::MatrixXd weights;    // p x T
  Eigen::VectorXd intercept;  // T
  Eigen::VectorXd lambda;     // T, regularization chosen per target

  Eigen::MatrixXd predict(const Eigen::MatrixXd& phi) const;  // rows are samples
  void write(ByteWriter& w) const;
  static LinearModel read(ByteReader& r);
};

/// w = (Phi^T Phi + n lambda I)^{-1} Phi^T Y via LDLT, or the equivalent dual
/// system when p > n. No intercept. Throws std::domain_error when the system
/// is singular.
LinearModel fit_ridge(const Eigen::MatrixXd& phi, const Eigen::MatrixXd& y, double lambda);

/// Minimizes (1/2n)||y - Phi w||^2 + lambda ||w||_1 per target by cyclic
/// coordinate descent; stops when the largest coefficient change in a full
/// sweep is below tol. No intercept.
LinearModel fit_lasso(const Eigen::MatrixXd& phi, const Eigen::MatrixXd& y, double lambda,
                      double tol = 1e-8, int max_sweeps = 10000);

/// Lasso solutions for one target along `lambdas`, each warm-started from the
/// previous one (pass them in decreasing order). Columns follow `lambdas`.
/// With `solved` non-null a failure stops the path instead of throwing and
/// *solved holds the number of leading columns that converged.
Eigen::MatrixXd lasso_path(const Eigen::MatrixXd& phi, const Eigen::VectorXd& y,
                           const std::vector<double>& lambdas, double tol = 1e-8, int max_sweeps = 10000,
                           int* solved = nullptr);

/// Largest violation of the lasso optimality conditions for one target.
double lasso_kkt_violation(const Eigen::MatrixXd& phi, const Eigen::VectorXd& y,
                           const Eigen::VectorXd& w, double lambda);

/// Ridge solutions for many lambdas from one spectral decomposition.
class RidgePath {
 public:
  RidgePath(const Eigen::MatrixXd& phi, const Eigen::MatrixXd& y);
  Eigen::MatrixXd weights(double lambda) const;

 private:
  bool dual_;
  double n_;
  Eigen::MatrixXd basis_;       // eigenvectors of the smaller Gram
  Eigen::VectorXd eigenvalues_;
  Eigen::MatrixXd projected_;   // basis^T (Phi^T Y or Y)
  Eigen::MatrixXd phi_t_;       // Phi^T, dual form only
};

/// alpha = (K + n lambda I)^{-1} Y.
Eigen::MatrixXd fit_kernel_ridge(const Eigen::MatrixXd& k, const Eigen::MatrixXd& y, double lambda);

/// Softmax cross-entropy + lambda alpha^T K alpha over dual coefficients
/// (n x C), starting at zero, with a fixed number of full-batch steps. Steps
/// follow the functional gradient (P - Y)/n + 2 lambda alpha.
Eigen::MatrixXd fit_kernel_logistic(const Eigen::MatrixXd& k, const Eigen::MatrixXd& onehot,
                                    double lambda, int steps = 500);

/// Row-wise softmax.
Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits);

/// Throws std::domain_error when K is asymmetric or has an eigenvalue below
/// -tol * max(1, ||K||).
void check_psd(const Eigen::MatrixXd& k, double tol = 1e-8);

void write_matrix(ByteWriter& w, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_matrix(ByteReader& r);
void write_vector(ByteWriter& w, const Eigen::VectorXd& v);
Eigen::VectorXd read_vector(ByteReader& r);

}  // namespace qsl
