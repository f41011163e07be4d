#include "qsl/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "qsl/linear_models.hpp"
#include "qsl/random.hpp"

namespace qsl {

namespace {

Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& m, const std::vector<int>& idx, std::size_t begin,
                            std::size_t end) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(end - begin), m.cols());
  for (std::size_t i = begin; i < end; ++i) out.row(static_cast<Eigen::Index>(i - begin)) = m.row(idx[i]);
  return out;
}

}  // namespace

Mlp Mlp::init(int d_in, int width, int d_out, std::uint64_t seed) {
  if (d_in < 1 || width < 1 || d_out < 1) throw std::invalid_argument("Mlp: dimensions must be >= 1");
  Rng rng(seed);
  std::normal_distribution<double> g1(0.0, std::sqrt(2.0 / d_in));
  std::normal_distribution<double> g2(0.0, std::sqrt(1.0 / width));
  Mlp net;
  net.w1 = Eigen::MatrixXd::NullaryExpr(width, d_in, [&] { return g1(rng); });
  net.b1 = Eigen::VectorXd::Zero(width);
  net.w2 = Eigen::MatrixXd::NullaryExpr(d_out, width, [&] { return g2(rng); });
  net.b2 = Eigen::VectorXd::Zero(d_out);
  return net;
}

Eigen::Index Mlp::parameter_count() const noexcept {
  return w1.size() + b1.size() + w2.size() + b2.size();
}

Eigen::VectorXd Mlp::flatten() const {
  Eigen::VectorXd theta(parameter_count());
  Eigen::Index p = 0;
  theta.segment(p, w1.size()) = w1.reshaped();
  p += w1.size();
  theta.segment(p, b1.size()) = b1;
  p += b1.size();
  theta.segment(p, w2.size()) = w2.reshaped();
  p += w2.size();
  theta.segment(p, b2.size()) = b2;
  return theta;
}

void Mlp::unflatten(const Eigen::VectorXd& theta) {
  if (theta.size() != parameter_count()) throw std::invalid_argument("Mlp: parameter count mismatch");
  Eigen::Index p = 0;
  w1.reshaped() = theta.segment(p, w1.size());
  p += w1.size();
  b1 = theta.segment(p, b1.size());
  p += b1.size();
  w2.reshaped() = theta.segment(p, w2.size());
  p += w2.size();
  b2 = theta.segment(p, b2.size());
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& x) const {
  if (x.cols() != w1.cols()) throw std::invalid_argument("Mlp: input dimension mismatch");
  Eigen::MatrixXd h = w1 * x.transpose();
  h.colwise() += b1;
  Eigen::MatrixXd out = w2 * h.cwiseMax(0.0);
  out.colwise() += b2;
  return out.transpose();
}

void Mlp::write(ByteWriter& w) const {
  w.put<std::uint8_t>(classification ? 1 : 0);
  w.put(l2);
  write_matrix(w, w1);
  write_vector(w, b1);
  write_matrix(w, w2);
  write_vector(w, b2);
}

Mlp Mlp::read(ByteReader& r) {
  Mlp net;
  net.classification = r.get<std::uint8_t>() != 0;
  net.l2 = r.get<double>();
  net.w1 = read_matrix(r);
  net.b1 = read_vector(r);
  net.w2 = read_matrix(r);
  net.b2 = read_vector(r);
  if (net.b1.size() != net.w1.rows() || net.w2.cols() != net.w1.rows() || net.b2.size() != net.w2.rows()) {
    throw std::runtime_error("Mlp: inconsistent layer shapes");
  }
  return net;
}

double mlp_loss_and_gradient(const Mlp& net, const Eigen::MatrixXd& x, const Eigen::MatrixXd& targets,
                             double l2, const Eigen::MatrixXd* mask, Eigen::VectorXd* grad) {
  const Eigen::Index n = x.rows();
  if (n == 0 || targets.rows() != n || targets.cols() != net.w2.rows() || x.cols() != net.w1.cols()) {
    throw std::invalid_argument("mlp_loss_and_gradient: shape mismatch");
  }
  if (mask && (mask->rows() != net.w1.rows() || mask->cols() != n)) {
    throw std::invalid_argument("mlp_loss_and_gradient: mask shape mismatch");
  }
  const Eigen::MatrixXd xt = x.transpose();
  Eigen::MatrixXd h = net.w1 * xt;
  h.colwise() += net.b1;
  Eigen::MatrixXd a = h.cwiseMax(0.0);
  if (mask) a = a.cwiseProduct(*mask);
  Eigen::MatrixXd out = net.w2 * a;
  out.colwise() += net.b2;
  const Eigen::MatrixXd yt = targets.transpose();

  double loss = 0.0;
  Eigen::MatrixXd d_out;
  if (net.classification) {
    const Eigen::MatrixXd p = softmax_rows(out.transpose()).transpose();
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index c = 0; c < p.rows(); ++c) {
        if (yt(c, j) != 0.0) loss -= yt(c, j) * std::log(std::max(p(c, j), 1e-300));
      }
    }
    loss /= static_cast<double>(n);
    d_out = (p - yt) / static_cast<double>(n);
  } else {
    const Eigen::MatrixXd diff = out - yt;
    const double denom = static_cast<double>(diff.size());
    loss = diff.squaredNorm() / denom;
    d_out = 2.0 * diff / denom;
  }
  loss += l2 * (net.w1.squaredNorm() + net.w2.squaredNorm());

  if (grad) {
    Mlp g;
    g.w2 = d_out * a.transpose() + 2.0 * l2 * net.w2;
    g.b2 = d_out.rowwise().sum();
    Eigen::MatrixXd d_h = net.w2.transpose() * d_out;
    if (mask) d_h = d_h.cwiseProduct(*mask);
    d_h = d_h.cwiseProduct((h.array() > 0.0).cast<double>().matrix());
    g.w1 = d_h * x + 2.0 * l2 * net.w1;
    g.b1 = d_h.rowwise().sum();
    *grad = g.flatten();
  }
  return loss;
}

Mlp fit_mlp(const Eigen::MatrixXd& x, const Eigen::MatrixXd& targets, const MlpConfig& config,
            std::uint64_t seed) {
  const auto n = static_cast<int>(x.rows());
  if (n < 2 || targets.rows() != n) throw std::invalid_argument("fit_mlp: need >= 2 matching rows");
  if (config.batch_size < 1 || config.max_epochs < 1 || config.width < 1 || !(config.l2 >= 0.0) ||
      config.dropout < 0.0 || config.dropout >= 1.0) {
    throw std::invalid_argument("fit_mlp: bad configuration");
  }
  Rng rng = make_rng(seed, {0});
  Mlp net = Mlp::init(static_cast<int>(x.cols()), config.width, static_cast<int>(targets.cols()),
                      derive_seed(seed, {1}));
  net.classification = config.classification;
  net.l2 = config.l2;

  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  const int n_val = std::clamp(static_cast<int>(std::lround(config.validation_fraction * n)), 1, n - 1);
  const std::vector<int> val(order.begin(), order.begin() + n_val);
  std::vector<int> train(order.begin() + n_val, order.end());
  const Eigen::MatrixXd x_val = gather_rows(x, val, 0, val.size());
  const Eigen::MatrixXd y_val = gather_rows(targets, val, 0, val.size());

  const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  Eigen::VectorXd theta = net.flatten();
  Eigen::VectorXd m = Eigen::VectorXd::Zero(theta.size());
  Eigen::VectorXd v = Eigen::VectorXd::Zero(theta.size());
  Eigen::VectorXd grad;
  long step = 0;

  Eigen::VectorXd best = theta;
  double best_loss = std::numeric_limits<double>::infinity();
  int stale = 0;
  const double keep = 1.0 - config.dropout;
  std::bernoulli_distribution drop(keep);

  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    std::shuffle(train.begin(), train.end(), rng);
    for (std::size_t b = 0; b < train.size(); b += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t e = std::min(train.size(), b + static_cast<std::size_t>(config.batch_size));
      const Eigen::MatrixXd xb = gather_rows(x, train, b, e);
      const Eigen::MatrixXd yb = gather_rows(targets, train, b, e);
      Eigen::MatrixXd mask(config.width, xb.rows());
      for (Eigen::Index k = 0; k < mask.size(); ++k) mask.data()[k] = drop(rng) ? 1.0 / keep : 0.0;
      const double loss = mlp_loss_and_gradient(net, xb, yb, config.l2, &mask, &grad);
      if (!std::isfinite(loss)) {
        throw ConvergenceError("fit_mlp: training loss diverged at epoch " + std::to_string(epoch), loss);
      }
      ++step;
      m = beta1 * m + (1.0 - beta1) * grad;
      v = beta2 * v + (1.0 - beta2) * grad.cwiseProduct(grad);
      const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
      theta.array() -= config.learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
      net.unflatten(theta);
    }
    const double val_loss = mlp_loss_and_gradient(net, x_val, y_val, config.l2, nullptr, nullptr);
    if (!std::isfinite(val_loss)) {
      throw ConvergenceError("fit_mlp: validation loss diverged at epoch " + std::to_string(epoch), val_loss);
    }
    if (val_loss < best_loss) {
      best_loss = val_loss;
      best = theta;
      stale = 0;
    } else if (++stale >= config.patience) {
      break;
    }
  }
  net.unflatten(best);
  return net;
}

}  // namespace qsl
