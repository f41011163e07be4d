#include "qsl/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "qsl/kernels.hpp"
#include "qsl/metrics.hpp"

namespace qsl {

namespace {

using Json = nlohmann::ordered_json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Eigen::MatrixXd stack_rows(const std::vector<Eigen::VectorXd>& rows) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), rows.empty() ? 0 : rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
  return m;
}

Eigen::MatrixXd input_matrix(const ModelSpec& spec, const std::vector<Instance>& split) {
  std::vector<Eigen::VectorXd> rows;
  rows.reserve(split.size());
  for (const auto& inst : split) {
    const auto x = model_input(spec, inst);
    rows.emplace_back(Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size())));
  }
  return stack_rows(rows);
}

std::span<const std::uint8_t> record_of(const ModelSpec& spec, const Instance& inst) {
  if (!spec.measurements) return {};
  return inst.measurements;
}

Eigen::MatrixXd gspe_targets(const std::vector<Instance>& split, bool exact) {
  const auto& first = exact ? split.front().exact : split.front().estimated;
  const auto p = static_cast<Eigen::Index>(first.correlations.size());
  const auto q = static_cast<Eigen::Index>(first.renyi.size());
  Eigen::MatrixXd y(static_cast<Eigen::Index>(split.size()), p + q);
  for (std::size_t i = 0; i < split.size(); ++i) {
    const auto& l = exact ? split[i].exact : split[i].estimated;
    if (static_cast<Eigen::Index>(l.correlations.size()) != p || static_cast<Eigen::Index>(l.renyi.size()) != q) {
      throw std::invalid_argument("instance labels have inconsistent sizes");
    }
    const auto r = static_cast<Eigen::Index>(i);
    for (Eigen::Index k = 0; k < p; ++k) y(r, k) = l.correlations[static_cast<std::size_t>(k)];
    for (Eigen::Index k = 0; k < q; ++k) y(r, p + k) = l.renyi[static_cast<std::size_t>(k)];
  }
  return y;
}

std::vector<int> phase_labels(const std::vector<Instance>& split) {
  std::vector<int> out;
  out.reserve(split.size());
  for (const auto& inst : split) out.push_back(inst.estimated.phase);
  return out;
}

Eigen::MatrixXd one_hot(const std::vector<int>& labels, int classes) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(labels.size()), classes);
  for (std::size_t i = 0; i < labels.size(); ++i) m(static_cast<Eigen::Index>(i), labels[i]) = 1.0;
  return m;
}

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& m, const std::vector<int>& idx) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), m.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(idx[i]);
  return out;
}

Eigen::MatrixXd take_block(const Eigen::MatrixXd& m, const std::vector<int>& rows, const std::vector<int>& cols) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = m(rows[i], cols[j]);
    }
  }
  return out;
}

template <class T>
std::vector<T> take(const std::vector<T>& v, const std::vector<int>& idx) {
  std::vector<T> out;
  out.reserve(idx.size());
  for (int i : idx) out.push_back(v[static_cast<std::size_t>(i)]);
  return out;
}

/// Fold id of every row; a shuffled round-robin so fold sizes differ by at most one.
std::vector<int> fold_ids(int n, int folds, Rng& rng) {
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<int> id(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) id[static_cast<std::size_t>(perm[static_cast<std::size_t>(k)])] = k % folds;
  return id;
}

struct Split {
  std::vector<int> fit, held;
};

Split fold_split(const std::vector<int>& ids, int fold) {
  Split s;
  for (std::size_t i = 0; i < ids.size(); ++i) (ids[i] == fold ? s.held : s.fit).push_back(static_cast<int>(i));
  return s;
}

Split holdout_split(int n, double fraction, Rng& rng) {
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  int held = static_cast<int>(std::lround(fraction * n));
  held = std::clamp(held, 1, n - 1);
  Split s;
  s.held.assign(perm.begin(), perm.begin() + held);
  s.fit.assign(perm.begin() + held, perm.end());
  std::sort(s.held.begin(), s.held.end());
  std::sort(s.fit.begin(), s.fit.end());
  return s;
}

int effective_folds(int n, int folds) { return std::clamp(folds, 2, n); }

/// Index of the smallest error per column, scanning from the largest lambda so
/// ties keep the stronger penalty.
std::vector<std::size_t> best_per_column(const Eigen::MatrixXd& err) {
  std::vector<std::size_t> best(static_cast<std::size_t>(err.cols()));
  for (Eigen::Index t = 0; t < err.cols(); ++t) {
    Eigen::Index b = err.rows() - 1;
    for (Eigen::Index l = err.rows() - 1; l >= 0; --l) {
      if (err(l, t) < err(b, t)) b = l;
    }
    best[static_cast<std::size_t>(t)] = static_cast<std::size_t>(b);
  }
  return best;
}

std::vector<double> sorted_grid(std::vector<double> g) {
  std::sort(g.begin(), g.end());
  g.erase(std::unique(g.begin(), g.end()), g.end());
  return g;
}

// Ridge with per-target lambda from k-fold CV on the centered problem.
LinearModel fit_ridge_cv(const Eigen::MatrixXd& phi, const Eigen::MatrixXd& y, const ModelOptions& o, Rng& rng) {
  const auto grid = sorted_grid(o.lambda_grid);
  const int n = static_cast<int>(phi.rows());
  const int folds = effective_folds(n, o.folds);
  const auto ids = fold_ids(n, folds, rng);
  Eigen::MatrixXd err = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(grid.size()), y.cols());
  for (int f = 0; f < folds; ++f) {
    const Split s = fold_split(ids, f);
    const Eigen::MatrixXd pf = take_rows(phi, s.fit), yf = take_rows(y, s.fit);
    const Eigen::RowVectorXd mp = pf.colwise().mean(), my = yf.colwise().mean();
    const RidgePath path(pf.rowwise() - mp, yf.rowwise() - my);
    const Eigen::MatrixXd ph = take_rows(phi, s.held).rowwise() - mp;
    const Eigen::MatrixXd yh = take_rows(y, s.held).rowwise() - my;
    for (std::size_t l = 0; l < grid.size(); ++l) {
      err.row(static_cast<Eigen::Index>(l)) += (ph * path.weights(grid[l]) - yh).array().square().colwise().sum().matrix();
    }
  }
  const auto best = best_per_column(err);
  const Eigen::RowVectorXd mp = phi.colwise().mean(), my = y.colwise().mean();
  const RidgePath path(phi.rowwise() - mp, y.rowwise() - my);
  LinearModel m;
  m.weights.resize(phi.cols(), y.cols());
  m.lambda.resize(y.cols());
  std::map<std::size_t, Eigen::MatrixXd> cache;
  for (Eigen::Index t = 0; t < y.cols(); ++t) {
    const std::size_t l = best[static_cast<std::size_t>(t)];
    auto it = cache.find(l);
    if (it == cache.end()) it = cache.emplace(l, path.weights(grid[l])).first;
    m.weights.col(t) = it->second.col(t);
    m.lambda[t] = grid[l];
  }
  m.intercept = (my - mp * m.weights).transpose();
  return m;
}

struct ColumnScale {
  Eigen::RowVectorXd mean, scale;
  explicit ColumnScale(const Eigen::MatrixXd& x) {
    mean = x.colwise().mean();
    scale.resize(x.cols());
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      const double var = (x.col(c).array() - mean[c]).square().mean();
      scale[c] = var > 1e-24 ? std::sqrt(var) : 1.0;
    }
  }
  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const {
    return (x.rowwise() - mean).array().rowwise() / scale.array();
  }
};

// Lasso with per-target lambda from k-fold CV. Paths run from the largest
// lambda down with warm starts; a lambda whose solve does not converge is
// never selected.
LinearModel fit_lasso_cv(const Eigen::MatrixXd& phi, const Eigen::MatrixXd& y, const ModelOptions& o, Rng& rng) {
  auto grid = sorted_grid(o.lambda_grid);
  std::reverse(grid.begin(), grid.end());
  const int n = static_cast<int>(phi.rows());
  const int folds = effective_folds(n, o.folds);
  const auto ids = fold_ids(n, folds, rng);
  const auto L = static_cast<Eigen::Index>(grid.size());
  const auto T = y.cols();
  Eigen::MatrixXd err = Eigen::MatrixXd::Zero(L, T);
  for (int f = 0; f < folds; ++f) {
    const Split s = fold_split(ids, f);
    const Eigen::MatrixXd pf_raw = take_rows(phi, s.fit);
    const ColumnScale cs(pf_raw);
    const Eigen::MatrixXd pf = cs.apply(pf_raw);
    const Eigen::MatrixXd ph = cs.apply(take_rows(phi, s.held));
    const Eigen::MatrixXd yf = take_rows(y, s.fit), yh = take_rows(y, s.held);
    const Eigen::RowVectorXd my = yf.colwise().mean();
    parallel_for(static_cast<std::size_t>(T), o.threads, [&](std::size_t tt) {
      const auto t = static_cast<Eigen::Index>(tt);
      int solved = 0;
      const Eigen::VectorXd yc = yf.col(t).array() - my[t];
      const Eigen::MatrixXd w = lasso_path(pf, yc, grid, o.lasso_tol, o.lasso_max_sweeps, &solved);
      for (Eigen::Index l = 0; l < L; ++l) {
        if (l >= solved) {
          err(l, t) = std::numeric_limits<double>::infinity();
        } else {
          err(l, t) += ((ph * w.col(l)).array() + my[t] - yh.col(t).array()).square().sum();
        }
      }
    });
  }
  // best_per_column prefers later rows on ties; with a descending grid flip so
  // ties still keep the larger lambda.
  const Eigen::MatrixXd flipped = err.colwise().reverse();
  auto best = best_per_column(flipped);
  for (auto& b : best) b = static_cast<std::size_t>(L - 1) - b;

  const ColumnScale cs(phi);
  const Eigen::MatrixXd ps = cs.apply(phi);
  const Eigen::RowVectorXd my = y.colwise().mean();
  LinearModel m;
  m.weights.resize(phi.cols(), T);
  m.lambda.resize(T);
  m.intercept.resize(T);
  parallel_for(static_cast<std::size_t>(T), o.threads, [&](std::size_t tt) {
    const auto t = static_cast<Eigen::Index>(tt);
    const std::size_t b = best[tt];
    if (!std::isfinite(err(static_cast<Eigen::Index>(b), t))) {
      throw ConvergenceError("lasso: no lambda converged for target " + std::to_string(tt), 0.0);
    }
    const std::vector<double> path(grid.begin(), grid.begin() + static_cast<std::ptrdiff_t>(b) + 1);
    const Eigen::VectorXd yc = y.col(t).array() - my[t];
    int solved = 0;
    const Eigen::MatrixXd w = lasso_path(ps, yc, path, o.lasso_tol, o.lasso_max_sweeps, &solved);
    // Refit on all rows may stall where the folds did not; step back along the path.
    if (solved == 0) throw ConvergenceError("lasso: refit did not converge for target " + std::to_string(tt), 0.0);
    const Eigen::VectorXd ws = w.col(solved - 1).array() / cs.scale.transpose().array();
    m.weights.col(t) = ws;
    m.intercept[t] = my[t] - cs.mean.dot(ws);
    m.lambda[t] = grid[static_cast<std::size_t>(solved - 1)];
  });
  return m;
}

KernelMachine make_machine(const ModelSpec& spec, const Eigen::MatrixXd& phi, const ModelOptions& o) {
  KernelMachine k;
  if (spec.base == "rbf") {
    k.kernel = KernelKind::Rbf;
    k.gamma2 = heuristic_gamma2(phi);
  } else if (spec.base == "ntk") {
    k.kernel = KernelKind::Ntk;
  } else {
    k.kernel = KernelKind::Dirichlet;
    k.cutoff = o.dirichlet_cutoff;
  }
  k.support = phi;
  return k;
}

struct Eig {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
};

Eig psd_eig(const Eigen::MatrixXd& k) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (k + k.transpose()));
  if (es.info() != Eigen::Success) throw std::runtime_error("kernel ridge: eigendecomposition failed");
  return {es.eigenvalues().cwiseMax(0.0), es.eigenvectors()};
}

// alpha = (K + n lambda I)^{-1} y through the eigenbasis of K.
Eigen::MatrixXd kernel_alpha(const Eig& e, const Eigen::MatrixXd& uty, double lambda) {
  const double shift = static_cast<double>(e.values.size()) * lambda;
  const Eigen::VectorXd inv = (e.values.array() + shift).inverse();
  return e.vectors * (inv.asDiagonal() * uty);
}

void fit_kernel_ridge_cv(KernelMachine& k, const Eigen::MatrixXd& y, const ModelOptions& o, Rng& rng) {
  const auto grid = sorted_grid(o.lambda_grid);
  const Eigen::MatrixXd K = k.gram(k.support, k.support);
  const int n = static_cast<int>(K.rows());
  const int folds = effective_folds(n, o.folds);
  const auto ids = fold_ids(n, folds, rng);
  Eigen::MatrixXd err = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(grid.size()), y.cols());
  for (int f = 0; f < folds; ++f) {
    const Split s = fold_split(ids, f);
    const Eigen::MatrixXd yf = take_rows(y, s.fit);
    const Eigen::RowVectorXd my = yf.colwise().mean();
    const Eig e = psd_eig(take_block(K, s.fit, s.fit));
    const Eigen::MatrixXd uty = e.vectors.transpose() * (yf.rowwise() - my);
    const Eigen::MatrixXd kh = take_block(K, s.held, s.fit);
    const Eigen::MatrixXd yh = take_rows(y, s.held).rowwise() - my;
    for (std::size_t l = 0; l < grid.size(); ++l) {
      err.row(static_cast<Eigen::Index>(l)) +=
          (kh * kernel_alpha(e, uty, grid[l]) - yh).array().square().colwise().sum().matrix();
    }
  }
  const auto best = best_per_column(err);
  const Eigen::RowVectorXd my = y.colwise().mean();
  const Eig e = psd_eig(K);
  const Eigen::MatrixXd uty = e.vectors.transpose() * (y.rowwise() - my);
  k.alpha.resize(n, y.cols());
  k.lambda.resize(y.cols());
  std::map<std::size_t, Eigen::MatrixXd> cache;
  for (Eigen::Index t = 0; t < y.cols(); ++t) {
    const std::size_t l = best[static_cast<std::size_t>(t)];
    auto it = cache.find(l);
    if (it == cache.end()) it = cache.emplace(l, kernel_alpha(e, uty, grid[l])).first;
    k.alpha.col(t) = it->second.col(t);
    k.lambda[t] = grid[l];
  }
  k.intercept = my.transpose();
}

double label_accuracy(const Eigen::MatrixXd& scores, const std::vector<int>& labels) {
  std::vector<int> pred(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    Eigen::Index c = 0;
    scores.row(static_cast<Eigen::Index>(i)).maxCoeff(&c);
    pred[i] = static_cast<int>(c);
  }
  return accuracy(pred, labels);
}

void fit_kernel_logistic_val(KernelMachine& k, const std::vector<int>& labels, const ModelOptions& o, Rng& rng) {
  const auto grid = sorted_grid(o.lambda_grid);
  const Eigen::MatrixXd K = k.gram(k.support, k.support);
  const int n = static_cast<int>(K.rows());
  const Eigen::MatrixXd y = one_hot(labels, 3);
  double best_lambda = grid.back();
  if (n >= 2) {
    const Split s = holdout_split(n, o.validation_fraction, rng);
    const Eigen::MatrixXd kf = take_block(K, s.fit, s.fit), kh = take_block(K, s.held, s.fit);
    const Eigen::MatrixXd yf = take_rows(y, s.fit);
    const auto yh = take(labels, s.held);
    double best_acc = -1.0;
    for (auto it = grid.rbegin(); it != grid.rend(); ++it) {
      const Eigen::MatrixXd alpha = fit_kernel_logistic(kf, yf, *it, o.logistic_steps);
      const double acc = label_accuracy(kh * alpha, yh);
      if (acc > best_acc) {
        best_acc = acc;
        best_lambda = *it;
      }
    }
  }
  k.alpha = fit_kernel_logistic(K, y, best_lambda, o.logistic_steps);
  k.intercept = Eigen::VectorXd::Zero(3);
  k.lambda = Eigen::VectorXd::Constant(3, best_lambda);
}

RandomForest fit_forest_val(const Eigen::MatrixXd& phi, const std::vector<int>& labels, const ModelOptions& o,
                            std::uint64_t seed, Rng& rng) {
  ForestConfig best;
  best.trees = o.forest_trees.front();
  best.max_depth = o.forest_depths.front();
  const int n = static_cast<int>(phi.rows());
  if (n >= 2 && o.forest_trees.size() * o.forest_depths.size() > 1) {
    const Split s = holdout_split(n, o.validation_fraction, rng);
    const Eigen::MatrixXd xf = take_rows(phi, s.fit), xh = take_rows(phi, s.held);
    const auto yf = take(labels, s.fit), yh = take(labels, s.held);
    double best_acc = -1.0;
    for (int trees : o.forest_trees) {
      for (int depth : o.forest_depths) {
        ForestConfig c;
        c.trees = trees;
        c.max_depth = depth;
        const RandomForest f = fit_random_forest(xf, yf, c, seed, o.threads);
        std::vector<int> pred(yh.size());
        for (std::size_t i = 0; i < yh.size(); ++i) pred[i] = f.predict(xh.row(static_cast<Eigen::Index>(i)).transpose());
        const double acc = accuracy(pred, yh);
        if (acc > best_acc) {
          best_acc = acc;
          best = c;
        }
      }
    }
  }
  RandomForest f = fit_random_forest(phi, labels, best, seed, o.threads);
  f.num_classes = std::max(f.num_classes, 3);
  return f;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

double parse_double(std::string_view s) {
  if (s == "nan") return kNaN;
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) {
    throw std::invalid_argument("report: bad number '" + std::string(s) + "'");
  }
  return v;
}

template <class T>
T parse_int(std::string_view s) {
  T v{};
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) {
    throw std::invalid_argument("report: bad integer '" + std::string(s) + "'");
  }
  return v;
}

std::vector<Metric> metrics_for(Task t) {
  if (t == Task::Gspe) return {Metric::Correlation, Metric::Entropy};
  return {Metric::Accuracy};
}

template <class T>
std::vector<T> scalar_or_list(const Json& j) {
  if (j.is_array()) return j.get<std::vector<T>>();
  return {j.get<T>()};
}

}  // namespace

std::string_view to_string(Metric m) noexcept {
  switch (m) {
    case Metric::Correlation: return "correlation";
    case Metric::Entropy: return "entropy";
    case Metric::Accuracy: return "accuracy";
  }
  return "?";
}

Metric parse_metric(std::string_view name) {
  if (name == "correlation") return Metric::Correlation;
  if (name == "entropy") return Metric::Entropy;
  if (name == "accuracy") return Metric::Accuracy;
  throw std::invalid_argument("unknown metric '" + std::string(name) + "'");
}

ModelSpec parse_model(std::string_view name, Task task) {
  ModelSpec s;
  s.name = std::string(name);
  std::string_view rest = name;
  auto strip = [&](std::string_view suffix) {
    if (rest.size() > suffix.size() && rest.substr(rest.size() - suffix.size()) == suffix) {
      rest.remove_suffix(suffix.size());
      return true;
    }
    return false;
  };
  s.randomized = strip("_rand");
  s.measurements = strip("_a");
  if (rest == "rf_scores") {
    s.base = "rf";
    s.scores = true;
  } else {
    s.base = std::string(rest);
  }
  const bool gspe = s.base == "ridge" || s.base == "lasso";
  const bool both = s.base == "dk" || s.base == "rbf" || s.base == "ntk" || s.base == "mlp";
  const bool qpc = s.base == "rf";
  if (!gspe && !both && !qpc) throw std::invalid_argument("unknown model '" + s.name + "'");
  if (task == Task::Gspe && qpc) throw std::invalid_argument("model '" + s.name + "' is a classifier");
  if (task == Task::Qpc && gspe) throw std::invalid_argument("model '" + s.name + "' is a regressor");
  if (s.randomized && !s.measurements) {
    throw std::invalid_argument("model '" + s.name + "': _rand applies to measurement-augmented models");
  }
  if (s.scores && s.measurements) throw std::invalid_argument("rf_scores takes no measurement block");
  return s;
}

std::vector<double> model_input(const ModelSpec& spec, const Instance& inst) {
  if (spec.scores) return {inst.estimated.s2, inst.estimated.s3};
  return inst.x;
}

TrainedModel fit_model(const ModelSpec& spec, const Dataset& d, const ModelOptions& o, std::uint64_t seed) {
  if (d.train.empty()) throw std::invalid_argument("fit: empty training split");
  if (o.lambda_grid.empty() || o.forest_trees.empty() || o.forest_depths.empty()) {
    throw std::invalid_argument("fit: empty hyperparameter grid");
  }
  if (spec.measurements && d.payload == Payload::None) {
    throw std::invalid_argument("fit: model '" + spec.name + "' needs measurement records");
  }
  Rng rng = make_rng(seed, {0});
  TrainedModel m;
  const Eigen::MatrixXd raw = input_matrix(spec, d.train);
  m.input = Standardizer::fit(raw);
  const bool linear = spec.base == "ridge" || spec.base == "lasso";
  const int in_dim = static_cast<int>(raw.cols());
  if (spec.measurements) {
    const int mdim = static_cast<int>(d.train.front().measurements.size());
    m.features = make_feature_spec(FeatureKind::WithMeasurements, in_dim, derive_seed(seed, {1}), mdim,
                                   d.payload == Payload::Shadow ? 0.2 : 1.0);
  } else {
    m.features = make_feature_spec(linear ? FeatureKind::RffConcat : FeatureKind::Raw, in_dim, derive_seed(seed, {1}));
  }
  std::vector<Eigen::VectorXd> rows;
  rows.reserve(d.train.size());
  for (const auto& inst : d.train) rows.push_back(m.featurize(model_input(spec, inst), record_of(spec, inst)));
  const Eigen::MatrixXd phi = stack_rows(rows);

  if (d.task == Task::Gspe) {
    const Eigen::MatrixXd y = gspe_targets(d.train, false);
    if (spec.base == "ridge") {
      m.kind = ModelKind::Ridge;
      m.body = fit_ridge_cv(phi, y, o, rng);
    } else if (spec.base == "lasso") {
      m.kind = ModelKind::Lasso;
      m.body = fit_lasso_cv(phi, y, o, rng);
    } else if (spec.base == "mlp") {
      m.kind = ModelKind::Mlp;
      MlpConfig c = o.mlp;
      c.classification = false;
      m.body = fit_mlp(phi, y, c, derive_seed(seed, {2}));
    } else {
      m.kind = ModelKind::KernelRidge;
      KernelMachine k = make_machine(spec, phi, o);
      fit_kernel_ridge_cv(k, y, o, rng);
      m.body = std::move(k);
    }
  } else {
    const auto labels = phase_labels(d.train);
    if (spec.base == "rf") {
      m.kind = ModelKind::RandomForest;
      m.body = fit_forest_val(phi, labels, o, derive_seed(seed, {2}), rng);
    } else if (spec.base == "mlp") {
      m.kind = ModelKind::Mlp;
      MlpConfig c = o.mlp;
      c.classification = true;
      m.body = fit_mlp(phi, one_hot(labels, 3), c, derive_seed(seed, {2}));
    } else {
      m.kind = ModelKind::KernelLogistic;
      KernelMachine k = make_machine(spec, phi, o);
      fit_kernel_logistic_val(k, labels, o, rng);
      m.body = std::move(k);
    }
  }
  return m;
}

double Evaluation::get(Metric m) const noexcept {
  switch (m) {
    case Metric::Correlation: return correlation;
    case Metric::Entropy: return entropy;
    case Metric::Accuracy: return accuracy;
  }
  return kNaN;
}

Evaluation evaluate_model(const TrainedModel& model, const ModelSpec& spec, const Dataset& d) {
  if (d.test.empty()) throw std::invalid_argument("evaluate: empty test split");
  Evaluation e;
  if (d.task == Task::Gspe) {
    const Eigen::MatrixXd exact = gspe_targets(d.test, true);
    Eigen::MatrixXd pred(exact.rows(), exact.cols());
    for (std::size_t i = 0; i < d.test.size(); ++i) {
      const auto& inst = d.test[i];
      const Prediction p = model.predict(model_input(spec, inst), record_of(spec, inst));
      if (p.values.size() != exact.cols()) throw std::invalid_argument("evaluate: model output has wrong width");
      pred.row(static_cast<Eigen::Index>(i)) = p.values.transpose();
    }
    const auto pairs = static_cast<Eigen::Index>(d.test.front().exact.correlations.size());
    e.correlation = rmse_correlation(pred.leftCols(pairs), exact.leftCols(pairs), d.nqubits);
    e.entropy = rmse_entropy(pred.rightCols(exact.cols() - pairs), exact.rightCols(exact.cols() - pairs));
  } else {
    std::vector<int> pred, truth;
    for (const auto& inst : d.test) {
      pred.push_back(model.predict(model_input(spec, inst), record_of(spec, inst)).label);
      truth.push_back(inst.exact.phase);
    }
    e.accuracy = accuracy(pred, truth);
  }
  return e;
}

Evaluation cs_baseline(const Dataset& d) {
  Evaluation e;
  if (d.noise_free || d.test.empty()) return e;
  for (const auto& inst : d.test) {
    if (inst.measurements.empty()) return e;
  }
  if (d.task == Task::Gspe) {
    const Eigen::MatrixXd exact = gspe_targets(d.test, true);
    const Eigen::MatrixXd est = gspe_targets(d.test, false);
    const auto pairs = static_cast<Eigen::Index>(d.test.front().exact.correlations.size());
    e.correlation = rmse_correlation(est.leftCols(pairs), exact.leftCols(pairs), d.nqubits);
    e.entropy = rmse_entropy(est.rightCols(exact.cols() - pairs), exact.rightCols(exact.cols() - pairs));
  } else {
    std::vector<int> pred, truth;
    for (const auto& inst : d.test) {
      pred.push_back(inst.estimated.phase);
      truth.push_back(inst.exact.phase);
    }
    e.accuracy = accuracy(pred, truth);
  }
  return e;
}

ExperimentConfig ExperimentConfig::from_json(std::string_view text) {
  const Json j = Json::parse(text);
  ExperimentConfig c;
  if (j.contains("family")) c.family = parse_family(j["family"].get<std::string>());
  if (j.contains("N")) c.nqubits = j["N"].get<int>();
  if (j.contains("task")) c.task = parse_task(j["task"].get<std::string>());
  if (j.contains("n")) c.n_grid = scalar_or_list<int>(j["n"]);
  if (j.contains("M")) c.m_grid = scalar_or_list<int>(j["M"]);
  if (j.contains("n_te")) c.n_test = j["n_te"].get<int>();
  if (j.contains("models")) c.models = j["models"].get<std::vector<std::string>>();
  if (j.contains("repetitions")) c.repetitions = j["repetitions"].get<int>();
  if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("noise_free")) c.noise_free = j["noise_free"].get<bool>();
  if (j.contains("budget")) {
    const Json& b = j["budget"];
    if (b.contains("cap")) c.budget_cap = b["cap"].get<std::int64_t>();
    if (b.contains("ssl")) {
      const Json& s = b["ssl"];
      c.ssl = SslSplit{s.at("n_pre").get<std::int64_t>(), s.at("M_pre").get<std::int64_t>(),
                       s.at("n_sft").get<std::int64_t>(), s.at("M_sft").get<std::int64_t>()};
    }
  }
  if (j.contains("options")) {
    const Json& o = j["options"];
    auto& m = c.options;
    if (o.contains("lambda_grid")) m.lambda_grid = o["lambda_grid"].get<std::vector<double>>();
    if (o.contains("folds")) m.folds = o["folds"].get<int>();
    if (o.contains("forest_trees")) m.forest_trees = o["forest_trees"].get<std::vector<int>>();
    if (o.contains("forest_depths")) m.forest_depths = o["forest_depths"].get<std::vector<int>>();
    if (o.contains("logistic_steps")) m.logistic_steps = o["logistic_steps"].get<int>();
    if (o.contains("lasso_tol")) m.lasso_tol = o["lasso_tol"].get<double>();
    if (o.contains("lasso_max_sweeps")) m.lasso_max_sweeps = o["lasso_max_sweeps"].get<int>();
    if (o.contains("dirichlet_cutoff")) m.dirichlet_cutoff = o["dirichlet_cutoff"].get<int>();
    if (o.contains("validation_fraction")) m.validation_fraction = o["validation_fraction"].get<double>();
    if (o.contains("mlp")) {
      const Json& p = o["mlp"];
      auto& q = m.mlp;
      if (p.contains("width")) q.width = p["width"].get<int>();
      if (p.contains("dropout")) q.dropout = p["dropout"].get<double>();
      if (p.contains("learning_rate")) q.learning_rate = p["learning_rate"].get<double>();
      if (p.contains("l2")) q.l2 = p["l2"].get<double>();
      if (p.contains("batch_size")) q.batch_size = p["batch_size"].get<int>();
      if (p.contains("max_epochs")) q.max_epochs = p["max_epochs"].get<int>();
      if (p.contains("patience")) q.patience = p["patience"].get<int>();
      if (p.contains("validation_fraction")) q.validation_fraction = p["validation_fraction"].get<double>();
    }
  }
  if (j.contains("lanczos")) {
    const Json& l = j["lanczos"];
    if (l.contains("tol")) c.lanczos.tol = l["tol"].get<double>();
    if (l.contains("max_iter")) c.lanczos.max_iter = l["max_iter"].get<int>();
    if (l.contains("krylov_dim")) c.lanczos.krylov_dim = l["krylov_dim"].get<int>();
    if (l.contains("gap_iterations")) c.lanczos.gap_iterations = l["gap_iterations"].get<int>();
  }
  if (j.contains("cache_dir")) c.cache_dir = j["cache_dir"].get<std::string>();
  if (j.contains("timing")) c.timing = j["timing"].get<bool>();
  if (j.contains("threads")) c.threads = j["threads"].get<int>();
  return c;
}

std::string ExperimentConfig::to_json() const {
  Json j;
  j["family"] = std::string(qsl::to_string(family));
  j["N"] = nqubits;
  j["task"] = std::string(qsl::to_string(task));
  j["n"] = n_grid;
  j["M"] = m_grid;
  j["n_te"] = n_test;
  j["models"] = models;
  j["repetitions"] = repetitions;
  j["seed"] = seed;
  j["noise_free"] = noise_free;
  if (budget_cap || ssl) {
    Json b = Json::object();
    if (budget_cap) b["cap"] = *budget_cap;
    if (ssl) b["ssl"] = Json{{"n_pre", ssl->n_pre}, {"M_pre", ssl->m_pre}, {"n_sft", ssl->n_sft}, {"M_sft", ssl->m_sft}};
    j["budget"] = b;
  }
  const auto& m = options;
  j["options"] = Json{{"lambda_grid", m.lambda_grid},
                      {"folds", m.folds},
                      {"forest_trees", m.forest_trees},
                      {"forest_depths", m.forest_depths},
                      {"logistic_steps", m.logistic_steps},
                      {"lasso_tol", m.lasso_tol},
                      {"lasso_max_sweeps", m.lasso_max_sweeps},
                      {"dirichlet_cutoff", m.dirichlet_cutoff},
                      {"validation_fraction", m.validation_fraction},
                      {"mlp",
                       Json{{"width", m.mlp.width},
                            {"dropout", m.mlp.dropout},
                            {"learning_rate", m.mlp.learning_rate},
                            {"l2", m.mlp.l2},
                            {"batch_size", m.mlp.batch_size},
                            {"max_epochs", m.mlp.max_epochs},
                            {"patience", m.mlp.patience},
                            {"validation_fraction", m.mlp.validation_fraction}}}};
  j["lanczos"] = Json{{"tol", lanczos.tol},
                      {"max_iter", lanczos.max_iter},
                      {"krylov_dim", lanczos.krylov_dim},
                      {"gap_iterations", lanczos.gap_iterations}};
  if (cache_dir) j["cache_dir"] = *cache_dir;
  j["timing"] = timing;
  j["threads"] = threads;
  return j.dump(2);
}

void ExperimentConfig::validate() const {
  if (nqubits < 2) throw std::invalid_argument("config: N must be >= 2");
  if (n_grid.empty() || m_grid.empty()) throw std::invalid_argument("config: empty n or M grid");
  for (int n : n_grid) {
    if (n < 1) throw std::invalid_argument("config: n must be >= 1");
  }
  if (!noise_free) {
    for (int m : m_grid) {
      if (m < 1) throw std::invalid_argument("config: M must be >= 1");
    }
  }
  if (n_test < 1) throw std::invalid_argument("config: n_te must be >= 1");
  if (repetitions < 1) throw std::invalid_argument("config: repetitions must be >= 1");
  if (models.empty()) throw std::invalid_argument("config: no models");
  if (task == Task::Qpc && family != Family::Rydberg) {
    throw std::invalid_argument("config: phase classification is defined for the Rydberg family");
  }
  if (options.folds < 2) throw std::invalid_argument("config: folds must be >= 2");
  if (options.lambda_grid.empty()) throw std::invalid_argument("config: empty lambda grid");
  for (double l : options.lambda_grid) {
    if (!(l > 0.0)) throw std::invalid_argument("config: lambda values must be > 0");
  }
  for (const auto& name : models) {
    const ModelSpec s = parse_model(name, task);
    if (noise_free && s.measurements) {
      throw std::invalid_argument("config: model '" + name + "' needs measurements but the run is noise-free");
    }
  }
  const int shots_max = noise_free ? 0 : *std::max_element(m_grid.begin(), m_grid.end());
  for (int n : n_grid) {
    for (int m : m_grid) {
      const std::int64_t shots = noise_free ? 0 : static_cast<std::int64_t>(n) * m;
      if (budget_cap && shots > *budget_cap) {
        throw BudgetError("budget: cell n=" + std::to_string(n) + ", M=" + std::to_string(m) + " needs " +
                          std::to_string(shots) + " shots, cap is " + std::to_string(*budget_cap));
      }
      if (ssl) {
        const SplitCheck c = ssl_split_check(ssl->n_pre, ssl->m_pre, ssl->n_sft, ssl->m_sft, n, noise_free ? 0 : m);
        if (!c.ok) {
          throw BudgetError("budget: SSL split spends " + std::to_string(c.split_shots) + " shots but n x M = " +
                            std::to_string(c.total_shots) + " for n=" + std::to_string(n) +
                            ", M=" + std::to_string(m));
        }
      }
    }
  }
  (void)shots_max;
}

MetricsReport run_experiment(const ExperimentConfig& config) {
  config.validate();
  std::vector<ModelSpec> specs;
  for (const auto& name : config.models) specs.push_back(parse_model(name, config.task));
  const bool any_random = std::any_of(specs.begin(), specs.end(), [](const ModelSpec& s) { return s.randomized; });
  const int n_max = *std::max_element(config.n_grid.begin(), config.n_grid.end());
  const std::vector<int> m_grid = config.noise_free ? std::vector<int>{0} : config.m_grid;
  const auto metrics = metrics_for(config.task);

  std::optional<GroundStateCache> cache;
  if (config.cache_dir) cache.emplace(*config.cache_dir);

  struct Key {
    std::size_t model;
    int n, shots, rep, metric;
    auto operator<=>(const Key&) const = default;
  };
  std::vector<std::pair<Key, ReportRow>> rows;

  for (int rep = 0; rep < config.repetitions; ++rep) {
    const std::uint64_t rep_seed = derive_seed(config.seed, {static_cast<std::uint64_t>(rep)});
    GenerateConfig gc;
    gc.family = config.family;
    gc.nqubits = config.nqubits;
    gc.task = config.task;
    gc.n_train = n_max;
    gc.n_test = config.n_test;
    gc.seed = rep_seed;
    gc.noise_free = config.noise_free;
    gc.lanczos = config.lanczos;
    const std::size_t total = static_cast<std::size_t>(n_max) + static_cast<std::size_t>(config.n_test);
    std::vector<std::optional<SolvedInstance>> pool(total);
    parallel_for(total, config.threads, [&](std::size_t k) {
      const bool train = k < static_cast<std::size_t>(n_max);
      const int index = static_cast<int>(train ? k : k - static_cast<std::size_t>(n_max));
      pool[k] = solve_instance(gc, train ? 0 : 1, index, cache ? &*cache : nullptr);
    });

    for (int shots : m_grid) {
      std::vector<Instance> measured(total);
      parallel_for(total, config.threads, [&](std::size_t k) {
        measured[k] = pool[k]->instance;
        if (!config.noise_free) measure_instance(measured[k], pool[k]->state, config.task, shots);
      });

      struct Cell {
        int n;
        Dataset real, random;
      };
      std::vector<Cell> cells;
      for (int n : config.n_grid) {
        Dataset d;
        d.family = config.family;
        d.nqubits = config.nqubits;
        d.task = config.task;
        d.payload = config.noise_free ? Payload::None : payload_for(config.task);
        d.shots = shots;
        d.seed = rep_seed;
        d.noise_free = config.noise_free;
        d.budget.total_shots = config.budget_cap.value_or(static_cast<std::int64_t>(n) * shots);
        d.budget.allocate("train", n, shots);
        d.n_train_drawn = n;
        d.train.assign(measured.begin(), measured.begin() + n);
        d.test.assign(measured.begin() + n_max, measured.end());
        d.test_shots = config.noise_free ? 0 : static_cast<std::int64_t>(config.n_test) * shots;
        if (config.task == Task::Qpc) {
          Rng rng = make_rng(rep_seed, {2, static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(shots)});
          rebalance_training(d, rng);
        }
        Dataset r;
        if (any_random) {
          r = d;
          Rng rng = make_rng(rep_seed, {3, static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(shots)});
          randomize_measurements(r, config.task == Task::Gspe ? RandomizeMode::Shadow6 : RandomizeMode::Bit2, rng);
        }
        cells.push_back({n, std::move(d), std::move(r)});
      }

      const std::size_t jobs = cells.size() * specs.size();
      std::vector<std::vector<std::pair<Key, ReportRow>>> out(jobs);
      ModelOptions options = config.options;
      options.threads = 1;
      parallel_for(jobs, config.threads, [&](std::size_t job) {
        const Cell& cell = cells[job / specs.size()];
        const std::size_t mi = job % specs.size();
        const ModelSpec& spec = specs[mi];
        const Dataset& d = spec.randomized ? cell.random : cell.real;
        const std::uint64_t fit_seed =
            derive_seed(rep_seed, {4, static_cast<std::uint64_t>(cell.n), static_cast<std::uint64_t>(shots),
                                   fnv1a(spec.name)});
        const auto start = std::chrono::steady_clock::now();
        const TrainedModel model = fit_model(spec, d, options, fit_seed);
        const Evaluation ev = evaluate_model(model, spec, d);
        const double seconds =
            config.timing ? std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() : 0.0;
        const Evaluation base = cs_baseline(cell.real);
        for (Metric metric : metrics) {
          ReportRow row;
          row.model = spec.name;
          row.family = config.family;
          row.nqubits = config.nqubits;
          row.metric = metric;
          row.n = cell.n;
          row.shots = shots;
          row.rep = rep;
          row.value = ev.get(metric);
          row.baseline = base.get(metric);
          row.seed = rep_seed;
          row.seconds = seconds;
          out[job].emplace_back(Key{mi, cell.n, shots, rep, static_cast<int>(metric)}, std::move(row));
        }
      });
      for (auto& o : out) {
        for (auto& r : o) rows.push_back(std::move(r));
      }
    }
  }
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  MetricsReport report;
  for (auto& r : rows) report.rows.push_back(std::move(r.second));
  return report;
}

std::string report_csv(const MetricsReport& report) {
  std::string s = "model,family,N,task,n,M,rep,metric,baseline,seed,seconds\n";
  for (const auto& r : report.rows) {
    s += r.model;
    s += ',';
    s += to_string(r.family);
    s += ',' + std::to_string(r.nqubits) + ',';
    s += to_string(r.metric);
    s += ',' + std::to_string(r.n) + ',';
    s += r.shots == 0 ? std::string("inf") : std::to_string(r.shots);
    s += ',' + std::to_string(r.rep) + ',' + format_double(r.value) + ',' + format_double(r.baseline) + ',' +
         std::to_string(r.seed) + ',' + format_double(r.seconds) + '\n';
  }
  return s;
}

MetricsReport parse_report_csv(std::string_view csv) {
  MetricsReport report;
  std::istringstream in{std::string(csv)};
  std::string line;
  if (!std::getline(in, line) || line != "model,family,N,task,n,M,rep,metric,baseline,seed,seconds") {
    throw std::invalid_argument("report: unexpected header");
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string_view> f;
    std::string_view rest = line;
    for (;;) {
      const auto comma = rest.find(',');
      f.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (f.size() != 11) throw std::invalid_argument("report: expected 11 columns in '" + line + "'");
    ReportRow r;
    r.model = std::string(f[0]);
    r.family = parse_family(f[1]);
    r.nqubits = parse_int<int>(f[2]);
    r.metric = parse_metric(f[3]);
    r.n = parse_int<int>(f[4]);
    r.shots = f[5] == "inf" ? 0 : parse_int<int>(f[5]);
    r.rep = parse_int<int>(f[6]);
    r.value = parse_double(f[7]);
    r.baseline = parse_double(f[8]);
    r.seed = parse_int<std::uint64_t>(f[9]);
    r.seconds = parse_double(f[10]);
    report.rows.push_back(std::move(r));
  }
  return report;
}

std::vector<Aggregate> aggregate(const MetricsReport& report) {
  std::vector<Aggregate> out;
  std::vector<std::vector<const ReportRow*>> members;
  for (const auto& r : report.rows) {
    auto it = std::find_if(out.begin(), out.end(), [&](const Aggregate& a) {
      return a.model == r.model && a.metric == r.metric && a.n == r.n && a.shots == r.shots;
    });
    if (it == out.end()) {
      out.push_back({r.model, r.metric, r.n, r.shots, 0, 0.0, 0.0, 0.0});
      members.emplace_back();
      it = out.end() - 1;
    }
    members[static_cast<std::size_t>(it - out.begin())].push_back(&r);
  }
  for (std::size_t g = 0; g < out.size(); ++g) {
    auto& a = out[g];
    const auto& rs = members[g];
    a.count = static_cast<int>(rs.size());
    double sum = 0.0, base = 0.0;
    for (const auto* r : rs) {
      sum += r->value;
      base += r->baseline;
    }
    a.mean = sum / a.count;
    a.baseline = base / a.count;
    double ss = 0.0;
    for (const auto* r : rs) ss += (r->value - a.mean) * (r->value - a.mean);
    a.stddev = a.count > 1 ? std::sqrt(ss / (a.count - 1)) : 0.0;
  }
  return out;
}

std::string report_json(const MetricsReport& report) {
  auto num = [](double v) -> Json {
    if (std::isfinite(v)) return v;
    return nullptr;
  };
  Json rows = Json::array();
  for (const auto& r : report.rows) {
    rows.push_back(Json{{"model", r.model},
                        {"family", std::string(to_string(r.family))},
                        {"N", r.nqubits},
                        {"task", std::string(to_string(r.metric))},
                        {"n", r.n},
                        {"M", r.shots == 0 ? Json("inf") : Json(r.shots)},
                        {"rep", r.rep},
                        {"metric", num(r.value)},
                        {"baseline", num(r.baseline)},
                        {"seed", r.seed},
                        {"seconds", r.seconds}});
  }
  Json aggs = Json::array();
  for (const auto& a : aggregate(report)) {
    aggs.push_back(Json{{"model", a.model},
                        {"task", std::string(to_string(a.metric))},
                        {"n", a.n},
                        {"M", a.shots == 0 ? Json("inf") : Json(a.shots)},
                        {"count", a.count},
                        {"mean", num(a.mean)},
                        {"std", num(a.stddev)},
                        {"baseline", num(a.baseline)}});
  }
  return Json{{"rows", rows}, {"aggregates", aggs}}.dump(2) + "\n";
}

void emit_report(const MetricsReport& report, const std::string& path, ReportFormat format) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write report to " + path);
  f << (format == ReportFormat::Csv ? report_csv(report) : report_json(report));
  if (!f) throw std::runtime_error("failed writing report to " + path);
}

}  // namespace qsl
