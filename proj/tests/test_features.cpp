#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "qsl/features.hpp"
#include "qsl/kernels.hpp"

namespace qsl {
namespace {

constexpr double kPi = std::numbers::pi;

Eigen::MatrixXd random_rows(int n, int d, Rng& rng) {
  std::normal_distribution<double> g;
  Eigen::MatrixXd m(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) m(i, j) = g(rng);
  return m;
}

double min_eigenvalue(const Eigen::MatrixXd& k) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k);
  return es.eigenvalues().minCoeff();
}

TEST(Rff, ZeroInputZeroPhase) {
  Rng rng = make_rng(1);
  FeatureSpec s = make_rff(3, 16, rng);
  s.phases.setZero();
  const double x[] = {0.0, 0.0, 0.0};
  const auto phi = featurize(s, x);
  ASSERT_EQ(phi.size(), 16);
  for (double v : phi) EXPECT_DOUBLE_EQ(v, std::sqrt(2.0 / 16));
}

TEST(Rff, MagnitudeBound) {
  Rng rng = make_rng(2);
  const FeatureSpec s = make_rff(5, 64, rng);
  std::normal_distribution<double> g;
  for (int t = 0; t < 50; ++t) {
    double x[5];
    for (double& v : x) v = 3 * g(rng);
    for (double v : featurize(s, x)) EXPECT_LE(std::abs(v), std::sqrt(2.0 / 64) + 1e-15);
  }
}

TEST(Rff, ApproximatesGaussianKernel) {
  Rng rng = make_rng(3);
  const FeatureSpec s = make_rff(3, 4096, rng);
  std::normal_distribution<double> g;
  for (int t = 0; t < 100; ++t) {
    double x[3], y[3], d2 = 0.0;
    for (int c = 0; c < 3; ++c) {
      x[c] = 0.7 * g(rng);
      y[c] = 0.7 * g(rng);
      d2 += (x[c] - y[c]) * (x[c] - y[c]);
    }
    EXPECT_NEAR(featurize(s, x).dot(featurize(s, y)), std::exp(-d2 / 2), 0.05);
  }
}

TEST(FeatureSpec, ConcatDimension) {
  const FeatureSpec s = make_feature_spec(FeatureKind::RffConcat, 126, 7);
  EXPECT_EQ(s.output_dim(), 2 * 126);
  std::vector<double> x(126, 0.1);
  const auto phi = featurize(s, x);
  ASSERT_EQ(phi.size(), 252);
  for (int i = 0; i < 126; ++i) EXPECT_EQ(phi[i], 0.1);
}

TEST(FeatureSpec, RawIsIdentity) {
  const FeatureSpec s = make_feature_spec(FeatureKind::Raw, 4, 0);
  const double x[] = {1.5, -2.0, 0.0, 9.0};
  const auto phi = featurize(s, x);
  for (int i = 0; i < 4; ++i) EXPECT_EQ(phi[i], x[i]);
}

TEST(FeatureSpec, MeasurementBlock) {
  const int m = 64, n = 127;
  const FeatureSpec s = make_feature_spec(FeatureKind::WithMeasurements, 126, 8, m * n, 0.2);
  EXPECT_EQ(s.output_dim(), 252 + m * n);
  std::vector<double> x(126, 0.0);
  Rng rng = make_rng(4);
  std::vector<std::uint8_t> v(static_cast<std::size_t>(m * n));
  for (auto& b : v) b = static_cast<std::uint8_t>(rng() % 6);
  const auto phi = featurize(s, x, v);
  for (Eigen::Index i = 252; i < phi.size(); ++i) {
    EXPECT_GE(phi[i], 0.0);
    EXPECT_LE(phi[i], 1.0);
  }
  EXPECT_THROW(featurize(s, x), std::invalid_argument);
  EXPECT_THROW(featurize(make_feature_spec(FeatureKind::Raw, 126, 0), x, v), std::invalid_argument);
  EXPECT_THROW(featurize(s, std::vector<double>(5, 0.0), v), std::invalid_argument);
}

TEST(FeatureSpec, SerializeRegeneratesWeights) {
  const FeatureSpec s = make_feature_spec(FeatureKind::RffConcat, 6, 1234);
  ByteWriter w;
  s.write(w);
  ByteReader r(w.bytes());
  const FeatureSpec back = FeatureSpec::read(r);
  EXPECT_EQ(back.frequencies, s.frequencies);
  EXPECT_EQ(back.phases, s.phases);
}

TEST(Standardizer, ZScores) {
  Eigen::MatrixXd rows(4, 2);
  rows << 1, 5, 2, 5, 3, 5, 4, 5;
  const auto s = Standardizer::fit(rows);
  const auto z = s.apply(rows);
  EXPECT_NEAR(z.col(0).mean(), 0.0, 1e-15);
  EXPECT_NEAR(z.col(0).squaredNorm() / 4, 1.0, 1e-12);
  EXPECT_EQ(s.scale[1], 1.0);
  EXPECT_TRUE(z.col(1).isZero());
}

TEST(Dirichlet, SelfValueCountsFrequencies) {
  Rng rng = make_rng(5);
  for (int d = 1; d <= 4; ++d) {
    const Eigen::MatrixXd x = random_rows(1, d, rng);
    const double k = dirichlet_gram(x, x, 3)(0, 0);
    EXPECT_NEAR(k, static_cast<double>(dirichlet_frequencies(d, 3).size()), 1e-9);
  }
  EXPECT_EQ(dirichlet_frequencies(1, 3).size(), 7u);
  EXPECT_EQ(dirichlet_frequencies(2, 1).size(), 5u);
}

TEST(Dirichlet, OneDimensionalSum) {
  Rng rng = make_rng(6);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int t = 0; t < 50; ++t) {
    Eigen::MatrixXd a(1, 1), b(1, 1);
    a(0, 0) = u(rng);
    b(0, 0) = u(rng);
    double direct = 0.0;
    for (int k = -3; k <= 3; ++k) direct += std::cos(kPi * k * (a(0, 0) - b(0, 0)));
    EXPECT_NEAR(dirichlet_gram(a, b, 3)(0, 0), direct, 1e-10);
  }
}

TEST(Dirichlet, SymmetricAndTruncated) {
  Rng rng = make_rng(7);
  const Eigen::MatrixXd a = random_rows(6, 7, rng);
  const Eigen::MatrixXd k = dirichlet_gram(a, a, 3);
  EXPECT_LE((k - k.transpose()).cwiseAbs().maxCoeff(), 1e-12);
  // Only the leading four coordinates enter.
  Eigen::MatrixXd b = a;
  b.col(5).setConstant(100.0);
  EXPECT_LE((dirichlet_gram(b, b, 3) - k).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Rbf, HeuristicBandwidth) {
  Eigen::MatrixXd x(2, 1);
  x << 0.0, 2.0;
  EXPECT_DOUBLE_EQ(heuristic_gamma2(x), 1.0);
  Eigen::MatrixXd same(3, 2);
  same.setConstant(1.0);
  EXPECT_THROW(heuristic_gamma2(same), std::invalid_argument);
}

TEST(Rbf, UnitDiagonalAndPsd) {
  Rng rng = make_rng(8);
  const Eigen::MatrixXd x = random_rows(10, 3, rng);
  const Eigen::MatrixXd k = rbf_gram(x, x, heuristic_gamma2(x));
  for (int i = 0; i < 10; ++i) EXPECT_DOUBLE_EQ(k(i, i), 1.0);
  EXPECT_GE(min_eigenvalue(k), -1e-10);
}

TEST(Ntk, ParallelInputs) {
  // Angle 0 keeps every layer at ||x||^2, so Theta = 3 ||x||^2 for two hidden layers.
  Eigen::VectorXd x(3);
  x << 1.0, -2.0, 0.5;
  EXPECT_NEAR(ntk_value(x, x), 3.0 * x.squaredNorm(), 1e-12);
  EXPECT_NEAR(ntk_value(x, 2.0 * x), 6.0 * x.squaredNorm(), 1e-12);
}

TEST(Ntk, SymmetricPsd) {
  Rng rng = make_rng(9);
  const Eigen::MatrixXd x = random_rows(10, 4, rng);
  const Eigen::MatrixXd k = ntk_gram(x, x);
  EXPECT_LE((k - k.transpose()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_GE(min_eigenvalue(k), -1e-8);
}

TEST(Ntk, MatchesWideNetwork) {
  // f(x) = s v.relu(s W2 relu(W1 x)), s = sqrt(2/m), all weights N(0,1).
  // The empirical kernel of one draw fluctuates by a few percent at this
  // width, so the estimate averages independent initializations.
  const int m = 4096, d = 4, draws = 16, pairs = 20;
  Rng rng = make_rng(10);
  std::normal_distribution<double> g;
  const Eigen::MatrixXd pts = random_rows(2 * pairs, d, rng);
  const double s = std::sqrt(2.0 / m);
  Eigen::MatrixXd w1(m, d), w2(m, m);
  Eigen::VectorXd v(m);
  Eigen::VectorXd mc = Eigen::VectorXd::Zero(pairs);
  for (int draw = 0; draw < draws; ++draw) {
    for (Eigen::Index i = 0; i < w1.size(); ++i) w1.data()[i] = g(rng);
    for (Eigen::Index i = 0; i < w2.size(); ++i) w2.data()[i] = g(rng);
    for (Eigen::Index i = 0; i < m; ++i) v[i] = g(rng);
    // Columns are inputs; gradients are formed layer by layer.
    const Eigen::MatrixXd x = pts.transpose();
    const Eigen::MatrixXd h1 = w1 * x;
    const Eigen::MatrixXd a1 = h1.cwiseMax(0.0);
    const Eigen::MatrixXd h2 = s * (w2 * a1);
    const Eigen::MatrixXd a2 = h2.cwiseMax(0.0);
    const Eigen::MatrixXd d2 = (s * v.replicate(1, x.cols())).array() * (h2.array() > 0).cast<double>();
    const Eigen::MatrixXd d1 = (s * (w2.transpose() * d2)).array() * (h1.array() > 0).cast<double>();
    for (int t = 0; t < pairs; ++t) {
      const int i = 2 * t, j = 2 * t + 1;
      mc[t] += s * s * a2.col(i).dot(a2.col(j)) + s * s * d2.col(i).dot(d2.col(j)) * a1.col(i).dot(a1.col(j)) +
               d1.col(i).dot(d1.col(j)) * x.col(i).dot(x.col(j));
    }
  }
  for (int t = 0; t < pairs; ++t) {
    const double exact = ntk_value(pts.row(2 * t).transpose(), pts.row(2 * t + 1).transpose());
    EXPECT_NEAR(mc[t] / draws / exact, 1.0, 0.03) << "pair " << t;
  }
}

}  // namespace
}  // namespace qsl
