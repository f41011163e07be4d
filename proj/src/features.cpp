#include "qsl/features.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "qsl/linear_models.hpp"

namespace qsl {

namespace {

constexpr double kPi = std::numbers::pi;

void fill_rff(FeatureSpec& spec) {
  Rng rng(spec.seed);
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> phase(0.0, 2.0 * kPi);
  spec.frequencies.resize(spec.rff_dim, spec.input_dim);
  spec.phases.resize(spec.rff_dim);
  for (int r = 0; r < spec.rff_dim; ++r) {
    for (int c = 0; c < spec.input_dim; ++c) spec.frequencies(r, c) = gauss(rng);
    spec.phases[r] = phase(rng);
  }
}

}  // namespace

int FeatureSpec::output_dim() const noexcept {
  switch (kind) {
    case FeatureKind::Raw: return input_dim;
    case FeatureKind::Rff: return rff_dim;
    case FeatureKind::RffConcat: return input_dim + rff_dim;
    case FeatureKind::WithMeasurements: return input_dim + rff_dim + measurement_dim;
  }
  return 0;
}

void FeatureSpec::write(ByteWriter& w) const {
  w.put(static_cast<std::uint8_t>(kind));
  w.put<std::int32_t>(input_dim);
  w.put<std::int32_t>(rff_dim);
  w.put(seed);
  w.put<std::int32_t>(measurement_dim);
  w.put(measurement_scale);
}

FeatureSpec FeatureSpec::read(ByteReader& r) {
  FeatureSpec s;
  s.kind = static_cast<FeatureKind>(r.get<std::uint8_t>());
  if (static_cast<int>(s.kind) > 3) throw std::runtime_error("FeatureSpec: bad kind");
  s.input_dim = r.get<std::int32_t>();
  s.rff_dim = r.get<std::int32_t>();
  s.seed = r.get<std::uint64_t>();
  s.measurement_dim = r.get<std::int32_t>();
  s.measurement_scale = r.get<double>();
  if (s.rff_dim > 0) fill_rff(s);
  return s;
}

FeatureSpec make_rff(int input_dim, int output_dim, Rng& rng) {
  if (input_dim < 1 || output_dim < 1) throw std::invalid_argument("make_rff: dims must be >= 1");
  FeatureSpec s;
  s.kind = FeatureKind::Rff;
  s.input_dim = input_dim;
  s.rff_dim = output_dim;
  s.seed = rng();
  fill_rff(s);
  return s;
}

FeatureSpec make_feature_spec(FeatureKind kind, int input_dim, std::uint64_t seed,
                              int measurement_dim, double measurement_scale) {
  if (input_dim < 1) throw std::invalid_argument("make_feature_spec: input_dim must be >= 1");
  FeatureSpec s;
  s.kind = kind;
  s.input_dim = input_dim;
  s.seed = seed;
  if (kind != FeatureKind::Raw) s.rff_dim = input_dim;
  if (kind == FeatureKind::WithMeasurements) {
    if (measurement_dim < 1) throw std::invalid_argument("make_feature_spec: empty measurement block");
    s.measurement_dim = measurement_dim;
    s.measurement_scale = measurement_scale;
  }
  if (s.rff_dim > 0) fill_rff(s);
  return s;
}

Eigen::VectorXd featurize(const FeatureSpec& spec, std::span<const double> x,
                          std::span<const std::uint8_t> v) {
  if (x.size() != static_cast<std::size_t>(spec.input_dim)) {
    throw std::invalid_argument("featurize: expected " + std::to_string(spec.input_dim) +
                                " inputs, got " + std::to_string(x.size()));
  }
  const bool wants_v = spec.kind == FeatureKind::WithMeasurements;
  if (wants_v && v.size() != static_cast<std::size_t>(spec.measurement_dim)) {
    throw std::invalid_argument("featurize: measurement block must have " +
                                std::to_string(spec.measurement_dim) + " entries");
  }
  if (!wants_v && !v.empty()) throw std::invalid_argument("featurize: unexpected measurement block");

  const Eigen::Map<const Eigen::VectorXd> xv(x.data(), static_cast<Eigen::Index>(x.size()));
  Eigen::VectorXd out(spec.output_dim());
  Eigen::Index pos = 0;
  if (spec.kind == FeatureKind::Raw || spec.kind == FeatureKind::RffConcat ||
      spec.kind == FeatureKind::WithMeasurements) {
    out.head(spec.input_dim) = xv;
    pos = spec.input_dim;
  }
  if (spec.rff_dim > 0) {
    const double amp = std::sqrt(2.0 / spec.rff_dim);
    out.segment(pos, spec.rff_dim) =
        amp * (spec.frequencies * xv + spec.phases).array().cos().matrix();
    pos += spec.rff_dim;
  }
  for (std::size_t k = 0; k < v.size(); ++k) {
    out[pos + static_cast<Eigen::Index>(k)] = spec.measurement_scale * v[k];
  }
  return out;
}

std::vector<std::vector<int>> dirichlet_frequencies(int dim, int cutoff) {
  if (dim < 1 || cutoff < 1) throw std::invalid_argument("dirichlet_frequencies: bad arguments");
  std::vector<std::vector<int>> out;
  std::vector<int> k(static_cast<std::size_t>(dim), -cutoff);
  const int limit = cutoff * cutoff;
  for (;;) {
    int norm2 = 0;
    for (int c : k) norm2 += c * c;
    if (norm2 <= limit) out.push_back(k);
    std::size_t d = 0;
    while (d < k.size() && k[d] == cutoff) k[d++] = -cutoff;
    if (d == k.size()) break;
    ++k[d];
  }
  return out;
}

Eigen::VectorXd dirichlet_features(std::span<const double> x, int cutoff) {
  if (x.empty()) throw std::invalid_argument("dirichlet_features: empty input");
  const int dim = static_cast<int>(std::min<std::size_t>(x.size(), 4));
  const auto ks = dirichlet_frequencies(dim, cutoff);
  Eigen::VectorXd out(2 * static_cast<Eigen::Index>(ks.size()));
  for (std::size_t i = 0; i < ks.size(); ++i) {
    double arg = 0.0;
    for (int c = 0; c < dim; ++c) arg += ks[i][static_cast<std::size_t>(c)] * x[static_cast<std::size_t>(c)];
    arg *= kPi;
    out[2 * static_cast<Eigen::Index>(i)] = std::cos(arg);
    out[2 * static_cast<Eigen::Index>(i) + 1] = std::sin(arg);
  }
  return out;
}

Standardizer Standardizer::fit(const Eigen::MatrixXd& rows) {
  if (rows.rows() == 0) throw std::invalid_argument("Standardizer: no rows");
  Standardizer s;
  s.mean = rows.colwise().mean().transpose();
  s.scale.resize(rows.cols());
  for (Eigen::Index c = 0; c < rows.cols(); ++c) {
    const double var = (rows.col(c).array() - s.mean[c]).square().mean();
    s.scale[c] = var > 1e-24 ? std::sqrt(var) : 1.0;
  }
  return s;
}

Standardizer Standardizer::identity(int dim) {
  return {Eigen::VectorXd::Zero(dim), Eigen::VectorXd::Ones(dim)};
}

Eigen::VectorXd Standardizer::apply(std::span<const double> x) const {
  if (x.size() != static_cast<std::size_t>(mean.size())) {
    throw std::invalid_argument("Standardizer: dimension mismatch");
  }
  const Eigen::Map<const Eigen::VectorXd> xv(x.data(), mean.size());
  return ((xv - mean).array() / scale.array()).matrix();
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& rows) const {
  if (rows.cols() != mean.size()) throw std::invalid_argument("Standardizer: dimension mismatch");
  return ((rows.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array())
      .matrix();
}

void Standardizer::write(ByteWriter& w) const {
  write_vector(w, mean);
  write_vector(w, scale);
}

Standardizer Standardizer::read(ByteReader& r) {
  Standardizer s;
  s.mean = read_vector(r);
  s.scale = read_vector(r);
  return s;
}

}  // namespace qsl
