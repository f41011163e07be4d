#include "qsl/model.hpp"

#include <stdexcept>

#include "qsl/kernels.hpp"

namespace qsl {

namespace {

constexpr std::uint32_t kModelMagic = 0x4C444D51;  // "QMDL"
constexpr std::uint32_t kModelVersion = 1;

int argmax(const Eigen::VectorXd& v) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return static_cast<int>(best);
}

}  // namespace

std::string_view to_string(ModelKind k) noexcept {
  switch (k) {
    case ModelKind::Ridge: return "ridge";
    case ModelKind::Lasso: return "lasso";
    case ModelKind::KernelRidge: return "kernel_ridge";
    case ModelKind::KernelLogistic: return "kernel_logistic";
    case ModelKind::RandomForest: return "random_forest";
    case ModelKind::Mlp: return "mlp";
  }
  return "?";
}

Eigen::MatrixXd KernelMachine::gram(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) const {
  switch (kernel) {
    case KernelKind::Rbf: return rbf_gram(a, b, gamma2);
    case KernelKind::Ntk: return ntk_gram(a, b);
    case KernelKind::Dirichlet: return dirichlet_gram(a, b, cutoff);
  }
  throw std::logic_error("unknown kernel");
}

Eigen::MatrixXd KernelMachine::predict(const Eigen::MatrixXd& rows) const {
  if (rows.cols() != support.cols()) throw std::invalid_argument("KernelMachine: feature dimension mismatch");
  Eigen::MatrixXd out = gram(rows, support) * alpha;
  out.rowwise() += intercept.transpose();
  return out;
}

void KernelMachine::write(ByteWriter& w) const {
  w.put(static_cast<std::uint8_t>(kernel));
  w.put(gamma2);
  w.put<std::int32_t>(cutoff);
  write_matrix(w, support);
  write_matrix(w, alpha);
  write_vector(w, intercept);
  write_vector(w, lambda);
}

KernelMachine KernelMachine::read(ByteReader& r) {
  KernelMachine k;
  const auto kind = r.get<std::uint8_t>();
  if (kind > 2) throw std::runtime_error("KernelMachine: bad kernel tag");
  k.kernel = static_cast<KernelKind>(kind);
  k.gamma2 = r.get<double>();
  k.cutoff = r.get<std::int32_t>();
  k.support = read_matrix(r);
  k.alpha = read_matrix(r);
  k.intercept = read_vector(r);
  k.lambda = read_vector(r);
  if (k.alpha.rows() != k.support.rows() || k.intercept.size() != k.alpha.cols()) {
    throw std::runtime_error("KernelMachine: inconsistent shapes");
  }
  return k;
}

bool TrainedModel::is_classifier() const noexcept {
  switch (kind) {
    case ModelKind::KernelLogistic:
    case ModelKind::RandomForest: return true;
    case ModelKind::Mlp: return std::get<Mlp>(body).classification;
    default: return false;
  }
}

Eigen::VectorXd TrainedModel::featurize(std::span<const double> x, std::span<const std::uint8_t> v) const {
  const Eigen::VectorXd z = input.apply(x);
  return qsl::featurize(features, std::span<const double>(z.data(), static_cast<std::size_t>(z.size())), v);
}

Prediction TrainedModel::predict(std::span<const double> x, std::span<const std::uint8_t> v) const {
  return predict_features(featurize(x, v));
}

Prediction TrainedModel::predict_features(const Eigen::VectorXd& phi) const {
  Prediction p;
  const Eigen::MatrixXd row = phi.transpose();
  switch (kind) {
    case ModelKind::Ridge:
    case ModelKind::Lasso:
      p.values = std::get<LinearModel>(body).predict(row).row(0).transpose();
      break;
    case ModelKind::KernelRidge:
      p.values = std::get<KernelMachine>(body).predict(row).row(0).transpose();
      break;
    case ModelKind::KernelLogistic:
      p.values = softmax_rows(std::get<KernelMachine>(body).predict(row)).row(0).transpose();
      p.label = argmax(p.values);
      break;
    case ModelKind::RandomForest: {
      const auto& f = std::get<RandomForest>(body);
      p.values = f.votes(phi);
      p.label = f.predict(phi);
      break;
    }
    case ModelKind::Mlp: {
      const auto& net = std::get<Mlp>(body);
      const Eigen::MatrixXd out = net.forward(row);
      if (net.classification) {
        p.values = softmax_rows(out).row(0).transpose();
        p.label = argmax(p.values);
      } else {
        p.values = out.row(0).transpose();
      }
      break;
    }
  }
  return p;
}

std::string TrainedModel::serialize() const {
  ByteWriter w;
  w.put(kModelMagic);
  w.put(kModelVersion);
  w.put(static_cast<std::uint8_t>(kind));
  input.write(w);
  features.write(w);
  std::visit([&](const auto& b) { b.write(w); }, body);
  return w.take();
}

TrainedModel TrainedModel::deserialize(std::string_view bytes) {
  ByteReader r(bytes);
  if (r.get<std::uint32_t>() != kModelMagic) throw std::runtime_error("not a model record");
  if (r.get<std::uint32_t>() != kModelVersion) throw std::runtime_error("unsupported model record version");
  TrainedModel m;
  const auto kind = r.get<std::uint8_t>();
  if (kind > 5) throw std::runtime_error("model record: bad kind tag");
  m.kind = static_cast<ModelKind>(kind);
  m.input = Standardizer::read(r);
  m.features = FeatureSpec::read(r);
  switch (m.kind) {
    case ModelKind::Ridge:
    case ModelKind::Lasso: m.body = LinearModel::read(r); break;
    case ModelKind::KernelRidge:
    case ModelKind::KernelLogistic: m.body = KernelMachine::read(r); break;
    case ModelKind::RandomForest: m.body = RandomForest::read(r); break;
    case ModelKind::Mlp: m.body = Mlp::read(r); break;
  }
  if (!r.done()) throw std::runtime_error("model record: trailing bytes");
  return m;
}

}  // namespace qsl
