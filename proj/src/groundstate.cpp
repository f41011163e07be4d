#include "qsl/groundstate.hpp"

#include <unistd.h>

#include <Eigen/Dense>
#include <atomic>
#include <algorithm>
#include <bit>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "qsl/binary_io.hpp"

namespace qsl {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw std::runtime_error("write failed for " + path);
}

namespace {

template <class T>
T conj_of(const T& a) {
  if constexpr (std::is_same_v<T, double>) return a;
  else return std::conj(a);
}

template <class T>
T dot(const std::vector<T>& a, const std::vector<T>& b) {
  T s{};
  for (std::size_t i = 0; i < a.size(); ++i) s += conj_of(a[i]) * b[i];
  return s;
}

template <class T>
double norm(const std::vector<T>& a) {
  double s = 0.0;
  for (const auto& x : a) s += std::norm(x);
  return std::sqrt(s);
}

template <class T>
void scale(std::vector<T>& a, double f) {
  for (auto& x : a) x *= f;
}

template <class T>
void random_fill(std::vector<T>& v, Rng& rng) {
  std::normal_distribution<double> gauss;
  for (auto& x : v) {
    if constexpr (std::is_same_v<T, double>) x = gauss(rng);
    else x = T(gauss(rng), gauss(rng));
  }
}

// Removes the components along every vector of `basis` (two passes of
// classical Gram-Schmidt).
template <class T>
void orthogonalize(std::vector<T>& w, const std::vector<std::vector<T>>& basis) {
  for (int pass = 0; pass < 2; ++pass) {
    for (const auto& q : basis) {
      const T c = dot(q, w);
      for (std::size_t i = 0; i < w.size(); ++i) w[i] -= c * q[i];
    }
  }
}

struct RitzResult {
  double value;
  Eigen::VectorXd vector;
};

RitzResult lowest_ritz(const std::vector<double>& alpha, const std::vector<double>& beta) {
  const auto m = static_cast<Eigen::Index>(alpha.size());
  Eigen::VectorXd d = Eigen::Map<const Eigen::VectorXd>(alpha.data(), m);
  Eigen::VectorXd e(std::max<Eigen::Index>(m - 1, 0));
  for (Eigen::Index k = 0; k + 1 < m; ++k) e[k] = beta[static_cast<std::size_t>(k)];
  // The tridiagonal QR path does not rescale its input; entries of order 1e4
  // can stall it, so work on the unit-scaled matrix.
  double s = std::max(d.cwiseAbs().maxCoeff(), e.size() ? e.cwiseAbs().maxCoeff() : 0.0);
  if (!(s > 0.0)) s = 1.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(d / s, e / s, Eigen::ComputeEigenvectors);
  if (es.info() != Eigen::Success) {
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
    t.diagonal() = d / s;
    for (Eigen::Index k = 0; k + 1 < m; ++k) t(k, k + 1) = t(k + 1, k) = e[k] / s;
    es.compute(t);
    if (es.info() != Eigen::Success) throw SolverError("Lanczos: tridiagonal eigensolver failed", 0.0);
  }
  return {s * es.eigenvalues()[0], es.eigenvectors().col(0)};
}

template <class T>
struct LanczosRun {
  double value = 0.0;
  std::vector<T> vector;
  double residual = std::numeric_limits<double>::infinity();
  int matvecs = 0;
};

// One Lanczos cycle from `start` (normalized), restricted to the orthogonal
// complement of `deflate`. Returns the lowest Ritz pair and its explicit
// residual.
template <class T, class Apply>
LanczosRun<T> lanczos_cycle(const Apply& apply, std::vector<T> start, int steps,
                            const std::vector<std::vector<T>>& deflate, double scale_hint) {
  const std::size_t dim = start.size();
  std::vector<std::vector<T>> basis;
  std::vector<double> alpha, beta;
  std::vector<T> w(dim);
  LanczosRun<T> run;
  orthogonalize(start, deflate);
  scale(start, 1.0 / norm(start));
  basis.push_back(std::move(start));
  for (int k = 0; k < steps; ++k) {
    apply(basis.back(), w);
    ++run.matvecs;
    orthogonalize(w, deflate);
    const double a = std::real(dot(basis.back(), w));
    alpha.push_back(a);
    orthogonalize(w, basis);
    const double b = norm(w);
    if (k + 1 == steps || static_cast<std::size_t>(k + 1) == dim - deflate.size() ||
        b <= 1e-13 * std::max(1.0, scale_hint)) {
      break;
    }
    beta.push_back(b);
    scale(w, 1.0 / b);
    basis.push_back(w);
  }
  const auto ritz = lowest_ritz(alpha, beta);
  run.value = ritz.value;
  run.vector.assign(dim, T{});
  for (std::size_t k = 0; k < basis.size(); ++k) {
    const double c = ritz.vector[static_cast<Eigen::Index>(k)];
    for (std::size_t i = 0; i < dim; ++i) run.vector[i] += c * basis[k][i];
  }
  scale(run.vector, 1.0 / norm(run.vector));
  apply(run.vector, w);
  ++run.matvecs;
  run.value = std::real(dot(run.vector, w));
  for (std::size_t i = 0; i < dim; ++i) w[i] -= run.value * run.vector[i];
  run.residual = norm(w);
  return run;
}

// Thick-restart Lanczos. Each cycle grows the basis from the newest vector
// with full reorthogonalization and keeps every product H v, so the projected
// matrix is V^H (H V). A restart keeps the lowest Ritz vectors (their
// products follow from H V without new applications) and the Ritz residual.
template <class T>
GroundState solve(const CompiledOperator& op, double scale_hint, const LanczosConfig& cfg,
                  Rng& rng) {
  using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
  using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;
  const auto dim = static_cast<Eigen::Index>(op.dim());
  const double target = cfg.tol * std::max(1.0, scale_hint);
  const Eigen::Index krylov = std::min<Eigen::Index>(std::max(2, cfg.krylov_dim), dim);
  const Eigen::Index keep = std::clamp<Eigen::Index>(krylov / 4, 1, 16);
  const double breakdown = 1e-13 * std::max(1.0, scale_hint);

  Mat v(dim, krylov), hv(dim, krylov);
  Eigen::Index size = 0, have = 0;
  int used = 0;
  auto apply = [&](const Vec& in, Vec& out) {
    op.apply(std::span<const T>(in.data(), static_cast<std::size_t>(dim)),
             std::span<T>(out.data(), static_cast<std::size_t>(dim)));
    ++used;
  };
  auto random_vec = [&] {
    std::vector<T> tmp(static_cast<std::size_t>(dim));
    random_fill(tmp, rng);
    return Vec(Eigen::Map<const Vec>(tmp.data(), dim));
  };
  // Appends `w` orthonormalized against the basis, or a random direction when
  // it already lies in the span.
  auto extend = [&](Vec w) {
    for (int attempt = 0; attempt < 3 && size < krylov; ++attempt) {
      for (int pass = 0; pass < 2 && size > 0; ++pass) {
        w.noalias() -= v.leftCols(size) * (v.leftCols(size).adjoint() * w);
      }
      const double b = w.norm();
      if (b > breakdown) {
        v.col(size++) = w / b;
        return;
      }
      w = random_vec();
    }
  };

  extend(random_vec());
  LanczosRun<T> best;
  Vec x(dim), hx(dim), col(dim);
  while (used < cfg.max_iter) {
    while (used < cfg.max_iter && (have < size || size < krylov)) {
      if (have == size) {
        extend(hv.col(have - 1));
        if (have == size) break;
      }
      col = v.col(have);
      apply(col, x);
      hv.col(have++) = x;
    }
    const Eigen::Index m = have;
    const Mat proj = v.leftCols(m).adjoint() * hv.leftCols(m);
    const Mat herm = (proj + proj.adjoint()) * 0.5;
    const double s = std::max(herm.cwiseAbs().maxCoeff(), 1e-300);
    Eigen::SelfAdjointEigenSolver<Mat> es(herm / s);
    if (es.info() != Eigen::Success) throw SolverError("Lanczos: projected eigensolver failed", best.residual);

    x = v.leftCols(m) * es.eigenvectors().col(0);
    hx = hv.leftCols(m) * es.eigenvectors().col(0);
    const double theta = std::real(x.dot(hx));
    Vec r = hx - theta * x;
    double res = r.norm();
    if (res <= target && used < cfg.max_iter) {
      // Confirm against a fresh product; the stored ones carry rounding.
      apply(x, hx);
      r = hx - theta * x;
      res = r.norm();
    }
    if (res < best.residual) {
      best.value = theta;
      best.residual = res;
      best.vector.assign(x.data(), x.data() + dim);
    }
    if (best.residual <= target || used >= cfg.max_iter) break;

    const Eigen::Index kept = std::min(keep, m);
    const Mat y = es.eigenvectors().leftCols(kept);
    const Mat vy = v.leftCols(m) * y;
    const Mat hvy = hv.leftCols(m) * y;
    v.leftCols(kept) = vy;
    hv.leftCols(kept) = hvy;
    size = have = kept;
    extend(r);
  }
  if (!(best.residual <= target)) {
    throw SolverError("Lanczos did not converge: residual " + std::to_string(best.residual) +
                          " after " + std::to_string(used) + " products",
                      best.residual);
  }

  double gap = std::numeric_limits<double>::quiet_NaN();
  if (cfg.gap_iterations > 0 && dim > 1) {
    std::vector<T> second(static_cast<std::size_t>(dim));
    random_fill(second, rng);
    const std::vector<std::vector<T>> deflate{best.vector};
    auto apply_vec = [&](const std::vector<T>& in, std::vector<T>& out) {
      op.apply(std::span<const T>(in), std::span<T>(out));
    };
    auto run = lanczos_cycle<T>(apply_vec, second, std::min<int>(cfg.gap_iterations, static_cast<int>(dim - 1)),
                                deflate, scale_hint);
    gap = std::max(0.0, run.value - best.value);
  }

  std::vector<cplx> amps(best.vector.begin(), best.vector.end());
  return GroundState{best.value, StateVector::normalized(op.nqubits(), std::move(amps)),
                     best.residual, gap, used};
}

int parity(std::uint64_t v) { return std::popcount(v) & 1; }

}  // namespace

GroundState ground_state(const SparseOperator& h, const LanczosConfig& config, Rng& rng) {
  if (h.nqubits() > config.max_qubits) {
    throw std::invalid_argument("ground_state: " + std::to_string(h.nqubits()) +
                                " qubits exceeds the cap of " +
                                std::to_string(config.max_qubits));
  }
  if (!(config.tol > 0.0)) throw std::invalid_argument("ground_state: tol must be > 0");
  const CompiledOperator op(h);
  const double scale_hint = h.norm_bound();
  if (op.is_real()) return solve<double>(op, scale_hint, config, rng);
  return solve<cplx>(op, scale_hint, config, rng);
}

DenseSpectrum dense_diagonalize(const SparseOperator& h) {
  const int n = h.nqubits();
  if (n > 12) throw std::invalid_argument("dense_diagonalize: N must be <= 12");
  const std::uint64_t dim = std::uint64_t{1} << n;
  const CompiledOperator op(h);
  const auto d = static_cast<Eigen::Index>(dim);
  if (op.is_real()) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(d, d);
    for (const auto& t : h.terms()) {
      const auto flip = t.string.flip_mask();
      const auto phase = t.string.phase_mask();
      // Even Y count: i^{y} is +1 or -1.
      const double sign = (t.string.y_count() / 2) % 2 == 0 ? 1.0 : -1.0;
      if (t.string.y_count() % 2 != 0) continue;  // zero coefficient imaginary term
      for (std::uint64_t i = 0; i < dim; ++i) {
        m(static_cast<Eigen::Index>(i ^ flip), static_cast<Eigen::Index>(i)) +=
            (parity(i & phase) ? -1.0 : 1.0) * sign * t.coeff;
      }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    std::vector<double> evals(es.eigenvalues().data(), es.eigenvalues().data() + d);
    std::vector<cplx> amps(dim);
    for (Eigen::Index i = 0; i < d; ++i) amps[static_cast<std::size_t>(i)] = es.eigenvectors()(i, 0);
    return {std::move(evals), StateVector::normalized(n, std::move(amps))};
  }
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(d, d);
  for (const auto& t : h.terms()) {
    const auto flip = t.string.flip_mask();
    const auto phase = t.string.phase_mask();
    cplx c = t.coeff;
    for (int y = 0; y < t.string.y_count(); ++y) c *= cplx(0.0, 1.0);
    for (std::uint64_t i = 0; i < dim; ++i) {
      m(static_cast<Eigen::Index>(i ^ flip), static_cast<Eigen::Index>(i)) +=
          parity(i & phase) ? -c : c;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m);
  std::vector<double> evals(es.eigenvalues().data(), es.eigenvalues().data() + d);
  std::vector<cplx> amps(dim);
  for (Eigen::Index i = 0; i < d; ++i) amps[static_cast<std::size_t>(i)] = es.eigenvectors()(i, 0);
  return {std::move(evals), StateVector::normalized(n, std::move(amps))};
}

CorrelationMatrix::CorrelationMatrix(int nqubits)
    : n_(nqubits), v_(static_cast<std::size_t>(nqubits * nqubits), 0.0) {
  if (nqubits < 1) throw std::invalid_argument("CorrelationMatrix: N must be >= 1");
}

double CorrelationMatrix::at(int i, int j) const {
  if (i < 1 || j < 1 || i > n_ || j > n_) throw std::out_of_range("CorrelationMatrix index");
  return v_[static_cast<std::size_t>((i - 1) * n_ + (j - 1))];
}

void CorrelationMatrix::set(int i, int j, double v) {
  if (i < 1 || j < 1 || i > n_ || j > n_) throw std::out_of_range("CorrelationMatrix index");
  v_[static_cast<std::size_t>((i - 1) * n_ + (j - 1))] = v;
  v_[static_cast<std::size_t>((j - 1) * n_ + (i - 1))] = v;
}

std::vector<double> CorrelationMatrix::upper() const {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n_ * (n_ - 1) / 2));
  for (int i = 1; i <= n_; ++i)
    for (int j = i + 1; j <= n_; ++j) out.push_back(at(i, j));
  return out;
}

CorrelationMatrix exact_correlation(const StateVector& state) {
  const int n = state.nqubits();
  CorrelationMatrix c(n);
  for (int i = 1; i <= n; ++i) {
    c.set(i, i, 1.0);
    for (int j = i + 1; j <= n; ++j) {
      double s = 0.0;
      for (Pauli p : {Pauli::X, Pauli::Y, Pauli::Z}) {
        s += expectation(state, PauliString::on_sites(n, {{i, p}, {j, p}}));
      }
      c.set(i, j, s / 3.0);
    }
  }
  return c;
}

std::array<cplx, 16> reduced_density_pair(const StateVector& state, int site) {
  const int n = state.nqubits();
  if (site < 1 || site >= n) throw std::out_of_range("reduced_density_pair: bad site");
  const std::uint64_t lo = std::uint64_t{1} << (site - 1);
  const std::uint64_t hi = lo << 1;
  const std::uint64_t offsets[4] = {0, lo, hi, lo | hi};
  std::array<cplx, 16> rho{};
  const auto amps = state.amplitudes();
  for (std::uint64_t i = 0; i < amps.size(); ++i) {
    if (i & (lo | hi)) continue;
    for (int p = 0; p < 4; ++p) {
      const cplx ap = amps[i | offsets[p]];
      for (int q = 0; q < 4; ++q) rho[static_cast<std::size_t>(4 * p + q)] += ap * std::conj(amps[i | offsets[q]]);
    }
  }
  return rho;
}

std::vector<double> exact_renyi2_adjacent(const StateVector& state) {
  const int n = state.nqubits();
  if (n < 2) throw std::invalid_argument("exact_renyi2_adjacent: N must be >= 2");
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n - 1));
  for (int site = 1; site < n; ++site) {
    const auto rho = reduced_density_pair(state, site);
    double purity = 0.0;
    for (const auto& r : rho) purity += std::norm(r);
    out.push_back(std::clamp(-std::log2(purity), 0.0, 2.0));
  }
  return out;
}

std::string_view to_string(Phase p) noexcept {
  switch (p) {
    case Phase::Z2: return "Z2";
    case Phase::Z3: return "Z3";
    case Phase::Disordered: return "disordered";
  }
  return "?";
}

std::vector<int> order_sites(int nqubits, int step) {
  std::vector<int> sites;
  for (int k = 0; k <= (nqubits - 1) / step; ++k) sites.push_back(step * k + 1);
  return sites;
}

Phase classify_phase(double s2, double s3) noexcept {
  if (s2 > std::max(s3, 0.7)) return Phase::Z2;
  if (s3 > std::max(s2, 0.6)) return Phase::Z3;
  return Phase::Disordered;
}

PhaseLabel exact_phase_label(const StateVector& state) {
  const int n = state.nqubits();
  if (n < 3) throw std::invalid_argument("exact_phase_label: N must be >= 3");
  auto score = [&](int step) {
    const auto sites = order_sites(n, step);
    double s = 0.0;
    for (int k : sites) s += 0.5 * (1.0 + expectation(state, PauliString::on_sites(n, {{k, Pauli::Z}})));
    return s / static_cast<double>(sites.size());
  };
  PhaseLabel label;
  label.s2 = score(2);
  label.s3 = score(3);
  label.phase = classify_phase(label.s2, label.s3);
  return label;
}

namespace {
constexpr std::uint32_t kGroundStateMagic = 0x53475351;  // "QSGS"
}

std::string serialize_ground_state(const GroundState& gs) {
  ByteWriter w;
  w.put(kGroundStateMagic);
  w.put<std::uint32_t>(1);
  w.put<std::int32_t>(gs.state.nqubits());
  w.put(gs.energy);
  w.put(gs.residual);
  w.put(gs.gap);
  w.put<std::int32_t>(gs.iterations);
  w.put_span(gs.state.amplitudes());
  return w.take();
}

GroundState deserialize_ground_state(std::string_view bytes) {
  ByteReader r(bytes);
  if (r.get<std::uint32_t>() != kGroundStateMagic) throw std::runtime_error("not a ground-state record");
  if (r.get<std::uint32_t>() != 1) throw std::runtime_error("unsupported ground-state record version");
  const int n = r.get<std::int32_t>();
  const double energy = r.get<double>();
  const double residual = r.get<double>();
  const double gap = r.get<double>();
  const int iterations = r.get<std::int32_t>();
  auto amps = r.get_vector<cplx>();
  return GroundState{energy, StateVector(n, std::move(amps)), residual, gap, iterations};
}

GroundStateCache::GroundStateCache(std::string directory) : dir_(std::move(directory)) {
  std::filesystem::create_directories(dir_);
}

std::uint64_t GroundStateCache::key(std::string_view params_json, const LanczosConfig& c) {
  std::ostringstream ss;
  ss.precision(17);
  ss << params_json << '|' << c.tol << '|' << c.max_iter << '|' << c.krylov_dim << '|'
     << c.gap_iterations;
  return fnv1a(ss.str());
}

std::string GroundStateCache::path_for(std::uint64_t key) const {
  char name[32];
  std::snprintf(name, sizeof(name), "%016llx.gs", static_cast<unsigned long long>(key));
  return (std::filesystem::path(dir_) / name).string();
}

std::optional<GroundState> GroundStateCache::load(std::uint64_t key) const {
  const auto path = path_for(key);
  if (!std::filesystem::exists(path)) return std::nullopt;
  return deserialize_ground_state(read_file(path));
}

void GroundStateCache::store(std::uint64_t key, const GroundState& gs) const {
  const auto path = path_for(key);
  static std::atomic<std::uint64_t> counter{0};
  const auto tmp = path + "." + std::to_string(::getpid()) + "." + std::to_string(counter++) + ".tmp";
  write_file(tmp, serialize_ground_state(gs));
  std::filesystem::rename(tmp, path);
}

}  // namespace qsl
