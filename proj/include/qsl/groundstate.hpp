#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qsl/pauli.hpp"
#include "qsl/random.hpp"

namespace qsl {

struct LanczosConfig {
  /// Residual target. The solver stops once ||H psi - E psi|| <= tol * max(1, B)
  /// where B = sum |c_k| bounds the spectral norm.
  double tol = 1e-10;
  /// Cap on the total number of operator applications.
  int max_iter = 2000;
  int max_qubits = 20;
  /// Krylov dimension per restart cycle.
  int krylov_dim = 100;
  /// Steps of the deflated run that estimates lambda_2 (0 disables it).
  int gap_iterations = 40;
};

struct GroundState {
  double energy = 0.0;
  StateVector state;
  double residual = 0.0;
  /// Estimate of lambda_2 - lambda_1; NaN when not computed.
  double gap = 0.0;
  int iterations = 0;

  bool degenerate(double threshold = 1e-10) const { return gap < threshold; }
};

/// Lanczos did not reach the residual target within max_iter.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double best_residual)
      : std::runtime_error(what), best_residual_(best_residual) {}
  double best_residual() const noexcept { return best_residual_; }

 private:
  double best_residual_;
};

/// Lowest eigenpair by restarted Lanczos with full reorthogonalization from
/// a random start vector. Deterministic given the rng state.
GroundState ground_state(const SparseOperator& h, const LanczosConfig& config, Rng& rng);

struct DenseSpectrum {
  std::vector<double> eigenvalues;  // ascending, length 2^N
  StateVector ground;
};

/// Full diagonalization of the materialized matrix (N <= 12).
DenseSpectrum dense_diagonalize(const SparseOperator& h);

/// Symmetric N x N matrix with 1-based accessors.
class CorrelationMatrix {
 public:
  explicit CorrelationMatrix(int nqubits);
  int nqubits() const noexcept { return n_; }
  double at(int i, int j) const;
  void set(int i, int j, double v);  // sets (i,j) and (j,i)
  const std::vector<double>& values() const noexcept { return v_; }
  /// Entries (i,j) with i<j, row-major.
  std::vector<double> upper() const;

 private:
  int n_;
  std::vector<double> v_;
};

/// C_ij = (<X_iX_j> + <Y_iY_j> + <Z_iZ_j>)/3, C_ii = 1.
CorrelationMatrix exact_correlation(const StateVector& state);

/// Reduced density matrix of sites (site, site+1), row-major 4x4, basis
/// index = bit(site) + 2 bit(site+1).
std::array<cplx, 16> reduced_density_pair(const StateVector& state, int site);

/// -log2 tr(rho_A^2) for each adjacent pair A = {i, i+1}, i = 1..N-1.
std::vector<double> exact_renyi2_adjacent(const StateVector& state);

enum class Phase : int { Z2 = 0, Z3 = 1, Disordered = 2 };
std::string_view to_string(Phase p) noexcept;

struct PhaseLabel {
  Phase phase = Phase::Disordered;
  double s2 = 0.0;
  double s3 = 0.0;
};

/// Sites 1, 1+step, 1+2 step, ... covered by the order observable O_step.
std::vector<int> order_sites(int nqubits, int step);

/// Z2 if s2 > max(s3, 0.7); Z3 if s3 > max(s2, 0.6); Disordered otherwise.
Phase classify_phase(double s2, double s3) noexcept;

/// Exact order scores: s_step = mean over order_sites of <(I + Z_k)/2>.
PhaseLabel exact_phase_label(const StateVector& state);

/// Binary record of (energy, residual, gap, iterations, amplitudes).
std::string serialize_ground_state(const GroundState& gs);
GroundState deserialize_ground_state(std::string_view bytes);

/// Content-addressed on-disk cache of ground states.
class GroundStateCache {
 public:
  explicit GroundStateCache(std::string directory);
  static std::uint64_t key(std::string_view params_json, const LanczosConfig& config);
  std::optional<GroundState> load(std::uint64_t key) const;
  void store(std::uint64_t key, const GroundState& gs) const;

 private:
  std::string path_for(std::uint64_t key) const;
  std::string dir_;
};

}  // namespace qsl
