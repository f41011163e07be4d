#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "qsl/pauli.hpp"
#include "qsl/random.hpp"

namespace qsl {

enum class Family { Heisenberg, Tfim, Rydberg };

std::string_view to_string(Family f) noexcept;
Family parse_family(std::string_view name);

/// Long-range Heisenberg chain, sum over all pairs i<j of J_ij (XX+YY+ZZ).
struct HeisenbergParams {
  int nqubits = 0;
  /// Decay exponent when the couplings follow 369/|i-j|^a.
  std::optional<double> exponent;
  /// Upper-triangular couplings, row-major over i<j (1-based sites).
  std::vector<double> couplings;

  double coupling(int i, int j) const;
  static HeisenbergParams power_law(int nqubits, double exponent);
};

/// -sum J_i Z_i Z_{i+1} - sum h_i X_i.
struct TfimParams {
  int nqubits = 0;
  std::vector<double> couplings;  // N-1 bonds
  std::vector<double> fields;     // N sites
};

/// Rydberg chain with N_i = (I + Z_i)/2 and a site-uniform detuning.
struct RydbergParams {
  int nqubits = 0;
  double rabi = 0.0;            // Omega
  double blockade_ratio = 0.0;  // R_b / a
  double detuning = 0.0;        // Delta

  /// Nearest-neighbour interaction Omega (R_b/a)^6.
  double blockade_energy() const;
};

using HamiltonianParams = std::variant<HeisenbergParams, TfimParams, RydbergParams>;

inline constexpr double kHeisenbergScale = 369.0;

Family family_of(const HamiltonianParams& p) noexcept;
int nqubits_of(const HamiltonianParams& p) noexcept;

SparseOperator build_heisenberg(const HeisenbergParams& p);
SparseOperator build_tfim(const TfimParams& p);
SparseOperator build_rydberg(const RydbergParams& p);
SparseOperator build_hamiltonian(const HamiltonianParams& p);

/// Draws one parameter set:
///  - Heisenberg: a ~ U(1,2), J_ij = 369/|i-j|^a
///  - TFIM: J_i ~ U[0,2], h_i = 1
///  - Rydberg: R_b/a ~ U[1,2.95], Delta ~ U[-20pi,30pi], Omega = 10pi
HamiltonianParams sample_params(Family family, int nqubits, Rng& rng);

/// Classical input vector x fed to the learners.
///  - Heisenberg: the N(N-1)/2 upper-triangular couplings
///  - TFIM: the N-1 bond couplings
///  - Rydberg: (Omega, R_b/a, Delta, Omega (R_b/a)^6)
std::vector<double> feature_vector(const HamiltonianParams& p);
std::size_t feature_dim(Family family, int nqubits);

/// JSON object with a "family" tag, the optional seed and every numeric
/// field; doubles round-trip exactly.
std::string params_to_json(const HamiltonianParams& p,
                           std::optional<std::uint64_t> seed = std::nullopt);
HamiltonianParams params_from_json(std::string_view text,
                                   std::optional<std::uint64_t>* seed = nullptr);

}  // namespace qsl
