#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "qsl/groundstate.hpp"
#include "qsl/pauli.hpp"
#include "qsl/random.hpp"

namespace qsl {

/// Local measurement basis of one snapshot site.
enum class Basis : std::uint8_t { X = 0, Y = 1, Z = 2 };

/// One snapshot site packs into a byte 2*basis + bit, so values are 0..5.
constexpr std::uint8_t encode_outcome(Basis basis, int bit) noexcept {
  return static_cast<std::uint8_t>(2 * static_cast<int>(basis) + (bit & 1));
}
constexpr Basis outcome_basis(std::uint8_t v) noexcept { return static_cast<Basis>(v >> 1); }
constexpr int outcome_bit(std::uint8_t v) noexcept { return v & 1; }
/// +1 for bit 0, -1 for bit 1.
constexpr int outcome_sign(std::uint8_t v) noexcept { return 1 - 2 * (v & 1); }

/// M randomized Pauli-basis snapshots of an N-qubit state, stored
/// snapshot-major (byte t*N + (k-1) is site k of snapshot t).
class ShadowSet {
 public:
  ShadowSet(int nqubits, std::vector<std::uint8_t> bytes, std::uint64_t seed = 0);

  int nqubits() const noexcept { return n_; }
  std::size_t size() const noexcept { return bytes_.size() / static_cast<std::size_t>(n_); }
  std::span<const std::uint8_t> snapshot(std::size_t t) const;
  std::span<const std::uint8_t> bytes() const noexcept { return bytes_; }
  std::uint64_t seed() const noexcept { return seed_; }

 private:
  int n_;
  std::vector<std::uint8_t> bytes_;
  std::uint64_t seed_;
};

/// M computational-basis bitstrings, one byte (0 or 1) per site.
class BitstringSet {
 public:
  BitstringSet(int nqubits, std::vector<std::uint8_t> bits, std::uint64_t seed = 0);

  int nqubits() const noexcept { return n_; }
  std::size_t size() const noexcept { return bits_.size() / static_cast<std::size_t>(n_); }
  std::span<const std::uint8_t> shot(std::size_t t) const;
  std::span<const std::uint8_t> bits() const noexcept { return bits_; }
  std::uint64_t seed() const noexcept { return seed_; }

  /// ceil(N/8) bytes per shot, site k at bit (k-1)%8 of byte (k-1)/8.
  std::vector<std::uint8_t> packed() const;
  static BitstringSet from_packed(int nqubits, std::size_t shots,
                                  std::span<const std::uint8_t> packed, std::uint64_t seed = 0);

 private:
  int n_;
  std::vector<std::uint8_t> bits_;
  std::uint64_t seed_;
};

/// Measures every site in the given bases once; writes encoded outcomes.
void sample_snapshot(const StateVector& state, std::span<const Basis> bases, Rng& rng,
                     std::span<std::uint8_t> out);

/// Uniform random basis per site, then one Born-rule sample per snapshot.
ShadowSet sample_shadow(const StateVector& state, int shots, Rng& rng, std::uint64_t seed = 0);

BitstringSet sample_zbasis(const StateVector& state, int shots, Rng& rng,
                           std::uint64_t seed = 0);

/// Mean over snapshots of prod_k tr(rho_hat_k P_k); each factor is 1 on
/// identity sites and 3*(+-1) or 0 elsewhere.
double shadow_expectation(const ShadowSet& shadows, const PauliString& ps);

/// Unclipped estimate of C_ij; the diagonal is exactly 1.
CorrelationMatrix shadow_correlation(const ShadowSet& shadows);

/// U-statistic estimate of tr(rho_A^2) for A = {site, site+1}, clamped to
/// [1/4, 1], returned as -log2.
double shadow_renyi2(const ShadowSet& shadows, int site);
/// Purity estimate before clamping.
double shadow_purity_pair(const ShadowSet& shadows, int site);
std::vector<double> shadow_renyi2_adjacent(const ShadowSet& shadows);

/// Empirical order scores from Z-basis shots (bit 0 means an occupied site)
/// and the resulting phase.
PhaseLabel estimate_phase_scores(const BitstringSet& bits);

}  // namespace qsl
