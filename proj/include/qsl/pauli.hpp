#pragma once

#include <complex>
#include <compare>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qsl/random.hpp"

namespace qsl {

using cplx = std::complex<double>;

/// Single-site Pauli letter. Numeric values are stable and used in
/// serialization.
enum class Pauli : std::uint8_t { I = 0, X = 1, Y = 2, Z = 3 };

char to_char(Pauli p) noexcept;

/// Raised by PauliString::parse. `position` is 1-based.
class PauliParseError : public std::invalid_argument {
 public:
  PauliParseError(const std::string& what, std::size_t position)
      : std::invalid_argument(what), position_(position) {}
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

/// Tensor product of single-qubit Paulis over sites 1..N.
///
/// Sites are 1-based in every public accessor. When the string acts on a
/// state vector, site k is stored at bit (k-1) of the basis-state index.
class PauliString {
 public:
  explicit PauliString(std::vector<Pauli> ops);

  /// Leftmost character is site 1. Accepts only I, X, Y, Z.
  static PauliString parse(std::string_view text);
  static PauliString identity(int nqubits);
  /// Identity everywhere except the listed (site, letter) pairs.
  static PauliString on_sites(int nqubits,
                              std::initializer_list<std::pair<int, Pauli>> sites);

  int size() const noexcept { return static_cast<int>(ops_.size()); }
  int weight() const noexcept;
  Pauli at(int site) const;
  std::span<const Pauli> ops() const noexcept { return ops_; }
  std::string str() const;

  // Bit masks for the action on basis states (valid for size() <= 63).
  std::uint64_t flip_mask() const;   // sites carrying X or Y
  std::uint64_t phase_mask() const;  // sites carrying Z or Y
  int y_count() const noexcept;

  friend auto operator<=>(const PauliString&, const PauliString&) = default;
  friend bool operator==(const PauliString&, const PauliString&) = default;

 private:
  std::vector<Pauli> ops_;
};

struct PauliTerm {
  double coeff;
  PauliString string;
};

/// Real linear combination of Pauli strings on a fixed number of qubits.
/// Duplicate strings are merged on construction (first occurrence keeps its
/// position); zero coefficients are kept.
class SparseOperator {
 public:
  SparseOperator(int nqubits, std::vector<PauliTerm> terms);

  int nqubits() const noexcept { return nqubits_; }
  std::span<const PauliTerm> terms() const noexcept { return terms_; }
  std::size_t size() const noexcept { return terms_.size(); }
  /// Coefficient of `ps`, or 0 when absent.
  double coeff(const PauliString& ps) const;
  /// Sum of |c_k|; an upper bound on the spectral norm.
  double norm_bound() const noexcept;

  /// One "coeff<TAB>string" line per term.
  std::string serialize() const;
  static SparseOperator deserialize(std::string_view text);

 private:
  int nqubits_;
  std::vector<PauliTerm> terms_;
};

/// Normalized state of N qubits; amplitude index bit (k-1) is site k.
class StateVector {
 public:
  /// Throws unless amplitudes.size() == 2^N and the norm is 1 within 1e-10.
  StateVector(int nqubits, std::vector<cplx> amplitudes);

  /// Rescales to unit norm first; throws on a zero vector.
  static StateVector normalized(int nqubits, std::vector<cplx> amplitudes);
  static StateVector basis(int nqubits, std::uint64_t index);
  /// Haar-like random state: i.i.d. complex Gaussian amplitudes, normalized.
  static StateVector random(int nqubits, Rng& rng);

  int nqubits() const noexcept { return nqubits_; }
  std::size_t dim() const noexcept { return amps_.size(); }
  std::span<const cplx> amplitudes() const noexcept { return amps_; }
  cplx operator[](std::size_t i) const { return amps_[i]; }

 private:
  int nqubits_;
  std::vector<cplx> amps_;
};

inline constexpr int kMaxStateQubits = 30;

/// P|in> accumulated into `out` with weight `coeff`: out += coeff * P in.
void accumulate_pauli(const PauliString& ps, cplx coeff, std::span<const cplx> in,
                      std::span<cplx> out);

/// Sum_k c_k G_k |psi>, term by term in the operator's term order.
std::vector<cplx> apply_operator(const SparseOperator& op, const StateVector& state);

/// <psi|P|psi>. Throws if the imaginary part exceeds 1e-9.
double expectation(const StateVector& state, const PauliString& ps);
/// <psi|H|psi> for a Hermitian operator.
double expectation(const StateVector& state, const SparseOperator& op);

/// Matrix-free operator compiled for repeated products: terms sharing a flip
/// mask are grouped and the diagonal (Z-only) part is tabulated once.
class CompiledOperator {
 public:
  explicit CompiledOperator(const SparseOperator& op);

  int nqubits() const noexcept { return nqubits_; }
  std::size_t dim() const noexcept { return std::size_t{1} << nqubits_; }
  /// True when every matrix element is real (each term has an even Y count).
  bool is_real() const noexcept { return real_; }

  /// out = H in. `out` must not alias `in`.
  void apply(std::span<const cplx> in, std::span<cplx> out) const;
  /// Real-arithmetic product; requires is_real().
  void apply(std::span<const double> in, std::span<double> out) const;

 private:
  struct Term {
    std::uint64_t phase_mask;
    cplx coeff;  // c * i^{y_count}
  };
  struct Group {
    std::uint64_t flip_mask;
    std::vector<Term> terms;
  };
  int nqubits_;
  bool real_ = true;
  std::vector<double> diagonal_;
  std::vector<Group> groups_;
};

}  // namespace qsl
