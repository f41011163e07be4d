#include "qsl/pauli.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <map>
#include <sstream>

namespace qsl {

namespace {

int parity(std::uint64_t v) { return std::popcount(v) & 1; }

// i^k for k mod 4.
cplx i_power(int k) {
  switch (k & 3) {
    case 0: return {1.0, 0.0};
    case 1: return {0.0, 1.0};
    case 2: return {-1.0, 0.0};
    default: return {0.0, -1.0};
  }
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

char to_char(Pauli p) noexcept {
  constexpr char letters[] = {'I', 'X', 'Y', 'Z'};
  return letters[static_cast<int>(p)];
}

PauliString::PauliString(std::vector<Pauli> ops) : ops_(std::move(ops)) {
  if (ops_.empty()) throw std::invalid_argument("PauliString: length must be >= 1");
  for (Pauli p : ops_) {
    if (static_cast<int>(p) > 3) throw std::invalid_argument("PauliString: bad letter");
  }
}

PauliString PauliString::parse(std::string_view text) {
  if (text.empty()) throw PauliParseError("empty Pauli string", 0);
  std::vector<Pauli> ops;
  ops.reserve(text.size());
  for (std::size_t k = 0; k < text.size(); ++k) {
    switch (text[k]) {
      case 'I': ops.push_back(Pauli::I); break;
      case 'X': ops.push_back(Pauli::X); break;
      case 'Y': ops.push_back(Pauli::Y); break;
      case 'Z': ops.push_back(Pauli::Z); break;
      default:
        throw PauliParseError("invalid Pauli symbol '" + std::string(1, text[k]) +
                                  "' at position " + std::to_string(k + 1),
                              k + 1);
    }
  }
  return PauliString(std::move(ops));
}

PauliString PauliString::identity(int nqubits) {
  if (nqubits < 1) throw std::invalid_argument("PauliString: nqubits must be >= 1");
  return PauliString(std::vector<Pauli>(static_cast<std::size_t>(nqubits), Pauli::I));
}

PauliString PauliString::on_sites(int nqubits,
                                  std::initializer_list<std::pair<int, Pauli>> sites) {
  if (nqubits < 1) throw std::invalid_argument("PauliString: nqubits must be >= 1");
  std::vector<Pauli> ops(static_cast<std::size_t>(nqubits), Pauli::I);
  for (auto [site, p] : sites) {
    if (site < 1 || site > nqubits) throw std::out_of_range("PauliString: site out of range");
    ops[static_cast<std::size_t>(site - 1)] = p;
  }
  return PauliString(std::move(ops));
}

int PauliString::weight() const noexcept {
  return static_cast<int>(std::count_if(ops_.begin(), ops_.end(),
                                        [](Pauli p) { return p != Pauli::I; }));
}

Pauli PauliString::at(int site) const {
  if (site < 1 || site > size()) throw std::out_of_range("PauliString: site out of range");
  return ops_[static_cast<std::size_t>(site - 1)];
}

std::string PauliString::str() const {
  std::string s;
  s.reserve(ops_.size());
  for (Pauli p : ops_) s.push_back(to_char(p));
  return s;
}

std::uint64_t PauliString::flip_mask() const {
  if (size() > 63) throw std::length_error("PauliString: mask needs <= 63 sites");
  std::uint64_t m = 0;
  for (std::size_t k = 0; k < ops_.size(); ++k) {
    if (ops_[k] == Pauli::X || ops_[k] == Pauli::Y) m |= std::uint64_t{1} << k;
  }
  return m;
}

std::uint64_t PauliString::phase_mask() const {
  if (size() > 63) throw std::length_error("PauliString: mask needs <= 63 sites");
  std::uint64_t m = 0;
  for (std::size_t k = 0; k < ops_.size(); ++k) {
    if (ops_[k] == Pauli::Z || ops_[k] == Pauli::Y) m |= std::uint64_t{1} << k;
  }
  return m;
}

int PauliString::y_count() const noexcept {
  return static_cast<int>(std::count(ops_.begin(), ops_.end(), Pauli::Y));
}

SparseOperator::SparseOperator(int nqubits, std::vector<PauliTerm> terms)
    : nqubits_(nqubits) {
  if (nqubits < 1) throw std::invalid_argument("SparseOperator: nqubits must be >= 1");
  std::map<PauliString, std::size_t> index;
  terms_.reserve(terms.size());
  for (auto& t : terms) {
    if (!std::isfinite(t.coeff)) throw std::invalid_argument("SparseOperator: non-finite coefficient");
    if (t.string.size() != nqubits) {
      throw std::invalid_argument("SparseOperator: term " + t.string.str() +
                                  " has wrong length");
    }
    auto [it, inserted] = index.try_emplace(t.string, terms_.size());
    if (inserted) {
      terms_.push_back(std::move(t));
    } else {
      terms_[it->second].coeff += t.coeff;
    }
  }
}

double SparseOperator::coeff(const PauliString& ps) const {
  for (const auto& t : terms_) {
    if (t.string == ps) return t.coeff;
  }
  return 0.0;
}

double SparseOperator::norm_bound() const noexcept {
  double s = 0.0;
  for (const auto& t : terms_) s += std::abs(t.coeff);
  return s;
}

std::string SparseOperator::serialize() const {
  std::string out;
  for (const auto& t : terms_) {
    out += format_double(t.coeff);
    out += '\t';
    out += t.string.str();
    out += '\n';
  }
  return out;
}

SparseOperator SparseOperator::deserialize(std::string_view text) {
  std::vector<PauliTerm> terms;
  int nqubits = 0;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    ++line_no;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos) {
      throw std::invalid_argument("operator line " + std::to_string(line_no) + ": missing TAB");
    }
    double c = 0.0;
    auto coeff_text = line.substr(0, tab);
    auto res = std::from_chars(coeff_text.data(), coeff_text.data() + coeff_text.size(), c);
    if (res.ec != std::errc{} || res.ptr != coeff_text.data() + coeff_text.size()) {
      throw std::invalid_argument("operator line " + std::to_string(line_no) + ": bad coefficient");
    }
    auto ps = PauliString::parse(line.substr(tab + 1));
    if (nqubits == 0) nqubits = ps.size();
    terms.push_back({c, std::move(ps)});
  }
  if (nqubits == 0) throw std::invalid_argument("operator text has no terms");
  return SparseOperator(nqubits, std::move(terms));
}

StateVector::StateVector(int nqubits, std::vector<cplx> amplitudes)
    : nqubits_(nqubits), amps_(std::move(amplitudes)) {
  if (nqubits < 1 || nqubits > kMaxStateQubits) {
    throw std::invalid_argument("StateVector: unsupported qubit count");
  }
  if (amps_.size() != (std::size_t{1} << nqubits)) {
    throw std::invalid_argument("StateVector: amplitude count must be 2^N");
  }
  double norm2 = 0.0;
  for (const auto& a : amps_) norm2 += std::norm(a);
  if (std::abs(std::sqrt(norm2) - 1.0) > 1e-10) {
    throw std::invalid_argument("StateVector: state is not normalized");
  }
}

StateVector StateVector::normalized(int nqubits, std::vector<cplx> amplitudes) {
  double norm2 = 0.0;
  for (const auto& a : amplitudes) norm2 += std::norm(a);
  if (!(norm2 > 0.0)) throw std::invalid_argument("StateVector: zero vector");
  const double inv = 1.0 / std::sqrt(norm2);
  for (auto& a : amplitudes) a *= inv;
  return StateVector(nqubits, std::move(amplitudes));
}

StateVector StateVector::basis(int nqubits, std::uint64_t index) {
  if (nqubits < 1 || nqubits > kMaxStateQubits) {
    throw std::invalid_argument("StateVector: unsupported qubit count");
  }
  std::vector<cplx> amps(std::size_t{1} << nqubits);
  if (index >= amps.size()) throw std::out_of_range("StateVector: basis index out of range");
  amps[index] = 1.0;
  return StateVector(nqubits, std::move(amps));
}

StateVector StateVector::random(int nqubits, Rng& rng) {
  std::normal_distribution<double> gauss;
  std::vector<cplx> amps(std::size_t{1} << nqubits);
  for (auto& a : amps) a = {gauss(rng), gauss(rng)};
  return normalized(nqubits, std::move(amps));
}

void accumulate_pauli(const PauliString& ps, cplx coeff, std::span<const cplx> in,
                      std::span<cplx> out) {
  const std::uint64_t flip = ps.flip_mask();
  const std::uint64_t phase = ps.phase_mask();
  const cplx c = coeff * i_power(ps.y_count());
  const std::uint64_t dim = in.size();
  for (std::uint64_t i = 0; i < dim; ++i) {
    out[i ^ flip] += parity(i & phase) ? -c * in[i] : c * in[i];
  }
}

std::vector<cplx> apply_operator(const SparseOperator& op, const StateVector& state) {
  if (op.nqubits() != state.nqubits()) {
    throw std::invalid_argument("apply_operator: dimension mismatch");
  }
  std::vector<cplx> out(state.dim());
  for (const auto& t : op.terms()) {
    accumulate_pauli(t.string, t.coeff, state.amplitudes(), out);
  }
  return out;
}

double expectation(const StateVector& state, const PauliString& ps) {
  if (ps.size() != state.nqubits()) {
    throw std::invalid_argument("expectation: dimension mismatch");
  }
  const std::uint64_t flip = ps.flip_mask();
  const std::uint64_t phase = ps.phase_mask();
  const auto amps = state.amplitudes();
  cplx acc = 0.0;
  for (std::uint64_t i = 0; i < amps.size(); ++i) {
    const cplx term = std::conj(amps[i ^ flip]) * amps[i];
    acc += parity(i & phase) ? -term : term;
  }
  acc *= i_power(ps.y_count());
  if (std::abs(acc.imag()) > 1e-9) {
    throw std::logic_error("expectation: imaginary part exceeds 1e-9");
  }
  return acc.real();
}

double expectation(const StateVector& state, const SparseOperator& op) {
  double e = 0.0;
  for (const auto& t : op.terms()) e += t.coeff * expectation(state, t.string);
  return e;
}

CompiledOperator::CompiledOperator(const SparseOperator& op) : nqubits_(op.nqubits()) {
  if (nqubits_ > kMaxStateQubits) throw std::invalid_argument("CompiledOperator: too many qubits");
  diagonal_.assign(dim(), 0.0);
  std::map<std::uint64_t, std::size_t> group_index;
  for (const auto& t : op.terms()) {
    const std::uint64_t flip = t.string.flip_mask();
    const std::uint64_t phase = t.string.phase_mask();
    if (flip == 0) {
      for (std::uint64_t i = 0; i < diagonal_.size(); ++i) {
        diagonal_[i] += parity(i & phase) ? -t.coeff : t.coeff;
      }
      continue;
    }
    const cplx c = t.coeff * i_power(t.string.y_count());
    if (t.string.y_count() % 2 != 0 && t.coeff != 0.0) real_ = false;
    auto [it, inserted] = group_index.try_emplace(flip, groups_.size());
    if (inserted) groups_.push_back({flip, {}});
    groups_[it->second].terms.push_back({phase, c});
  }
}

void CompiledOperator::apply(std::span<const cplx> in, std::span<cplx> out) const {
  const std::uint64_t n = dim();
  for (std::uint64_t i = 0; i < n; ++i) out[i] = diagonal_[i] * in[i];
  for (const auto& g : groups_) {
    for (std::uint64_t i = 0; i < n; ++i) {
      cplx amp = 0.0;
      for (const auto& t : g.terms) amp += parity(i & t.phase_mask) ? -t.coeff : t.coeff;
      out[i ^ g.flip_mask] += amp * in[i];
    }
  }
}

void CompiledOperator::apply(std::span<const double> in, std::span<double> out) const {
  if (!real_) throw std::logic_error("CompiledOperator: real product on complex operator");
  const std::uint64_t n = dim();
  for (std::uint64_t i = 0; i < n; ++i) out[i] = diagonal_[i] * in[i];
  for (const auto& g : groups_) {
    for (std::uint64_t i = 0; i < n; ++i) {
      double amp = 0.0;
      for (const auto& t : g.terms) {
        amp += parity(i & t.phase_mask) ? -t.coeff.real() : t.coeff.real();
      }
      out[i ^ g.flip_mask] += amp * in[i];
    }
  }
}

}  // namespace qsl
