#include "qsl/shadows.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace qsl {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;

// Rotates `site` (0-based bit) so that a Z measurement afterwards measures
// the requested basis: H for X, H S^dagger for Y.
void rotate_to_z(std::vector<cplx>& amps, int bit, Basis basis) {
  if (basis == Basis::Z) return;
  const std::uint64_t mask = std::uint64_t{1} << bit;
  const cplx minus_i(0.0, -1.0);
  for (std::uint64_t i = 0; i < amps.size(); ++i) {
    if (i & mask) continue;
    const cplx a0 = amps[i];
    cplx a1 = amps[i | mask];
    if (basis == Basis::Y) a1 *= minus_i;
    amps[i] = (a0 + a1) * kInvSqrt2;
    amps[i | mask] = (a0 - a1) * kInvSqrt2;
  }
}

std::uint64_t sample_index(std::span<const cplx> amps, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double target = u(rng);
  for (std::uint64_t i = 0; i < amps.size(); ++i) {
    target -= std::norm(amps[i]);
    if (target < 0.0) return i;
  }
  // Rounding left some mass unassigned; fall back to the last nonzero entry.
  for (std::uint64_t i = amps.size(); i-- > 0;) {
    if (std::norm(amps[i]) > 0.0) return i;
  }
  return 0;
}

// Single-qubit kernel tr(rho_hat(a) rho_hat(b)) = 9 |<s_a|s_b>|^2 - 4.
constexpr double site_overlap(std::uint8_t a, std::uint8_t b) {
  if (outcome_basis(a) != outcome_basis(b)) return 0.5;
  return outcome_bit(a) == outcome_bit(b) ? 5.0 : -4.0;
}

}  // namespace

ShadowSet::ShadowSet(int nqubits, std::vector<std::uint8_t> bytes, std::uint64_t seed)
    : n_(nqubits), bytes_(std::move(bytes)), seed_(seed) {
  if (n_ < 1) throw std::invalid_argument("ShadowSet: N must be >= 1");
  if (bytes_.empty() || bytes_.size() % static_cast<std::size_t>(n_) != 0) {
    throw std::invalid_argument("ShadowSet: need M >= 1 snapshots of length N");
  }
  for (auto b : bytes_) {
    if (b > 5) throw std::invalid_argument("ShadowSet: snapshot byte exceeds 5");
  }
}

std::span<const std::uint8_t> ShadowSet::snapshot(std::size_t t) const {
  return std::span<const std::uint8_t>(bytes_).subspan(t * static_cast<std::size_t>(n_),
                                                       static_cast<std::size_t>(n_));
}

BitstringSet::BitstringSet(int nqubits, std::vector<std::uint8_t> bits, std::uint64_t seed)
    : n_(nqubits), bits_(std::move(bits)), seed_(seed) {
  if (n_ < 1) throw std::invalid_argument("BitstringSet: N must be >= 1");
  if (bits_.empty() || bits_.size() % static_cast<std::size_t>(n_) != 0) {
    throw std::invalid_argument("BitstringSet: need M >= 1 shots of length N");
  }
  for (auto b : bits_) {
    if (b > 1) throw std::invalid_argument("BitstringSet: bits must be 0 or 1");
  }
}

std::span<const std::uint8_t> BitstringSet::shot(std::size_t t) const {
  return std::span<const std::uint8_t>(bits_).subspan(t * static_cast<std::size_t>(n_),
                                                      static_cast<std::size_t>(n_));
}

std::vector<std::uint8_t> BitstringSet::packed() const {
  const std::size_t row = (static_cast<std::size_t>(n_) + 7) / 8;
  std::vector<std::uint8_t> out(size() * row, 0);
  for (std::size_t t = 0; t < size(); ++t) {
    const auto s = shot(t);
    for (std::size_t k = 0; k < s.size(); ++k) {
      if (s[k]) out[t * row + k / 8] |= static_cast<std::uint8_t>(1u << (k % 8));
    }
  }
  return out;
}

BitstringSet BitstringSet::from_packed(int nqubits, std::size_t shots,
                                       std::span<const std::uint8_t> packed, std::uint64_t seed) {
  const std::size_t row = (static_cast<std::size_t>(nqubits) + 7) / 8;
  if (packed.size() != shots * row) throw std::invalid_argument("from_packed: size mismatch");
  std::vector<std::uint8_t> bits(shots * static_cast<std::size_t>(nqubits));
  for (std::size_t t = 0; t < shots; ++t) {
    for (std::size_t k = 0; k < static_cast<std::size_t>(nqubits); ++k) {
      bits[t * static_cast<std::size_t>(nqubits) + k] = (packed[t * row + k / 8] >> (k % 8)) & 1u;
    }
  }
  return BitstringSet(nqubits, std::move(bits), seed);
}

void sample_snapshot(const StateVector& state, std::span<const Basis> bases, Rng& rng,
                     std::span<std::uint8_t> out) {
  const int n = state.nqubits();
  if (bases.size() != static_cast<std::size_t>(n) || out.size() != bases.size()) {
    throw std::invalid_argument("sample_snapshot: basis count must equal N");
  }
  std::vector<cplx> amps(state.amplitudes().begin(), state.amplitudes().end());
  for (int k = 0; k < n; ++k) rotate_to_z(amps, k, bases[static_cast<std::size_t>(k)]);
  const std::uint64_t idx = sample_index(amps, rng);
  for (int k = 0; k < n; ++k) {
    out[static_cast<std::size_t>(k)] =
        encode_outcome(bases[static_cast<std::size_t>(k)], static_cast<int>((idx >> k) & 1u));
  }
}

ShadowSet sample_shadow(const StateVector& state, int shots, Rng& rng, std::uint64_t seed) {
  if (shots < 1) throw std::invalid_argument("sample_shadow: M must be >= 1");
  const auto n = static_cast<std::size_t>(state.nqubits());
  std::vector<std::uint8_t> bytes(static_cast<std::size_t>(shots) * n);
  std::vector<Basis> bases(n);
  std::uniform_int_distribution<int> pick(0, 2);
  for (std::size_t t = 0; t < static_cast<std::size_t>(shots); ++t) {
    for (auto& b : bases) b = static_cast<Basis>(pick(rng));
    sample_snapshot(state, bases, rng, std::span<std::uint8_t>(bytes).subspan(t * n, n));
  }
  return ShadowSet(state.nqubits(), std::move(bytes), seed);
}

BitstringSet sample_zbasis(const StateVector& state, int shots, Rng& rng, std::uint64_t seed) {
  if (shots < 1) throw std::invalid_argument("sample_zbasis: M must be >= 1");
  const auto amps = state.amplitudes();
  std::vector<double> cumulative(amps.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < amps.size(); ++i) {
    acc += std::norm(amps[i]);
    cumulative[i] = acc;
  }
  const auto n = static_cast<std::size_t>(state.nqubits());
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(shots) * n);
  std::uniform_real_distribution<double> u(0.0, acc);
  for (std::size_t t = 0; t < static_cast<std::size_t>(shots); ++t) {
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u(rng));
    if (it == cumulative.end()) --it;
    const auto idx = static_cast<std::uint64_t>(it - cumulative.begin());
    for (std::size_t k = 0; k < n; ++k) bits[t * n + k] = static_cast<std::uint8_t>((idx >> k) & 1u);
  }
  return BitstringSet(state.nqubits(), std::move(bits), seed);
}

double shadow_expectation(const ShadowSet& shadows, const PauliString& ps) {
  if (ps.size() != shadows.nqubits()) throw std::invalid_argument("shadow_expectation: length mismatch");
  std::vector<std::pair<std::size_t, Basis>> support;
  for (int k = 1; k <= ps.size(); ++k) {
    const Pauli p = ps.at(k);
    if (p != Pauli::I) {
      support.emplace_back(static_cast<std::size_t>(k - 1),
                           static_cast<Basis>(static_cast<int>(p) - 1));
    }
  }
  const double magnitude = std::pow(3.0, static_cast<double>(support.size()));
  double sum = 0.0;
  for (std::size_t t = 0; t < shadows.size(); ++t) {
    const auto snap = shadows.snapshot(t);
    int sign = 1;
    bool hit = true;
    for (auto [k, b] : support) {
      if (outcome_basis(snap[k]) != b) {
        hit = false;
        break;
      }
      sign *= outcome_sign(snap[k]);
    }
    if (hit) sum += sign * magnitude;
  }
  return sum / static_cast<double>(shadows.size());
}

CorrelationMatrix shadow_correlation(const ShadowSet& shadows) {
  const int n = shadows.nqubits();
  CorrelationMatrix c(n);
  std::vector<double> acc(static_cast<std::size_t>(n * n), 0.0);
  for (std::size_t t = 0; t < shadows.size(); ++t) {
    const auto snap = shadows.snapshot(t);
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        const auto a = snap[static_cast<std::size_t>(i)];
        const auto b = snap[static_cast<std::size_t>(j)];
        if (outcome_basis(a) == outcome_basis(b)) {
          acc[static_cast<std::size_t>(i * n + j)] += outcome_sign(a) * outcome_sign(b);
        }
      }
    }
  }
  const double m = static_cast<double>(shadows.size());
  for (int i = 1; i <= n; ++i) {
    c.set(i, i, 1.0);
    for (int j = i + 1; j <= n; ++j) {
      // (1/3) sum_P 9 [b_i = b_j = P] s_i s_j
      c.set(i, j, 3.0 * acc[static_cast<std::size_t>((i - 1) * n + (j - 1))] / m);
    }
  }
  return c;
}

double shadow_purity_pair(const ShadowSet& shadows, int site) {
  const int n = shadows.nqubits();
  if (site < 1 || site >= n) throw std::out_of_range("shadow_renyi2: bad site");
  const std::size_t m = shadows.size();
  if (m < 2) throw std::invalid_argument("shadow_renyi2: needs M >= 2");
  std::array<double, 36> counts{};
  for (std::size_t t = 0; t < m; ++t) {
    const auto snap = shadows.snapshot(t);
    counts[static_cast<std::size_t>(6 * snap[static_cast<std::size_t>(site - 1)] +
                                    snap[static_cast<std::size_t>(site)])] += 1.0;
  }
  double total = 0.0;
  for (std::uint8_t a = 0; a < 36; ++a) {
    if (counts[a] == 0.0) continue;
    for (std::uint8_t b = 0; b < 36; ++b) {
      if (counts[b] == 0.0) continue;
      const double k = site_overlap(a / 6, b / 6) * site_overlap(a % 6, b % 6);
      total += counts[a] * counts[b] * k;
    }
    total -= counts[a] * 25.0;  // drop t == t' pairs
  }
  const double md = static_cast<double>(m);
  return total / (md * (md - 1.0));
}

double shadow_renyi2(const ShadowSet& shadows, int site) {
  const double purity = std::clamp(shadow_purity_pair(shadows, site), 0.25, 1.0);
  return -std::log2(purity);
}

std::vector<double> shadow_renyi2_adjacent(const ShadowSet& shadows) {
  std::vector<double> out;
  for (int site = 1; site < shadows.nqubits(); ++site) out.push_back(shadow_renyi2(shadows, site));
  return out;
}

PhaseLabel estimate_phase_scores(const BitstringSet& bits) {
  const int n = bits.nqubits();
  if (n < 3) throw std::invalid_argument("estimate_phase_scores: N must be >= 3");
  std::vector<double> occupied(static_cast<std::size_t>(n), 0.0);
  for (std::size_t t = 0; t < bits.size(); ++t) {
    const auto s = bits.shot(t);
    for (int k = 0; k < n; ++k) occupied[static_cast<std::size_t>(k)] += s[static_cast<std::size_t>(k)] == 0;
  }
  auto score = [&](int step) {
    const auto sites = order_sites(n, step);
    double s = 0.0;
    for (int k : sites) s += occupied[static_cast<std::size_t>(k - 1)];
    return s / (static_cast<double>(sites.size()) * static_cast<double>(bits.size()));
  };
  PhaseLabel label;
  label.s2 = score(2);
  label.s3 = score(3);
  label.phase = classify_phase(label.s2, label.s3);
  return label;
}

}  // namespace qsl
