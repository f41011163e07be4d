#include "qsl/hamiltonians.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "json.hpp"

namespace qsl {

namespace {

using json = nlohmann::json;
constexpr double kPi = std::numbers::pi;

void require_sites(int n) {
  if (n < 2) throw std::invalid_argument("chain needs at least 2 sites");
}

void require_chain(int n) {
  require_sites(n);
  if (n > 63) throw std::invalid_argument("Hamiltonian supports at most 63 qubits");
}

std::size_t pair_index(int n, int i, int j) {
  // Row-major position of (i, j), 1 <= i < j <= n, in the upper triangle.
  const auto row = static_cast<std::size_t>(i - 1);
  const auto nn = static_cast<std::size_t>(n);
  return row * nn - row * (row + 1) / 2 + static_cast<std::size_t>(j - i - 1);
}

}  // namespace

std::string_view to_string(Family f) noexcept {
  switch (f) {
    case Family::Heisenberg: return "heisenberg";
    case Family::Tfim: return "tfim";
    case Family::Rydberg: return "rydberg";
  }
  return "?";
}

Family parse_family(std::string_view name) {
  if (name == "heisenberg" || name == "hb" || name == "HB") return Family::Heisenberg;
  if (name == "tfim" || name == "TFIM") return Family::Tfim;
  if (name == "rydberg" || name == "ryd" || name == "Rydberg") return Family::Rydberg;
  throw std::invalid_argument("unknown Hamiltonian family '" + std::string(name) + "'");
}

double HeisenbergParams::coupling(int i, int j) const {
  if (i == j) throw std::invalid_argument("coupling: i == j");
  if (i > j) std::swap(i, j);
  if (i < 1 || j > nqubits) throw std::out_of_range("coupling: site out of range");
  return couplings.at(pair_index(nqubits, i, j));
}

HeisenbergParams HeisenbergParams::power_law(int nqubits, double exponent) {
  require_sites(nqubits);
  HeisenbergParams p{nqubits, exponent, {}};
  p.couplings.reserve(static_cast<std::size_t>(nqubits * (nqubits - 1) / 2));
  for (int i = 1; i <= nqubits; ++i) {
    for (int j = i + 1; j <= nqubits; ++j) {
      p.couplings.push_back(kHeisenbergScale / std::pow(static_cast<double>(j - i), exponent));
    }
  }
  return p;
}

double RydbergParams::blockade_energy() const { return rabi * std::pow(blockade_ratio, 6); }

Family family_of(const HamiltonianParams& p) noexcept {
  return static_cast<Family>(p.index());
}

int nqubits_of(const HamiltonianParams& p) noexcept {
  return std::visit([](const auto& q) { return q.nqubits; }, p);
}

SparseOperator build_heisenberg(const HeisenbergParams& p) {
  require_chain(p.nqubits);
  const int n = p.nqubits;
  if (p.couplings.size() != static_cast<std::size_t>(n * (n - 1) / 2)) {
    throw std::invalid_argument("build_heisenberg: need N(N-1)/2 couplings");
  }
  std::vector<PauliTerm> terms;
  terms.reserve(p.couplings.size() * 3);
  for (int i = 1; i <= n; ++i) {
    for (int j = i + 1; j <= n; ++j) {
      const double c = p.coupling(i, j);
      for (Pauli letter : {Pauli::X, Pauli::Y, Pauli::Z}) {
        terms.push_back({c, PauliString::on_sites(n, {{i, letter}, {j, letter}})});
      }
    }
  }
  return SparseOperator(n, std::move(terms));
}

SparseOperator build_tfim(const TfimParams& p) {
  require_chain(p.nqubits);
  const int n = p.nqubits;
  if (p.couplings.size() != static_cast<std::size_t>(n - 1) ||
      p.fields.size() != static_cast<std::size_t>(n)) {
    throw std::invalid_argument("build_tfim: need N-1 couplings and N fields");
  }
  std::vector<PauliTerm> terms;
  terms.reserve(static_cast<std::size_t>(2 * n - 1));
  for (int i = 1; i < n; ++i) {
    terms.push_back({-p.couplings[static_cast<std::size_t>(i - 1)],
                     PauliString::on_sites(n, {{i, Pauli::Z}, {i + 1, Pauli::Z}})});
  }
  for (int i = 1; i <= n; ++i) {
    terms.push_back(
        {-p.fields[static_cast<std::size_t>(i - 1)], PauliString::on_sites(n, {{i, Pauli::X}})});
  }
  return SparseOperator(n, std::move(terms));
}

SparseOperator build_rydberg(const RydbergParams& p) {
  require_chain(p.nqubits);
  const int n = p.nqubits;
  std::vector<PauliTerm> terms;
  const auto id = PauliString::identity(n);
  // V N_i N_j = V/4 (I + Z_i + Z_j + Z_i Z_j)
  for (int i = 1; i <= n; ++i) {
    for (int j = i + 1; j <= n; ++j) {
      const double v = p.blockade_energy() / std::pow(static_cast<double>(j - i), 6);
      terms.push_back({v / 4.0, id});
      terms.push_back({v / 4.0, PauliString::on_sites(n, {{i, Pauli::Z}})});
      terms.push_back({v / 4.0, PauliString::on_sites(n, {{j, Pauli::Z}})});
      terms.push_back({v / 4.0, PauliString::on_sites(n, {{i, Pauli::Z}, {j, Pauli::Z}})});
    }
  }
  // (Omega/2) X_i - Delta (I + Z_i)/2
  for (int i = 1; i <= n; ++i) {
    terms.push_back({p.rabi / 2.0, PauliString::on_sites(n, {{i, Pauli::X}})});
    terms.push_back({-p.detuning / 2.0, id});
    terms.push_back({-p.detuning / 2.0, PauliString::on_sites(n, {{i, Pauli::Z}})});
  }
  return SparseOperator(n, std::move(terms));
}

SparseOperator build_hamiltonian(const HamiltonianParams& p) {
  return std::visit(
      [](const auto& q) -> SparseOperator {
        using T = std::decay_t<decltype(q)>;
        if constexpr (std::is_same_v<T, HeisenbergParams>) return build_heisenberg(q);
        else if constexpr (std::is_same_v<T, TfimParams>) return build_tfim(q);
        else return build_rydberg(q);
      },
      p);
}

HamiltonianParams sample_params(Family family, int nqubits, Rng& rng) {
  require_sites(nqubits);
  switch (family) {
    case Family::Heisenberg: {
      std::uniform_real_distribution<double> a(1.0, 2.0);
      return HeisenbergParams::power_law(nqubits, a(rng));
    }
    case Family::Tfim: {
      std::uniform_real_distribution<double> j(0.0, 2.0);
      TfimParams p{nqubits, {}, std::vector<double>(static_cast<std::size_t>(nqubits), 1.0)};
      for (int i = 0; i + 1 < nqubits; ++i) p.couplings.push_back(j(rng));
      return p;
    }
    case Family::Rydberg: {
      std::uniform_real_distribution<double> ratio(1.0, 2.95);
      std::uniform_real_distribution<double> detuning(-20.0 * kPi, 30.0 * kPi);
      RydbergParams p;
      p.nqubits = nqubits;
      p.rabi = 10.0 * kPi;
      p.blockade_ratio = ratio(rng);
      p.detuning = detuning(rng);
      return p;
    }
  }
  throw std::invalid_argument("sample_params: unknown family");
}

std::vector<double> feature_vector(const HamiltonianParams& p) {
  return std::visit(
      [](const auto& q) -> std::vector<double> {
        using T = std::decay_t<decltype(q)>;
        if constexpr (std::is_same_v<T, HeisenbergParams>) return q.couplings;
        else if constexpr (std::is_same_v<T, TfimParams>) return q.couplings;
        else return {q.rabi, q.blockade_ratio, q.detuning, q.blockade_energy()};
      },
      p);
}

std::size_t feature_dim(Family family, int nqubits) {
  const auto n = static_cast<std::size_t>(nqubits);
  switch (family) {
    case Family::Heisenberg: return n * (n - 1) / 2;
    case Family::Tfim: return n - 1;
    case Family::Rydberg: return 4;
  }
  return 0;
}

std::string params_to_json(const HamiltonianParams& p, std::optional<std::uint64_t> seed) {
  json j;
  j["family"] = std::string(to_string(family_of(p)));
  j["nqubits"] = nqubits_of(p);
  if (seed) j["seed"] = *seed;
  std::visit(
      [&](const auto& q) {
        using T = std::decay_t<decltype(q)>;
        if constexpr (std::is_same_v<T, HeisenbergParams>) {
          if (q.exponent) j["exponent"] = *q.exponent;
          j["couplings"] = q.couplings;
        } else if constexpr (std::is_same_v<T, TfimParams>) {
          j["couplings"] = q.couplings;
          j["fields"] = q.fields;
        } else {
          j["rabi"] = q.rabi;
          j["blockade_ratio"] = q.blockade_ratio;
          j["detuning"] = q.detuning;
        }
      },
      p);
  return j.dump();
}

HamiltonianParams params_from_json(std::string_view text, std::optional<std::uint64_t>* seed) {
  const json j = json::parse(text);
  const Family family = parse_family(j.at("family").get<std::string>());
  const int n = j.at("nqubits").get<int>();
  if (seed) {
    *seed = j.contains("seed") ? std::optional<std::uint64_t>(j["seed"].get<std::uint64_t>())
                               : std::nullopt;
  }
  switch (family) {
    case Family::Heisenberg: {
      HeisenbergParams p;
      p.nqubits = n;
      if (j.contains("exponent")) p.exponent = j["exponent"].get<double>();
      p.couplings = j.at("couplings").get<std::vector<double>>();
      return p;
    }
    case Family::Tfim:
      return TfimParams{n, j.at("couplings").get<std::vector<double>>(),
                        j.at("fields").get<std::vector<double>>()};
    case Family::Rydberg: {
      RydbergParams p;
      p.nqubits = n;
      p.rabi = j.at("rabi").get<double>();
      p.blockade_ratio = j.at("blockade_ratio").get<double>();
      p.detuning = j.at("detuning").get<double>();
      return p;
    }
  }
  throw std::invalid_argument("params_from_json: unknown family");
}

}  // namespace qsl
