#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace qsl {

/// Raised when a request would exceed the measurement cap.
class BudgetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Allocation {
  std::string purpose;
  std::int64_t n = 0;
  std::int64_t shots_per_instance = 0;
  std::int64_t shots() const;
};

/// Measurement ledger: total_shots is the n x M cap.
struct ResourceBudget {
  std::int64_t total_shots = 0;
  std::vector<Allocation> allocations;

  std::int64_t spent_shots() const;
  /// Records an allocation, or throws BudgetError (leaving the ledger
  /// untouched) when it would overrun the cap.
  void allocate(std::string purpose, std::int64_t n, std::int64_t shots_per_instance);
  std::string to_json() const;
};

struct BudgetReport {
  bool ok = true;
  std::int64_t spent = 0;
  std::int64_t cap = 0;
  std::int64_t overage = 0;
  std::string message;
};

BudgetReport validate_budget(const ResourceBudget& budget);

struct SplitCheck {
  bool ok = true;
  std::int64_t split_shots = 0;  // n_pre M_pre + n_sft M_sft
  std::int64_t total_shots = 0;  // n M
  std::int64_t difference = 0;   // split - total
};

/// Exact check of n_pre M_pre + n_sft M_sft == n M.
SplitCheck ssl_split_check(std::int64_t n_pre, std::int64_t m_pre, std::int64_t n_sft, std::int64_t m_sft,
                           std::int64_t n, std::int64_t m);

/// Money held as an integer count of 1e-8 USD.
struct Usd {
  static constexpr std::int64_t kUnitsPerDollar = 100'000'000;
  std::int64_t units = 0;

  double dollars() const noexcept { return static_cast<double>(units) / kUnitsPerDollar; }
  /// Fixed-point rendering with two decimals, or more when needed.
  std::string str() const;
  friend bool operator==(Usd, Usd) = default;
};

/// Parses a non-negative decimal with at most 8 fractional digits.
Usd parse_usd(std::string_view text);

struct MachineRate {
  std::string name;
  std::optional<Usd> price_per_shot;
  std::optional<Usd> price_per_hour;
  int system_size = 0;
};

/// Rows of name,usd_per_shot,usd_per_hour,qubits; empty price cells mean the
/// provider does not quote that price.
std::vector<MachineRate> parse_rates(std::string_view csv);
std::vector<MachineRate> load_rates(const std::string& path);
const std::vector<MachineRate>& builtin_rates();
const MachineRate& find_rate(const std::vector<MachineRate>& rates, std::string_view name);

/// shots x price_per_shot, exact. Throws when the machine has no shot price.
Usd estimate_cost(const MachineRate& rate, std::int64_t shots);

struct Walltime {
  double seconds = 0.0;
  double days() const noexcept { return seconds / 86400.0; }
  /// e.g. "10000000 s (115.74 days)".
  std::string str() const;
};

Walltime estimate_walltime(std::int64_t shots, double seconds_per_shot);

/// Hourly billing for a walltime, in dollars.
double estimate_hourly_cost(const MachineRate& rate, const Walltime& t);

}  // namespace qsl
