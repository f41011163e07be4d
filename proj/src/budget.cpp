#include "qsl/budget.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace qsl {

namespace {

constexpr std::string_view kBuiltinRates =
    "name,usd_per_shot,usd_per_hour,qubits\n"
    "IQM-Garnet,0.00145,3000.00,20\n"
    "IonQ-Aria,0.03000,7000.00,25\n"
    "IonQ-Forte,0.08000,7000.00,36\n"
    "Rigetti Ankaa,0.00090,,84\n"
    "QuEra-Aquila,0.01000,2500.00,256\n"
    "IBM-QPU,,5760.00,127\n"
    "PASQAL Fresnel,,3000.00,100\n"
    "Rigetti-Ankaa-3,,4680.00,82\n";

std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
  std::int64_t out = 0;
  if (__builtin_mul_overflow(a, b, &out)) throw std::overflow_error("shot count overflows 64 bits");
  return out;
}

std::int64_t checked_add(std::int64_t a, std::int64_t b) {
  std::int64_t out = 0;
  if (__builtin_add_overflow(a, b, &out)) throw std::overflow_error("shot count overflows 64 bits");
  return out;
}

void require_nonnegative(std::int64_t v, const char* what) {
  if (v < 0) throw std::invalid_argument(std::string(what) + " must be >= 0");
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    cells.push_back(trim(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

}  // namespace

std::int64_t Allocation::shots() const { return checked_mul(n, shots_per_instance); }

std::int64_t ResourceBudget::spent_shots() const {
  std::int64_t s = 0;
  for (const auto& a : allocations) s = checked_add(s, a.shots());
  return s;
}

void ResourceBudget::allocate(std::string purpose, std::int64_t n, std::int64_t shots_per_instance) {
  require_nonnegative(n, "allocation n");
  require_nonnegative(shots_per_instance, "allocation M");
  Allocation a{std::move(purpose), n, shots_per_instance};
  const std::int64_t after = checked_add(spent_shots(), a.shots());
  if (after > total_shots) {
    throw BudgetError("budget exceeded: allocation '" + a.purpose + "' needs " + std::to_string(a.shots()) +
                      " shots, " + std::to_string(total_shots - spent_shots()) + " of " +
                      std::to_string(total_shots) + " remain");
  }
  allocations.push_back(std::move(a));
}

std::string ResourceBudget::to_json() const {
  nlohmann::ordered_json j;
  j["total_shots"] = total_shots;
  j["spent_shots"] = spent_shots();
  auto& list = j["allocations"] = nlohmann::ordered_json::array();
  for (const auto& a : allocations) {
    list.push_back({{"purpose", a.purpose}, {"n", a.n}, {"M", a.shots_per_instance}, {"shots", a.shots()}});
  }
  return j.dump();
}

BudgetReport validate_budget(const ResourceBudget& budget) {
  BudgetReport r;
  r.cap = budget.total_shots;
  r.spent = budget.spent_shots();
  r.overage = r.spent > r.cap ? r.spent - r.cap : 0;
  r.ok = r.overage == 0 && r.cap >= 0;
  r.message = r.ok ? "ok: " + std::to_string(r.spent) + " of " + std::to_string(r.cap) + " shots"
                   : "violation: " + std::to_string(r.spent) + " shots exceed the cap of " +
                         std::to_string(r.cap) + " by " + std::to_string(r.overage);
  return r;
}

SplitCheck ssl_split_check(std::int64_t n_pre, std::int64_t m_pre, std::int64_t n_sft, std::int64_t m_sft,
                           std::int64_t n, std::int64_t m) {
  for (std::int64_t v : {n_pre, m_pre, n_sft, m_sft, n, m}) require_nonnegative(v, "ssl_split_check argument");
  SplitCheck c;
  c.split_shots = checked_add(checked_mul(n_pre, m_pre), checked_mul(n_sft, m_sft));
  c.total_shots = checked_mul(n, m);
  c.difference = c.split_shots - c.total_shots;
  c.ok = c.difference == 0;
  return c;
}

std::string Usd::str() const {
  const bool neg = units < 0;
  const std::uint64_t mag = neg ? static_cast<std::uint64_t>(-(units + 1)) + 1 : static_cast<std::uint64_t>(units);
  std::string frac = std::to_string(mag % kUnitsPerDollar);
  frac.insert(0, 8 - frac.size(), '0');
  while (frac.size() > 2 && frac.back() == '0') frac.pop_back();
  return (neg ? "-" : "") + std::to_string(mag / kUnitsPerDollar) + "." + frac;
}

Usd parse_usd(std::string_view text) {
  text = trim(text);
  if (!text.empty() && text.front() == '$') text.remove_prefix(1);
  const auto dot = text.find('.');
  const std::string_view whole = text.substr(0, dot);
  const std::string_view frac = dot == std::string_view::npos ? std::string_view{} : text.substr(dot + 1);
  auto digits_only = [](std::string_view s) {
    for (char c : s) {
      if (c < '0' || c > '9') return false;
    }
    return true;
  };
  if (whole.empty() || !digits_only(whole) || !digits_only(frac) || frac.size() > 8 ||
      (dot != std::string_view::npos && frac.empty())) {
    throw std::invalid_argument("invalid USD amount '" + std::string(text) + "'");
  }
  std::int64_t units = 0;
  for (char c : whole) units = checked_add(checked_mul(units, 10), c - '0');
  units = checked_mul(units, Usd::kUnitsPerDollar);
  std::int64_t scale = Usd::kUnitsPerDollar / 10;
  for (char c : frac) {
    units += (c - '0') * scale;
    scale /= 10;
  }
  return Usd{units};
}

std::vector<MachineRate> parse_rates(std::string_view csv) {
  std::vector<MachineRate> out;
  std::size_t pos = 0;
  int line_no = 0;
  while (pos < csv.size()) {
    auto end = csv.find('\n', pos);
    if (end == std::string_view::npos) end = csv.size();
    const std::string_view line = trim(csv.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const auto cells = split_csv(line);
    if (cells.size() != 4) {
      throw std::invalid_argument("rates line " + std::to_string(line_no) + ": expected 4 columns");
    }
    if (cells[0] == "name") continue;
    MachineRate r;
    r.name = std::string(cells[0]);
    if (!cells[1].empty()) r.price_per_shot = parse_usd(cells[1]);
    if (!cells[2].empty()) r.price_per_hour = parse_usd(cells[2]);
    try {
      r.system_size = std::stoi(std::string(cells[3]));
    } catch (const std::exception&) {
      throw std::invalid_argument("rates line " + std::to_string(line_no) + ": bad qubit count");
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<MachineRate> load_rates(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open rate table " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_rates(ss.str());
}

const std::vector<MachineRate>& builtin_rates() {
  static const std::vector<MachineRate> rates = parse_rates(kBuiltinRates);
  return rates;
}

const MachineRate& find_rate(const std::vector<MachineRate>& rates, std::string_view name) {
  for (const auto& r : rates) {
    if (r.name == name) return r;
  }
  throw std::invalid_argument("unknown machine '" + std::string(name) + "'");
}

Usd estimate_cost(const MachineRate& rate, std::int64_t shots) {
  require_nonnegative(shots, "shots");
  if (!rate.price_per_shot) throw std::invalid_argument(rate.name + " has no per-shot price");
  return Usd{checked_mul(shots, rate.price_per_shot->units)};
}

std::string Walltime::str() const {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(0);
  os << seconds << " s (";
  os.precision(2);
  os << days() << " days)";
  return os.str();
}

Walltime estimate_walltime(std::int64_t shots, double seconds_per_shot) {
  require_nonnegative(shots, "shots");
  if (!(seconds_per_shot >= 0.0)) throw std::invalid_argument("seconds_per_shot must be >= 0");
  return Walltime{static_cast<double>(shots) * seconds_per_shot};
}

double estimate_hourly_cost(const MachineRate& rate, const Walltime& t) {
  if (!rate.price_per_hour) throw std::invalid_argument(rate.name + " has no hourly price");
  return rate.price_per_hour->dollars() * t.seconds / 3600.0;
}

}  // namespace qsl
