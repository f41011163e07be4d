#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qsl/budget.hpp"
#include "qsl/groundstate.hpp"
#include "qsl/hamiltonians.hpp"
#include "qsl/random.hpp"

namespace qsl {

/// Ground-state property estimation (correlations and adjacent Renyi-2
/// entropies) or quantum phase classification.
enum class Task : std::uint8_t { Gspe = 0, Qpc = 1 };
std::string_view to_string(Task t) noexcept;
Task parse_task(std::string_view name);

/// Randomized Pauli snapshots (bytes 0..5) or Z-basis bits (bytes 0..1).
enum class Payload : std::uint8_t { None = 0, Shadow = 1, Bits = 2 };
std::string_view to_string(Payload p) noexcept;

struct Labels {
  std::vector<double> correlations;  // C_ij for i<j, row-major
  std::vector<double> renyi;         // N-1 adjacent pairs
  double s2 = 0.0;
  double s3 = 0.0;
  int phase = 0;
};

struct Instance {
  std::uint64_t seed = 0;
  HamiltonianParams params;
  std::vector<double> x;
  Labels exact;
  /// Labels derived from the measurement record (equal to `exact` in
  /// noise-free mode).
  Labels estimated;
  /// M x N snapshot-major, one byte per site.
  std::vector<std::uint8_t> measurements;
};

struct GenerateConfig {
  Family family = Family::Heisenberg;
  int nqubits = 8;
  Task task = Task::Gspe;
  int n_train = 20;
  int n_test = 50;
  int shots = 64;
  std::uint64_t seed = 0;
  /// Skip sampling; estimated labels are the exact ones.
  bool noise_free = false;
  /// Upsample minority classes of the training split (QPC only).
  bool rebalance = true;
  /// Sample measurement records for test instances as well.
  bool test_measurements = true;
  /// Training cap; defaults to n_train x shots.
  std::optional<std::int64_t> budget_cap;
  LanczosConfig lanczos;
  std::optional<std::string> cache_dir;
  int threads = 1;
};

struct Dataset {
  Family family = Family::Heisenberg;
  int nqubits = 0;
  Task task = Task::Gspe;
  Payload payload = Payload::None;
  int shots = 0;
  std::uint64_t seed = 0;
  bool noise_free = false;
  /// Training ledger (capped at n x M).
  ResourceBudget budget;
  /// Shots spent on test instances, tracked outside the cap.
  std::int64_t test_shots = 0;
  /// Training instances before rebalancing.
  int n_train_drawn = 0;
  std::vector<Instance> train;
  std::vector<Instance> test;
};

Payload payload_for(Task task) noexcept;

/// Exact labels of one ground state.
Labels exact_labels(const StateVector& state, Task task);

/// Estimates labels from a measurement record: shadow correlations and
/// Renyi-2 entropies for shadows, order scores and phase for bits.
Labels preprocess_labels(int nqubits, Payload payload, const std::vector<std::uint8_t>& measurements);

struct SolvedInstance {
  Instance instance;
  StateVector state;
};

/// Instance `index` of split 0 (train) or 1 (test): parameters, ground state
/// and exact labels, resampled up to three times on solver failure. In
/// noise-free mode the estimated labels are set to the exact ones.
SolvedInstance solve_instance(const GenerateConfig& config, int split, int index,
                              const GroundStateCache* cache = nullptr);

/// Draws M shots from a stream derived from the instance seed (so smaller M
/// gives a prefix of larger M) and fills the estimated labels.
void measure_instance(Instance& inst, const StateVector& state, Task task, int shots);

/// Samples parameters, solves ground states (resampling a failed instance up
/// to three times) and draws measurement records. Throws BudgetError before
/// any sampling when the request exceeds the cap, SolverError when an
/// instance fails every retry.
Dataset generate_dataset(const GenerateConfig& config);

/// Upsamples every present minority class with replacement to the majority
/// count; appended copies follow the originals.
void rebalance_training(Dataset& d, Rng& rng);

enum class RandomizeMode : std::uint8_t { Shadow6 = 0, Bit2 = 1 };
RandomizeMode parse_randomize_mode(std::string_view name);

/// Replaces every measurement byte with a uniform draw; x and labels are left
/// untouched. Throws when the mode does not match the payload.
void randomize_measurements(Dataset& d, RandomizeMode mode, Rng& rng);

/// Writes <stem>.json (manifest) and <stem>.bin (payload).
void save_dataset(const Dataset& d, const std::string& stem);
Dataset load_dataset(const std::string& stem);

std::string dataset_manifest(const Dataset& d);
std::string dataset_payload(const Dataset& d);

}  // namespace qsl
