#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qsl/dataset.hpp"
#include "qsl/mlp.hpp"
#include "qsl/model.hpp"

namespace qsl {

enum class Metric : std::uint8_t { Correlation = 0, Entropy = 1, Accuracy = 2 };
std::string_view to_string(Metric m) noexcept;
Metric parse_metric(std::string_view name);

struct ModelOptions {
  std::vector<double> lambda_grid = {1e-4, 1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3, 1e4};
  int folds = 5;
  std::vector<int> forest_trees = {50, 200};
  /// -1 means unlimited depth.
  std::vector<int> forest_depths = {4, 8, -1};
  MlpConfig mlp = default_mlp();
  int logistic_steps = 300;
  double lasso_tol = 1e-6;
  int lasso_max_sweeps = 5000;
  int dirichlet_cutoff = 3;
  /// Held-out share for forest, kernel-logistic and MLP selection.
  double validation_fraction = 0.2;
  int threads = 1;

  static MlpConfig default_mlp() {
    MlpConfig c;
    c.l2 = 1e-4;
    return c;
  }
};

/// Parsed model name. Bases: ridge, lasso, dk, rbf, ntk, rf, mlp. Suffix
/// "_a" appends the measurement record to the inputs, "_rand" marks a run on
/// randomized measurements, and "rf_scores" is a forest on the estimated
/// order scores (s2, s3).
struct ModelSpec {
  std::string name;
  std::string base;
  bool measurements = false;
  bool randomized = false;
  bool scores = false;
};

/// Throws std::invalid_argument for unknown names or models that do not
/// support the task.
ModelSpec parse_model(std::string_view name, Task task);

/// Raw input vector of one instance as the given model sees it.
std::vector<double> model_input(const ModelSpec& spec, const Instance& inst);

/// Fits on d.train against estimated labels, selecting hyperparameters on
/// the training split only.
TrainedModel fit_model(const ModelSpec& spec, const Dataset& d, const ModelOptions& options,
                       std::uint64_t seed);

struct Evaluation {
  double correlation = std::numeric_limits<double>::quiet_NaN();
  double entropy = std::numeric_limits<double>::quiet_NaN();
  double accuracy = std::numeric_limits<double>::quiet_NaN();
  double get(Metric m) const noexcept;
};

/// Test-split metrics against exact labels.
Evaluation evaluate_model(const TrainedModel& model, const ModelSpec& spec, const Dataset& d);

/// Classical-shadow baseline: the test split's measurement-derived labels
/// scored against the exact ones. NaN when the test split has no records.
Evaluation cs_baseline(const Dataset& d);

struct SslSplit {
  std::int64_t n_pre = 0, m_pre = 0, n_sft = 0, m_sft = 0;
};

struct ExperimentConfig {
  Family family = Family::Heisenberg;
  int nqubits = 8;
  Task task = Task::Gspe;
  std::vector<int> n_grid = {20};
  std::vector<int> m_grid = {64};
  int n_test = 200;
  std::vector<std::string> models = {"ridge"};
  int repetitions = 5;
  std::uint64_t seed = 0;
  /// Exact training labels and no measurement records; M is reported as inf.
  bool noise_free = false;
  std::optional<std::int64_t> budget_cap;
  std::optional<SslSplit> ssl;
  ModelOptions options;
  LanczosConfig lanczos;
  std::optional<std::string> cache_dir;
  /// Record wall-clock seconds; otherwise the column is 0 so reports are
  /// byte-reproducible.
  bool timing = false;
  int threads = 1;

  static ExperimentConfig from_json(std::string_view text);
  std::string to_json() const;
  /// Throws std::invalid_argument or BudgetError.
  void validate() const;
};

struct ReportRow {
  std::string model;
  Family family = Family::Heisenberg;
  int nqubits = 0;
  Metric metric = Metric::Correlation;
  int n = 0;
  /// 0 in noise-free runs.
  int shots = 0;
  int rep = 0;
  double value = 0.0;
  double baseline = 0.0;
  std::uint64_t seed = 0;
  double seconds = 0.0;
};

struct MetricsReport {
  std::vector<ReportRow> rows;
};

/// Solves one instance pool per repetition (the largest n plus the test
/// split), then for every (M, n) cell draws records, fits each model and
/// scores it. Rows are ordered by (model, n, M, rep, metric).
MetricsReport run_experiment(const ExperimentConfig& config);

/// Columns: model,family,N,task,n,M,rep,metric,baseline,seed,seconds where
/// task names the metric kind and metric holds its value.
std::string report_csv(const MetricsReport& report);
MetricsReport parse_report_csv(std::string_view csv);

/// Rows plus mean/std aggregates over repetitions.
std::string report_json(const MetricsReport& report);

enum class ReportFormat : std::uint8_t { Csv, Json };
void emit_report(const MetricsReport& report, const std::string& path, ReportFormat format);

struct Aggregate {
  std::string model;
  Metric metric = Metric::Correlation;
  int n = 0;
  int shots = 0;
  int count = 0;
  double mean = 0.0;
  double stddev = 0.0;   // sample standard deviation
  double baseline = 0.0; // mean baseline
};
std::vector<Aggregate> aggregate(const MetricsReport& report);

}  // namespace qsl
