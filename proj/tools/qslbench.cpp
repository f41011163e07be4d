// qslbench: dataset generation, training, evaluation, sweeps and cost
// estimates for quantum system learning benchmarks.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "qsl/budget.hpp"
#include "qsl/experiment.hpp"

namespace {

using Json = nlohmann::ordered_json;

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

void spit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << text;
}

qsl::ModelOptions options_from(const std::string& config_path) {
  if (config_path.empty()) return {};
  return qsl::ExperimentConfig::from_json(slurp(config_path)).options;
}

Json evaluation_json(const qsl::Evaluation& e, qsl::Task task) {
  auto num = [](double v) -> Json { return std::isfinite(v) ? Json(v) : Json(nullptr); };
  if (task == qsl::Task::Gspe) return Json{{"correlation", num(e.correlation)}, {"entropy", num(e.entropy)}};
  return Json{{"accuracy", num(e.accuracy)}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantum system learning benchmark"};
  app.require_subcommand(1);
  std::uint64_t seed = 0;
  std::string out;
  int threads = 1;
  app.add_option("--seed", seed, "master seed")->capture_default_str();
  app.add_option("--out", out, "output path (stem for datasets)");
  app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber)->capture_default_str();

  // gen
  auto* gen = app.add_subcommand("gen", "generate a dataset");
  std::string family = "heisenberg", task = "gspe", cache;
  int nqubits = 8, n_train = 20, n_test = 50, shots = 64;
  bool noise_free = false, no_rebalance = false, no_test_records = false;
  std::int64_t cap = -1;
  gen->add_option("--family", family)->capture_default_str();
  gen->add_option("-N,--nqubits", nqubits)->capture_default_str();
  gen->add_option("--task", task, "gspe or qpc")->capture_default_str();
  gen->add_option("-n,--train", n_train)->capture_default_str();
  gen->add_option("--test", n_test)->capture_default_str();
  gen->add_option("-M,--shots", shots)->capture_default_str();
  gen->add_option("--cap", cap, "training shot cap (default n x M)");
  gen->add_option("--cache", cache, "ground-state cache directory");
  gen->add_flag("--noise-free", noise_free, "exact training labels, no measurements");
  gen->add_flag("--no-rebalance", no_rebalance);
  gen->add_flag("--no-test-records", no_test_records, "skip sampling test measurements");

  // train
  auto* train = app.add_subcommand("train", "fit a model on a dataset");
  std::string data, model_name = "ridge", config_path, model_path;
  train->add_option("--data", data, "dataset stem")->required();
  train->add_option("--model", model_name)->capture_default_str();
  train->add_option("--config", config_path, "JSON config; only its options block is read");

  // eval
  auto* eval = app.add_subcommand("eval", "score a trained model on a dataset's test split");
  eval->add_option("--data", data, "dataset stem")->required();
  eval->add_option("--model", model_name, "model name the file was trained as")->required();
  eval->add_option("--model-file", model_path)->required();

  // sweep
  auto* sweep = app.add_subcommand("sweep", "run a scaling grid from a JSON config");
  std::string format = "csv";
  bool timing = false;
  sweep->add_option("--config", config_path)->required();
  sweep->add_option("--format", format)->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
  sweep->add_flag("--timing", timing, "record wall-clock seconds per fit");

  // randomize
  auto* randomize = app.add_subcommand("randomize", "replace measurement records with uniform noise");
  std::string mode;
  randomize->add_option("--data", data, "dataset stem")->required();
  randomize->add_option("--mode", mode, "shadow6 or bit2")->required();

  // cost
  auto* cost = app.add_subcommand("cost", "price and walltime of a shot count");
  std::string machine = "IonQ-Forte", rates_path;
  std::int64_t cost_shots = -1, cost_n = -1, cost_m = -1;
  double seconds_per_shot = 1.0;
  cost->add_option("--machine", machine)->capture_default_str();
  cost->add_option("--rates", rates_path, "rate table CSV (default: built-in)");
  cost->add_option("--total", cost_shots, "total shots");
  cost->add_option("-n", cost_n, "instances");
  cost->add_option("-M", cost_m, "shots per instance");
  cost->add_option("--seconds-per-shot", seconds_per_shot)->capture_default_str();

  // report
  auto* report = app.add_subcommand("report", "aggregate a CSV report");
  std::string in_path;
  report->add_option("--in", in_path, "CSV report")->required();
  report->add_option("--format", format)->check(CLI::IsMember({"csv", "json"}))->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      if (out.empty()) throw std::invalid_argument("gen: --out <stem> is required");
      qsl::GenerateConfig c;
      c.family = qsl::parse_family(family);
      c.nqubits = nqubits;
      c.task = qsl::parse_task(task);
      c.n_train = n_train;
      c.n_test = n_test;
      c.shots = shots;
      c.seed = seed;
      c.noise_free = noise_free;
      c.rebalance = !no_rebalance;
      c.test_measurements = !no_test_records;
      if (cap >= 0) c.budget_cap = cap;
      if (!cache.empty()) c.cache_dir = cache;
      c.threads = threads;
      const qsl::Dataset d = qsl::generate_dataset(c);
      qsl::save_dataset(d, out);
      std::cerr << "wrote " << out << ".json and " << out << ".bin (" << d.train.size() << " train, "
                << d.test.size() << " test, " << d.budget.spent_shots() << " training shots)\n";
    } else if (*train) {
      if (out.empty()) throw std::invalid_argument("train: --out <file> is required");
      const qsl::Dataset d = qsl::load_dataset(data);
      const qsl::ModelSpec spec = qsl::parse_model(model_name, d.task);
      qsl::ModelOptions o = options_from(config_path);
      o.threads = threads;
      const qsl::TrainedModel m = qsl::fit_model(spec, d, o, seed);
      qsl::write_file(out, m.serialize());
      std::cerr << "wrote " << out << " (" << qsl::to_string(m.kind) << ")\n";
    } else if (*eval) {
      const qsl::Dataset d = qsl::load_dataset(data);
      const qsl::ModelSpec spec = qsl::parse_model(model_name, d.task);
      const qsl::TrainedModel m = qsl::TrainedModel::deserialize(qsl::read_file(model_path));
      const Json j{{"model", model_name},
                   {"test", evaluation_json(qsl::evaluate_model(m, spec, d), d.task)},
                   {"baseline", evaluation_json(qsl::cs_baseline(d), d.task)}};
      spit(out, j.dump(2) + "\n");
    } else if (*sweep) {
      qsl::ExperimentConfig c = qsl::ExperimentConfig::from_json(slurp(config_path));
      if (app.get_option("--seed")->count()) c.seed = seed;
      if (app.get_option("--threads")->count()) c.threads = threads;
      if (timing) c.timing = true;
      const qsl::MetricsReport r = qsl::run_experiment(c);
      const auto fmt = format == "json" ? qsl::ReportFormat::Json : qsl::ReportFormat::Csv;
      if (out.empty() || out == "-") {
        std::cout << (fmt == qsl::ReportFormat::Csv ? qsl::report_csv(r) : qsl::report_json(r));
      } else {
        qsl::emit_report(r, out, fmt);
      }
    } else if (*randomize) {
      if (out.empty()) throw std::invalid_argument("randomize: --out <stem> is required");
      qsl::Dataset d = qsl::load_dataset(data);
      qsl::Rng rng = qsl::make_rng(seed, {3});
      qsl::randomize_measurements(d, qsl::parse_randomize_mode(mode), rng);
      qsl::save_dataset(d, out);
    } else if (*cost) {
      const auto rates = rates_path.empty() ? qsl::builtin_rates() : qsl::load_rates(rates_path);
      const qsl::MachineRate& rate = qsl::find_rate(rates, machine);
      std::int64_t total = cost_shots;
      if (total < 0) {
        if (cost_n < 0 || cost_m < 0) throw std::invalid_argument("cost: give --total or both -n and -M");
        total = cost_n * cost_m;
      }
      const qsl::Walltime t = qsl::estimate_walltime(total, seconds_per_shot);
      Json j{{"machine", rate.name}, {"shots", total}};
      j["usd_per_shot"] = rate.price_per_shot ? Json(rate.price_per_shot->str()) : Json(nullptr);
      j["cost_usd"] = rate.price_per_shot ? Json(qsl::estimate_cost(rate, total).str()) : Json(nullptr);
      j["walltime"] = t.str();
      j["walltime_seconds"] = t.seconds;
      if (rate.price_per_hour) j["hourly_cost_usd"] = qsl::estimate_hourly_cost(rate, t);
      spit(out, j.dump(2) + "\n");
    } else if (*report) {
      const qsl::MetricsReport r = qsl::parse_report_csv(slurp(in_path));
      if (format == "json") {
        spit(out, qsl::report_json(r));
      } else {
        std::string s = "model,task,n,M,count,mean,std,baseline\n";
        char buf[256];
        for (const auto& a : qsl::aggregate(r)) {
          std::snprintf(buf, sizeof buf, "%s,%s,%d,%s,%d,%.6g,%.6g,%.6g\n", a.model.c_str(),
                        std::string(qsl::to_string(a.metric)).c_str(), a.n,
                        a.shots == 0 ? "inf" : std::to_string(a.shots).c_str(), a.count, a.mean, a.stddev,
                        a.baseline);
          s += buf;
        }
        spit(out, s);
      }
    }
  } catch (const qsl::BudgetError& e) {
    std::cerr << "budget violation: " << e.what() << '\n';
    return 2;
  } catch (const qsl::SolverError& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
