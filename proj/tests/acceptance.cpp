// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "qsl/budget.hpp"
#include "qsl/experiment.hpp"
#include "qsl/groundstate.hpp"
#include "qsl/hamiltonians.hpp"
#include "qsl/metrics.hpp"
#include "qsl/mlp.hpp"
#include "qsl/shadows.hpp"

namespace fs = std::filesystem;
using namespace qsl;

namespace {

struct Context {
  int threads = 1;
  std::string qslbench;
  std::string work;
};

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::map<std::pair<int, int>, std::vector<double>> values_by_cell(const MetricsReport& r, const std::string& model,
                                                                  Metric metric) {
  std::map<std::pair<int, int>, std::vector<double>> out;
  for (const auto& row : r.rows) {
    if (row.model == model && row.metric == metric) out[{row.shots, row.n}].push_back(row.value);
  }
  return out;
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sample_var(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

std::vector<double> column(const MetricsReport& r, const std::string& model, Metric metric, bool baseline = false) {
  std::vector<double> out;
  for (const auto& row : r.rows) {
    if (row.model == model && row.metric == metric) out.push_back(baseline ? row.baseline : row.value);
  }
  return out;
}

// 1 ----------------------------------------------------------------------
Outcome lanczos_vs_dense(const Context&) {
  const auto start = Clock::now();
  LanczosConfig cfg;
  int compared = 0, skipped = 0;
  double worst_energy = 0.0, worst_infidelity = 0.0;
  for (Family family : {Family::Heisenberg, Family::Tfim, Family::Rydberg}) {
    for (int i = 0; i < 100; ++i) {
      const int n = 2 + i % 9;
      Rng rng = make_rng(11, {static_cast<std::uint64_t>(family), static_cast<std::uint64_t>(i)});
      const SparseOperator h = build_hamiltonian(sample_params(family, n, rng));
      const DenseSpectrum dense = dense_diagonalize(h);
      // Spectral gap below the solver's residual resolution counts as degenerate.
      if (dense.eigenvalues[1] - dense.eigenvalues[0] < 1e-6 * std::max(1.0, h.norm_bound())) {
        ++skipped;
        continue;
      }
      const GroundState gs = ground_state(h, cfg, rng);
      cplx overlap = 0.0;
      for (std::size_t k = 0; k < gs.state.dim(); ++k) overlap += std::conj(dense.ground[k]) * gs.state[k];
      worst_energy = std::max(worst_energy, std::abs(gs.energy - dense.eigenvalues[0]));
      worst_infidelity = std::max(worst_infidelity, 1.0 - std::norm(overlap));
      ++compared;
    }
  }
  const double t = seconds_since(start);
  return {worst_energy <= 1e-8 && worst_infidelity <= 1e-8 && t < 120.0,
          fmt("%d instances compared, %d degenerate skipped; max |dE| = %.2e, max 1-F = %.2e, %.1f s", compared,
              skipped, worst_energy, worst_infidelity, t)};
}

// 2 ----------------------------------------------------------------------
// Born probability of the outcome signs s in the given bases, from Pauli
// expectations: prod_k (I + s_k P_k)/2 expanded over subsets.
double outcome_probability(const StateVector& psi, const std::array<Basis, 2>& bases, const std::array<int, 2>& bits) {
  double p = 0.0;
  for (int mask = 0; mask < 4; ++mask) {
    std::vector<Pauli> ops(2, Pauli::I);
    double sign = 1.0;
    for (int k = 0; k < 2; ++k) {
      if (mask >> k & 1) {
        ops[static_cast<std::size_t>(k)] = static_cast<Pauli>(static_cast<int>(bases[static_cast<std::size_t>(k)]) + 1);
        sign *= 1 - 2 * bits[static_cast<std::size_t>(k)];
      }
    }
    p += sign * expectation(psi, PauliString(ops));
  }
  return p / 4.0;
}

Outcome shadow_unbiased(const Context&) {
  double worst = 0.0;
  for (int s = 0; s < 50; ++s) {
    Rng rng = make_rng(22, {static_cast<std::uint64_t>(s)});
    const StateVector psi = StateVector::random(2, rng);
    for (int code = 1; code < 16; ++code) {
      const PauliString ps({static_cast<Pauli>(code & 3), static_cast<Pauli>(code >> 2)});
      double mean_est = 0.0;
      for (int b0 = 0; b0 < 3; ++b0) {
        for (int b1 = 0; b1 < 3; ++b1) {
          const std::array<Basis, 2> bases{static_cast<Basis>(b0), static_cast<Basis>(b1)};
          for (int o = 0; o < 4; ++o) {
            const std::array<int, 2> bits{o & 1, o >> 1};
            const ShadowSet one(2, {encode_outcome(bases[0], bits[0]), encode_outcome(bases[1], bits[1])});
            mean_est += outcome_probability(psi, bases, bits) / 9.0 * shadow_expectation(one, ps);
          }
        }
      }
      worst = std::max(worst, std::abs(mean_est - expectation(psi, ps)));
    }
  }
  return {worst <= 1e-12, fmt("50 states x 15 Paulis, max |E[estimate] - tr(rho P)| = %.2e", worst)};
}

// 3 ----------------------------------------------------------------------
Outcome shadow_concentration(const Context&) {
  Rng state_rng = make_rng(33);
  const StateVector psi = StateVector::random(4, state_rng);
  std::vector<PauliString> paulis;
  for (int code = 1; code < 256; ++code) {
    std::vector<Pauli> ops;
    for (int k = 0; k < 4; ++k) ops.push_back(static_cast<Pauli>(code >> (2 * k) & 3));
    PauliString ps(ops);
    if (ps.weight() <= 2) paulis.push_back(ps);
  }
  std::vector<double> exact;
  for (const auto& p : paulis) exact.push_back(expectation(psi, p));
  const int m = 10000, trials = 100;
  int good_trials = 0;
  std::vector<std::vector<double>> est_m(paulis.size()), est_4m(paulis.size());
  for (int t = 0; t < trials; ++t) {
    Rng rng = make_rng(34, {static_cast<std::uint64_t>(t)});
    const ShadowSet s = sample_shadow(psi, m, rng);
    const ShadowSet s4 = sample_shadow(psi, 4 * m, rng);
    bool all = true;
    for (std::size_t k = 0; k < paulis.size(); ++k) {
      const double e = shadow_expectation(s, paulis[k]);
      est_m[k].push_back(e);
      est_4m[k].push_back(shadow_expectation(s4, paulis[k]));
      if (std::abs(e - exact[k]) > 5.0 * std::pow(3.0, paulis[k].weight()) / std::sqrt(m)) all = false;
    }
    good_trials += all;
  }
  double var_m = 0.0, var_4m = 0.0;
  for (std::size_t k = 0; k < paulis.size(); ++k) {
    var_m += sample_var(est_m[k]);
    var_4m += sample_var(est_4m[k]);
  }
  const double ratio = var_m / var_4m;
  return {good_trials >= 95 && ratio >= 2.5 && ratio <= 6.0,
          fmt("%d/100 trials within 5*3^w/sqrt(M) for all %zu Paulis of weight 1-2; variance ratio M/4M = %.3f",
              good_trials, paulis.size(), ratio)};
}

// 4 ----------------------------------------------------------------------
Outcome entropy_endpoints(const Context&) {
  double worst_product = 0.0, worst_mixed = 0.0;
  for (int s = 0; s < 5; ++s) {
    Rng rng = make_rng(44, {static_cast<std::uint64_t>(s)});
    // Product of two random single-qubit states.
    const StateVector a = StateVector::random(1, rng), b = StateVector::random(1, rng);
    std::vector<cplx> prod(4);
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) prod[static_cast<std::size_t>(i + 2 * j)] = a[static_cast<std::size_t>(i)] * b[static_cast<std::size_t>(j)];
    }
    const StateVector product = StateVector::normalized(2, prod);
    worst_product = std::max(worst_product, std::abs(shadow_renyi2(sample_shadow(product, 10000, rng), 1)));
    // Bell pairs (1,3) and (2,4): sites 1 and 2 are maximally mixed.
    std::vector<cplx> bell(16, 0.0);
    for (int x = 0; x < 2; ++x) {
      for (int y = 0; y < 2; ++y) bell[static_cast<std::size_t>(x | y << 1 | x << 2 | y << 3)] = 0.5;
    }
    const StateVector mixed(4, bell);
    worst_mixed = std::max(worst_mixed, std::abs(shadow_renyi2(sample_shadow(mixed, 10000, rng), 1) - 2.0));
  }
  return {worst_product <= 0.1 && worst_mixed <= 0.15,
          fmt("5 seeds at M=1e4: max |S2 - 0| product = %.4f, max |S2 - 2| mixed pair = %.4f", worst_product,
              worst_mixed)};
}

// 5 ----------------------------------------------------------------------
Outcome noise_free_ridge(const Context& ctx) {
  const auto start = Clock::now();
  ExperimentConfig c;
  c.family = Family::Heisenberg;
  c.nqubits = 8;
  c.task = Task::Gspe;
  c.n_grid = {10000};
  c.m_grid = {0};
  c.n_test = 20000;
  c.models = {"ridge"};
  c.repetitions = 1;
  c.seed = 5;
  c.noise_free = true;
  c.threads = ctx.threads;
  const MetricsReport r = run_experiment(c);
  const double err = column(r, "ridge", Metric::Correlation).at(0);
  const double t = seconds_since(start);
  return {err <= 0.01 && t < 900.0, fmt("Ridge eps(C) = %.5f on 2e4 test states (n = 1e4, exact labels), %.1f s", err, t)};
}

// 6 ----------------------------------------------------------------------
Outcome ridge_vs_shadow(const Context& ctx) {
  ExperimentConfig c;
  c.family = Family::Heisenberg;
  c.nqubits = 8;
  c.n_grid = {100};
  c.m_grid = {128};
  c.n_test = 200;
  c.models = {"ridge"};
  c.repetitions = 5;
  c.seed = 6;
  c.threads = ctx.threads;
  c.cache_dir = ctx.work + "/gs_cache";
  const MetricsReport r = run_experiment(c);
  const double ridge = mean(column(r, "ridge", Metric::Correlation));
  const double cs = mean(column(r, "ridge", Metric::Correlation, true));
  return {ridge <= 0.5 * cs, fmt("5-seed mean eps(C): Ridge %.4f vs classical shadow %.4f (ratio %.3f)", ridge, cs,
                                 ridge / cs)};
}

// 7 ----------------------------------------------------------------------
Outcome scaling_law(const Context& ctx) {
  const std::vector<int> ns = {20, 40, 60, 80, 100};
  const std::vector<int> ms = {64, 128, 256, 512};
  std::ostringstream detail;
  bool ok = true;
  auto check = [&](const MetricsReport& r, const std::string& model, Metric metric, bool higher_is_better) {
    const auto cells = values_by_cell(r, model, metric);
    for (int m : ms) {
      std::vector<double> xs, ys;
      for (int n : ns) {
        xs.push_back(n);
        ys.push_back(mean(cells.at({m, n})));
      }
      const double rho = spearman(xs, ys);
      const bool improves = higher_is_better ? ys.back() > ys.front() : ys.back() < ys.front();
      const bool pass = improves && (higher_is_better ? rho >= 0.6 : rho <= -0.6);
      ok = ok && pass;
      detail << ' ' << model << "@M=" << m << ": " << fmt("%.4f->%.4f rho=%.2f", ys.front(), ys.back(), rho)
             << (pass ? "" : " (x)") << ';';
    }
  };
  ExperimentConfig g;
  g.family = Family::Heisenberg;
  g.nqubits = 8;
  g.task = Task::Gspe;
  g.n_grid = ns;
  g.m_grid = ms;
  g.n_test = 200;
  g.models = {"ridge", "lasso"};
  g.repetitions = 5;
  g.seed = 7;
  g.threads = ctx.threads;
  g.cache_dir = ctx.work + "/gs_cache";
  const MetricsReport gr = run_experiment(g);
  check(gr, "ridge", Metric::Correlation, false);
  check(gr, "lasso", Metric::Correlation, false);

  ExperimentConfig q;
  q.family = Family::Rydberg;
  q.nqubits = 13;
  q.task = Task::Qpc;
  q.n_grid = ns;
  q.m_grid = ms;
  q.n_test = 400;
  q.models = {"rf"};
  q.repetitions = 5;
  q.seed = 70;
  q.threads = ctx.threads;
  q.cache_dir = ctx.work + "/gs_cache";
  const MetricsReport qr = run_experiment(q);
  check(qr, "rf", Metric::Accuracy, true);
  return {ok, detail.str()};
}

// 8 ----------------------------------------------------------------------
Outcome threshold_closure(const Context& ctx) {
  ExperimentConfig c;
  c.family = Family::Rydberg;
  c.nqubits = 13;
  c.task = Task::Qpc;
  c.n_grid = {200};
  c.n_test = 400;
  c.models = {"rf_scores"};
  c.repetitions = 1;
  c.seed = 70;
  c.threads = ctx.threads;
  c.cache_dir = ctx.work + "/gs_cache";
  c.noise_free = true;
  c.m_grid = {0};
  const double exact_acc = column(run_experiment(c), "rf_scores", Metric::Accuracy).at(0);
  c.noise_free = false;
  c.m_grid = {256};
  const double est_acc = column(run_experiment(c), "rf_scores", Metric::Accuracy).at(0);
  return {exact_acc == 1.0 && est_acc >= 0.9,
          fmt("forest on (s2, s3): exact scores %.4f, M=256 estimates %.4f (n = 200, 400 test states)", exact_acc,
              est_acc)};
}

// 9 ----------------------------------------------------------------------
Outcome randomization(const Context& ctx) {
  ExperimentConfig q;
  q.family = Family::Rydberg;
  q.nqubits = 13;
  q.task = Task::Qpc;
  q.n_grid = {100};
  q.m_grid = {256};
  q.n_test = 400;
  q.models = {"rf_a", "rf_a_rand"};
  q.repetitions = 5;
  q.seed = 70;
  q.threads = ctx.threads;
  q.cache_dir = ctx.work + "/gs_cache";
  const MetricsReport qr = run_experiment(q);
  const double real = mean(column(qr, "rf_a", Metric::Accuracy));
  const double rand = mean(column(qr, "rf_a_rand", Metric::Accuracy));

  ExperimentConfig g;
  g.family = Family::Heisenberg;
  g.nqubits = 8;
  g.task = Task::Gspe;
  g.n_grid = {100};
  g.m_grid = {128};
  g.n_test = 200;
  g.models = {"ridge", "ridge_a_rand"};
  g.repetitions = 5;
  g.seed = 6;
  g.threads = ctx.threads;
  g.cache_dir = ctx.work + "/gs_cache";
  const MetricsReport gr = run_experiment(g);
  const auto plain = column(gr, "ridge", Metric::Correlation);
  const auto noisy = column(gr, "ridge_a_rand", Metric::Correlation);
  const double pooled = std::sqrt(0.5 * (sample_var(plain) + sample_var(noisy)));
  const bool qpc_ok = real - rand >= 0.02;
  const bool gspe_ok = mean(noisy) >= mean(plain) - pooled;
  return {qpc_ok && gspe_ok,
          fmt("QPC forest accuracy real %.4f vs randomized %.4f (gap %.1f points); GSPE eps(C) Ridge %.4f vs "
              "Ridge+random shadows %.4f (pooled std %.4f)",
              real, rand, 100.0 * (real - rand), mean(plain), mean(noisy), pooled)};
}

// 10 ---------------------------------------------------------------------
Outcome budget_ledger(const Context&) {
  bool ok = true;
  std::vector<std::string> failed;
  auto expect = [&](bool cond, const char* what) {
    if (!cond) {
      ok = false;
      failed.emplace_back(what);
    }
  };
  ResourceBudget b;
  b.total_shots = 6400;
  b.allocate("train", 100, 64);
  BudgetReport rep = validate_budget(b);
  expect(rep.ok && rep.spent == 6400, "cap 6400 with (100,64) is ok");
  b.allocations.push_back({"extra", 1, 1});
  rep = validate_budget(b);
  expect(!rep.ok && rep.overage == 1, "overage of one shot is reported");
  ResourceBudget empty;
  rep = validate_budget(empty);
  expect(rep.ok && rep.spent == 0, "empty ledger is ok");
  expect(ssl_split_check(0, 0, 100, 64, 100, 64).ok, "trivial split");
  const SplitCheck off = ssl_split_check(1, 1, 0, 0, 1, 2);
  expect(!off.ok && off.difference == -1, "mismatch by one");
  expect(ssl_split_check(100, 1024, 100, 512, 100, 1536).ok, "pre-training plus fine-tuning split");
  try {
    ResourceBudget capped;
    capped.total_shots = 10;
    capped.allocate("train", 11, 1);
    expect(false, "allocation beyond the cap throws");
  } catch (const BudgetError&) {
  }
  const Usd forte = estimate_cost(find_rate(builtin_rates(), "IonQ-Forte"), 10'000'000);
  expect(forte.units == 800'000LL * Usd::kUnitsPerDollar, "1e7 shots at 0.08 USD");
  const Usd aquila = estimate_cost(find_rate(builtin_rates(), "QuEra-Aquila"), 6400);
  expect(aquila.units == 64LL * Usd::kUnitsPerDollar, "6400 shots at 0.01 USD");
  expect(estimate_cost(find_rate(builtin_rates(), "IonQ-Forte"), 0).units == 0, "zero shots cost nothing");
  const Walltime w = estimate_walltime(10'000'000, 1.0);
  expect(w.str().find("115.74 days") != std::string::npos, "walltime in days");
  std::string detail = fmt("IonQ-Forte 1e7 shots = %s USD; walltime %s", forte.str().c_str(), w.str().c_str());
  for (const auto& f : failed) detail += "; failed: " + f;
  return {ok, detail};
}

// 11 ---------------------------------------------------------------------
Outcome determinism(const Context& ctx) {
  const std::string config = ctx.work + "/determinism.json";
  {
    ExperimentConfig c;
    c.family = Family::Heisenberg;
    c.nqubits = 6;
    c.n_grid = {10, 20};
    c.m_grid = {16, 32};
    c.n_test = 40;
    c.models = {"ridge", "rbf", "ridge_a_rand"};
    c.repetitions = 2;
    c.seed = 11;
    write_file(config, c.to_json());
  }
  const std::string a = ctx.work + "/sweep_a.csv", b = ctx.work + "/sweep_b.csv";
  const std::string run_a = "\"" + ctx.qslbench + "\" --seed 11 --threads 1 --out \"" + a + "\" sweep --config \"" + config + "\"";
  const std::string run_b = "\"" + ctx.qslbench + "\" --seed 11 --threads 3 --out \"" + b + "\" sweep --config \"" + config + "\"";
  const int ra = std::system(run_a.c_str());
  const int rb = std::system(run_b.c_str());
  if (ra != 0 || rb != 0) return {false, fmt("sweep exited with %d / %d", ra, rb)};
  const std::string ca = read_file(a), cb = read_file(b);
  const auto lines = std::count(ca.begin(), ca.end(), '\n');
  return {!ca.empty() && ca == cb,
          fmt("two sweeps (1 and 3 worker threads): %ld CSV lines, %s", static_cast<long>(lines),
              ca == cb ? "byte-identical" : "DIFFERENT")};
}

// 12 ---------------------------------------------------------------------
Outcome mlp_gradient(const Context&) {
  double worst = 0.0;
  for (bool classification : {false, true}) {
    Mlp net = Mlp::init(5, 8, 3, 12);
    net.classification = classification;
    Rng rng = make_rng(120, {static_cast<std::uint64_t>(classification)});
    std::normal_distribution<double> g;
    Eigen::MatrixXd x(10, 5), y = Eigen::MatrixXd::Zero(10, 3), mask(8, 10);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = g(rng);
    for (Eigen::Index i = 0; i < 10; ++i) {
      if (classification) {
        y(i, i % 3) = 1.0;
      } else {
        for (Eigen::Index j = 0; j < 3; ++j) y(i, j) = g(rng);
      }
    }
    std::bernoulli_distribution keep(0.5);
    for (Eigen::Index i = 0; i < mask.size(); ++i) mask.data()[i] = keep(rng) ? 2.0 : 0.0;
    const double l2 = 1e-2;
    Eigen::VectorXd grad;
    mlp_loss_and_gradient(net, x, y, l2, &mask, &grad);
    const Eigen::VectorXd theta = net.flatten();
    std::uniform_int_distribution<Eigen::Index> pick(0, theta.size() - 1);
    for (int k = 0; k < 20; ++k) {
      const Eigen::Index c = pick(rng);
      const double h = 1e-5;
      Mlp plus = net, minus = net;
      Eigen::VectorXd tp = theta, tm = theta;
      tp[c] += h;
      tm[c] -= h;
      plus.unflatten(tp);
      minus.unflatten(tm);
      const double numeric = (mlp_loss_and_gradient(plus, x, y, l2, &mask, nullptr) -
                              mlp_loss_and_gradient(minus, x, y, l2, &mask, nullptr)) /
                             (2.0 * h);
      const double denom = std::max({std::abs(numeric), std::abs(grad[c]), 1e-8});
      worst = std::max(worst, std::abs(numeric - grad[c]) / denom);
    }
  }
  return {worst <= 1e-4, fmt("width-8 network, 20 coordinates x {regression, classification}: max relative "
                             "difference %.2e",
                             worst)};
}

}  // namespace

int main(int argc, char** argv) {
  Context ctx;
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--threads" && i + 1 < argc) {
      ctx.threads = std::max(1, std::atoi(argv[++i]));
    } else if (a == "--qslbench" && i + 1 < argc) {
      ctx.qslbench = argv[++i];
    } else if (a == "--work" && i + 1 < argc) {
      ctx.work = argv[++i];
    } else if (a == "--only" && i + 1 < argc) {
      std::stringstream s(argv[++i]);
      for (std::string tok; std::getline(s, tok, ',');) only.insert(std::stoi(tok));
    } else {
      std::cerr << "usage: qsl_acceptance [--threads N] [--qslbench PATH] [--work DIR] [--only 1,2,...]\n";
      return 64;
    }
  }
  if (ctx.work.empty()) ctx.work = (fs::temp_directory_path() / "qsl_acceptance").string();
  fs::create_directories(ctx.work);

  const std::vector<std::pair<const char*, Outcome (*)(const Context&)>> criteria = {
      {"Lanczos matches dense diagonalization", lanczos_vs_dense},
      {"shadow estimator is exactly unbiased", shadow_unbiased},
      {"shadow estimates concentrate", shadow_concentration},
      {"Renyi-2 entropy endpoints", entropy_endpoints},
      {"noise-free Ridge reaches eps(C) <= 0.01", noise_free_ridge},
      {"Ridge beats the shadow baseline by 2x", ridge_vs_shadow},
      {"test error improves with n", scaling_law},
      {"forest closes the phase thresholds", threshold_closure},
      {"measurement randomization direction", randomization},
      {"budget ledger and cost arithmetic", budget_ledger},
      {"sweep reports are byte-identical", determinism},
      {"MLP gradients match finite differences", mlp_gradient},
  };
  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k) + 1;
    if (!only.empty() && !only.count(id)) continue;
    if (id == 11 && ctx.qslbench.empty()) {
      std::cout << "FAIL 11 " << criteria[k].first << ": --qslbench not given\n";
      ++failures;
      continue;
    }
    const auto start = Clock::now();
    Outcome o;
    try {
      o = criteria[k].second(ctx);
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    std::cout << (o.pass ? "PASS " : "FAIL ") << id << ' ' << criteria[k].first << ": " << o.detail
              << fmt(" [%.1f s]", seconds_since(start)) << std::endl;
    failures += !o.pass;
  }
  return failures == 0 ? 0 : 1;
}
