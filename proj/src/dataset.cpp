#include "qsl/dataset.hpp"

#include <algorithm>
#include <iostream>
#include <mutex>

#include "json.hpp"
#include "qsl/binary_io.hpp"
#include "qsl/shadows.hpp"

namespace qsl {

namespace {

constexpr std::uint32_t kPayloadMagic = 0x53445351;  // "QSDS"
constexpr std::uint32_t kPayloadVersion = 1;
constexpr int kMaxRetries = 3;

std::mutex log_mutex;

void log_line(const std::string& s) {
  std::lock_guard lock(log_mutex);
  std::cerr << s << '\n';
}

void write_labels(ByteWriter& w, const Labels& l) {
  w.put_span(std::span<const double>(l.correlations));
  w.put_span(std::span<const double>(l.renyi));
  w.put(l.s2);
  w.put(l.s3);
  w.put<std::int32_t>(l.phase);
}

Labels read_labels(ByteReader& r) {
  Labels l;
  l.correlations = r.get_vector<double>();
  l.renyi = r.get_vector<double>();
  l.s2 = r.get<double>();
  l.s3 = r.get<double>();
  l.phase = r.get<std::int32_t>();
  return l;
}

std::vector<std::uint8_t> pack_bits(int n, const std::vector<std::uint8_t>& bits) {
  return BitstringSet(n, bits).packed();
}

nlohmann::ordered_json family_json(Family f) { return std::string(to_string(f)); }

}  // namespace

std::string_view to_string(Task t) noexcept { return t == Task::Gspe ? "gspe" : "qpc"; }

Task parse_task(std::string_view name) {
  if (name == "gspe" || name == "GSPE") return Task::Gspe;
  if (name == "qpc" || name == "QPC") return Task::Qpc;
  throw std::invalid_argument("unknown task '" + std::string(name) + "'");
}

std::string_view to_string(Payload p) noexcept {
  switch (p) {
    case Payload::None: return "none";
    case Payload::Shadow: return "shadow";
    case Payload::Bits: return "bits";
  }
  return "?";
}

Payload payload_for(Task task) noexcept { return task == Task::Gspe ? Payload::Shadow : Payload::Bits; }

SolvedInstance solve_instance(const GenerateConfig& c, int split, int index, const GroundStateCache* cache) {
  std::string last_error;
  for (int attempt = 0; attempt <= kMaxRetries; ++attempt) {
    Instance inst;
    inst.seed = derive_seed(c.seed, {static_cast<std::uint64_t>(split), static_cast<std::uint64_t>(index),
                                     static_cast<std::uint64_t>(attempt)});
    Rng rng(inst.seed);
    inst.params = sample_params(c.family, c.nqubits, rng);
    inst.x = feature_vector(inst.params);

    std::optional<GroundState> gs;
    std::uint64_t key = 0;
    if (cache) {
      key = GroundStateCache::key(params_to_json(inst.params), c.lanczos);
      gs = cache->load(key);
    }
    if (!gs) {
      try {
        Rng solver_rng = make_rng(inst.seed, {0});
        gs = ground_state(build_hamiltonian(inst.params), c.lanczos, solver_rng);
      } catch (const SolverError& e) {
        last_error = e.what();
        log_line("gen: instance " + std::to_string(split) + "/" + std::to_string(index) + " attempt " +
                 std::to_string(attempt) + " failed (" + last_error + "), resampling");
        continue;
      }
      if (cache) cache->store(key, *gs);
    }
    inst.exact = exact_labels(gs->state, c.task);
    if (c.noise_free) inst.estimated = inst.exact;
    return SolvedInstance{std::move(inst), std::move(gs->state)};
  }
  throw SolverError("instance " + std::to_string(split) + "/" + std::to_string(index) + " failed after " +
                        std::to_string(kMaxRetries) + " retries: " + last_error,
                    0.0);
}

void measure_instance(Instance& inst, const StateVector& state, Task task, int shots) {
  Rng meas = make_rng(inst.seed, {1});
  if (payload_for(task) == Payload::Shadow) {
    const ShadowSet s = sample_shadow(state, shots, meas);
    inst.measurements.assign(s.bytes().begin(), s.bytes().end());
  } else {
    const BitstringSet b = sample_zbasis(state, shots, meas);
    inst.measurements.assign(b.bits().begin(), b.bits().end());
  }
  inst.estimated = preprocess_labels(state.nqubits(), payload_for(task), inst.measurements);
}

Labels exact_labels(const StateVector& state, Task task) {
  Labels l;
  if (task == Task::Gspe) {
    l.correlations = exact_correlation(state).upper();
    l.renyi = exact_renyi2_adjacent(state);
  } else {
    const PhaseLabel p = exact_phase_label(state);
    l.s2 = p.s2;
    l.s3 = p.s3;
    l.phase = static_cast<int>(p.phase);
  }
  return l;
}

Labels preprocess_labels(int nqubits, Payload payload, const std::vector<std::uint8_t>& measurements) {
  Labels l;
  switch (payload) {
    case Payload::Shadow: {
      const ShadowSet s(nqubits, measurements);
      l.correlations = shadow_correlation(s).upper();
      l.renyi = shadow_renyi2_adjacent(s);
      break;
    }
    case Payload::Bits: {
      const PhaseLabel p = estimate_phase_scores(BitstringSet(nqubits, measurements));
      l.s2 = p.s2;
      l.s3 = p.s3;
      l.phase = static_cast<int>(p.phase);
      break;
    }
    case Payload::None: throw std::invalid_argument("preprocess_labels: dataset has no measurements");
  }
  return l;
}

Dataset generate_dataset(const GenerateConfig& c) {
  if (c.n_train < 1 || c.n_test < 0) throw std::invalid_argument("generate: need n >= 1 and n_te >= 0");
  if (!c.noise_free && c.shots < 1) throw std::invalid_argument("generate: M must be >= 1");
  if (c.task == Task::Qpc && c.family != Family::Rydberg) {
    throw std::invalid_argument("generate: phase classification is defined for the Rydberg family");
  }

  Dataset d;
  d.family = c.family;
  d.nqubits = c.nqubits;
  d.task = c.task;
  d.payload = c.noise_free ? Payload::None : payload_for(c.task);
  d.shots = c.noise_free ? 0 : c.shots;
  d.seed = c.seed;
  d.noise_free = c.noise_free;
  d.budget.total_shots = c.budget_cap.value_or(static_cast<std::int64_t>(c.n_train) * d.shots);
  d.budget.allocate("train", c.n_train, d.shots);
  d.n_train_drawn = c.n_train;

  std::optional<GroundStateCache> cache;
  if (c.cache_dir) cache.emplace(*c.cache_dir);

  const bool measure = !c.noise_free;
  const std::size_t total = static_cast<std::size_t>(c.n_train) + static_cast<std::size_t>(c.n_test);
  std::vector<Instance> all(total);
  parallel_for(total, c.threads, [&](std::size_t k) {
    const bool train = k < static_cast<std::size_t>(c.n_train);
    const int index = static_cast<int>(train ? k : k - static_cast<std::size_t>(c.n_train));
    SolvedInstance solved = solve_instance(c, train ? 0 : 1, index, cache ? &*cache : nullptr);
    if (measure && (train || c.test_measurements)) measure_instance(solved.instance, solved.state, c.task, c.shots);
    all[k] = std::move(solved.instance);
  });
  d.train.assign(std::make_move_iterator(all.begin()), std::make_move_iterator(all.begin() + c.n_train));
  d.test.assign(std::make_move_iterator(all.begin() + c.n_train), std::make_move_iterator(all.end()));
  if (measure && c.test_measurements) d.test_shots = static_cast<std::int64_t>(c.n_test) * c.shots;

  if (c.task == Task::Qpc && c.rebalance) {
    Rng rng = make_rng(c.seed, {2});
    rebalance_training(d, rng);
  }
  return d;
}

void rebalance_training(Dataset& d, Rng& rng) {
  std::vector<std::vector<std::size_t>> by_class(3);
  for (std::size_t i = 0; i < d.train.size(); ++i) {
    by_class.at(static_cast<std::size_t>(d.train[i].estimated.phase)).push_back(i);
  }
  std::size_t target = 0;
  for (const auto& c : by_class) target = std::max(target, c.size());
  std::vector<Instance> extra;
  for (const auto& members : by_class) {
    if (members.empty()) continue;
    std::uniform_int_distribution<std::size_t> pick(0, members.size() - 1);
    for (std::size_t k = members.size(); k < target; ++k) extra.push_back(d.train[members[pick(rng)]]);
  }
  for (auto& e : extra) d.train.push_back(std::move(e));
}

RandomizeMode parse_randomize_mode(std::string_view name) {
  if (name == "shadow6") return RandomizeMode::Shadow6;
  if (name == "bit2") return RandomizeMode::Bit2;
  throw std::invalid_argument("unknown randomization mode '" + std::string(name) + "'");
}

void randomize_measurements(Dataset& d, RandomizeMode mode, Rng& rng) {
  const Payload expected = mode == RandomizeMode::Shadow6 ? Payload::Shadow : Payload::Bits;
  if (d.payload != expected) {
    throw std::invalid_argument("randomize: mode does not match the dataset's " +
                                std::string(to_string(d.payload)) + " payload");
  }
  std::uniform_int_distribution<int> draw(0, mode == RandomizeMode::Shadow6 ? 5 : 1);
  for (auto* split : {&d.train, &d.test}) {
    for (auto& inst : *split) {
      for (auto& b : inst.measurements) b = static_cast<std::uint8_t>(draw(rng));
    }
  }
}

std::string dataset_payload(const Dataset& d) {
  ByteWriter w;
  w.put(kPayloadMagic);
  w.put(kPayloadVersion);
  w.put(static_cast<std::uint8_t>(d.payload));
  w.put<std::int32_t>(d.nqubits);
  w.put<std::int32_t>(d.shots);
  for (const auto* split : {&d.train, &d.test}) {
    w.put<std::uint64_t>(split->size());
    for (const auto& inst : *split) {
      w.put(inst.seed);
      w.put_string(params_to_json(inst.params));
      w.put_span(std::span<const double>(inst.x));
      write_labels(w, inst.exact);
      write_labels(w, inst.estimated);
      if (d.payload == Payload::Bits && !inst.measurements.empty()) {
        w.put_span(std::span<const std::uint8_t>(pack_bits(d.nqubits, inst.measurements)));
      } else {
        w.put_span(std::span<const std::uint8_t>(inst.measurements));
      }
    }
  }
  return w.take();
}

std::string dataset_manifest(const Dataset& d) {
  const std::string payload = dataset_payload(d);
  nlohmann::ordered_json j;
  j["format"] = "qsl-dataset";
  j["version"] = kPayloadVersion;
  j["family"] = family_json(d.family);
  j["N"] = d.nqubits;
  j["task"] = std::string(to_string(d.task));
  j["payload"] = std::string(to_string(d.payload));
  j["M"] = d.shots;
  j["n"] = d.n_train_drawn;
  j["n_train_rows"] = d.train.size();
  j["n_te"] = d.test.size();
  j["seed"] = d.seed;
  j["noise_free"] = d.noise_free;
  j["budget"] = nlohmann::ordered_json::parse(d.budget.to_json());
  j["test_shots"] = d.test_shots;
  j["payload_bytes"] = payload.size();
  j["payload_fnv1a"] = fnv1a(payload);
  return j.dump(2) + "\n";
}

void save_dataset(const Dataset& d, const std::string& stem) {
  write_file(stem + ".bin", dataset_payload(d));
  write_file(stem + ".json", dataset_manifest(d));
}

Dataset load_dataset(const std::string& stem) {
  const auto j = nlohmann::json::parse(read_file(stem + ".json"));
  if (j.at("format") != "qsl-dataset") throw std::runtime_error(stem + ".json is not a dataset manifest");
  const std::string payload = read_file(stem + ".bin");
  if (j.at("payload_fnv1a").get<std::uint64_t>() != fnv1a(payload)) {
    throw std::runtime_error(stem + ".bin does not match its manifest checksum");
  }

  Dataset d;
  d.family = parse_family(j.at("family").get<std::string>());
  d.nqubits = j.at("N").get<int>();
  d.task = parse_task(j.at("task").get<std::string>());
  d.shots = j.at("M").get<int>();
  d.seed = j.at("seed").get<std::uint64_t>();
  d.noise_free = j.at("noise_free").get<bool>();
  d.n_train_drawn = j.at("n").get<int>();
  d.test_shots = j.at("test_shots").get<std::int64_t>();
  const auto& b = j.at("budget");
  d.budget.total_shots = b.at("total_shots").get<std::int64_t>();
  for (const auto& a : b.at("allocations")) {
    d.budget.allocations.push_back(
        {a.at("purpose").get<std::string>(), a.at("n").get<std::int64_t>(), a.at("M").get<std::int64_t>()});
  }

  ByteReader r(payload);
  if (r.get<std::uint32_t>() != kPayloadMagic) throw std::runtime_error(stem + ".bin: bad magic");
  if (r.get<std::uint32_t>() != kPayloadVersion) throw std::runtime_error(stem + ".bin: unsupported version");
  const auto tag = r.get<std::uint8_t>();
  if (tag > 2) throw std::runtime_error(stem + ".bin: bad payload tag");
  d.payload = static_cast<Payload>(tag);
  if (r.get<std::int32_t>() != d.nqubits || r.get<std::int32_t>() != d.shots) {
    throw std::runtime_error(stem + ".bin: header disagrees with manifest");
  }
  for (auto* split : {&d.train, &d.test}) {
    const auto count = r.get<std::uint64_t>();
    for (std::uint64_t i = 0; i < count; ++i) {
      Instance inst;
      inst.seed = r.get<std::uint64_t>();
      inst.params = params_from_json(r.get_string());
      inst.x = r.get_vector<double>();
      inst.exact = read_labels(r);
      inst.estimated = read_labels(r);
      auto bytes = r.get_vector<std::uint8_t>();
      if (d.payload == Payload::Bits && !bytes.empty()) {
        const auto set = BitstringSet::from_packed(d.nqubits, static_cast<std::size_t>(d.shots), bytes);
        inst.measurements.assign(set.bits().begin(), set.bits().end());
      } else {
        inst.measurements = std::move(bytes);
      }
      split->push_back(std::move(inst));
    }
  }
  if (!r.done()) throw std::runtime_error(stem + ".bin: trailing bytes");
  return d;
}

}  // namespace qsl
