#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "cgpseg/dataset.hpp"
#include "cgpseg/endpoints.hpp"
#include "cgpseg/error.hpp"
#include "cgpseg/evaluation.hpp"
#include "cgpseg/genotype.hpp"
#include "cgpseg/graph.hpp"
#include "cgpseg/library.hpp"
#include "cgpseg/metrics.hpp"
#include "cgpseg/model.hpp"
#include "cgpseg/parallel.hpp"
#include "cgpseg/rng.hpp"

namespace cgpseg {

enum class Frugality { node_count, measured_time };

inline const char* to_string(Frugality f) { return f == Frugality::node_count ? "node-count" : "measured-time"; }

struct EvolutionConfig {
  int eta = 30;             // functional nodes
  int lambda = 5;           // offspring per generation
  double mu = 0.15;         // functional mutation rate
  double nu = 0.2;          // per-output mutation probability
  int K = 20000;            // generations
  std::uint64_t seed = 0;
  Frugality frugality = Frugality::node_count;
  FitnessSpec fitness;
  int workers = 1;          // concurrent child evaluations
  int max_rounds = 1000;    // accumulate-mutation cap

  void check() const {
    if (eta < 1) throw Error(ErrorKind::config, "eta must be >= 1");
    if (lambda < 1) throw Error(ErrorKind::config, "lambda must be >= 1");
    if (K < 1) throw Error(ErrorKind::config, "K must be >= 1");
    if (!(mu >= 0.0 && mu <= 1.0)) throw Error(ErrorKind::config, "mu must lie in [0, 1]");
    if (!(nu >= 0.0 && nu <= 1.0)) throw Error(ErrorKind::config, "nu must lie in [0, 1]");
    if (max_rounds < 1) throw Error(ErrorKind::config, "max_rounds must be >= 1");
    if (!(fitness.iou_threshold >= 0.0 && fitness.iou_threshold < 1.0))
      throw Error(ErrorKind::config, "iou_threshold must lie in [0, 1)");
  }
};

inline nlohmann::json to_json(const EvolutionConfig& c) {
  return {{"eta", c.eta}, {"lambda", c.lambda}, {"mu", c.mu}, {"nu", c.nu}, {"K", c.K}, {"seed", c.seed},
          {"frugality", to_string(c.frugality)}, {"fitness", to_json(c.fitness)}};
}

/// Reads the keys present in `j` over `base`; unknown keys are rejected so
/// typos do not silently fall back to defaults.
inline EvolutionConfig evolution_config_from_json(const nlohmann::json& j, EvolutionConfig base = {}) {
  static const char* known[] = {"eta", "lambda", "mu", "nu", "K", "seed", "frugality", "fitness", "max_rounds"};
  try {
    for (const auto& [key, value] : j.items()) {
      if (std::find_if(std::begin(known), std::end(known), [&](const char* k) { return key == k; }) == std::end(known))
        throw Error(ErrorKind::config, "unknown evolution key '" + key + "'");
    }
    base.eta = j.value("eta", base.eta);
    base.lambda = j.value("lambda", base.lambda);
    base.mu = j.value("mu", base.mu);
    base.nu = j.value("nu", base.nu);
    base.K = j.value("K", base.K);
    base.seed = j.value("seed", base.seed);
    base.max_rounds = j.value("max_rounds", base.max_rounds);
    if (j.contains("frugality")) {
      const auto f = j["frugality"].get<std::string>();
      if (f == "node-count") base.frugality = Frugality::node_count;
      else if (f == "measured-time") base.frugality = Frugality::measured_time;
      else throw Error(ErrorKind::config, "unknown frugality mode '" + f + "'");
    }
    if (j.contains("fitness")) base.fitness = fitness_from_json(j["fitness"]);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::config, std::string("malformed evolution config: ") + e.what());
  }
  base.check();
  return base;
}

// ----------------------------------------------------------------- variation

/// Every gene uniform within its legal range.
inline Genotype random_genotype(int inputs, int outputs, const EvolutionConfig& config, const FunctionLibrary& lib, Rng& rng) {
  Genotype g = Genotype::shaped_for(lib, inputs, config.eta, outputs);
  const int phi = static_cast<int>(lib.size());
  for (int r = 0; r < g.nodes; ++r)
    for (int c = 0; c < g.columns(); ++c) {
      const auto range = g.functional_range(r, c, phi);
      g.gene(r, c) = static_cast<int>(rng.uniform_int(range.lo, range.hi));
    }
  const auto out = g.output_range();
  for (int k = 0; k < g.outputs; ++k) g.set_output(k, static_cast<int>(rng.uniform_int(out.lo, out.hi)));
  return g;
}

/// Functional cells per round: round-half-up of mu * eta * columns. The
/// epsilon keeps products such as 0.15 * 30 * 5 = 22.4999... on the half.
inline int mutations_per_round(double mu, const Genotype& g) {
  return static_cast<int>(std::floor(mu * g.functional_genes() + 0.5 + 1e-9));
}

namespace detail {

// New value in [lo, hi] different from `current` when the range allows it.
inline int resample(Rng& rng, Genotype::Range range, int current) {
  if (range.hi <= range.lo) return range.lo;
  int v = static_cast<int>(rng.uniform_int(range.lo, range.hi - 1));
  if (v >= current) ++v;
  return v;
}

}  // namespace detail

/// One accumulate round applied in place. Returns the flat indices of the
/// functional cells that were drawn (distinct, without replacement).
inline std::vector<int> mutation_round(Genotype& g, double mu, double nu, const FunctionLibrary& lib, Rng& rng) {
  const int phi = static_cast<int>(lib.size());
  const int n = g.functional_genes();
  const int count = std::min(n, mutations_per_round(mu, g));
  std::vector<int> cells(static_cast<std::size_t>(n));
  std::iota(cells.begin(), cells.end(), 0);
  for (int i = 0; i < count; ++i) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(i, n - 1));
    std::swap(cells[static_cast<std::size_t>(i)], cells[j]);
    const int row = cells[static_cast<std::size_t>(i)] / g.columns();
    const int col = cells[static_cast<std::size_t>(i)] % g.columns();
    g.gene(row, col) = detail::resample(rng, g.functional_range(row, col, phi), g.gene(row, col));
  }
  cells.resize(static_cast<std::size_t>(count));
  for (int k = 0; k < g.outputs; ++k)
    if (rng.bernoulli(nu)) g.set_output(k, detail::resample(rng, g.output_range(), g.output(k)));
  return cells;
}

/// Accumulate mutation: rounds repeat until the decoded graph changes.
inline Genotype mutate(const Genotype& parent, const EvolutionConfig& config, const FunctionLibrary& lib, Rng& rng) {
  const ActiveGraph before = decode(parent, lib);
  Genotype child = parent;
  for (int round = 0; round < config.max_rounds; ++round) {
    mutation_round(child, config.mu, config.nu, lib, rng);
    if (decode(child, lib) != before) return child;
  }
  throw Error(ErrorKind::mutation_cap, "active graph unchanged after " + std::to_string(config.max_rounds) +
                                           " mutation rounds (mu and nu too small?)");
}

// ----------------------------------------------------------------- selection

struct ScoredGenotype {
  Genotype genotype;
  double error = 1.0;
  double cost = 0.0;  // frugality measure: active nodes or median seconds
};

/// Index of the winner: -1 for the parent, else the child index. Lower
/// error, then lower cost; full ties go to the first tied child.
inline int select(const ScoredGenotype& parent, std::span<const ScoredGenotype> children) {
  int best = -1;
  const ScoredGenotype* incumbent = &parent;
  for (std::size_t i = 0; i < children.size(); ++i) {
    const auto& c = children[i];
    const bool better = c.error < incumbent->error || (c.error == incumbent->error && c.cost < incumbent->cost);
    const bool drift = best == -1 && c.error == parent.error && c.cost == parent.cost;
    if (better || drift) {
      best = static_cast<int>(i);
      incumbent = &c;
    }
  }
  return best;
}

// ----------------------------------------------------------------- evolution

struct GenerationRecord {
  int generation = 0;
  double error = 1.0;  // parent error after selection
  int active_nodes = 0;
  bool replaced = false;
};

struct EvolutionTrace {
  std::vector<GenerationRecord> records;
  Genotype best;

  void write_csv(std::ostream& out) const {
    out << "generation,error,active_nodes,replaced\n";
    char buf[64];
    for (const auto& r : records) {
      std::snprintf(buf, sizeof buf, "%.17g", r.error);
      out << r.generation << ',' << buf << ',' << r.active_nodes << ',' << (r.replaced ? 1 : 0) << '\n';
    }
  }
};

struct EvolutionResult {
  PipelineModel model;
  EvolutionTrace trace;
};

/// Optional per-generation hook (progress reporting).
using GenerationCallback = std::function<void(const GenerationRecord&)>;

inline EvolutionResult evolve(const Dataset& train, const EvolutionConfig& config, const FunctionLibrary& lib,
                              const PreprocessingSpec& preprocessing, const EndpointSpec& endpoint,
                              const GenerationCallback& on_generation = {}) {
  config.check();
  if (train.empty()) throw input_error("training dataset is empty");
  const int inputs = train.entries.front().input.channel_count();
  const int outputs = endpoint.required_outputs();
  const bool timed = config.frugality == Frugality::measured_time;

  auto score = [&](ScoredGenotype& s) {
    const ActiveGraph graph = decode(s.genotype, lib);
    const Evaluation ev = evaluate(graph, endpoint, train, config.fitness, lib, timed);
    s.error = ev.error;
    s.cost = timed ? ev.median_seconds : static_cast<double>(graph.active_count());
  };

  // Stream 0 seeds the initial population; stream i + 1 belongs to child i.
  Rng init = Rng::stream(config.seed, 0);
  std::vector<Rng> child_rng;
  for (int i = 0; i < config.lambda; ++i) child_rng.push_back(Rng::stream(config.seed, static_cast<std::uint64_t>(i) + 1));

  std::vector<ScoredGenotype> population(static_cast<std::size_t>(config.lambda) + 1);
  for (auto& s : population) s.genotype = random_genotype(inputs, outputs, config, lib, init);
  parallel_for(population.size(), config.workers, [&](std::size_t i) { score(population[i]); });
  const int first = select(population.front(), std::span(population).subspan(1));
  ScoredGenotype parent = population[static_cast<std::size_t>(first + 1)];

  EvolutionTrace trace;
  auto record = [&](int generation, bool replaced) {
    GenerationRecord r{generation, parent.error, decode(parent.genotype, lib).active_count(), replaced};
    trace.records.push_back(r);
    if (on_generation) on_generation(r);
  };
  record(0, false);

  int generation = 0;
  std::vector<ScoredGenotype> children(static_cast<std::size_t>(config.lambda));
  while (generation < config.K && parent.error > 0.0) {
    ++generation;
    for (std::size_t i = 0; i < children.size(); ++i) children[i].genotype = mutate(parent.genotype, config, lib, child_rng[i]);
    parallel_for(children.size(), config.workers, [&](std::size_t i) { score(children[i]); });
    const int winner = select(parent, children);
    if (winner >= 0) parent = children[static_cast<std::size_t>(winner)];
    record(generation, winner >= 0);
  }

  trace.best = parent.genotype;
  PipelineModel model;
  model.genotype = parent.genotype;
  model.library_id = lib.id();
  model.library_hash = lib.hash();
  model.preprocessing = preprocessing;
  model.endpoint = endpoint;
  model.fitness = config.fitness;
  model.provenance.seed = config.seed;
  model.provenance.generations = generation;
  model.provenance.train_error = parent.error;
  return {std::move(model), std::move(trace)};
}

}  // namespace cgpseg
