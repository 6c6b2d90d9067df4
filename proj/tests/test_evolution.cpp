#include <gtest/gtest.h>

#include <map>
#include <sstream>

#include "cgpseg.hpp"
#include "oracles.hpp"

using namespace cgpseg;

namespace {

const FunctionLibrary& lib() { return default_library(); }

// 20 nodes x 5 columns = 100 functional genes; two inputs so that every
// functional gene has at least two legal values.
Genotype hundred_gene_genotype(Rng& rng) {
  EvolutionConfig cfg;
  cfg.eta = 20;
  return random_genotype(2, 1, cfg, lib(), rng);
}

Dataset tiny_discs(int count, std::uint64_t seed, int size = 48) {
  DiscSpec spec;
  spec.width = spec.height = size;
  spec.min_discs = 1;
  spec.max_discs = 3;
  spec.min_radius = 4;
  spec.max_radius = 7;
  return make_disc_dataset(spec, count, seed);
}

// Input equals the annotation mask, so output-to-input-1 is a perfect pipeline.
Dataset self_annotating() {
  Dataset ds;
  ds.preprocessing = {PreprocessMode::gray, {}};
  for (int i = 0; i < 3; ++i) {
    const auto gt = connected_components(oracle::rect_mask(24, 24, 2 + i, 3, 10 + 2 * i, 12));
    ds.entries.push_back({"s" + std::to_string(i), InputVector(Channels{gt.mask()}), gt});
  }
  return ds;
}

}  // namespace

TEST(Mutation, CountPerRound) {
  Rng rng(1);
  auto g = hundred_gene_genotype(rng);
  ASSERT_EQ(g.functional_genes(), 100);
  EXPECT_EQ(mutations_per_round(0.1, g), 10);
  EXPECT_EQ(mutations_per_round(0.15, Genotype::shaped_for(lib(), 3, 30, 1)), 23);  // 22.5 rounds half up
  EXPECT_EQ(mutations_per_round(0.0, g), 0);
  for (int round = 0; round < 200; ++round) {
    const auto before = g;
    const auto cells = mutation_round(g, 0.1, 0.0, lib(), rng);
    ASSERT_EQ(cells.size(), 10u);
    ASSERT_EQ(std::set<int>(cells.begin(), cells.end()).size(), 10u);
    int changed = 0;
    for (int i = 0; i < g.functional_genes(); ++i) changed += g.matrix[static_cast<std::size_t>(i)] != before.matrix[static_cast<std::size_t>(i)];
    ASSERT_EQ(changed, 10);
    ASSERT_TRUE(is_valid(g, lib()));
  }
}

TEST(Mutation, CellChoiceIsUniform) {
  Rng rng(2);
  auto g = hundred_gene_genotype(rng);
  std::vector<int> hits(100, 0);
  const int rounds = 5000;
  for (int r = 0; r < rounds; ++r)
    for (int c : mutation_round(g, 0.1, 0.0, lib(), rng)) ++hits[static_cast<std::size_t>(c)];
  const double expected = rounds * 10 / 100.0;
  double chi2 = 0.0;
  for (int h : hits) chi2 += (h - expected) * (h - expected) / expected;
  // 99 degrees of freedom; the 0.999 quantile is about 148
  EXPECT_LT(chi2, 148.0);
}

TEST(Mutation, ResampleIsUniformOverOtherValues) {
  Rng rng(3);
  std::map<int, int> hits;
  const int draws = 41000;
  for (int i = 0; i < draws; ++i) hits[detail::resample(rng, {1, 42}, 17)]++;
  EXPECT_EQ(hits.count(17), 0u);
  EXPECT_EQ(hits.size(), 41u);
  double chi2 = 0.0;
  for (const auto& [v, h] : hits) chi2 += (h - 1000.0) * (h - 1000.0) / 1000.0;
  EXPECT_LT(chi2, 73.4);  // 40 dof, 0.999 quantile
}

TEST(Mutation, AccumulateChangesActiveGraph) {
  Rng rng(4);
  EvolutionConfig cfg;
  for (int i = 0; i < 200; ++i) {
    const auto parent = random_genotype(3, 1, cfg, lib(), rng);
    const auto child = mutate(parent, cfg, lib(), rng);
    ASSERT_NE(decode(child, lib()), decode(parent, lib()));
    ASSERT_TRUE(is_valid(child, lib()));
  }
}

TEST(Mutation, ZeroRatesHitTheCap) {
  Rng rng(5);
  EvolutionConfig cfg;
  cfg.mu = 0.0;
  cfg.nu = 0.0;
  cfg.max_rounds = 50;
  const auto parent = random_genotype(1, 1, cfg, lib(), rng);
  try {
    mutate(parent, cfg, lib(), rng);
    FAIL() << "expected the round cap";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::mutation_cap);
  }
}

TEST(RandomGenotype, Deterministic) {
  EvolutionConfig cfg;
  Rng a(77), b(77);
  EXPECT_EQ(random_genotype(3, 2, cfg, lib(), a), random_genotype(3, 2, cfg, lib(), b));
}

TEST(Select, Rules) {
  const ScoredGenotype parent{{}, 0.3, 5};
  std::vector<ScoredGenotype> kids{{{}, 0.4, 1}, {{}, 0.2, 9}};
  EXPECT_EQ(select(parent, kids), 1);
  kids = {{{}, 0.3, 5}, {{}, 0.3, 3}};
  EXPECT_EQ(select(parent, kids), 1);  // equal error, fewer active nodes
  kids = {{{}, 0.3, 5}, {{}, 0.3, 5}};
  EXPECT_EQ(select(parent, kids), 0);  // full tie: first child
  kids = {{{}, 0.3, 6}, {{}, 0.5, 1}};
  EXPECT_EQ(select(parent, kids), -1);
}

TEST(Evolve, StopsAtZeroError) {
  EvolutionConfig cfg;
  cfg.eta = 5;
  cfg.K = 500;
  cfg.seed = 3;
  const auto res = evolve(self_annotating(), cfg, lib(), {PreprocessMode::gray, {}},
                          EndpointSpec::make(EndpointKind::connected_components));
  EXPECT_EQ(res.model.provenance.train_error, 0.0);
  EXPECT_LT(res.model.provenance.generations, cfg.K);
  EXPECT_EQ(res.trace.records.back().error, 0.0);
}

TEST(Evolve, ParentErrorNeverIncreases) {
  const auto train = tiny_discs(3, 10);
  for (std::uint64_t seed : {1, 2, 3}) {
    EvolutionConfig cfg;
    cfg.eta = 12;
    cfg.K = 40;
    cfg.seed = seed;
    const auto res = evolve(train, cfg, lib(), train.preprocessing, EndpointSpec::make(EndpointKind::connected_components));
    for (std::size_t i = 1; i < res.trace.records.size(); ++i)
      ASSERT_LE(res.trace.records[i].error, res.trace.records[i - 1].error);
    EXPECT_EQ(res.trace.records.back().error, res.model.provenance.train_error);
  }
}

TEST(Evolve, WorkerCountDoesNotChangeResult) {
  const auto train = tiny_discs(3, 11);
  EvolutionConfig cfg;
  cfg.eta = 12;
  cfg.K = 30;
  cfg.seed = 9;
  const auto endpoint = EndpointSpec::make(EndpointKind::local_max_watershed);
  const auto one = evolve(train, cfg, lib(), train.preprocessing, endpoint);
  cfg.workers = 4;
  const auto four = evolve(train, cfg, lib(), train.preprocessing, endpoint);
  EXPECT_EQ(one.model, four.model);
  std::ostringstream a, b;
  one.trace.write_csv(a);
  four.trace.write_csv(b);
  EXPECT_EQ(a.str(), b.str());
}

TEST(Evolve, TraceCsv) {
  EvolutionTrace t;
  t.records = {{0, 0.5, 3, false}, {1, 0.25, 2, true}};
  std::ostringstream out;
  t.write_csv(out);
  EXPECT_EQ(out.str(), "generation,error,active_nodes,replaced\n0,0.5,3,0\n1,0.25,2,1\n");
}

TEST(Config, JsonRoundTripAndValidation) {
  EvolutionConfig c;
  c.eta = 12;
  c.seed = 99;
  c.frugality = Frugality::measured_time;
  c.fitness = FitnessSpec::iou();
  const auto back = evolution_config_from_json(to_json(c));
  EXPECT_EQ(back.eta, 12);
  EXPECT_EQ(back.seed, 99u);
  EXPECT_EQ(back.frugality, Frugality::measured_time);
  EXPECT_EQ(back.fitness, FitnessSpec::iou());

  const EvolutionConfig defaults = evolution_config_from_json(nlohmann::json::object());
  EXPECT_EQ(defaults.eta, 30);
  EXPECT_EQ(defaults.lambda, 5);
  EXPECT_EQ(defaults.K, 20000);
  EXPECT_DOUBLE_EQ(defaults.mu, 0.15);
  EXPECT_DOUBLE_EQ(defaults.nu, 0.2);

  EXPECT_THROW(evolution_config_from_json({{"etaa", 3}}), Error);
  EXPECT_THROW(evolution_config_from_json({{"mu", 1.5}}), Error);
  EXPECT_THROW(evolution_config_from_json({{"lambda", 0}}), Error);
  EXPECT_THROW(evolution_config_from_json({{"frugality", "fast"}}), Error);
}
