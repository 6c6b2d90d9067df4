#include <gtest/gtest.h>

#include "cgpseg.hpp"
#include "oracles.hpp"

using namespace cgpseg;

namespace {

LabelMap from_rows(int w, int h, std::vector<std::uint32_t> raw) { return LabelMap::relabeled(w, h, raw); }

// Two predictions and two ground-truth instances on a 20x4 strip, with
// exactly one pair at IoU 0.6 and every other overlap below 0.5.
std::pair<LabelMap, LabelMap> one_good_pair() {
  std::vector<std::uint32_t> gt(80, 0), pred(80, 0);
  auto paint = [](std::vector<std::uint32_t>& m, int x0, int x1, std::uint32_t l) {
    for (int y = 0; y < 4; ++y)
      for (int x = x0; x <= x1; ++x) m[static_cast<std::size_t>(y) * 20 + x] = l;
  };
  paint(gt, 0, 4, 1);    // 20 px
  paint(pred, 0, 2, 1);  // 12 px inside gt 1: IoU 12/20 = 0.6
  paint(gt, 10, 14, 2);  // 20 px
  paint(pred, 13, 19, 2);  // overlap 8, union 40: IoU 0.2
  return {from_rows(20, 4, pred), from_rows(20, 4, gt)};
}

}  // namespace

TEST(Iou, Examples) {
  const auto a = oracle::rect_mask(4, 4, 0, 0, 1, 1), b = oracle::rect_mask(4, 4, 1, 0, 2, 1);
  EXPECT_DOUBLE_EQ(iou(a, b), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(iou(a, a), 1.0);
  EXPECT_DOUBLE_EQ(iou(Image2D(4, 4), Image2D(4, 4)), 1.0);
  EXPECT_DOUBLE_EQ(iou(a, Image2D(4, 4)), 0.0);
  EXPECT_THROW(iou(a, Image2D(3, 4)), Error);
}

TEST(Match, Identical) {
  Rng rng(1);
  const auto m = oracle::random_labels(rng, 24, 24, 6);
  const auto r = match_instances(m, m, 0.5);
  EXPECT_EQ(r.tp, m.count());
  EXPECT_EQ(r.fp, 0u);
  EXPECT_EQ(r.fn, 0u);
}

TEST(Match, EmptyPrediction) {
  const auto gt = from_rows(6, 1, {1, 0, 2, 0, 3, 3});
  const auto r = match_instances(LabelMap(6, 1), gt, 0.5);
  EXPECT_EQ(r.tp, 0u);
  EXPECT_EQ(r.fp, 0u);
  EXPECT_EQ(r.fn, 3u);
  EXPECT_DOUBLE_EQ(average_precision(LabelMap(6, 1), gt, 0.5), 0.0);
}

TEST(Match, OneGoodPair) {
  const auto [pred, gt] = one_good_pair();
  const auto r = match_instances(pred, gt, 0.5);
  EXPECT_EQ(r.tp, 1u);
  EXPECT_EQ(r.fp, 1u);
  EXPECT_EQ(r.fn, 1u);
  const auto o = oracle::optimal_matching(pred, gt, 0.5);
  EXPECT_EQ(o.tp, 1u);
  EXPECT_DOUBLE_EQ(average_precision(pred, gt, 0.5), 1.0 / 3.0);
}

TEST(Match, ThresholdIsStrict) {
  // IoU exactly 0.5 is not a match at t = 0.5
  const auto gt = from_rows(4, 1, {1, 1, 1, 1});
  const auto pred = from_rows(4, 1, {1, 1, 0, 0});
  EXPECT_EQ(match_instances(pred, gt, 0.5).tp, 0u);
  EXPECT_EQ(match_instances(pred, gt, 0.49).tp, 1u);
}

TEST(AveragePrecision, Identities) {
  Rng rng(2);
  EXPECT_DOUBLE_EQ(average_precision(LabelMap(5, 5), LabelMap(5, 5), 0.5), 1.0);
  for (int i = 0; i < 50; ++i) {
    const auto m = oracle::random_labels(rng, 16, 16, 6);
    EXPECT_DOUBLE_EQ(average_precision(m, m, 0.5), 1.0);
    EXPECT_DOUBLE_EQ(iou(m.mask(), m.mask()), 1.0);
  }
}

TEST(AveragePrecision, MonotoneInThreshold) {
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    const auto gt = oracle::random_labels(rng, 24, 24, 6);
    const auto pred = oracle::jitter(gt, rng, 0.3);
    double prev = 2.0;
    for (int k = 0; k < 10; ++k) {
      const double ap = average_precision(pred, gt, 0.05 + 0.1 * k);
      ASSERT_LE(ap, prev);
      prev = ap;
    }
  }
}

TEST(AveragePrecision, GreedyEqualsOptimalAtHalf) {
  Rng rng(4);
  for (int i = 0; i < 300; ++i) {
    const auto gt = oracle::random_labels(rng, 20, 20, 6);
    const auto pred = rng.bernoulli(0.5) ? oracle::jitter(gt, rng, 0.4) : oracle::random_labels(rng, 20, 20, 6);
    ASSERT_DOUBLE_EQ(average_precision(pred, gt, 0.5), oracle::ap_from(oracle::optimal_matching(pred, gt, 0.5)));
  }
}

TEST(OverlappingPairs, IouAgreesWithMaskIou) {
  Rng rng(5);
  const auto gt = oracle::random_labels(rng, 20, 20, 6);
  const auto pred = oracle::jitter(gt, rng, 0.3);
  for (const auto& p : overlapping_pairs(pred, gt)) {
    std::vector<bool> a(pred.size()), b(gt.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      a[i] = pred.data()[i] == p.pred;
      b[i] = gt.data()[i] == p.gt;
    }
    EXPECT_DOUBLE_EQ(p.iou, oracle::mask_iou(a, b));
  }
}

TEST(Fitness, Examples) {
  const auto& lib = default_library();
  Genotype g = Genotype::shaped_for(lib, 1, 2, 1);
  for (int r = 0; r < 2; ++r) g.gene(r, 0) = lib.find("Not")->id, g.gene(r, 1) = g.gene(r, 2) = 1;
  g.set_output(0, 1);
  PipelineModel m;
  m.genotype = g;
  m.library_id = lib.id();
  m.library_hash = lib.hash();
  m.endpoint = EndpointSpec::make(EndpointKind::connected_components);

  // an identity pipeline over the annotation mask reproduces it exactly
  Dataset ds;
  for (int i = 0; i < 3; ++i) {
    const auto gt = connected_components(oracle::rect_mask(16, 16, i, i, i + 5, i + 3));
    ds.entries.push_back({"e" + std::to_string(i), InputVector(Channels{gt.mask()}), gt});
  }
  EXPECT_DOUBLE_EQ(fitness(m, ds, FitnessSpec::ap(), lib), 0.0);

  // a perfect and a hopeless entry average to 0.5
  Dataset half;
  half.entries.push_back(ds.entries[0]);
  half.entries.push_back({"miss", InputVector(Channels{Image2D(16, 16)}), ds.entries[1].annotation});
  EXPECT_DOUBLE_EQ(fitness(m, half, FitnessSpec::ap(), lib), 0.5);

  // AP 1/3 on a single entry gives error 2/3
  const auto [pred, gt] = one_good_pair();
  Dataset third;
  third.entries.push_back({"third", InputVector(Channels{pred.mask()}), gt});
  // the prediction's two instances are separate components of its mask
  EXPECT_NEAR(fitness(m, third, FitnessSpec::ap(), lib), 2.0 / 3.0, 1e-15);

  EXPECT_THROW(fitness(m, Dataset{}, FitnessSpec::ap(), lib), Error);
}

TEST(Fitness, SpecJson) {
  EXPECT_EQ(fitness_from_json(to_json(FitnessSpec::iou())), FitnessSpec::iou());
  EXPECT_EQ(fitness_from_json(to_json(FitnessSpec::ap(0.7))), FitnessSpec::ap(0.7));
  EXPECT_THROW(fitness_from_json({{"metric", "dice"}}), Error);
}
