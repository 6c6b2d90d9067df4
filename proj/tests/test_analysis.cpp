#include <gtest/gtest.h>

#include "cgpseg.hpp"
#include "oracles.hpp"

using namespace cgpseg;

namespace {

LabelMap labels_of(const std::vector<Image2D>& masks) {
  std::vector<std::uint32_t> raw(masks.at(0).size(), 0);
  for (std::size_t k = 0; k < masks.size(); ++k)
    for (std::size_t i = 0; i < raw.size(); ++i)
      if (masks[k].data[i]) raw[i] = static_cast<std::uint32_t>(k + 1);
  return LabelMap::relabeled(masks[0].width, masks[0].height, raw);
}

}  // namespace

TEST(Pairing, DisjointAndIdentical) {
  const auto a = labels_of({oracle::rect_mask(20, 20, 0, 0, 4, 4), oracle::rect_mask(20, 20, 10, 0, 14, 4)});
  const auto b = labels_of({oracle::rect_mask(20, 20, 0, 10, 4, 14)});
  const auto p = pair_instances(a, b);
  EXPECT_TRUE(p.pairs.empty());
  EXPECT_EQ(p.a_only, (std::vector<std::uint32_t>{1, 2}));
  EXPECT_EQ(p.b_only, (std::vector<std::uint32_t>{1}));
  const auto same = pair_instances(a, a);
  EXPECT_EQ(same.pairs.size(), 2u);
  EXPECT_TRUE(same.a_only.empty());
  EXPECT_TRUE(same.b_only.empty());
}

TEST(Pairing, BelowThresholdIsNotPaired) {
  // a single pixel inside a 5x5 block: IoU 1/25 = 0.04
  const auto a = labels_of({oracle::rect_mask(30, 10, 0, 0, 4, 4)});
  const auto b = labels_of({oracle::rect_mask(30, 10, 4, 4, 4, 4)});
  const auto p = pair_instances(a, b, 0.05);
  EXPECT_TRUE(p.pairs.empty());
  EXPECT_EQ(pair_instances(a, b, 0.03).pairs.size(), 1u);
}

TEST(Pairing, AgreesWithMetricMatching) {
  Rng rng(7);
  for (int i = 0; i < 200; ++i) {
    const auto a = oracle::random_labels(rng, 24, 24, 6);
    const auto b = oracle::jitter(a, rng, 0.3);
    const auto pairs = pair_instances(a, b, 0.5).pairs;
    const auto match = match_instances(a, b, 0.5);
    ASSERT_EQ(pairs.size(), match.tp);
  }
}

TEST(Features, Lengths) {
  Rng rng(8);
  const auto inst = oracle::disc_mask(16, 16, 8, 8, 4);
  for (auto [c, len] : {std::pair{1, 5}, std::pair{3, 17}, std::pair{4, 28}}) {
    std::vector<Image2D> ch;
    for (int k = 0; k < c; ++k) ch.push_back(oracle::random_image(rng, 16, 16));
    const std::vector<int> t(static_cast<std::size_t>(c), 128);
    const auto f = intensity_features(inst, ch, t);
    EXPECT_EQ(f.length(), static_cast<std::size_t>(len));
    EXPECT_EQ(f.flatten().size(), static_cast<std::size_t>(len));
  }
}

TEST(Features, CountersSumToArea) {
  Rng rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    const auto inst = oracle::disc_mask(24, 24, rng.uniform_int(5, 18), rng.uniform_int(5, 18), rng.uniform_int(1, 6));
    std::size_t area = 0;
    for (auto v : inst.data) area += v != 0;
    std::vector<Image2D> ch;
    for (int k = 0; k < 3; ++k) ch.push_back(oracle::random_image(rng, 24, 24));
    const auto f = intensity_features(inst, ch, otsu_thresholds(ch));
    std::size_t sum = 0;
    for (auto c : f.combinations) sum += c;
    ASSERT_EQ(sum, area);
  }
}

TEST(Features, AllNegativeInstance) {
  Image2D inst(10, 1, 255);
  const std::vector<Image2D> ch{Image2D(10, 1, std::vector<std::uint8_t>{1, 2, 3, 4, 5, 6, 7, 8, 9, 10}), Image2D(10, 1, 3)};
  const std::vector<int> t{50, 50};
  const auto f = intensity_features(inst, ch, t);
  EXPECT_EQ(f.combinations[0], 10u);
  for (std::size_t k = 1; k < f.combinations.size(); ++k) EXPECT_EQ(f.combinations[k], 0u);
  EXPECT_EQ(f.channels[0].positive, 0u);
  EXPECT_DOUBLE_EQ(f.channels[0].sum, 55.0);
  EXPECT_DOUBLE_EQ(f.channels[0].mean, 5.5);
  EXPECT_DOUBLE_EQ(f.channels[1].sum, 30.0);
  EXPECT_DOUBLE_EQ(f.channels[1].mean, 3.0);
}

TEST(Features, PatternBits) {
  Image2D inst(1, 1, 255);
  const std::vector<Image2D> ch{Image2D(1, 1, 200), Image2D(1, 1, 10), Image2D(1, 1, 90)};
  const std::vector<int> t{100, 100, 80};
  const auto f = intensity_features(inst, ch, t);
  EXPECT_EQ(f.combinations[0b101], 1u);
  EXPECT_THROW(intensity_features(inst, std::vector<Image2D>{}, std::vector<int>{}), Error);
}

TEST(Features, PerInstance) {
  const auto labels = labels_of({oracle::rect_mask(12, 12, 0, 0, 2, 2), oracle::rect_mask(12, 12, 6, 6, 9, 9)});
  const std::vector<Image2D> ch{oracle::rect_mask(12, 12, 6, 6, 11, 11)};
  const auto f = instance_features(labels, ch);
  ASSERT_EQ(f.size(), 2u);
  EXPECT_EQ(f[0].combinations[0], 9u);
  EXPECT_EQ(f[1].combinations[1], 16u);
}

TEST(AreaFilter, StrictBounds) {
  // 350 = 14 x 25, 351 = 13 x 27
  const auto small = oracle::rect_mask(100, 100, 0, 0, 13, 24);
  const auto big = oracle::rect_mask(100, 100, 40, 40, 52, 66);
  const auto labels = labels_of({small, big});
  ASSERT_EQ(labels.areas()[1], 350u);
  ASSERT_EQ(labels.areas()[2], 351u);
  const auto kept = area_filter(labels, 350, 6000);
  ASSERT_EQ(kept.count(), 1u);
  EXPECT_EQ(kept.mask(1), big);
  EXPECT_EQ(area_filter(LabelMap(8, 8), 350, 6000), LabelMap(8, 8));
  EXPECT_EQ(area_filter(labels, 350, 351).count(), 0u);
  EXPECT_THROW(area_filter(labels, 10, 10), Error);
}

TEST(Conjugates, DistanceGate) {
  const auto ctl = labels_of({oracle::rect_mask(200, 40, 10, 10, 19, 19)});
  const auto target = labels_of({oracle::rect_mask(200, 40, 90, 10, 99, 19)});  // centroids 80 px apart
  EXPECT_TRUE(detect_conjugates(ctl, target).empty());
}

TEST(Conjugates, OnePixelGapTouchesAfterDilation) {
  // squares 19 px wide with a 1 px gap: centroids 20 px apart
  const auto ctl = labels_of({oracle::rect_mask(80, 40, 10, 10, 28, 28)});
  const auto target = labels_of({oracle::rect_mask(80, 40, 30, 10, 48, 28)});
  const auto c = centroids(ctl), t = centroids(target);
  ASSERT_DOUBLE_EQ(std::hypot(c[1].x - t[1].x, c[1].y - t[1].y), 20.0);
  const auto pairs = detect_conjugates(ctl, target);
  ASSERT_EQ(pairs.size(), 1u);
  EXPECT_EQ(pairs[0], (std::pair<std::uint32_t, std::uint32_t>{1, 1}));
}

TEST(Conjugates, FivePixelGapDoesNot) {
  const auto ctl = labels_of({oracle::rect_mask(80, 40, 10, 10, 24, 24)});
  const auto target = labels_of({oracle::rect_mask(80, 40, 30, 10, 44, 24)});
  EXPECT_TRUE(detect_conjugates(ctl, target).empty());
  // contact needs as many 1-px dilation steps as the gap is wide
  ConjugateOptions wide;
  wide.dilation_iterations = 4;
  EXPECT_TRUE(detect_conjugates(ctl, target, wide).empty());
  wide.dilation_iterations = 5;
  EXPECT_EQ(detect_conjugates(ctl, target, wide).size(), 1u);
}
