#include <gtest/gtest.h>

#include "cgpseg.hpp"
#include "oracles.hpp"

using namespace cgpseg;

namespace {

std::set<std::uint32_t> labels_in(const LabelMap& m, const Image2D& region) {
  std::set<std::uint32_t> s;
  for (std::size_t i = 0; i < m.size(); ++i)
    if (region.data[i]) s.insert(m.data()[i]);
  return s;
}

// Two discs joined by a thin bar: the classic watershed dumbbell.
Image2D dumbbell(int w, int h, int r, int gap, int neck) {
  const int cy = h / 2, left = w / 2 - gap / 2 - r, right = w / 2 + gap / 2 + r;
  Image2D m(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const bool l = (x - left) * (x - left) + (y - cy) * (y - cy) <= r * r;
      const bool rr = (x - right) * (x - right) + (y - cy) * (y - cy) <= r * r;
      const bool bar = x >= left && x <= right && std::abs(y - cy) <= neck / 2;
      if (l || rr || bar) m.at(x, y) = 255;
    }
  return m;
}

}  // namespace

TEST(Threshold, Examples) {
  Image2D z(2, 1, std::vector<std::uint8_t>{200, 1});
  EXPECT_EQ(threshold_endpoint(z, ThresholdMode::to_zero, 1), Image2D(2, 1, std::vector<std::uint8_t>{200, 0}));
  EXPECT_EQ(threshold_endpoint(z, ThresholdMode::binary, 1), Image2D(2, 1, std::vector<std::uint8_t>{255, 0}));
  for (auto mode : {ThresholdMode::binary, ThresholdMode::to_zero})
    EXPECT_EQ(threshold_endpoint(Image2D(5, 5), mode, 1), Image2D(5, 5));
}

TEST(ConnectedComponents, Examples) {
  Image2D two(8, 4);
  two.at(1, 1) = two.at(2, 1) = 255;
  two.at(6, 2) = 255;
  EXPECT_EQ(connected_components(two).count(), 2u);
  EXPECT_EQ(connected_components(Image2D(8, 4)).count(), 0u);
  Image2D diag(3, 3);
  diag.at(0, 0) = diag.at(1, 1) = 255;
  EXPECT_EQ(connected_components(diag).count(), 1u);
  EXPECT_EQ(connected_components(diag).data(), oracle::components8(diag));
}

TEST(MarkerWatershed, EmptyMarkers) {
  const auto mask = oracle::disc_mask(32, 32, 16, 16, 8);
  EXPECT_EQ(marker_controlled_watershed(mask, Image2D(32, 32)).count(), 0u);
}

TEST(MarkerWatershed, SingleMarkerFillsBlob) {
  const auto mask = oracle::disc_mask(32, 32, 16, 16, 8);
  Image2D markers(32, 32);
  markers.at(16, 16) = 255;
  const auto out = marker_controlled_watershed(mask, markers);
  ASSERT_EQ(out.count(), 1u);
  EXPECT_EQ(out.mask(), mask);
}

TEST(MarkerWatershed, DumbbellSplitsAtNeck) {
  const int w = 64, h = 32, r = 10, gap = 8;
  const auto mask = dumbbell(w, h, r, gap, 3);
  Image2D markers(w, h);
  const int left = w / 2 - gap / 2 - r, right = w / 2 + gap / 2 + r;
  markers.at(left, h / 2) = markers.at(right, h / 2) = 255;
  const auto out = marker_controlled_watershed(mask, markers);
  ASSERT_EQ(out.count(), 2u);
  EXPECT_EQ(out.mask(), mask) << "labels must partition the mask";
  // each lobe is owned by exactly one label, a different one per lobe
  const auto l = labels_in(out, oracle::disc_mask(w, h, left, h / 2, r - 1));
  const auto rr = labels_in(out, oracle::disc_mask(w, h, right, h / 2, r - 1));
  ASSERT_EQ(l.size(), 1u);
  ASSERT_EQ(rr.size(), 1u);
  EXPECT_NE(*l.begin(), *rr.begin());
  // the boundary falls on the bar, within two pixels of its middle
  int boundary = -1;
  for (int x = 1; x < w; ++x)
    if (out.at(x - 1, h / 2) != out.at(x, h / 2) && out.at(x - 1, h / 2) && out.at(x, h / 2)) boundary = x;
  EXPECT_NEAR(boundary, w / 2, 2);
}

TEST(LocalMaxWatershed, Examples) {
  const auto disc = oracle::disc_mask(48, 48, 24, 24, 12);
  const auto one = local_max_watershed(disc);
  ASSERT_EQ(one.count(), 1u);
  EXPECT_EQ(one.mask(), disc);
  EXPECT_EQ(local_max_watershed(Image2D(16, 16)).count(), 0u);

  Image2D two = oracle::disc_mask(80, 48, 26, 24, 14);
  const auto b = oracle::disc_mask(80, 48, 52, 24, 14);
  for (std::size_t i = 0; i < two.size(); ++i) two.data[i] |= b.data[i];
  const auto split = local_max_watershed(two);
  ASSERT_EQ(split.count(), 2u);
  EXPECT_EQ(split.mask(), two);
}

TEST(Hough, BlankImage) { EXPECT_EQ(hough_circle_endpoint(Image2D(40, 40), 5, 15, 0.4).count(), 0u); }

TEST(Hough, SingleCircleCentre) {
  for (auto [cx, cy, r] : {std::tuple{30, 28, 9}, std::tuple{20, 35, 13}, std::tuple{33, 30, 6}}) {
    const auto disc = oracle::disc_mask(64, 64, cx, cy, r);
    const auto circles = detect_circles(disc, 5, 15, 0.4);
    ASSERT_EQ(circles.size(), 1u);
    EXPECT_LE(std::abs(circles[0].x - cx), 1);
    EXPECT_LE(std::abs(circles[0].y - cy), 1);
    EXPECT_LE(std::abs(circles[0].radius - r), 1);
    EXPECT_EQ(hough_circle_endpoint(disc, 5, 15, 0.4).count(), 1u);
  }
}

TEST(Hough, AccumulatorMatchesBruteForce) {
  // Score at the true centre recomputed by counting edge pixels on the ring.
  const auto disc = oracle::disc_mask(48, 48, 24, 24, 10);
  const auto circles = detect_circles(disc, 10, 10, 0.0);
  auto edge = [&](int x, int y) {
    if (!disc.at(x, y)) return false;
    return !disc.at(x - 1, y) || !disc.at(x + 1, y) || !disc.at(x, y - 1) || !disc.at(x, y + 1);
  };
  int votes = 0, ring = 0;
  for (int y = 0; y < 48; ++y)
    for (int x = 0; x < 48; ++x)
      if (std::lround(std::hypot(x - 24, y - 24)) == 10) {
        ++ring;
        votes += edge(x, y);
      }
  ASSERT_FALSE(circles.empty());
  EXPECT_EQ(circles[0].x, 24);
  EXPECT_EQ(circles[0].y, 24);
  EXPECT_DOUBLE_EQ(circles[0].score, static_cast<double>(votes) / ring);
}

TEST(Hough, TwoSeparatedCircles) {
  Image2D z = oracle::disc_mask(96, 48, 24, 24, 10);
  const auto b = oracle::disc_mask(96, 48, 70, 22, 12);
  for (std::size_t i = 0; i < z.size(); ++i) z.data[i] |= b.data[i];
  EXPECT_EQ(hough_circle_endpoint(z, 5, 15, 0.4).count(), 2u);
}

TEST(Endpoint, JsonRoundTripAndArity) {
  for (auto k : {EndpointKind::threshold_binary, EndpointKind::threshold_to_zero, EndpointKind::connected_components,
                 EndpointKind::marker_controlled_watershed, EndpointKind::local_max_watershed, EndpointKind::hough_circle}) {
    const auto e = EndpointSpec::make(k);
    EXPECT_EQ(endpoint_from_json(to_json(e)), e);
  }
  EXPECT_EQ(EndpointSpec::make(EndpointKind::marker_controlled_watershed).required_outputs(), 2);
  EXPECT_THROW(apply_endpoint(EndpointSpec::make(EndpointKind::marker_controlled_watershed), {Image2D(4, 4)}), Error);
  EXPECT_THROW(endpoint_from_json({{"kind", "nope"}}), Error);
}
