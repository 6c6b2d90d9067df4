#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include <opencv2/imgproc.hpp>

#include "cgpseg/error.hpp"
#include "cgpseg/image.hpp"

namespace cgpseg {

// ------------------------------------------------------------------- pairing

struct InstancePair {
  std::uint32_t a;
  std::uint32_t b;
  double iou;

  friend bool operator==(const InstancePair&, const InstancePair&) = default;
};

struct Pairing {
  std::vector<InstancePair> pairs;   // double positives, in match order
  std::vector<std::uint32_t> a_only;
  std::vector<std::uint32_t> b_only;
};

/// One-to-one greedy pairing of instances in `a` and `b` by descending IoU
/// (ties: smaller b, then smaller a); a pair counts when IoU > t. Built on a
/// dense intersection table, independently of the metric code.
inline Pairing pair_instances(const LabelMap& a, const LabelMap& b, double t = 0.05) {
  if (!a.same_size(b)) throw input_error("pair_instances: label maps differ in dimensions");
  const std::size_t na = a.count() + 1, nb = b.count() + 1;
  std::vector<std::size_t> inter(na * nb, 0);
  for (std::size_t i = 0; i < a.size(); ++i) ++inter[a.data()[i] * nb + b.data()[i]];

  std::vector<std::size_t> area_a(na, 0), area_b(nb, 0);
  for (std::size_t i = 0; i < na; ++i)
    for (std::size_t j = 0; j < nb; ++j) {
      area_a[i] += inter[i * nb + j];
      area_b[j] += inter[i * nb + j];
    }

  std::vector<InstancePair> candidates;
  for (std::uint32_t i = 1; i < na; ++i)
    for (std::uint32_t j = 1; j < nb; ++j) {
      const std::size_t n = inter[i * nb + j];
      if (n == 0) continue;
      candidates.push_back({i, j, static_cast<double>(n) / static_cast<double>(area_a[i] + area_b[j] - n)});
    }
  std::sort(candidates.begin(), candidates.end(), [](const InstancePair& x, const InstancePair& y) {
    return x.iou != y.iou ? x.iou > y.iou : x.b != y.b ? x.b < y.b : x.a < y.a;
  });

  Pairing out;
  std::vector<bool> used_a(na, false), used_b(nb, false);
  for (const auto& c : candidates) {
    if (c.iou <= t) break;
    if (used_a[c.a] || used_b[c.b]) continue;
    used_a[c.a] = used_b[c.b] = true;
    out.pairs.push_back(c);
  }
  for (std::uint32_t i = 1; i < na; ++i)
    if (!used_a[i]) out.a_only.push_back(i);
  for (std::uint32_t j = 1; j < nb; ++j)
    if (!used_b[j]) out.b_only.push_back(j);
  return out;
}

// ---------------------------------------------------------- intensity features

struct ChannelStats {
  std::size_t positive = 0;
  double sum = 0.0;
  double mean = 0.0;  // sum / instance area
};

/// 2^C positivity-pattern counters followed by (positive, sum, mean) per
/// channel. Pattern bit c is set when channel c exceeds its threshold.
struct IntensityFeatureVector {
  std::vector<std::size_t> combinations;
  std::vector<ChannelStats> channels;

  std::size_t length() const noexcept { return combinations.size() + 3 * channels.size(); }

  std::vector<double> flatten() const {
    std::vector<double> v;
    v.reserve(length());
    for (auto c : combinations) v.push_back(static_cast<double>(c));
    for (const auto& s : channels) {
      v.push_back(static_cast<double>(s.positive));
      v.push_back(s.sum);
      v.push_back(s.mean);
    }
    return v;
  }
};

/// Otsu level of one channel, as the value a pixel must exceed.
inline int otsu_threshold(const Image2D& img) {
  if (img.empty()) return 0;
  cv::Mat scratch;
  return static_cast<int>(cv::threshold(img.mat(), scratch, 0, 255, cv::THRESH_BINARY | cv::THRESH_OTSU));
}

inline std::vector<int> otsu_thresholds(std::span<const Image2D> channels) {
  std::vector<int> t;
  for (const auto& c : channels) t.push_back(otsu_threshold(c));
  return t;
}

/// Features of the nonzero pixels of `instance`.
inline IntensityFeatureVector intensity_features(const Image2D& instance, std::span<const Image2D> channels,
                                                 std::span<const int> thresholds) {
  const std::size_t C = channels.size();
  if (C == 0 || C > 16) throw input_error("intensity_features needs between 1 and 16 channels");
  if (thresholds.size() != C) throw input_error("intensity_features needs one threshold per channel");
  for (const auto& ch : channels) require_same_size(instance, ch, "intensity_features");

  IntensityFeatureVector f;
  f.combinations.assign(std::size_t{1} << C, 0);
  f.channels.assign(C, {});
  std::size_t area = 0;
  for (std::size_t i = 0; i < instance.size(); ++i) {
    if (instance.data[i] == 0) continue;
    ++area;
    std::size_t pattern = 0;
    for (std::size_t c = 0; c < C; ++c) {
      const int v = channels[c].data[i];
      f.channels[c].sum += v;
      if (v > thresholds[c]) {
        pattern |= std::size_t{1} << c;
        ++f.channels[c].positive;
      }
    }
    ++f.combinations[pattern];
  }
  for (auto& s : f.channels) s.mean = area == 0 ? 0.0 : s.sum / static_cast<double>(area);
  return f;
}

/// One feature vector per label (index 0 is label 1); thresholds default to
/// per-channel Otsu when empty.
inline std::vector<IntensityFeatureVector> instance_features(const LabelMap& labels, std::span<const Image2D> channels,
                                                             std::span<const int> thresholds = {}) {
  const std::vector<int> t = thresholds.empty() ? otsu_thresholds(channels) : std::vector<int>(thresholds.begin(), thresholds.end());
  std::vector<IntensityFeatureVector> out;
  for (std::uint32_t l = 1; l <= labels.count(); ++l) out.push_back(intensity_features(labels.mask(l), channels, t));
  return out;
}

// ------------------------------------------------------------------ filtering

/// Keeps instances with min_area < area < max_area, renumbered in raster order.
inline LabelMap area_filter(const LabelMap& labels, std::size_t min_area, std::size_t max_area) {
  if (min_area >= max_area) throw Error(ErrorKind::config, "area_filter: min must be below max");
  const auto areas = labels.areas();
  std::vector<std::uint32_t> kept(labels.data());
  for (auto& v : kept)
    if (v != 0 && !(areas[v] > min_area && areas[v] < max_area)) v = 0;
  return LabelMap::relabeled(labels.width(), labels.height(), kept);
}

// ----------------------------------------------------------------- conjugates

struct Centroid {
  double x = 0.0;
  double y = 0.0;
};

/// Centroid per label (index 0 unused).
inline std::vector<Centroid> centroids(const LabelMap& labels) {
  std::vector<Centroid> c(labels.count() + 1);
  const auto areas = labels.areas();
  for (int y = 0; y < labels.height(); ++y)
    for (int x = 0; x < labels.width(); ++x) {
      const auto l = labels.at(x, y);
      c[l].x += x;
      c[l].y += y;
    }
  for (std::size_t l = 1; l < c.size(); ++l) {
    c[l].x /= static_cast<double>(areas[l]);
    c[l].y /= static_cast<double>(areas[l]);
  }
  return c;
}

struct ConjugateOptions {
  double max_centroid_distance = 70.0;
  int dilation_kernel = 3;  // square side
  int dilation_iterations = 1;
};

/// (ctl, target) label pairs whose centroids lie closer than the limit and
/// whose dilated target mask touches the CTL. Touching means overlapping or
/// 8-adjacent, so a one-pixel gap closed by the dilation counts.
inline std::vector<std::pair<std::uint32_t, std::uint32_t>> detect_conjugates(const LabelMap& ctl, const LabelMap& targets,
                                                                              const ConjugateOptions& opt = {}) {
  if (!ctl.same_size(targets)) throw input_error("detect_conjugates: label maps differ in dimensions");
  const auto cc = centroids(ctl), tc = centroids(targets);
  const cv::Mat kernel = cv::getStructuringElement(cv::MORPH_RECT, cv::Size(opt.dilation_kernel, opt.dilation_kernel));
  std::vector<Image2D> dilated(targets.count() + 1);
  std::vector<std::pair<std::uint32_t, std::uint32_t>> out;
  for (std::uint32_t c = 1; c <= ctl.count(); ++c)
    for (std::uint32_t t = 1; t <= targets.count(); ++t) {
      if (std::hypot(cc[c].x - tc[t].x, cc[c].y - tc[t].y) >= opt.max_centroid_distance) continue;
      if (dilated[t].empty()) {
        const Image2D m = targets.mask(t);
        cv::Mat d;
        cv::dilate(m.mat(), d, kernel, cv::Point(-1, -1), opt.dilation_iterations, cv::BORDER_CONSTANT, cv::Scalar(0));
        // one more 3x3 step turns contact into overlap
        cv::dilate(d, d, cv::getStructuringElement(cv::MORPH_RECT, cv::Size(3, 3)));
        dilated[t] = Image2D::from_mat(d);
      }
      bool touch = false;
      for (std::size_t i = 0; i < ctl.size() && !touch; ++i) touch = ctl.data()[i] == c && dilated[t].data[i] != 0;
      if (touch) out.emplace_back(c, t);
    }
  return out;
}

}  // namespace cgpseg
