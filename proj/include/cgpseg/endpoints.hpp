#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <queue>
#include <string>
#include <variant>
#include <vector>

#include <opencv2/imgproc.hpp>

#include "json.hpp"

#include "cgpseg/error.hpp"
#include "cgpseg/graph.hpp"
#include "cgpseg/image.hpp"
#include "cgpseg/labeling.hpp"

namespace cgpseg {

enum class EndpointKind {
  threshold_binary,
  threshold_to_zero,
  connected_components,
  marker_controlled_watershed,
  local_max_watershed,
  hough_circle
};

inline const char* to_string(EndpointKind k) {
  switch (k) {
    case EndpointKind::threshold_binary: return "threshold_binary";
    case EndpointKind::threshold_to_zero: return "threshold_to_zero";
    case EndpointKind::connected_components: return "connected_components";
    case EndpointKind::marker_controlled_watershed: return "marker_controlled_watershed";
    case EndpointKind::local_max_watershed: return "local_max_watershed";
    case EndpointKind::hough_circle: return "hough_circle";
  }
  return "?";
}

inline EndpointKind endpoint_kind_from_string(const std::string& s) {
  for (auto k : {EndpointKind::threshold_binary, EndpointKind::threshold_to_zero, EndpointKind::connected_components,
                 EndpointKind::marker_controlled_watershed, EndpointKind::local_max_watershed, EndpointKind::hough_circle})
    if (s == to_string(k)) return k;
  throw Error(ErrorKind::schema, "unknown endpoint kind '" + s + "'");
}

/// Fixed terminal transform. `sigma` is the u8 threshold for the threshold
/// kinds and the Gaussian smoothing scale of the flooding topography for the
/// watershed kinds.
struct EndpointSpec {
  EndpointKind kind = EndpointKind::threshold_binary;
  double sigma = 1.0;
  int min_peak_distance = 5;
  int radius_min = 5;
  int radius_max = 20;
  double accumulator_threshold = 0.4;  // fraction of the ideal ring covered by edges
  int edge_threshold = 0;

  static EndpointSpec make(EndpointKind kind) {
    EndpointSpec s;
    s.kind = kind;
    s.sigma = (kind == EndpointKind::marker_controlled_watershed || kind == EndpointKind::local_max_watershed) ? 2.0 : 1.0;
    return s;
  }

  int required_outputs() const noexcept { return kind == EndpointKind::marker_controlled_watershed ? 2 : 1; }
  bool produces_labels() const noexcept {
    return kind != EndpointKind::threshold_binary && kind != EndpointKind::threshold_to_zero;
  }

  friend bool operator==(const EndpointSpec&, const EndpointSpec&) = default;
};

inline nlohmann::json to_json(const EndpointSpec& e) {
  return {{"kind", to_string(e.kind)},
          {"sigma", e.sigma},
          {"min_peak_distance", e.min_peak_distance},
          {"radius_min", e.radius_min},
          {"radius_max", e.radius_max},
          {"accumulator_threshold", e.accumulator_threshold},
          {"edge_threshold", e.edge_threshold}};
}

/// Only "kind" is mandatory; missing fields take the kind's defaults.
inline EndpointSpec endpoint_from_json(const nlohmann::json& j) {
  try {
    auto e = EndpointSpec::make(endpoint_kind_from_string(j.at("kind").get<std::string>()));
    e.sigma = j.value("sigma", e.sigma);
    e.min_peak_distance = j.value("min_peak_distance", e.min_peak_distance);
    e.radius_min = j.value("radius_min", e.radius_min);
    e.radius_max = j.value("radius_max", e.radius_max);
    e.accumulator_threshold = j.value("accumulator_threshold", e.accumulator_threshold);
    e.edge_threshold = j.value("edge_threshold", e.edge_threshold);
    if (e.kind == EndpointKind::hough_circle && (e.radius_min < 1 || e.radius_max < e.radius_min))
      throw Error(ErrorKind::config, "hough_circle endpoint needs 1 <= radius_min <= radius_max");
    return e;
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorKind::schema, std::string("malformed endpoint JSON: ") + ex.what());
  }
}

/// Semantic tasks yield a mask, instance tasks a label map.
using FinalOutput = std::variant<Image2D, LabelMap>;

enum class ThresholdMode { binary, to_zero };

inline Image2D threshold_endpoint(const Image2D& z, ThresholdMode mode, int sigma) {
  Image2D out(z.width, z.height);
  for (std::size_t i = 0; i < z.size(); ++i) {
    const int v = z.data[i];
    out.data[i] = v > sigma ? static_cast<std::uint8_t>(mode == ThresholdMode::binary ? 255 : v) : 0;
  }
  return out;
}

inline LabelMap connected_components(const Image2D& mask) { return label_components(mask); }

namespace detail {

inline std::vector<float> gaussian_smooth(const std::vector<float>& src, int w, int h, double sigma) {
  if (sigma <= 0.0 || src.empty()) return src;
  std::vector<float> out(src.size());
  const cv::Mat in(h, w, CV_32F, const_cast<float*>(src.data()));
  cv::Mat dst(h, w, CV_32F, out.data());
  cv::GaussianBlur(in, dst, {0, 0}, sigma, sigma, cv::BORDER_REFLECT);
  CV_Assert(dst.data == reinterpret_cast<uchar*>(out.data()));
  return out;
}

// Ascending key = (level, arrival order). Level bits are mapped to an
// unsigned order-preserving form so one integer compare decides.
struct FloodItem {
  std::uint64_t key;
  std::uint32_t index;
  bool operator>(const FloodItem& o) const noexcept { return key > o.key; }
};

inline std::uint32_t ordered_bits(float v) noexcept {
  if (v == 0.0f) v = 0.0f;  // fold -0 onto +0
  const auto bits = std::bit_cast<std::uint32_t>(v);
  return (bits & 0x80000000u) ? ~bits : bits | 0x80000000u;
}

inline std::uint32_t unordered_bits(std::uint32_t k) noexcept { return (k & 0x80000000u) ? k & 0x7FFFFFFFu : ~k; }

}  // namespace detail

/// Priority flood from labelled seeds over `topo`, confined to `inside`.
/// A pixel takes the label of the flood that reaches it first (lowest level,
/// then FIFO), so the result partitions every seed-reachable region with no
/// ridge lines. 8-connectivity.
template <typename Inside>
std::vector<std::uint32_t> priority_flood(const std::vector<float>& topo, int w, int h,
                                          std::vector<std::uint32_t> labels, Inside&& inside) {
  if (labels.size() >= std::numeric_limits<std::uint32_t>::max()) throw input_error("image too large for priority flood");
  std::vector<detail::FloodItem> heap;
  heap.reserve(labels.size() / 4);
  std::priority_queue<detail::FloodItem, std::vector<detail::FloodItem>, std::greater<>> queue(std::greater<>{}, std::move(heap));
  std::uint32_t order = 0;
  auto spread = [&](std::size_t p, float level) {
    const int x = static_cast<int>(p % w), y = static_cast<int>(p / w);
    for (int k = 0; k < 8; ++k) {
      const int nx = x + kDx8[k], ny = y + kDy8[k];
      if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
      const std::size_t q = static_cast<std::size_t>(ny) * w + nx;
      if (labels[q] != 0 || !inside(q)) continue;
      labels[q] = labels[p];
      const float lq = std::max(topo[q], level);
      queue.push({(std::uint64_t{detail::ordered_bits(lq)} << 32) | order++, static_cast<std::uint32_t>(q)});
    }
  };
  std::vector<std::size_t> seeds;
  for (std::size_t p = 0; p < labels.size(); ++p)
    if (labels[p] != 0) seeds.push_back(p);
  for (auto p : seeds) spread(p, topo[p]);
  while (!queue.empty()) {
    const auto item = queue.top();
    queue.pop();
    spread(item.index, std::bit_cast<float>(detail::unordered_bits(static_cast<std::uint32_t>(item.key >> 32))));
  }
  return labels;
}

/// Seeds are the components of markers within the mask; the topography is the
/// negated, Gaussian-smoothed distance transform of the mask.
inline LabelMap marker_controlled_watershed(const Image2D& mask, const Image2D& markers, double sigma = 2.0) {
  require_same_size(mask, markers, "marker_controlled_watershed");
  const int w = mask.width, h = mask.height;
  auto inside = [&](std::size_t i) { return mask.data[i] != 0; };
  const LabelMap seeds = label_components(w, h, [&](std::size_t i) { return markers.data[i] != 0 && mask.data[i] != 0; });
  if (seeds.count() == 0) return LabelMap(w, h);

  auto topo = detail::gaussian_smooth(distance_transform(w, h, inside), w, h, sigma);
  for (auto& v : topo) v = -v;
  return LabelMap::relabeled(w, h, priority_flood(topo, w, h, seeds.data(), inside));
}

struct Peak {
  int x;
  int y;
  float value;
};

/// Local maxima of `field` over a (2*min_distance+1)^2 window with value >=
/// min_value, thinned greedily (highest first, raster order on ties) so that
/// accepted peaks are more than `min_distance` apart (Euclidean).
inline std::vector<Peak> find_peaks(const std::vector<float>& field, int w, int h, int min_distance, float min_value) {
  std::vector<Peak> candidates;
  if (field.empty()) return candidates;
  const int r = std::max(0, min_distance);
  cv::Mat src(h, w, CV_32F, const_cast<float*>(field.data()));
  cv::Mat window_max;
  cv::dilate(src, window_max, cv::getStructuringElement(cv::MORPH_RECT, {2 * r + 1, 2 * r + 1}), {-1, -1}, 1,
             cv::BORDER_CONSTANT, cv::Scalar(-1e30));
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const float v = field[static_cast<std::size_t>(y) * w + x];
      if (v >= min_value && v >= window_max.at<float>(y, x)) candidates.push_back({x, y, v});
    }
  std::stable_sort(candidates.begin(), candidates.end(), [](const Peak& a, const Peak& b) { return a.value > b.value; });
  std::vector<Peak> accepted;
  const long long r2 = static_cast<long long>(r) * r;
  for (const auto& c : candidates) {
    const bool clear = std::none_of(accepted.begin(), accepted.end(), [&](const Peak& a) {
      const long long dx = a.x - c.x, dy = a.y - c.y;
      return dx * dx + dy * dy <= r2;
    });
    if (clear) accepted.push_back(c);
  }
  return accepted;
}

/// Seeds are distance-transform peaks; the topography is the Gaussian-smoothed
/// gradient magnitude of the distance transform.
inline LabelMap local_max_watershed(const Image2D& mask, int min_peak_distance = 5, double sigma = 2.0) {
  const int w = mask.width, h = mask.height;
  auto inside = [&](std::size_t i) { return mask.data[i] != 0; };
  const auto dist = distance_transform(w, h, inside);
  const auto peaks = find_peaks(dist, w, h, min_peak_distance, 1.0f);
  if (peaks.empty()) return LabelMap(w, h);

  std::vector<float> grad(dist.size());
  {
    const cv::Mat d(h, w, CV_32F, const_cast<float*>(dist.data()));
    cv::Mat gx, gy;
    cv::Sobel(d, gx, CV_32F, 1, 0, 1, 0.5, 0.0, cv::BORDER_REFLECT);
    cv::Sobel(d, gy, CV_32F, 0, 1, 1, 0.5, 0.0, cv::BORDER_REFLECT);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) grad[static_cast<std::size_t>(y) * w + x] = std::hypot(gx.at<float>(y, x), gy.at<float>(y, x));
  }
  const auto topo = detail::gaussian_smooth(grad, w, h, sigma);

  std::vector<std::uint32_t> seeds(dist.size(), 0);
  for (std::size_t i = 0; i < peaks.size(); ++i)
    seeds[static_cast<std::size_t>(peaks[i].y) * w + peaks[i].x] = static_cast<std::uint32_t>(i + 1);
  return LabelMap::relabeled(w, h, priority_flood(topo, w, h, std::move(seeds), inside));
}

struct Circle {
  int x;
  int y;
  int radius;
  double score;
};

/// Integer offsets whose rounded length equals `radius`.
inline std::vector<std::pair<int, int>> ring_offsets(int radius) {
  std::vector<std::pair<int, int>> ring;
  for (int dy = -radius - 1; dy <= radius + 1; ++dy)
    for (int dx = -radius - 1; dx <= radius + 1; ++dx)
      if (std::lround(std::sqrt(double(dx) * dx + double(dy) * dy)) == radius) ring.emplace_back(dx, dy);
  return ring;
}

/// Accumulator circle detection on the inner boundary of {z > edge_threshold}.
/// Each edge pixel votes for every centre on its radius-r ring; a centre's
/// score is votes / ring size. Candidates at or above `threshold` are thinned
/// by centre distance (< radius_min suppresses the weaker one).
inline std::vector<Circle> detect_circles(const Image2D& z, int radius_min, int radius_max, double threshold, int edge_threshold = 0) {
  if (radius_min < 1 || radius_max < radius_min) throw input_error("hough: empty radius range");
  const int w = z.width, h = z.height;
  auto on = [&](int x, int y) { return z.at(x, y) > edge_threshold; };
  std::vector<std::pair<int, int>> edges;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!on(x, y)) continue;
      const bool boundary = (x > 0 && !on(x - 1, y)) || (x + 1 < w && !on(x + 1, y)) || (y > 0 && !on(x, y - 1)) ||
                            (y + 1 < h && !on(x, y + 1));
      if (boundary) edges.emplace_back(x, y);
    }
  std::vector<Circle> candidates;
  if (edges.empty()) return candidates;

  std::vector<int> acc(static_cast<std::size_t>(w) * h);
  std::vector<Circle> best(static_cast<std::size_t>(w) * h, Circle{0, 0, 0, -1.0});
  for (int r = radius_min; r <= radius_max; ++r) {
    const auto ring = ring_offsets(r);
    std::fill(acc.begin(), acc.end(), 0);
    for (auto [ex, ey] : edges)
      for (auto [dx, dy] : ring) {
        const int cx = ex + dx, cy = ey + dy;
        if (cx >= 0 && cy >= 0 && cx < w && cy < h) ++acc[static_cast<std::size_t>(cy) * w + cx];
      }
    const double denom = static_cast<double>(ring.size());
    for (std::size_t i = 0; i < acc.size(); ++i) {
      const double score = acc[i] / denom;
      if (score >= threshold && score > best[i].score)
        best[i] = Circle{static_cast<int>(i % w), static_cast<int>(i / w), r, score};
    }
  }
  for (const auto& c : best)
    if (c.score >= 0.0) candidates.push_back(c);
  std::stable_sort(candidates.begin(), candidates.end(), [](const Circle& a, const Circle& b) { return a.score > b.score; });

  std::vector<Circle> accepted;
  const long long sep2 = static_cast<long long>(radius_min) * radius_min;
  for (const auto& c : candidates) {
    const bool clear = std::none_of(accepted.begin(), accepted.end(), [&](const Circle& a) {
      const long long dx = a.x - c.x, dy = a.y - c.y;
      return dx * dx + dy * dy < sep2;
    });
    if (clear) accepted.push_back(c);
  }
  return accepted;
}

inline LabelMap hough_circle_endpoint(const Image2D& z, int radius_min, int radius_max, double threshold, int edge_threshold = 0) {
  const auto circles = detect_circles(z, radius_min, radius_max, threshold, edge_threshold);
  std::vector<std::uint32_t> raw(z.size(), 0);
  for (std::size_t i = 0; i < circles.size(); ++i) {
    const auto& c = circles[i];
    const long long r2 = static_cast<long long>(c.radius) * c.radius;
    for (int y = std::max(0, c.y - c.radius); y <= std::min(z.height - 1, c.y + c.radius); ++y)
      for (int x = std::max(0, c.x - c.radius); x <= std::min(z.width - 1, c.x + c.radius); ++x) {
        const long long dx = x - c.x, dy = y - c.y;
        auto& px = raw[static_cast<std::size_t>(y) * z.width + x];
        if (dx * dx + dy * dy <= r2 && px == 0) px = static_cast<std::uint32_t>(i + 1);
      }
  }
  return LabelMap::relabeled(z.width, z.height, raw);
}

inline FinalOutput apply_endpoint(const EndpointSpec& spec, const IntermediateOutput& z) {
  if (static_cast<int>(z.size()) < spec.required_outputs())
    throw input_error(std::string("endpoint ") + to_string(spec.kind) + " needs " + std::to_string(spec.required_outputs()) + " heuristics");
  const int level = std::clamp(static_cast<int>(std::lround(spec.sigma)), 0, 255);
  switch (spec.kind) {
    case EndpointKind::threshold_binary: return threshold_endpoint(z[0], ThresholdMode::binary, level);
    case EndpointKind::threshold_to_zero: return threshold_endpoint(z[0], ThresholdMode::to_zero, level);
    case EndpointKind::connected_components: return connected_components(z[0]);
    case EndpointKind::marker_controlled_watershed: return marker_controlled_watershed(z[0], z[1], spec.sigma);
    case EndpointKind::local_max_watershed: return local_max_watershed(z[0], spec.min_peak_distance, spec.sigma);
    case EndpointKind::hough_circle:
      return hough_circle_endpoint(z[0], spec.radius_min, spec.radius_max, spec.accumulator_threshold, spec.edge_threshold);
  }
  throw input_error("unknown endpoint");
}

/// Label map view of any final output (masks become 8-connected components).
inline LabelMap as_labels(const FinalOutput& out) {
  if (const auto* labels = std::get_if<LabelMap>(&out)) return *labels;
  return connected_components(std::get<Image2D>(out));
}

/// Semantic view of any final output: the mask itself, or 255 where labelled.
inline Image2D as_mask(const FinalOutput& out) {
  if (const auto* mask = std::get_if<Image2D>(&out)) return *mask;
  return std::get<LabelMap>(out).mask();
}

}  // namespace cgpseg
