#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"

#include "cgpseg/error.hpp"
#include "cgpseg/image.hpp"

namespace cgpseg {

enum class MetricKind { average_precision, iou };

/// Training objective. The evolved quantity is the error 1 - metric.
struct FitnessSpec {
  MetricKind metric = MetricKind::average_precision;
  double iou_threshold = 0.5;

  static FitnessSpec ap(double t = 0.5) { return {MetricKind::average_precision, t}; }
  static FitnessSpec iou() { return {MetricKind::iou, 0.5}; }

  friend bool operator==(const FitnessSpec&, const FitnessSpec&) = default;
};

inline nlohmann::json to_json(const FitnessSpec& f) {
  return {{"metric", f.metric == MetricKind::iou ? "iou" : "ap"}, {"iou_threshold", f.iou_threshold}};
}

inline FitnessSpec fitness_from_json(const nlohmann::json& j) {
  try {
    FitnessSpec f;
    const auto metric = j.value("metric", std::string("ap"));
    if (metric == "ap") f.metric = MetricKind::average_precision;
    else if (metric == "iou") f.metric = MetricKind::iou;
    else throw Error(ErrorKind::schema, "unknown fitness metric '" + metric + "'");
    f.iou_threshold = j.value("iou_threshold", 0.5);
    if (!(f.iou_threshold > 0.0 && f.iou_threshold <= 1.0)) throw Error(ErrorKind::config, "iou_threshold must lie in (0, 1]");
    return f;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::schema, std::string("malformed fitness JSON: ") + e.what());
  }
}

/// |a ∩ b| / |a ∪ b| over nonzero pixels; 1 when both are empty.
inline double iou(const Image2D& a, const Image2D& b) {
  require_same_size(a, b, "iou");
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const bool pa = a.data[i] != 0, pb = b.data[i] != 0;
    inter += pa && pb;
    uni += pa || pb;
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

struct MatchPair {
  std::uint32_t pred;
  std::uint32_t gt;
  double iou;

  friend bool operator==(const MatchPair&, const MatchPair&) = default;
};

struct MatchResult {
  std::vector<MatchPair> pairs;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
};

/// Every (pred, gt) label pair that shares at least one pixel, with its IoU,
/// from a single co-occurrence pass.
inline std::vector<MatchPair> overlapping_pairs(const LabelMap& pred, const LabelMap& gt) {
  if (!pred.same_size(gt)) throw input_error("label maps differ in dimensions");
  const auto pa = pred.areas();
  const auto ga = gt.areas();
  std::unordered_map<std::uint64_t, std::size_t> joint;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const auto p = pred.data()[i], g = gt.data()[i];
    if (p != 0 && g != 0) ++joint[(static_cast<std::uint64_t>(p) << 32) | g];
  }
  std::vector<MatchPair> out;
  out.reserve(joint.size());
  for (const auto& [key, inter] : joint) {
    const auto p = static_cast<std::uint32_t>(key >> 32), g = static_cast<std::uint32_t>(key & 0xFFFFFFFFu);
    const double u = static_cast<double>(pa[p] + ga[g] - inter);
    out.push_back({p, g, static_cast<double>(inter) / u});
  }
  return out;
}

/// Greedy one-to-one matching in descending IoU (ties: smaller gt label, then
/// smaller pred label). Only pairs with IoU > t are kept.
inline MatchResult match_instances(const LabelMap& pred, const LabelMap& gt, double t) {
  auto candidates = overlapping_pairs(pred, gt);
  std::sort(candidates.begin(), candidates.end(), [](const MatchPair& a, const MatchPair& b) {
    if (a.iou != b.iou) return a.iou > b.iou;
    if (a.gt != b.gt) return a.gt < b.gt;
    return a.pred < b.pred;
  });
  std::vector<char> pred_used(pred.count() + 1, 0), gt_used(gt.count() + 1, 0);
  MatchResult r;
  for (const auto& c : candidates) {
    if (!(c.iou > t)) break;
    if (pred_used[c.pred] || gt_used[c.gt]) continue;
    pred_used[c.pred] = gt_used[c.gt] = 1;
    r.pairs.push_back(c);
  }
  r.tp = r.pairs.size();
  r.fp = pred.count() - r.tp;
  r.fn = gt.count() - r.tp;
  return r;
}

/// TP / (TP + FP + FN); 1 when both maps are empty.
inline double average_precision(const LabelMap& pred, const LabelMap& gt, double t) {
  const auto m = match_instances(pred, gt, t);
  const std::size_t denom = m.tp + m.fp + m.fn;
  return denom == 0 ? 1.0 : static_cast<double>(m.tp) / static_cast<double>(denom);
}

}  // namespace cgpseg
