#pragma once

#include <algorithm>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "cgpseg/endpoints.hpp"
#include "cgpseg/error.hpp"
#include "cgpseg/graph.hpp"
#include "cgpseg/image.hpp"
#include "cgpseg/metrics.hpp"
#include "cgpseg/model.hpp"
#include "cgpseg/parallel.hpp"

namespace cgpseg {

/// Per-pixel agreement in [0, 1].
struct Heatmap {
  int width = 0;
  int height = 0;
  std::vector<float> data;

  Heatmap() = default;
  Heatmap(int w, int h, float fill = 0.0f) : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

  float at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
  std::size_t size() const noexcept { return data.size(); }

  cv::Mat mat() const { return {height, width, CV_32FC1, const_cast<float*>(data.data())}; }

  /// Pixels with value >= t, as a 0/255 mask.
  Image2D binarize(float t) const {
    Image2D out(width, height);
    for (std::size_t i = 0; i < data.size(); ++i) out.data[i] = data[i] >= t ? 255 : 0;
    return out;
  }

  friend bool operator==(const Heatmap&, const Heatmap&) = default;
};

/// Min-max scaling to [0, 1]; a constant prediction maps to all zeros.
inline Heatmap normalize_prediction(const Image2D& p) {
  Heatmap out(p.width, p.height);
  if (p.empty()) return out;
  const auto [lo, hi] = std::minmax_element(p.data.begin(), p.data.end());
  if (*lo == *hi) return out;
  const float range = static_cast<float>(*hi - *lo);
  for (std::size_t i = 0; i < p.size(); ++i) out.data[i] = static_cast<float>(p.data[i] - *lo) / range;
  return out;
}

/// Pixelwise mean of normalized predictions, accumulated in double in the
/// given order (N identical inputs reproduce the single map exactly).
inline Heatmap merge_predictions(std::span<const Image2D> predictions) {
  if (predictions.empty()) throw input_error("ensemble needs at least one prediction");
  const auto& first = predictions.front();
  std::vector<double> sum(first.size(), 0.0);
  for (const auto& p : predictions) {
    if (!p.same_size(first)) throw Error(ErrorKind::input, "ensemble predictions disagree in dimensions");
    const Heatmap n = normalize_prediction(p);
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += n.data[i];
  }
  Heatmap out(first.width, first.height);
  const double count = static_cast<double>(predictions.size());
  for (std::size_t i = 0; i < sum.size(); ++i) out.data[i] = static_cast<float>(sum[i] / count);
  return out;
}

/// Runs every model on `input` (semantic view of each output) and merges.
inline Heatmap build_heatmap(std::span<const PipelineModel> models, const InputVector& input, const FunctionLibrary& lib,
                             int workers = 1) {
  if (models.empty()) throw input_error("ensemble needs at least one model");
  for (const auto& m : models)
    if (m.preprocessing != models.front().preprocessing || m.genotype.inputs != models.front().genotype.inputs)
      throw input_error("ensemble models must share preprocessing and input count");
  std::vector<Image2D> predictions(models.size());
  parallel_for(models.size(), workers,
               [&](std::size_t i) { predictions[i] = as_mask(run_model(models[i], input, lib)); });
  return merge_predictions(predictions);
}

struct ThresholdSweep {
  double best_t = 0.0;
  double best_iou = 0.0;
  std::vector<double> thresholds;  // 0.00 .. 1.00
  std::vector<double> mean_iou;
};

/// Mean IoU against the masks for t = i/100, i = 0..100, comparing
/// heatmap >= t in float. Ties resolve to the smallest t.
inline ThresholdSweep sweep_threshold(std::span<const Heatmap> heatmaps, std::span<const Image2D> truth) {
  if (heatmaps.empty() || heatmaps.size() != truth.size())
    throw input_error("threshold sweep needs matching, non-empty heatmap and ground-truth lists");
  ThresholdSweep s;
  for (int i = 0; i <= 100; ++i) {
    const float t = static_cast<float>(i) / 100.0f;
    double total = 0.0;
    for (std::size_t k = 0; k < heatmaps.size(); ++k) total += iou(heatmaps[k].binarize(t), truth[k]);
    const double mean = total / static_cast<double>(heatmaps.size());
    s.thresholds.push_back(i / 100.0);
    s.mean_iou.push_back(mean);
    if (i == 0 || mean > s.best_iou) {
      s.best_iou = mean;
      s.best_t = i / 100.0;
    }
  }
  return s;
}

/// Strategy A: bilinear resize of an existing heatmap.
inline Heatmap upscale_heatmap(const Heatmap& h, int width, int height) {
  if (width < 1 || height < 1) throw input_error("upscale target must be at least 1x1");
  Heatmap out(width, height);
  cv::Mat dst = out.mat();
  cv::resize(h.mat(), dst, cv::Size(width, height), 0, 0, cv::INTER_LINEAR);
  if (dst.data != reinterpret_cast<uchar*>(out.data.data())) dst.copyTo(out.mat());
  for (auto& v : out.data) v = std::clamp(v, 0.0f, 1.0f);
  return out;
}

/// Strategy B: rerun the ensemble directly on the high-resolution input.
inline Heatmap upscale_models(std::span<const PipelineModel> models, const InputVector& highres, const FunctionLibrary& lib,
                              int workers = 1) {
  return build_heatmap(models, highres, lib, workers);
}

/// `.tif`/`.tiff` stores 32-bit float; anything else a 16-bit image scaled by 65535.
inline void write_heatmap(const std::filesystem::path& path, const Heatmap& h) {
  const auto ext = path.extension().string();
  bool ok;
  if (ext == ".tif" || ext == ".tiff") {
    ok = cv::imwrite(path.string(), h.mat());
  } else {
    cv::Mat u16;
    h.mat().convertTo(u16, CV_16U, 65535.0);
    ok = cv::imwrite(path.string(), u16);
  }
  if (!ok) throw Error(ErrorKind::load, "cannot write heatmap " + path.string());
}

}  // namespace cgpseg
