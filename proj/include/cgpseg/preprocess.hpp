#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include <opencv2/imgproc.hpp>

#include "json.hpp"

#include "cgpseg/error.hpp"
#include "cgpseg/graph.hpp"
#include "cgpseg/image.hpp"

namespace cgpseg {

/// A decoded raster: one plane (grayscale) or three planes in R, G, B order.
struct RawImage {
  std::vector<Image2D> planes;

  bool is_rgb() const noexcept { return planes.size() == 3; }
  int width() const { return planes.at(0).width; }
  int height() const { return planes.at(0).height; }

  static RawImage gray(Image2D plane) { return RawImage{{std::move(plane)}}; }
  static RawImage rgb(Image2D r, Image2D g, Image2D b) { return RawImage{{std::move(r), std::move(g), std::move(b)}}; }
};

enum class PreprocessMode { rgb, hsv, hed, gray, select };

inline const char* to_string(PreprocessMode m) {
  switch (m) {
    case PreprocessMode::rgb: return "rgb";
    case PreprocessMode::hsv: return "hsv";
    case PreprocessMode::hed: return "hed";
    case PreprocessMode::gray: return "gray";
    case PreprocessMode::select: return "select";
  }
  return "?";
}

/// Non-evolvable input formatting.
///  rgb    one RGB image -> [r, g, b]
///  hsv    one RGB image -> [h, s, v], full-range u8 hue
///  hed    one RGB image -> hematoxylin, eosin, DAB optical densities
///  gray   every image -> one luminance plane (grayscale passes through)
///  select planes of all images concatenated, picked by 0-based index
struct PreprocessingSpec {
  PreprocessMode mode = PreprocessMode::rgb;
  std::vector<int> channels;  // select mode only

  friend bool operator==(const PreprocessingSpec&, const PreprocessingSpec&) = default;
};

inline nlohmann::json to_json(const PreprocessingSpec& p) {
  nlohmann::json j{{"mode", to_string(p.mode)}};
  if (p.mode == PreprocessMode::select) j["channels"] = p.channels;
  return j;
}

inline PreprocessingSpec preprocessing_from_json(const nlohmann::json& j) {
  try {
    PreprocessingSpec p;
    const auto mode = j.is_string() ? j.get<std::string>() : j.at("mode").get<std::string>();
    if (mode == "rgb") p.mode = PreprocessMode::rgb;
    else if (mode == "hsv") p.mode = PreprocessMode::hsv;
    else if (mode == "hed") p.mode = PreprocessMode::hed;
    else if (mode == "gray") p.mode = PreprocessMode::gray;
    else if (mode == "select") p.mode = PreprocessMode::select;
    else throw Error(ErrorKind::schema, "unknown preprocessing mode '" + mode + "'");
    if (p.mode == PreprocessMode::select) {
      p.channels = j.at("channels").get<std::vector<int>>();
      if (p.channels.empty()) throw Error(ErrorKind::config, "select preprocessing needs at least one channel");
    }
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::schema, std::string("malformed preprocessing JSON: ") + e.what());
  }
}

/// Ruifrok & Johnston stain matrix (rows: hematoxylin, eosin, DAB in RGB
/// optical density) and its inverse.
inline constexpr std::array<std::array<double, 3>, 3> kRgbFromHed{{
    {0.65, 0.70, 0.29},
    {0.07, 0.99, 0.11},
    {0.27, 0.57, 0.78},
}};
inline constexpr std::array<std::array<double, 3>, 3> kHedFromRgb{{
    {1.8779827368521353, -1.0076786862855645, -0.5561158181996246},
    {-0.06590806222356332, 1.1347303724996625, -0.1355217986283712},
    {-0.6019073634392891, -0.4804141884970579, 1.5735880719641926},
}};

namespace detail {

inline void require_rgb(std::span<const RawImage> raw, PreprocessMode mode) {
  if (raw.size() != 1 || !raw[0].is_rgb())
    throw input_error(std::string("preprocessing '") + to_string(mode) + "' needs exactly one RGB image");
}

inline cv::Mat merge_rgb(const RawImage& img) {
  cv::Mat out;
  cv::merge(std::vector<cv::Mat>{img.planes[0].mat(), img.planes[1].mat(), img.planes[2].mat()}, out);
  return out;
}

inline Channels hsv(const RawImage& img) {
  Channels out;
  if (img.planes[0].empty()) return img.planes;
  cv::Mat hsv_mat;
  cv::cvtColor(merge_rgb(img), hsv_mat, cv::COLOR_RGB2HSV_FULL);
  std::vector<cv::Mat> split;
  cv::split(hsv_mat, split);
  for (const auto& m : split) out.push_back(Image2D::from_mat(m));
  return out;
}

// Optical density od_c = log(max(v,1)/255) / log(1/255) in [0, 1], unmixed by
// kHedFromRgb and scaled by 255 with clamping.
inline Channels hed(const RawImage& img) {
  const int w = img.width(), h = img.height();
  Channels out(3, Image2D(w, h));
  std::array<double, 256> od{};
  for (int v = 0; v < 256; ++v) od[static_cast<std::size_t>(v)] = std::log(std::max(v, 1) / 255.0) / std::log(1.0 / 255.0);
  for (std::size_t i = 0; i < img.planes[0].size(); ++i) {
    const double rgb[3] = {od[img.planes[0].data[i]], od[img.planes[1].data[i]], od[img.planes[2].data[i]]};
    for (std::size_t s = 0; s < 3; ++s) {
      double stain = 0.0;
      for (std::size_t c = 0; c < 3; ++c) stain += rgb[c] * kHedFromRgb[c][s];
      out[s].data[i] = static_cast<std::uint8_t>(std::clamp(std::lround(255.0 * stain), 0L, 255L));
    }
  }
  return out;
}

inline Image2D luminance(const RawImage& img) {
  if (!img.is_rgb()) return img.planes.at(0);
  if (img.planes[0].empty()) return img.planes[0];
  cv::Mat gray;
  cv::cvtColor(merge_rgb(img), gray, cv::COLOR_RGB2GRAY);
  return Image2D::from_mat(gray);
}

}  // namespace detail

inline Channels preprocess(std::span<const RawImage> raw, const PreprocessingSpec& spec) {
  if (raw.empty()) throw input_error("preprocess: no images");
  for (const auto& img : raw) {
    if (img.planes.size() != 1 && img.planes.size() != 3) throw input_error("preprocess: images must have 1 or 3 planes");
    for (const auto& p : img.planes) require_same_size(raw[0].planes[0], p, "preprocess");
  }
  switch (spec.mode) {
    case PreprocessMode::rgb: detail::require_rgb(raw, spec.mode); return raw[0].planes;
    case PreprocessMode::hsv: detail::require_rgb(raw, spec.mode); return detail::hsv(raw[0]);
    case PreprocessMode::hed: detail::require_rgb(raw, spec.mode); return detail::hed(raw[0]);
    case PreprocessMode::gray: {
      Channels out;
      for (const auto& img : raw) out.push_back(detail::luminance(img));
      return out;
    }
    case PreprocessMode::select: {
      Channels all;
      for (const auto& img : raw) all.insert(all.end(), img.planes.begin(), img.planes.end());
      Channels out;
      for (int c : spec.channels) {
        if (c < 0 || c >= static_cast<int>(all.size()))
          throw input_error("select preprocessing: channel " + std::to_string(c) + " not available");
        out.push_back(all[static_cast<std::size_t>(c)]);
      }
      return out;
    }
  }
  throw input_error("unknown preprocessing mode");
}

inline Channels preprocess(const RawImage& raw, const PreprocessingSpec& spec) {
  return preprocess(std::span<const RawImage>(&raw, 1), spec);
}

}  // namespace cgpseg
