#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include <opencv2/core.hpp>

#include "cgpseg/error.hpp"

namespace cgpseg {

/// Row-major 8-bit single-channel image.
struct Image2D {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  Image2D() = default;
  Image2D(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h), data(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {
    if (w < 0 || h < 0) throw input_error("negative image dimensions");
  }
  Image2D(int w, int h, std::vector<std::uint8_t> values) : width(w), height(h), data(std::move(values)) {
    if (data.size() != static_cast<std::size_t>(w) * static_cast<std::size_t>(h))
      throw input_error("image data length does not match width x height");
  }

  std::size_t size() const noexcept { return data.size(); }
  bool empty() const noexcept { return data.empty(); }

  std::uint8_t& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }

  bool same_size(const Image2D& other) const noexcept {
    return width == other.width && height == other.height;
  }

  /// Non-owning OpenCV header over this image's pixels.
  cv::Mat mat() { return {height, width, CV_8UC1, data.data()}; }
  cv::Mat mat() const { return {height, width, CV_8UC1, const_cast<std::uint8_t*>(data.data())}; }

  static Image2D from_mat(const cv::Mat& m) {
    CV_Assert(m.type() == CV_8UC1);
    Image2D out(m.cols, m.rows);
    if (m.isContinuous()) {
      std::copy(m.datastart, m.datastart + out.data.size(), out.data.begin());
    } else {
      for (int y = 0; y < m.rows; ++y) std::copy(m.ptr<std::uint8_t>(y), m.ptr<std::uint8_t>(y) + m.cols, &out.at(0, y));
    }
    return out;
  }

  friend bool operator==(const Image2D&, const Image2D&) = default;
};

inline void require_same_size(const Image2D& a, const Image2D& b, const char* what) {
  if (!a.same_size(b)) {
    throw input_error(std::string(what) + ": dimension mismatch (" + std::to_string(a.width) + "x" +
                      std::to_string(a.height) + " vs " + std::to_string(b.width) + "x" +
                      std::to_string(b.height) + ")");
  }
}

/// Instance labels, 0 = background. Labels are always the contiguous range
/// 1..count, numbered in raster order of each instance's first pixel.
class LabelMap {
 public:
  LabelMap() = default;
  LabelMap(int w, int h) : width_(w), height_(h), data_(static_cast<std::size_t>(w) * h, 0) {}

  /// Builds a label map from arbitrary non-negative labels, renumbering them.
  static LabelMap relabeled(int w, int h, std::span<const std::uint32_t> raw) {
    if (raw.size() != static_cast<std::size_t>(w) * static_cast<std::size_t>(h))
      throw input_error("label data length does not match width x height");
    LabelMap out(w, h);
    const std::uint32_t top = raw.empty() ? 0 : *std::max_element(raw.begin(), raw.end());
    if (top <= 4 * raw.size() + 16) {
      std::vector<std::uint32_t> remap(static_cast<std::size_t>(top) + 1, 0);
      for (std::size_t i = 0; i < raw.size(); ++i) {
        const auto v = raw[i];
        if (v == 0) continue;
        if (remap[v] == 0) remap[v] = ++out.count_;
        out.data_[i] = remap[v];
      }
      return out;
    }
    std::unordered_map<std::uint32_t, std::uint32_t> remap;
    for (std::size_t i = 0; i < raw.size(); ++i) {
      if (raw[i] == 0) continue;
      auto [it, inserted] = remap.try_emplace(raw[i], static_cast<std::uint32_t>(remap.size() + 1));
      out.data_[i] = it->second;
    }
    out.count_ = static_cast<std::uint32_t>(remap.size());
    return out;
  }

  static LabelMap relabeled(int w, int h, const std::vector<std::uint32_t>& raw) {
    return relabeled(w, h, std::span<const std::uint32_t>(raw));
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::uint32_t count() const noexcept { return count_; }
  std::size_t size() const noexcept { return data_.size(); }
  const std::vector<std::uint32_t>& data() const noexcept { return data_; }
  std::uint32_t at(int x, int y) const { return data_[static_cast<std::size_t>(y) * width_ + x]; }

  /// Pixel count per label; index 0 holds the background area.
  std::vector<std::size_t> areas() const {
    std::vector<std::size_t> out(count_ + 1, 0);
    for (auto v : data_) ++out[v];
    return out;
  }

  /// Binary mask (255 where labelled) of one label, or of all labels when label == 0.
  Image2D mask(std::uint32_t label = 0) const {
    Image2D out(width_, height_);
    for (std::size_t i = 0; i < data_.size(); ++i) {
      const bool on = label == 0 ? data_[i] != 0 : data_[i] == label;
      out.data[i] = on ? 255 : 0;
    }
    return out;
  }

  bool same_size(const LabelMap& o) const noexcept { return width_ == o.width_ && height_ == o.height_; }
  bool same_size(const Image2D& o) const noexcept { return width_ == o.width && height_ == o.height; }

  friend bool operator==(const LabelMap&, const LabelMap&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint32_t> data_;
  std::uint32_t count_ = 0;
};

inline std::uint8_t saturate_u8(int v) noexcept {
  return static_cast<std::uint8_t>(std::clamp(v, 0, 255));
}

}  // namespace cgpseg
