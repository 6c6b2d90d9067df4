#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <algorithm>
#include <limits>
#include <span>

#include <opencv2/imgproc.hpp>
#include <vector>

#include "cgpseg/image.hpp"

namespace cgpseg {

inline constexpr std::array<int, 8> kDx8{-1, 0, 1, -1, 1, -1, 0, 1};
inline constexpr std::array<int, 8> kDy8{-1, -1, -1, 0, 0, 1, 1, 1};

/// 8-connected components of the pixels where `on(i)` holds. Labels follow
/// raster order of each component's first pixel.
template <typename Pred>
LabelMap label_components(int width, int height, Pred&& on) {
  if (width <= 0 || height <= 0) return LabelMap(std::max(width, 0), std::max(height, 0));
  cv::Mat binary(height, width, CV_8UC1);
  for (int y = 0; y < height; ++y) {
    auto* row = binary.ptr<std::uint8_t>(y);
    for (int x = 0; x < width; ++x) row[x] = on(static_cast<std::size_t>(y) * width + x) ? 1 : 0;
  }
  cv::Mat labels;
  cv::connectedComponents(binary, labels, 8, CV_32S);
  // OpenCV numbers components by its own scan; renumber by first appearance.
  const auto* raw = reinterpret_cast<const std::uint32_t*>(labels.data);
  return LabelMap::relabeled(width, height, std::span<const std::uint32_t>(raw, static_cast<std::size_t>(width) * height));
}

inline LabelMap label_components(const Image2D& mask) {
  return label_components(mask.width, mask.height, [&](std::size_t i) { return mask.data[i] != 0; });
}

/// Exact Euclidean distance from every foreground pixel (`on`) to the nearest
/// background pixel; pixels outside the image count as background. Row-major,
/// width x height. Meijster's two-phase algorithm in integer arithmetic.
template <typename Pred>
std::vector<float> distance_transform(int width, int height, Pred&& on) {
  const std::size_t n = static_cast<std::size_t>(std::max(width, 0)) * static_cast<std::size_t>(std::max(height, 0));
  std::vector<float> dist(n, 0.0f);
  if (n == 0) return dist;

  // Phase 1: vertical distance to background (rows -1 and height are background).
  std::vector<std::int32_t> g(n);
  std::vector<char> row_has_fg(static_cast<std::size_t>(height), 0);
  for (int y = 0; y < height; ++y) {
    std::int32_t* cur = g.data() + static_cast<std::size_t>(y) * width;
    for (int x = 0; x < width; ++x) cur[x] = on(static_cast<std::size_t>(y) * width + x) ? 1 : 0;
    std::int32_t any = 0;
    for (int x = 0; x < width; ++x) any |= cur[x];
    row_has_fg[static_cast<std::size_t>(y)] = static_cast<char>(any);
    if (y > 0) {
      const std::int32_t* prev = cur - width;
      for (int x = 0; x < width; ++x) cur[x] *= prev[x] + 1;
    }
  }
  {
    std::int32_t* last = g.data() + static_cast<std::size_t>(height - 1) * width;
    for (int x = 0; x < width; ++x) last[x] = std::min(last[x], 1);
  }
  for (int y = height - 2; y >= 0; --y) {
    std::int32_t* cur = g.data() + static_cast<std::size_t>(y) * width;
    const std::int32_t* next = cur + width;
    for (int x = 0; x < width; ++x) cur[x] = std::min(cur[x], next[x] + 1);
  }

  // Phase 2: lower envelope along each row. A run of foreground pixels
  // [a, b] is bracketed by background columns a - 1 and b + 1 (g = 0, or
  // outside the image), and any column beyond them is farther, so each run
  // only needs columns a - 1 .. b + 1. Work is proportional to the
  // foreground instead of the image.
  std::vector<std::int64_t> g2v(static_cast<std::size_t>(width) + 2, 0);
  std::vector<int> sv(g2v.size()), tv(g2v.size());
  std::int64_t* g2 = g2v.data();
  int* s = sv.data();
  int* t = tv.data();
  auto f = [g2](std::int64_t x, int i) { return (x - i) * (x - i) + g2[i]; };
  // Floor of the separator; the double quotient of such small integers
  // truncates exactly, then one step turns truncation into floor.
  auto sep = [g2](int i, int u) {
    const std::int64_t num = std::int64_t{u} * u - std::int64_t{i} * i + g2[u] - g2[i];
    const std::int64_t den = 2 * std::int64_t{u - i};
    std::int64_t q = static_cast<std::int64_t>(static_cast<double>(num) / static_cast<double>(den));
    if (q * den > num) --q;
    return q;
  };
  for (int y = 0; y < height; ++y) {
    if (!row_has_fg[static_cast<std::size_t>(y)]) continue;
    const std::int32_t* grow = g.data() + static_cast<std::size_t>(y) * width;
    float* drow = dist.data() + static_cast<std::size_t>(y) * width;
    for (int a = 0; a < width;) {
      if (grow[a] == 0) {
        ++a;
        continue;
      }
      int b = a;
      while (b + 1 < width && grow[b + 1] != 0) ++b;
      // local index i <-> column a - 1 + i; ends are background
      const int m = b - a + 3;
      g2[0] = 0;
      g2[m - 1] = 0;
      for (int x = a; x <= b; ++x) g2[x - a + 1] = std::int64_t{grow[x]} * grow[x];
      int q = 0;
      s[0] = 0;
      t[0] = 0;
      for (int u = 1; u < m; ++u) {
        while (q >= 0 && f(t[q], s[q]) > f(t[q], u)) --q;
        if (q < 0) {
          q = 0;
          s[0] = u;
        } else {
          const std::int64_t w = 1 + sep(s[q], u);
          if (w < m) {
            ++q;
            s[q] = u;
            t[q] = static_cast<int>(w);
          }
        }
      }
      for (int u = m - 1; u >= 0; --u) {
        if (u >= 1 && u <= m - 2) {
          const std::int32_t gv = grow[a - 1 + u];
          drow[a - 1 + u] = gv <= 1 ? static_cast<float>(gv) : static_cast<float>(std::sqrt(static_cast<double>(f(u, s[q]))));
        }
        if (u == t[q]) --q;
      }
      a = b + 1;
    }
  }
  return dist;
}

inline std::vector<float> distance_transform(const Image2D& mask) {
  return distance_transform(mask.width, mask.height, [&](std::size_t i) { return mask.data[i] != 0; });
}

}  // namespace cgpseg
