#pragma once

// Slow, obviously-correct reference implementations. None of these call into
// the library code they are used to check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <set>
#include <vector>

#include "cgpseg/genotype.hpp"
#include "cgpseg/image.hpp"
#include "cgpseg/rng.hpp"

namespace oracle {

using cgpseg::Image2D;
using cgpseg::LabelMap;

// ---------------------------------------------------------------- union-find

struct DisjointSet {
  std::vector<std::size_t> parent;
  explicit DisjointSet(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a), b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

/// 8-connected components, labels numbered by raster order of first pixel.
inline std::vector<std::uint32_t> components8(const Image2D& mask) {
  const int w = mask.width, h = mask.height;
  DisjointSet ds(mask.size());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!mask.at(x, y)) continue;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const int nx = x + dx, ny = y + dy;
          if (nx < 0 || ny < 0 || nx >= w || ny >= h || !mask.at(nx, ny)) continue;
          ds.unite(static_cast<std::size_t>(y) * w + x, static_cast<std::size_t>(ny) * w + nx);
        }
    }
  std::vector<std::uint32_t> out(mask.size(), 0), root_label(mask.size(), 0);
  std::uint32_t next = 0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask.data[i]) continue;
    auto& l = root_label[ds.find(i)];
    if (!l) l = ++next;
    out[i] = l;
  }
  return out;
}

// ----------------------------------------------------------------------- EDT

/// Exhaustive Euclidean distance to the nearest background pixel, where the
/// ring of pixels just outside the frame is background.
inline std::vector<double> distance(const Image2D& mask) {
  const int w = mask.width, h = mask.height;
  std::vector<std::pair<int, int>> bg;
  for (int y = -1; y <= h; ++y)
    for (int x = -1; x <= w; ++x) {
      const bool outside = x < 0 || y < 0 || x >= w || y >= h;
      if (outside || !mask.at(x, y)) bg.emplace_back(x, y);
    }
  std::vector<double> out(mask.size(), 0.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!mask.at(x, y)) continue;
      long long best = std::numeric_limits<long long>::max();
      for (auto [bx, by] : bg) best = std::min(best, 1LL * (bx - x) * (bx - x) + 1LL * (by - y) * (by - y));
      out[static_cast<std::size_t>(y) * w + x] = std::sqrt(static_cast<double>(best));
    }
  return out;
}

// --------------------------------------------------------------- min filter

/// k x k minimum over in-frame neighbours.
inline Image2D min_filter(const Image2D& a, int k) {
  const int r = k / 2;
  Image2D out(a.width, a.height);
  for (int y = 0; y < a.height; ++y)
    for (int x = 0; x < a.width; ++x) {
      int m = 255;
      for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx) {
          const int nx = x + dx, ny = y + dy;
          if (nx >= 0 && ny >= 0 && nx < a.width && ny < a.height) m = std::min<int>(m, a.at(nx, ny));
        }
      out.at(x, y) = static_cast<std::uint8_t>(m);
    }
  return out;
}

// ------------------------------------------------------------------ RGB->HSV

struct Hsv {
  int h, s, v;
};

/// Textbook hexcone conversion with every component scaled to 0..255.
inline Hsv rgb_to_hsv(int r, int g, int b) {
  const int mx = std::max({r, g, b}), mn = std::min({r, g, b});
  const double d = mx - mn;
  double hue = 0.0;
  if (d > 0) {
    if (mx == r) hue = 60.0 * (g - b) / d;
    else if (mx == g) hue = 120.0 + 60.0 * (b - r) / d;
    else hue = 240.0 + 60.0 * (r - g) / d;
    if (hue < 0) hue += 360.0;
  }
  const int s = mx == 0 ? 0 : static_cast<int>(std::lround(255.0 * d / mx));
  return {static_cast<int>(std::lround(hue * 256.0 / 360.0)) % 256, s, mx};
}

// ------------------------------------------------------------- reachability

/// Active node addresses by depth-first search from every output, reading
/// only the connection slots each function actually uses.
inline std::set<int> reachable(const cgpseg::Genotype& g, const std::function<int(int)>& arity_of_function) {
  std::set<int> seen;
  std::function<void(int)> visit = [&](int address) {
    if (address <= g.inputs || seen.count(address)) return;
    seen.insert(address);
    const int row = address - g.inputs - 1;
    const int arity = arity_of_function(g.matrix[static_cast<std::size_t>(row) * g.columns()]);
    for (int j = 0; j < arity; ++j) visit(g.matrix[static_cast<std::size_t>(row) * g.columns() + 1 + j]);
  };
  for (int k = 0; k < g.outputs; ++k) visit(g.matrix[static_cast<std::size_t>(g.nodes + k) * g.columns() + 1]);
  return seen;
}

// ------------------------------------------------------------------ matching

struct Counts {
  std::size_t tp = 0, fp = 0, fn = 0;
};

/// Maximum-cardinality one-to-one matching among pairs with IoU > t, found
/// by exhaustive search over every assignment.
inline Counts optimal_matching(const LabelMap& pred, const LabelMap& gt, double t) {
  const std::size_t np = pred.count(), ng = gt.count();
  std::vector<std::vector<std::size_t>> inter(np + 1, std::vector<std::size_t>(ng + 1, 0));
  std::vector<std::size_t> ap(np + 1, 0), ag(ng + 1, 0);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    ++inter[pred.data()[i]][gt.data()[i]];
    ++ap[pred.data()[i]];
    ++ag[gt.data()[i]];
  }
  auto ok = [&](std::size_t p, std::size_t g) {
    const double n = static_cast<double>(inter[p][g]);
    return n > 0 && n / (static_cast<double>(ap[p] + ag[g]) - n) > t;
  };
  std::vector<bool> used(np + 1, false);
  std::function<std::size_t(std::size_t)> best = [&](std::size_t g) -> std::size_t {
    if (g > ng) return 0;
    std::size_t b = best(g + 1);  // leave g unmatched
    for (std::size_t p = 1; p <= np; ++p) {
      if (used[p] || !ok(p, g)) continue;
      used[p] = true;
      b = std::max(b, 1 + best(g + 1));
      used[p] = false;
    }
    return b;
  };
  Counts c;
  c.tp = best(1);
  c.fp = np - c.tp;
  c.fn = ng - c.tp;
  return c;
}

inline double ap_from(const Counts& c) {
  const std::size_t d = c.tp + c.fp + c.fn;
  return d == 0 ? 1.0 : static_cast<double>(c.tp) / static_cast<double>(d);
}

inline double mask_iou(const std::vector<bool>& a, const std::vector<bool>& b) {
  std::size_t i = 0, u = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    i += a[k] && b[k];
    u += a[k] || b[k];
  }
  return u == 0 ? 1.0 : static_cast<double>(i) / static_cast<double>(u);
}

// ------------------------------------------------------------ random labels

/// Up to `max_instances` random rectangles painted in order (later ones
/// overwrite), then renumbered.
inline LabelMap random_labels(cgpseg::Rng& rng, int w, int h, int max_instances) {
  std::vector<std::uint32_t> raw(static_cast<std::size_t>(w) * h, 0);
  const int n = static_cast<int>(rng.uniform_int(0, max_instances));
  for (int k = 1; k <= n; ++k) {
    const int x0 = static_cast<int>(rng.uniform_int(0, w - 1)), y0 = static_cast<int>(rng.uniform_int(0, h - 1));
    const int x1 = static_cast<int>(rng.uniform_int(x0, std::min(w - 1, x0 + w / 2)));
    const int y1 = static_cast<int>(rng.uniform_int(y0, std::min(h - 1, y0 + h / 2)));
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) raw[static_cast<std::size_t>(y) * w + x] = static_cast<std::uint32_t>(k);
  }
  return LabelMap::relabeled(w, h, raw);
}

/// `base` with each pixel's label moved to a neighbour's with small
/// probability, so that pairs overlap partially.
inline LabelMap jitter(const LabelMap& base, cgpseg::Rng& rng, double p) {
  const int w = base.width(), h = base.height();
  std::vector<std::uint32_t> raw(base.data());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (rng.bernoulli(p)) {
        const int nx = std::clamp(x + static_cast<int>(rng.uniform_int(-2, 2)), 0, w - 1);
        const int ny = std::clamp(y + static_cast<int>(rng.uniform_int(-2, 2)), 0, h - 1);
        raw[static_cast<std::size_t>(y) * w + x] = base.at(nx, ny);
      }
  return LabelMap::relabeled(w, h, raw);
}

inline Image2D random_image(cgpseg::Rng& rng, int w, int h) {
  Image2D img(w, h);
  for (auto& v : img.data) v = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
  return img;
}

inline Image2D disc_mask(int w, int h, double cx, double cy, double r) {
  Image2D m(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r) m.at(x, y) = 255;
  return m;
}

inline Image2D rect_mask(int w, int h, int x0, int y0, int x1, int y1) {
  Image2D m(w, h);
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) m.at(x, y) = 255;
  return m;
}

}  // namespace oracle
