#pragma once

// The default roster of 42 deterministic u8 image primitives.

#include <array>
#include <cmath>
#include <vector>

#include <opencv2/imgproc.hpp>

#include "cgpseg/labeling.hpp"
#include "cgpseg/library.hpp"

namespace cgpseg {

namespace prim {

using Inputs = std::span<const Image2D* const>;
using Args = std::span<const int>;

inline constexpr int kBorder = cv::BORDER_REFLECT;

template <typename Op>
Image2D pointwise(const Image2D& a, Op&& op) {
  Image2D out(a.width, a.height);
  for (std::size_t i = 0; i < a.size(); ++i) out.data[i] = op(a.data[i]);
  return out;
}

template <typename Op>
Image2D pointwise(const Image2D& a, const Image2D& b, Op&& op) {
  Image2D out(a.width, a.height);
  for (std::size_t i = 0; i < a.size(); ++i) out.data[i] = op(a.data[i], b.data[i]);
  return out;
}

template <typename Fn>
Image2D with_mat(const Image2D& a, Fn&& fn) {
  Image2D out(a.width, a.height);
  if (a.empty()) return out;
  cv::Mat dst = out.mat();
  fn(a.mat(), dst);
  CV_Assert(dst.data == out.data.data());  // result must land in place
  return out;
}

inline cv::Mat square_kernel(int k) { return cv::getStructuringElement(cv::MORPH_RECT, {k, k}); }

// A 1x1 element makes erode/dilate/open/close the identity and the
// difference operators (gradient, top-hat, black-hat) zero.
inline Image2D morph(const Image2D& a, int op, int k) {
  if (k <= 1) {
    const bool difference = op == cv::MORPH_GRADIENT || op == cv::MORPH_TOPHAT || op == cv::MORPH_BLACKHAT;
    return difference ? Image2D(a.width, a.height) : a;
  }
  return with_mat(a, [&](const cv::Mat& s, cv::Mat& d) { cv::morphologyEx(s, d, op, square_kernel(k)); });
}

// |dx| + |dy| of a float derivative pair, saturated to u8.
inline Image2D gradient_magnitude(const cv::Mat& gx, const cv::Mat& gy, int w, int h) {
  Image2D out(w, h);
  for (int y = 0; y < h; ++y) {
    const float* px = gx.ptr<float>(y);
    const float* py = gy.ptr<float>(y);
    for (int x = 0; x < w; ++x) out.at(x, y) = cv::saturate_cast<std::uint8_t>(std::abs(px[x]) + std::abs(py[x]));
  }
  return out;
}

inline Image2D abs_to_u8(const cv::Mat& g, int w, int h) {
  Image2D out(w, h);
  for (int y = 0; y < h; ++y) {
    const float* p = g.ptr<float>(y);
    for (int x = 0; x < w; ++x) out.at(x, y) = cv::saturate_cast<std::uint8_t>(std::abs(p[x]));
  }
  return out;
}

inline Image2D sobel(const Image2D& a, int k, bool want_x, bool want_y) {
  if (a.empty()) return a;
  cv::Mat gx, gy;
  if (want_x) cv::Sobel(a.mat(), gx, CV_32F, 1, 0, k, 1.0, 0.0, kBorder);
  if (want_y) cv::Sobel(a.mat(), gy, CV_32F, 0, 1, k, 1.0, 0.0, kBorder);
  if (want_x && want_y) return gradient_magnitude(gx, gy, a.width, a.height);
  return abs_to_u8(want_x ? gx : gy, a.width, a.height);
}

inline Image2D scharr(const Image2D& a) {
  if (a.empty()) return a;
  cv::Mat gx, gy;
  cv::Scharr(a.mat(), gx, CV_32F, 1, 0, 1.0, 0.0, kBorder);
  cv::Scharr(a.mat(), gy, CV_32F, 0, 1, 1.0, 0.0, kBorder);
  return gradient_magnitude(gx, gy, a.width, a.height);
}

inline Image2D laplacian(const Image2D& a, int k) {
  if (a.empty()) return a;
  cv::Mat g;
  cv::Laplacian(a.mat(), g, CV_32F, k, 1.0, 0.0, kBorder);
  return abs_to_u8(g, a.width, a.height);
}

inline Image2D kirsch(const Image2D& a) {
  if (a.empty()) return a;
  // Compass kernels generated by rotating the outer ring of the north mask.
  static const std::array<int, 8> ring{5, 5, 5, -3, -3, -3, -3, -3};
  static const std::array<std::pair<int, int>, 8> pos{{{0, 0}, {0, 1}, {0, 2}, {1, 2}, {2, 2}, {2, 1}, {2, 0}, {1, 0}}};
  cv::Mat src;
  a.mat().convertTo(src, CV_32F);
  cv::Mat best(a.height, a.width, CV_32F, cv::Scalar(-1e9));
  for (int r = 0; r < 8; ++r) {
    cv::Mat kernel = cv::Mat::zeros(3, 3, CV_32F);
    for (int i = 0; i < 8; ++i) kernel.at<float>(pos[static_cast<std::size_t>(i)].first, pos[static_cast<std::size_t>(i)].second) = static_cast<float>(ring[static_cast<std::size_t>((i + 8 - r) % 8)]);
    cv::Mat resp;
    cv::filter2D(src, resp, CV_32F, kernel, {-1, -1}, 0.0, kBorder);
    best = cv::max(best, resp);
  }
  Image2D out(a.width, a.height);
  for (int y = 0; y < a.height; ++y)
    for (int x = 0; x < a.width; ++x) out.at(x, y) = cv::saturate_cast<std::uint8_t>(best.at<float>(y, x));
  return out;
}

// Binary (255) fill of enclosed background regions: background pixels not
// 4-connected to the image border become foreground.
inline Image2D fill_holes(const Image2D& a) {
  const int w = a.width, h = a.height;
  Image2D out(w, h, 255);
  std::vector<std::size_t> stack;
  auto seed = [&](int x, int y) {
    const std::size_t i = static_cast<std::size_t>(y) * w + x;
    if (a.data[i] == 0 && out.data[i] == 255) {
      out.data[i] = 0;
      stack.push_back(i);
    }
  };
  for (int x = 0; x < w; ++x) {
    seed(x, 0);
    seed(x, h - 1);
  }
  for (int y = 0; y < h; ++y) {
    seed(0, y);
    seed(w - 1, y);
  }
  static constexpr int dx[4] = {1, -1, 0, 0}, dy[4] = {0, 0, 1, -1};
  while (!stack.empty()) {
    const std::size_t p = stack.back();
    stack.pop_back();
    const int x = static_cast<int>(p % w), y = static_cast<int>(p / w);
    for (int k = 0; k < 4; ++k) {
      const int nx = x + dx[k], ny = y + dy[k];
      if (nx >= 0 && ny >= 0 && nx < w && ny < h) seed(nx, ny);
    }
  }
  return out;
}

inline Image2D remove_small_objects(const Image2D& a, int min_area) {
  const LabelMap labels = label_components(a);
  const auto areas = labels.areas();
  Image2D out = a;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto l = labels.data()[i];
    if (l != 0 && areas[l] < static_cast<std::size_t>(min_area)) out.data[i] = 0;
  }
  return out;
}

inline Image2D distance_u8(const Image2D& a) {
  const auto dist = distance_transform(a);
  float peak = 0.0f;
  for (float d : dist) peak = std::max(peak, d);
  Image2D out(a.width, a.height);
  if (peak <= 0.0f) return out;
  for (std::size_t i = 0; i < dist.size(); ++i)
    out.data[i] = static_cast<std::uint8_t>(std::lround(255.0 * dist[i] / peak));
  return out;
}

inline Image2D normalize_minmax(const Image2D& a) {
  if (a.empty()) return a;
  const auto [lo, hi] = std::minmax_element(a.data.begin(), a.data.end());
  const int mn = *lo, mx = *hi;
  if (mx == mn) return Image2D(a.width, a.height);
  return pointwise(a, [&](std::uint8_t v) {
    return static_cast<std::uint8_t>((2 * 255 * (v - mn) + (mx - mn)) / (2 * (mx - mn)));
  });
}

inline Image2D gamma(const Image2D& a, int raw) {
  const double g = std::exp2((raw - 128) / 64.0);
  std::array<std::uint8_t, 256> lut{};
  for (int v = 0; v < 256; ++v) lut[static_cast<std::size_t>(v)] = static_cast<std::uint8_t>(std::lround(255.0 * std::pow(v / 255.0, g)));
  return pointwise(a, [&](std::uint8_t v) { return lut[v]; });
}

// 8-neighbour local binary pattern, bit set when neighbour >= centre; the
// border is reflected.
inline Image2D local_binary_pattern(const Image2D& a) {
  const int w = a.width, h = a.height;
  Image2D out(w, h);
  auto reflect = [](int i, int n) {
    if (n == 1) return 0;
    if (i < 0) return -i - 1;
    if (i >= n) return 2 * n - i - 1;
    return i;
  };
  static constexpr int ox[8] = {-1, 0, 1, 1, 1, 0, -1, -1};
  static constexpr int oy[8] = {-1, -1, -1, 0, 1, 1, 1, 0};
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const auto c = a.at(x, y);
      int code = 0;
      for (int k = 0; k < 8; ++k)
        if (a.at(reflect(x + ox[k], w), reflect(y + oy[k], h)) >= c) code |= 1 << k;
      out.at(x, y) = static_cast<std::uint8_t>(code);
    }
  return out;
}

inline Image2D canny(const Image2D& a, int t1, int t2) {
  return with_mat(a, [&](const cv::Mat& s, cv::Mat& d) {
    cv::Canny(s, d, std::min(t1, t2), std::max(t1, t2), 3, false);
  });
}

}  // namespace prim

/// Identifier and semantics version of the default roster; both enter the hash.
inline constexpr const char* kDefaultLibraryId = "default-42";
inline constexpr const char* kDefaultLibrarySemantics = "u8-saturating/reflect-border/v1";

inline FunctionLibrary make_default_library() {
  using namespace prim;
  using K = ParamKind;
  auto A = [](Inputs in) -> const Image2D& { return *in[0]; };
  auto B = [](Inputs in) -> const Image2D& { return *in[1]; };

  std::vector<FunctionSpec> f;
  auto add = [&](std::string name, int arity, std::vector<ParamKind> params, Transform t, std::string py) {
    f.push_back(FunctionSpec{0, std::move(name), arity, std::move(params), std::move(t), std::move(py)});
  };

  add("Erosion", 1, {K::kernel}, [=](Inputs in, Args p) { return morph(A(in), cv::MORPH_ERODE, p[0]); },
      "morph({a}, cv2.MORPH_ERODE, {p0})");
  add("Dilation", 1, {K::kernel}, [=](Inputs in, Args p) { return morph(A(in), cv::MORPH_DILATE, p[0]); },
      "morph({a}, cv2.MORPH_DILATE, {p0})");
  add("Add", 2, {}, [=](Inputs in, Args) { return pointwise(A(in), B(in), [](int a, int b) { return saturate_u8(a + b); }); },
      "cv2.add({a}, {b})");
  add("Sub", 2, {}, [=](Inputs in, Args) { return pointwise(A(in), B(in), [](int a, int b) { return saturate_u8(a - b); }); },
      "cv2.subtract({a}, {b})");
  add("Square", 1, {}, [=](Inputs in, Args) { return pointwise(A(in), [](int a) { return static_cast<std::uint8_t>((a * a + 127) / 255); }); },
      "((({a}.astype(np.int32) ** 2) + 127) // 255).astype(np.uint8)");
  add("And", 2, {}, [=](Inputs in, Args) { return pointwise(A(in), B(in), [](std::uint8_t a, std::uint8_t b) { return static_cast<std::uint8_t>(a & b); }); },
      "cv2.bitwise_and({a}, {b})");
  add("Or", 2, {}, [=](Inputs in, Args) { return pointwise(A(in), B(in), [](std::uint8_t a, std::uint8_t b) { return static_cast<std::uint8_t>(a | b); }); },
      "cv2.bitwise_or({a}, {b})");
  add("Not", 1, {}, [=](Inputs in, Args) { return pointwise(A(in), [](std::uint8_t a) { return static_cast<std::uint8_t>(~a); }); },
      "cv2.bitwise_not({a})");
  add("Laplacian", 1, {K::small_kernel}, [=](Inputs in, Args p) { return laplacian(A(in), p[0]); },
      "abs_u8(cv2.Laplacian({a}, cv2.CV_32F, ksize={p0}, borderType=cv2.BORDER_REFLECT))");
  add("Sobel", 1, {K::small_kernel}, [=](Inputs in, Args p) { return sobel(A(in), p[0], true, true); },
      "sobel({a}, {p0}, True, True)");
  add("GaussianBlur", 1, {K::kernel}, [=](Inputs in, Args p) {
        const int k = p[0];
        if (k <= 1) return A(in);
        return with_mat(A(in), [&](const cv::Mat& s, cv::Mat& d) { cv::GaussianBlur(s, d, {k, k}, 0.0, 0.0, kBorder); });
      },
      "cv2.GaussianBlur({a}, ({p0}, {p0}), 0, borderType=cv2.BORDER_REFLECT)");
  add("MedianBlur", 1, {K::kernel}, [=](Inputs in, Args p) {
        const int k = p[0];
        if (k <= 1) return A(in);
        return with_mat(A(in), [&](const cv::Mat& s, cv::Mat& d) { cv::medianBlur(s, d, k); });
      },
      "cv2.medianBlur({a}, {p0})");
  add("BlackHat", 1, {K::kernel}, [=](Inputs in, Args p) { return morph(A(in), cv::MORPH_BLACKHAT, p[0]); },
      "morph({a}, cv2.MORPH_BLACKHAT, {p0})");
  add("FillHoles", 1, {}, [=](Inputs in, Args) { return fill_holes(A(in)); }, "fill_holes({a})");
  add("Min", 2, {}, [=](Inputs in, Args) { return pointwise(A(in), B(in), [](std::uint8_t a, std::uint8_t b) { return std::min(a, b); }); },
      "cv2.min({a}, {b})");
  add("Threshold", 1, {K::threshold}, [=](Inputs in, Args p) {
        const int t = p[0];
        return pointwise(A(in), [t](int a) { return static_cast<std::uint8_t>(a > t ? 255 : 0); });
      },
      "cv2.threshold({a}, {p0}, 255, cv2.THRESH_BINARY)[1]");
  add("Max", 2, {}, [=](Inputs in, Args) { return pointwise(A(in), B(in), [](std::uint8_t a, std::uint8_t b) { return std::max(a, b); }); },
      "cv2.max({a}, {b})");
  add("Mean", 2, {}, [=](Inputs in, Args) { return pointwise(A(in), B(in), [](int a, int b) { return static_cast<std::uint8_t>((a + b + 1) / 2); }); },
      "((({a}.astype(np.int32) + {b}) + 1) // 2).astype(np.uint8)");
  add("AbsDiff", 2, {}, [=](Inputs in, Args) { return pointwise(A(in), B(in), [](int a, int b) { return static_cast<std::uint8_t>(std::abs(a - b)); }); },
      "cv2.absdiff({a}, {b})");
  add("Sqrt", 1, {}, [=](Inputs in, Args) { return pointwise(A(in), [](int a) { return static_cast<std::uint8_t>(std::lround(std::sqrt(255.0 * a))); }); },
      "np.rint(np.sqrt(255.0 * {a})).astype(np.uint8)");
  add("Multiply", 2, {}, [=](Inputs in, Args) { return pointwise(A(in), B(in), [](int a, int b) { return static_cast<std::uint8_t>((a * b + 127) / 255); }); },
      "((({a}.astype(np.int32) * {b}) + 127) // 255).astype(np.uint8)");
  add("Xor", 2, {}, [=](Inputs in, Args) { return pointwise(A(in), B(in), [](std::uint8_t a, std::uint8_t b) { return static_cast<std::uint8_t>(a ^ b); }); },
      "cv2.bitwise_xor({a}, {b})");
  add("ShiftLeft", 1, {K::shift}, [=](Inputs in, Args p) {
        const int s = p[0];
        return pointwise(A(in), [s](int a) { return saturate_u8(a << s); });
      },
      "np.minimum({a}.astype(np.int32) << {p0}, 255).astype(np.uint8)");
  add("ShiftRight", 1, {K::shift}, [=](Inputs in, Args p) {
        const int s = p[0];
        return pointwise(A(in), [s](int a) { return static_cast<std::uint8_t>(a >> s); });
      },
      "({a} >> {p0}).astype(np.uint8)");
  add("ThresholdToZero", 1, {K::threshold}, [=](Inputs in, Args p) {
        const int t = p[0];
        return pointwise(A(in), [t](int a) { return static_cast<std::uint8_t>(a > t ? a : 0); });
      },
      "cv2.threshold({a}, {p0}, 255, cv2.THRESH_TOZERO)[1]");
  add("OtsuThreshold", 1, {}, [=](Inputs in, Args) {
        return with_mat(A(in), [](const cv::Mat& s, cv::Mat& d) { cv::threshold(s, d, 0, 255, cv::THRESH_BINARY | cv::THRESH_OTSU); });
      },
      "cv2.threshold({a}, 0, 255, cv2.THRESH_BINARY | cv2.THRESH_OTSU)[1]");
  add("AdaptiveThreshold", 1, {K::kernel, K::offset}, [=](Inputs in, Args p) {
        const int block = std::max(3, p[0]);
        const int c = p[1];
        return with_mat(A(in), [&](const cv::Mat& s, cv::Mat& d) {
          cv::adaptiveThreshold(s, d, 255, cv::ADAPTIVE_THRESH_MEAN_C, cv::THRESH_BINARY, block, c);
        });
      },
      "cv2.adaptiveThreshold({a}, 255, cv2.ADAPTIVE_THRESH_MEAN_C, cv2.THRESH_BINARY, max(3, {p0}), {p1})");
  add("Open", 1, {K::kernel}, [=](Inputs in, Args p) { return morph(A(in), cv::MORPH_OPEN, p[0]); },
      "morph({a}, cv2.MORPH_OPEN, {p0})");
  add("Close", 1, {K::kernel}, [=](Inputs in, Args p) { return morph(A(in), cv::MORPH_CLOSE, p[0]); },
      "morph({a}, cv2.MORPH_CLOSE, {p0})");
  add("MorphGradient", 1, {K::kernel}, [=](Inputs in, Args p) { return morph(A(in), cv::MORPH_GRADIENT, p[0]); },
      "morph({a}, cv2.MORPH_GRADIENT, {p0})");
  add("TopHat", 1, {K::kernel}, [=](Inputs in, Args p) { return morph(A(in), cv::MORPH_TOPHAT, p[0]); },
      "morph({a}, cv2.MORPH_TOPHAT, {p0})");
  add("RemoveSmallObjects", 1, {K::threshold}, [=](Inputs in, Args p) { return remove_small_objects(A(in), p[0]); },
      "remove_small_objects({a}, {p0})");
  add("BoxBlur", 1, {K::kernel}, [=](Inputs in, Args p) {
        const int k = p[0];
        if (k <= 1) return A(in);
        return with_mat(A(in), [&](const cv::Mat& s, cv::Mat& d) { cv::blur(s, d, {k, k}, {-1, -1}, kBorder); });
      },
      "cv2.blur({a}, ({p0}, {p0}), borderType=cv2.BORDER_REFLECT)");
  add("Scharr", 1, {}, [=](Inputs in, Args) { return scharr(A(in)); }, "scharr({a})");
  add("Canny", 1, {K::threshold, K::threshold}, [=](Inputs in, Args p) { return canny(A(in), p[0], p[1]); },
      "cv2.Canny({a}, min({p0}, {p1}), max({p0}, {p1}))");
  add("SobelX", 1, {K::small_kernel}, [=](Inputs in, Args p) { return sobel(A(in), p[0], true, false); },
      "sobel({a}, {p0}, True, False)");
  add("SobelY", 1, {K::small_kernel}, [=](Inputs in, Args p) { return sobel(A(in), p[0], false, true); },
      "sobel({a}, {p0}, False, True)");
  add("Kirsch", 1, {}, [=](Inputs in, Args) { return kirsch(A(in)); }, "kirsch({a})");
  add("Normalize", 1, {}, [=](Inputs in, Args) { return normalize_minmax(A(in)); }, "normalize({a})");
  add("Gamma", 1, {K::raw}, [=](Inputs in, Args p) { return gamma(A(in), p[0]); }, "gamma({a}, {p0})");
  add("DistanceTransform", 1, {}, [=](Inputs in, Args) { return distance_u8(A(in)); }, "distance_u8({a})");
  add("LocalBinaryPattern", 1, {}, [=](Inputs in, Args) { return local_binary_pattern(A(in)); }, "lbp({a})");

  return FunctionLibrary(kDefaultLibraryId, kDefaultLibrarySemantics, std::move(f));
}

/// Process-wide default library (constructed once, immutable).
inline const FunctionLibrary& default_library() {
  static const FunctionLibrary lib = make_default_library();
  return lib;
}

}  // namespace cgpseg
