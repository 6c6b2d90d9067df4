#pragma once

// Human-readable pipeline export: a canonical line-oriented description
// (grammar in docs/pipeline-dsl.md) and a standalone Python/OpenCV script.

#include <cmath>
#include <sstream>
#include <string>

#include "json.hpp"

#include "cgpseg/graph.hpp"
#include "cgpseg/library.hpp"
#include "cgpseg/model.hpp"

namespace cgpseg {

inline constexpr int kPipelineDslVersion = 1;

namespace detail {

// Endpoint fields in key order, without "kind"; numbers use the shortest
// round-trip form so the text is stable.
inline std::string endpoint_fields(const EndpointSpec& e) {
  const nlohmann::json fields = to_json(e);
  std::string s;
  for (const auto& [key, value] : fields.items()) {
    if (key == "kind") continue;
    s += ' ' + key + '=' + value.dump();
  }
  return s;
}

inline std::string replace_all(std::string text, const std::string& from, const std::string& to) {
  for (std::size_t at = text.find(from); at != std::string::npos; at = text.find(from, at + to.size()))
    text.replace(at, from.size(), to);
  return text;
}

}  // namespace detail

/// Canonical text form; identical models give byte-identical text.
inline std::string export_dsl(const PipelineModel& model, const FunctionLibrary& lib) {
  check_library(model, lib);
  const ActiveGraph graph = decode(model.genotype, lib);
  std::ostringstream out;
  out << "pipeline " << kPipelineDslVersion << '\n';
  out << "library " << model.library_id << ' ' << model.library_hash << '\n';
  out << "preprocess " << to_string(model.preprocessing.mode);
  for (int c : model.preprocessing.channels) out << ' ' << c;
  out << '\n';
  out << "inputs " << graph.inputs << '\n';
  out << "aggregate " << model.aggregation << '\n';
  for (const auto& node : graph.nodes) {
    const auto& fn = lib.at(node.function);
    out << "node " << node.address << ' ' << fn.name << " <-";
    for (int s : node.sources) out << ' ' << s;
    for (std::size_t j = 0; j < node.params.size(); ++j)
      out << ' ' << to_string(fn.params[j]) << '=' << fn.map(j, node.params[j]);
    out << '\n';
  }
  for (std::size_t k = 0; k < graph.outputs.size(); ++k) out << "output " << k << ' ' << graph.outputs[k] << '\n';
  out << "endpoint " << to_string(model.endpoint.kind) << detail::endpoint_fields(model.endpoint) << '\n';
  out << "end\n";
  return out.str();
}

/// Helpers the generated script relies on; they mirror the C++ primitives
/// (u8 saturation, reflected borders) as closely as numpy/OpenCV allow.
inline const char* python_prelude() {
  return R"PY(import cv2
import numpy as np
from scipy import ndimage
from skimage import measure, segmentation, feature


def abs_u8(f):
    return np.clip(np.rint(np.abs(f)), 0, 255).astype(np.uint8)


def morph(a, op, k):
    if k <= 1:
        if op in (cv2.MORPH_GRADIENT, cv2.MORPH_TOPHAT, cv2.MORPH_BLACKHAT):
            return np.zeros_like(a)
        return a.copy()
    return cv2.morphologyEx(a, op, np.ones((k, k), np.uint8))


def sobel(a, k, want_x, want_y):
    gx = cv2.Sobel(a, cv2.CV_32F, 1, 0, ksize=k, borderType=cv2.BORDER_REFLECT) if want_x else 0
    gy = cv2.Sobel(a, cv2.CV_32F, 0, 1, ksize=k, borderType=cv2.BORDER_REFLECT) if want_y else 0
    return abs_u8(np.abs(gx) + np.abs(gy))


def scharr(a):
    gx = cv2.Scharr(a, cv2.CV_32F, 1, 0, borderType=cv2.BORDER_REFLECT)
    gy = cv2.Scharr(a, cv2.CV_32F, 0, 1, borderType=cv2.BORDER_REFLECT)
    return abs_u8(np.abs(gx) + np.abs(gy))


def kirsch(a):
    ring = [5, 5, 5, -3, -3, -3, -3, -3]
    pos = [(0, 0), (0, 1), (0, 2), (1, 2), (2, 2), (2, 1), (2, 0), (1, 0)]
    src = a.astype(np.float32)
    best = None
    for r in range(8):
        kernel = np.zeros((3, 3), np.float32)
        for i, (y, x) in enumerate(pos):
            kernel[y, x] = ring[(i + 8 - r) % 8]
        resp = cv2.filter2D(src, cv2.CV_32F, kernel, borderType=cv2.BORDER_REFLECT)
        best = resp if best is None else np.maximum(best, resp)
    return np.clip(np.rint(best), 0, 255).astype(np.uint8)


def fill_holes(a):
    return ndimage.binary_fill_holes(a > 0).astype(np.uint8) * 255


def remove_small_objects(a, min_area):
    labels = measure.label(a > 0, connectivity=2)
    areas = np.bincount(labels.ravel())
    out = a.copy()
    out[(labels > 0) & (areas[labels] < min_area)] = 0
    return out


def edt(mask):
    return ndimage.distance_transform_edt(np.pad(mask > 0, 1))[1:-1, 1:-1].astype(np.float32)


def distance_u8(a):
    d = edt(a)
    peak = d.max()
    if peak <= 0:
        return np.zeros_like(a)
    return np.floor(255.0 * d / peak + 0.5).astype(np.uint8)


def normalize(a):
    lo, hi = int(a.min()), int(a.max())
    if lo == hi:
        return np.zeros_like(a)
    v = a.astype(np.int64) - lo
    return ((2 * 255 * v + (hi - lo)) // (2 * (hi - lo))).astype(np.uint8)


def gamma(a, raw):
    g = 2.0 ** ((raw - 128) / 64.0)
    lut = np.floor(255.0 * (np.arange(256) / 255.0) ** g + 0.5).astype(np.uint8)
    return lut[a]


def lbp(a):
    p = np.pad(a, 1, mode="symmetric")
    h, w = a.shape
    out = np.zeros((h, w), np.uint8)
    offsets = [(-1, -1), (0, -1), (1, -1), (1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0)]
    for k, (dx, dy) in enumerate(offsets):
        out |= ((p[1 + dy:1 + dy + h, 1 + dx:1 + dx + w] >= a).astype(np.uint8) << k)
    return out


def watershed_from(topo, seeds, mask):
    return segmentation.watershed(topo, seeds, mask=mask)
)PY";
}

namespace detail {

inline std::string python_endpoint(const EndpointSpec& e) {
  std::ostringstream s;
  const long level = std::lround(e.sigma);
  switch (e.kind) {
    case EndpointKind::threshold_binary:
      s << "    return np.where(z[0] > " << level << ", 255, 0).astype(np.uint8)\n";
      break;
    case EndpointKind::threshold_to_zero:
      s << "    return np.where(z[0] > " << level << ", z[0], 0).astype(np.uint8)\n";
      break;
    case EndpointKind::connected_components:
      s << "    return measure.label(z[0] > 0, connectivity=2)\n";
      break;
    case EndpointKind::marker_controlled_watershed:
      s << "    mask = z[0] > 0\n"
        << "    seeds = measure.label(mask & (z[1] > 0), connectivity=2)\n"
        << "    topo = -cv2.GaussianBlur(edt(mask), (0, 0), " << e.sigma << ", borderType=cv2.BORDER_REFLECT)\n"
        << "    return watershed_from(topo, seeds, mask)\n";
      break;
    case EndpointKind::local_max_watershed:
      s << "    mask = z[0] > 0\n"
        << "    d = edt(mask)\n"
        << "    peaks = feature.peak_local_max(d, min_distance=" << e.min_peak_distance
        << ", threshold_abs=1.0, exclude_border=False)\n"
        << "    seeds = np.zeros(d.shape, np.int32)\n"
        << "    for i, (y, x) in enumerate(peaks):\n"
        << "        seeds[y, x] = i + 1\n"
        << "    gy, gx = np.gradient(d)\n"
        << "    topo = cv2.GaussianBlur(np.hypot(gx, gy).astype(np.float32), (0, 0), " << e.sigma
        << ", borderType=cv2.BORDER_REFLECT)\n"
        << "    return watershed_from(topo, seeds, mask)\n";
      break;
    case EndpointKind::hough_circle:
      s << "    from skimage.transform import hough_circle, hough_circle_peaks\n"
        << "    on = z[0] > " << e.edge_threshold << "\n"
        << "    edges = on & ~ndimage.binary_erosion(on, np.ones((3, 3)), border_value=0)\n"
        << "    radii = np.arange(" << e.radius_min << ", " << e.radius_max + 1 << ")\n"
        << "    acc = hough_circle(edges, radii, normalize=True)\n"
        << "    _, cx, cy, r = hough_circle_peaks(acc, radii, min_xdistance=" << e.radius_min
        << ", min_ydistance=" << e.radius_min << ", threshold=" << e.accumulator_threshold << ")\n"
        << "    labels = np.zeros(on.shape, np.int32)\n"
        << "    yy, xx = np.mgrid[:on.shape[0], :on.shape[1]]\n"
        << "    for i, (x, y, rad) in enumerate(zip(cx, cy, r)):\n"
        << "        labels[((xx - x) ** 2 + (yy - y) ** 2 <= rad ** 2) & (labels == 0)] = i + 1\n"
        << "    return labels\n";
      break;
  }
  return s.str();
}

}  // namespace detail

/// Standalone script: `heuristics(channels)` reproduces the graph, and
/// `endpoint(z)` reimplements the endpoint with scikit-image (labels may
/// differ from the native flood order at ridge pixels).
inline std::string export_python(const PipelineModel& model, const FunctionLibrary& lib) {
  check_library(model, lib);
  const ActiveGraph graph = decode(model.genotype, lib);
  std::ostringstream out;
  out << "# Generated pipeline; library " << model.library_id << " (" << model.library_hash << ")\n";
  out << "# preprocess: " << to_string(model.preprocessing.mode) << ", inputs: " << graph.inputs << "\n\n";
  out << python_prelude() << "\n\n";
  out << "def heuristics(channels):\n";
  out << "    \"\"\"channels: list of " << graph.inputs << " uint8 arrays after preprocessing.\"\"\"\n";
  auto var = [&](int address) {
    return address <= graph.inputs ? "channels[" + std::to_string(address - 1) + "]" : "n" + std::to_string(address);
  };
  for (const auto& node : graph.nodes) {
    const auto& fn = lib.at(node.function);
    std::string expr = fn.python;
    expr = detail::replace_all(expr, "{a}", var(node.sources.at(0)));
    if (node.sources.size() > 1) expr = detail::replace_all(expr, "{b}", var(node.sources[1]));
    for (std::size_t j = 0; j < node.params.size(); ++j)
      expr = detail::replace_all(expr, "{p" + std::to_string(j) + "}", std::to_string(fn.map(j, node.params[j])));
    out << "    " << var(node.address) << " = " << expr << "  # " << fn.name << '\n';
  }
  out << "    return [";
  for (std::size_t k = 0; k < graph.outputs.size(); ++k) out << (k ? ", " : "") << var(graph.outputs[k]);
  out << "]\n\n\n";
  out << "def aggregate(per_section):\n"
      << "    n = len(per_section)\n"
      << "    if n == 1:\n"
      << "        return per_section[0]\n"
      << "    stacked = [np.stack([s[k] for s in per_section]).astype(np.int64) for k in range(len(per_section[0]))]\n"
      << "    return [((2 * s.sum(axis=0) + n) // (2 * n)).astype(np.uint8) for s in stacked]\n\n\n";
  out << "def endpoint(z):\n" << detail::python_endpoint(model.endpoint) << "\n\n";
  out << "def predict(sections):\n"
      << "    \"\"\"sections: list (one per z-section) of channel lists.\"\"\"\n"
      << "    return endpoint(aggregate([heuristics(c) for c in sections]))\n";
  return out.str();
}

}  // namespace cgpseg
