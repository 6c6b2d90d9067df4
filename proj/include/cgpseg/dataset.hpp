#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "json.hpp"

#include "cgpseg/error.hpp"
#include "cgpseg/graph.hpp"
#include "cgpseg/image.hpp"
#include "cgpseg/preprocess.hpp"

namespace cgpseg {

namespace fs = std::filesystem;

// ---------------------------------------------------------------- raster I/O

/// Reads an 8-bit grayscale or colour raster (PNG, TIFF, ...). Colour images
/// come back as R, G, B planes; alpha is dropped.
inline RawImage read_image(const fs::path& path) {
  const cv::Mat m = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (m.empty()) throw Error(ErrorKind::load, "cannot read image " + path.string());
  if (m.depth() != CV_8U) throw Error(ErrorKind::load, path.string() + ": only 8-bit images are supported as inputs");
  if (m.channels() == 1) return RawImage::gray(Image2D::from_mat(m));
  if (m.channels() == 3 || m.channels() == 4) {
    std::vector<cv::Mat> bgr;
    cv::split(m, bgr);
    return RawImage::rgb(Image2D::from_mat(bgr[2]), Image2D::from_mat(bgr[1]), Image2D::from_mat(bgr[0]));
  }
  throw Error(ErrorKind::load, path.string() + ": unsupported channel count " + std::to_string(m.channels()));
}

/// Reads an 8- or 16-bit single-channel label image (0 = background).
inline LabelMap read_labels(const fs::path& path) {
  const cv::Mat m = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (m.empty()) throw Error(ErrorKind::load, "cannot read annotation " + path.string());
  if (m.channels() != 1) throw Error(ErrorKind::load, path.string() + ": annotations must be single-channel");
  cv::Mat as32;
  switch (m.depth()) {
    case CV_8U:
    case CV_16U:
    case CV_32S: m.convertTo(as32, CV_32S); break;
    default: throw Error(ErrorKind::load, path.string() + ": unsupported annotation bit depth");
  }
  std::vector<std::uint32_t> raw(static_cast<std::size_t>(m.total()));
  for (int y = 0; y < m.rows; ++y)
    for (int x = 0; x < m.cols; ++x) {
      const int v = as32.at<int>(y, x);
      if (v < 0) throw Error(ErrorKind::load, path.string() + ": negative label");
      raw[static_cast<std::size_t>(y) * m.cols + x] = static_cast<std::uint32_t>(v);
    }
  return LabelMap::relabeled(m.cols, m.rows, raw);
}

inline void write_image(const fs::path& path, const Image2D& img) {
  if (!cv::imwrite(path.string(), img.mat())) throw Error(ErrorKind::load, "cannot write " + path.string());
}

inline void write_rgb(const fs::path& path, const RawImage& img) {
  if (!img.is_rgb()) return write_image(path, img.planes.at(0));
  cv::Mat bgr;
  cv::merge(std::vector<cv::Mat>{img.planes[2].mat(), img.planes[1].mat(), img.planes[0].mat()}, bgr);
  if (!cv::imwrite(path.string(), bgr)) throw Error(ErrorKind::load, "cannot write " + path.string());
}

/// 16-bit label PNG.
inline void write_labels(const fs::path& path, const LabelMap& labels) {
  if (labels.count() > 65535) throw Error(ErrorKind::input, "more than 65535 labels cannot be stored in a 16-bit PNG");
  cv::Mat m(labels.height(), labels.width(), CV_16UC1);
  for (int y = 0; y < labels.height(); ++y)
    for (int x = 0; x < labels.width(); ++x) m.at<std::uint16_t>(y, x) = static_cast<std::uint16_t>(labels.at(x, y));
  if (!cv::imwrite(path.string(), m)) throw Error(ErrorKind::load, "cannot write " + path.string());
}

// ------------------------------------------------------------------ datasets

/// One dataset entry; `input` is already preprocessed. Instance annotations
/// are label maps; semantic masks load as labels and are compared via their
/// union.
struct DatasetEntry {
  std::string name;
  InputVector input;
  LabelMap annotation;
};

struct Dataset {
  std::string role = "train";
  PreprocessingSpec preprocessing;
  std::vector<DatasetEntry> entries;

  std::size_t size() const noexcept { return entries.size(); }
  bool empty() const noexcept { return entries.empty(); }
};

namespace detail {

inline std::string entry_context(std::size_t index, const nlohmann::json& e) {
  std::string what = "entry " + std::to_string(index);
  if (e.contains("name")) what += " ('" + e["name"].get<std::string>() + "')";
  return what;
}

inline Channels load_channels(const nlohmann::json& paths, const fs::path& base, const PreprocessingSpec& spec) {
  std::vector<RawImage> raw;
  for (const auto& p : paths) raw.push_back(read_image(base / p.get<std::string>()));
  return preprocess(raw, spec);
}

}  // namespace detail

/// Manifest schema:
///   { "role": "train" | "test",
///     "preprocessing": {"mode": "rgb" | "hsv" | "hed" | "gray" | "select", "channels": [...]},
///     "entries": [ {"name": "...", "channels": ["img.png", ...], "annotation": "gt.png"},
///                  {"stack": [["z0.png", ...], ["z1.png", ...]], "annotation": "gt.png"} ] }
/// Paths are relative to the manifest. `preprocessing_override` replaces the
/// manifest's preprocessing when set.
inline Dataset load_dataset(const fs::path& manifest_path, const std::optional<PreprocessingSpec>& preprocessing_override = {}) {
  std::ifstream in(manifest_path);
  if (!in) throw Error(ErrorKind::load, "cannot open manifest " + manifest_path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::schema, manifest_path.string() + ": " + e.what());
  }
  const fs::path base = manifest_path.parent_path();

  Dataset ds;
  try {
    ds.role = j.value("role", std::string("train"));
    ds.preprocessing = preprocessing_override ? *preprocessing_override
                       : j.contains("preprocessing") ? preprocessing_from_json(j["preprocessing"])
                                                     : PreprocessingSpec{};
    const auto& entries = j.at("entries");
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const auto& e = entries[i];
      const auto context = detail::entry_context(i, e);
      try {
        DatasetEntry entry;
        entry.name = e.value("name", "entry" + std::to_string(i));
        if (e.contains("stack")) {
          std::vector<Channels> sections;
          for (const auto& z : e["stack"]) sections.push_back(detail::load_channels(z, base, ds.preprocessing));
          entry.input = InputVector(std::move(sections));
        } else {
          entry.input = InputVector(detail::load_channels(e.at("channels"), base, ds.preprocessing));
        }
        entry.input.check();
        entry.annotation = read_labels(base / e.at("annotation").get<std::string>());
        if (entry.annotation.width() != entry.input.width() || entry.annotation.height() != entry.input.height())
          throw Error(ErrorKind::load, "annotation is " + std::to_string(entry.annotation.width()) + "x" +
                                           std::to_string(entry.annotation.height()) + " but input is " +
                                           std::to_string(entry.input.width()) + "x" + std::to_string(entry.input.height()));
        if (!ds.entries.empty() && entry.input.channel_count() != ds.entries.front().input.channel_count())
          throw Error(ErrorKind::load, "yields " + std::to_string(entry.input.channel_count()) + " channels, entry 0 yields " +
                                           std::to_string(ds.entries.front().input.channel_count()));
        ds.entries.push_back(std::move(entry));
      } catch (const Error& err) {
        throw Error(ErrorKind::load, manifest_path.string() + ": " + context + ": " + err.what());
      } catch (const nlohmann::json::exception& err) {
        throw Error(ErrorKind::schema, manifest_path.string() + ": " + context + ": " + err.what());
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::schema, manifest_path.string() + ": " + e.what());
  }
  return ds;
}

}  // namespace cgpseg
