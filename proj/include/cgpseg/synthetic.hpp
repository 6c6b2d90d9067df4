#pragma once

// Seeded disc images with instance annotations, used for end-to-end checks
// and demos.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "cgpseg/dataset.hpp"
#include "cgpseg/image.hpp"
#include "cgpseg/preprocess.hpp"
#include "cgpseg/rng.hpp"

namespace cgpseg {

struct DiscSpec {
  int width = 128;
  int height = 128;
  int min_discs = 5;
  int max_discs = 15;
  int min_radius = 6;
  int max_radius = 14;
  int gap = 2;  // minimum background pixels between discs
  double background = 40.0;
  double foreground = 220.0;
  double noise_sigma = 20.0;
};

struct DiscSample {
  Image2D image;
  LabelMap labels;
};

/// Non-overlapping discs fully inside the frame plus Gaussian noise. Placement
/// gives up on a disc after 200 rejected positions, so crowded specs may
/// produce fewer than requested.
inline DiscSample make_disc_sample(const DiscSpec& spec, Rng& rng) {
  struct Disc {
    int x, y, r;
  };
  std::vector<Disc> discs;
  const int target = static_cast<int>(rng.uniform_int(spec.min_discs, spec.max_discs));
  for (int n = 0; n < target; ++n) {
    const int r = static_cast<int>(rng.uniform_int(spec.min_radius, spec.max_radius));
    if (2 * r + 1 > spec.width || 2 * r + 1 > spec.height) continue;
    for (int attempt = 0; attempt < 200; ++attempt) {
      const Disc d{static_cast<int>(rng.uniform_int(r, spec.width - 1 - r)), static_cast<int>(rng.uniform_int(r, spec.height - 1 - r)), r};
      const bool clear = std::all_of(discs.begin(), discs.end(), [&](const Disc& o) {
        const double reach = o.r + d.r + spec.gap + 1;
        return std::hypot(o.x - d.x, o.y - d.y) >= reach;
      });
      if (clear) {
        discs.push_back(d);
        break;
      }
    }
  }

  std::vector<std::uint32_t> raw(static_cast<std::size_t>(spec.width) * spec.height, 0);
  for (std::size_t i = 0; i < discs.size(); ++i) {
    const auto& d = discs[i];
    for (int y = d.y - d.r; y <= d.y + d.r; ++y)
      for (int x = d.x - d.r; x <= d.x + d.r; ++x)
        if ((x - d.x) * (x - d.x) + (y - d.y) * (y - d.y) <= d.r * d.r)
          raw[static_cast<std::size_t>(y) * spec.width + x] = static_cast<std::uint32_t>(i + 1);
  }
  DiscSample s{Image2D(spec.width, spec.height), LabelMap::relabeled(spec.width, spec.height, raw)};
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const double base = raw[i] ? spec.foreground : spec.background;
    s.image.data[i] = static_cast<std::uint8_t>(std::clamp(std::lround(base + spec.noise_sigma * rng.normal()), 0L, 255L));
  }
  return s;
}

/// `count` samples; sample i draws from stream (seed, first_index + i), so a
/// test split can continue where the training split stops.
inline Dataset make_disc_dataset(const DiscSpec& spec, int count, std::uint64_t seed, std::uint64_t first_index = 0,
                                 const std::string& role = "train") {
  Dataset ds;
  ds.role = role;
  ds.preprocessing = PreprocessingSpec{PreprocessMode::gray, {}};
  for (int i = 0; i < count; ++i) {
    Rng rng = Rng::stream(seed, first_index + static_cast<std::uint64_t>(i));
    auto sample = make_disc_sample(spec, rng);
    DatasetEntry e;
    e.name = "disc" + std::to_string(first_index + static_cast<std::uint64_t>(i));
    e.input = InputVector(Channels{std::move(sample.image)});
    e.annotation = std::move(sample.labels);
    ds.entries.push_back(std::move(e));
  }
  return ds;
}

/// Writes PNG images, 16-bit label PNGs and a manifest named `<role>.json`.
inline std::filesystem::path write_disc_dataset(const Dataset& ds, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : ds.entries) {
    const std::string image = e.name + ".png", labels = e.name + "_labels.png";
    write_image(dir / image, e.input.sections.at(0).at(0));
    write_labels(dir / labels, e.annotation);
    entries.push_back({{"name", e.name}, {"channels", {image}}, {"annotation", labels}});
  }
  const nlohmann::json manifest{{"role", ds.role}, {"preprocessing", to_json(ds.preprocessing)}, {"entries", entries}};
  const auto path = dir / (ds.role + ".json");
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::load, "cannot write " + path.string());
  out << manifest.dump(2) << '\n';
  return path;
}

}  // namespace cgpseg
