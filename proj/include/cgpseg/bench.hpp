#pragma once

// Throughput measurement shared by the CLI and the acceptance checks.

#include <algorithm>
#include <chrono>
#include <vector>

#include "cgpseg/error.hpp"
#include "cgpseg/library.hpp"
#include "cgpseg/model.hpp"
#include "cgpseg/synthetic.hpp"

namespace cgpseg {

/// Four active nodes feeding a marker-controlled watershed:
/// mask = Erosion(Threshold(GaussianBlur(x))), markers = OtsuThreshold(x).
inline PipelineModel reference_pipeline(const FunctionLibrary& lib) {
  Genotype g = Genotype::shaped_for(lib, 1, 8, 2);
  auto node = [&](int row, const char* name, int src, int p0) {
    const auto* f = lib.find(name);
    if (!f) throw Error(ErrorKind::config, std::string("library lacks ") + name);
    g.gene(row, 0) = f->id;
    for (int j = 0; j < g.arity; ++j) g.gene(row, 1 + j) = src;
    for (int j = 0; j < g.params; ++j) g.gene(row, 1 + g.arity + j) = p0;
  };
  for (int r = 0; r < g.nodes; ++r) node(r, "Not", 1, 0);
  node(0, "GaussianBlur", 1, 64);  // 5x5
  node(1, "Threshold", 2, 128);
  node(2, "Erosion", 3, 64);
  node(3, "OtsuThreshold", 1, 0);
  g.set_output(0, 4);
  g.set_output(1, 5);

  PipelineModel m;
  m.genotype = g;
  m.library_id = lib.id();
  m.library_hash = lib.hash();
  m.preprocessing = {PreprocessMode::gray, {}};
  m.endpoint = EndpointSpec::make(EndpointKind::marker_controlled_watershed);
  return m;
}

struct Throughput {
  int iterations = 0;
  double median_seconds = 0.0;
  double images_per_second = 0.0;
};

/// Times `iterations` single-image run_model calls, cycling over `inputs`,
/// after one untimed warm-up call.
inline Throughput measure_throughput(const PipelineModel& model, const std::vector<InputVector>& inputs, int iterations,
                                     const FunctionLibrary& lib) {
  if (iterations < 1) throw Error(ErrorKind::usage, "bench needs at least one iteration");
  if (inputs.empty()) throw input_error("bench needs at least one input image");
  run_model(model, inputs.front(), lib);
  std::vector<double> seconds;
  seconds.reserve(static_cast<std::size_t>(iterations));
  for (int i = 0; i < iterations; ++i) {
    const auto& input = inputs[static_cast<std::size_t>(i) % inputs.size()];
    const auto start = std::chrono::steady_clock::now();
    run_model(model, input, lib);
    seconds.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  }
  std::sort(seconds.begin(), seconds.end());
  const std::size_t n = seconds.size();
  Throughput t;
  t.iterations = iterations;
  t.median_seconds = n % 2 ? seconds[n / 2] : 0.5 * (seconds[n / 2 - 1] + seconds[n / 2]);
  t.images_per_second = t.median_seconds > 0.0 ? 1.0 / t.median_seconds : 0.0;
  return t;
}

/// Grey disc images of the requested size for benchmarking.
inline std::vector<InputVector> bench_inputs(int width, int height, int count, std::uint64_t seed) {
  if (width < 1 || height < 1) throw Error(ErrorKind::usage, "bench image size must be positive");
  DiscSpec spec;
  spec.width = width;
  spec.height = height;
  const double scale = static_cast<double>(width) * height / (128.0 * 128.0);
  spec.min_discs = std::max(1, static_cast<int>(5 * scale));
  spec.max_discs = std::max(spec.min_discs, static_cast<int>(15 * scale));
  spec.max_radius = std::max(1, std::min({spec.max_radius, (width - 1) / 2, (height - 1) / 2}));
  spec.min_radius = std::min(spec.min_radius, spec.max_radius);
  std::vector<InputVector> out;
  for (auto& e : make_disc_dataset(spec, count, seed).entries) out.push_back(std::move(e.input));
  return out;
}

}  // namespace cgpseg
