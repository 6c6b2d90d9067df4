#pragma once

#include <algorithm>
#include <chrono>
#include <vector>

#include "cgpseg/dataset.hpp"
#include "cgpseg/endpoints.hpp"
#include "cgpseg/error.hpp"
#include "cgpseg/graph.hpp"
#include "cgpseg/metrics.hpp"
#include "cgpseg/model.hpp"

namespace cgpseg {

/// Metric (higher is better) of one prediction against its annotation.
inline double score_prediction(const FinalOutput& prediction, const LabelMap& annotation, const FitnessSpec& spec) {
  if (spec.metric == MetricKind::average_precision)
    return average_precision(as_labels(prediction), annotation, spec.iou_threshold);
  return iou(as_mask(prediction), annotation.mask());
}

struct Evaluation {
  double error = 1.0;               // mean of (1 - metric)
  std::vector<double> metrics;      // per entry, dataset order
  double median_seconds = 0.0;      // per-entry wall time, when timed
};

/// Mean prediction error of a decoded graph over a dataset, summed in entry
/// order so the result is bit-stable.
inline Evaluation evaluate(const ActiveGraph& graph, const EndpointSpec& endpoint, const Dataset& data,
                           const FitnessSpec& spec, const FunctionLibrary& lib, bool timed = false) {
  if (data.empty()) throw input_error("cannot evaluate on an empty dataset");
  Evaluation ev;
  ev.metrics.reserve(data.size());
  std::vector<double> seconds;
  double total = 0.0;
  for (const auto& entry : data.entries) {
    const auto start = std::chrono::steady_clock::now();
    const auto prediction = run_graph(graph, endpoint, entry.input, lib);
    if (timed) seconds.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
    const double metric = score_prediction(prediction, entry.annotation, spec);
    ev.metrics.push_back(metric);
    total += 1.0 - metric;
  }
  ev.error = total / static_cast<double>(data.size());
  if (timed) {
    std::nth_element(seconds.begin(), seconds.begin() + static_cast<std::ptrdiff_t>(seconds.size() / 2), seconds.end());
    ev.median_seconds = seconds[seconds.size() / 2];
  }
  return ev;
}

/// Mean of (1 - metric) over the dataset; 0 means every entry is perfect.
inline double fitness(const PipelineModel& model, const Dataset& data, const FitnessSpec& spec, const FunctionLibrary& lib) {
  check_library(model, lib);
  return evaluate(decode(model.genotype, lib), model.endpoint, data, spec, lib).error;
}

}  // namespace cgpseg
