#pragma once

#include <span>
#include <vector>

#include "cgpseg/error.hpp"
#include "cgpseg/genotype.hpp"
#include "cgpseg/image.hpp"
#include "cgpseg/library.hpp"

namespace cgpseg {

/// One channel set: iota images of identical size.
using Channels = std::vector<Image2D>;

/// Heuristic images produced by a graph, one per output row.
using IntermediateOutput = std::vector<Image2D>;

/// A 2D input is a single section; a z-stack holds one Channels per slice.
struct InputVector {
  std::vector<Channels> sections;

  InputVector() = default;
  explicit InputVector(Channels channels) { sections.push_back(std::move(channels)); }
  explicit InputVector(std::vector<Channels> stack) : sections(std::move(stack)) {}

  bool is_stack() const noexcept { return sections.size() > 1; }
  int channel_count() const { return sections.empty() ? 0 : static_cast<int>(sections.front().size()); }
  int width() const { return sections.at(0).at(0).width; }
  int height() const { return sections.at(0).at(0).height; }

  /// Throws unless every section has the same channel count and every image
  /// the same dimensions.
  void check() const {
    if (sections.empty() || sections.front().empty()) throw input_error("input vector is empty");
    const auto& ref = sections.front().front();
    for (const auto& s : sections) {
      if (s.size() != sections.front().size()) throw input_error("z-sections differ in channel count");
      for (const auto& img : s) require_same_size(ref, img, "input vector");
    }
  }
};

struct ActiveNode {
  int address = 0;
  int function = 0;
  std::vector<int> sources;  // only the slots the function reads
  std::vector<int> params;   // raw genes, only the slots the function reads

  friend bool operator==(const ActiveNode&, const ActiveNode&) = default;
};

/// Decoded phenotype: active nodes in ascending address (topological) order.
struct ActiveGraph {
  int inputs = 0;
  std::vector<ActiveNode> nodes;
  std::vector<int> outputs;

  int active_count() const noexcept { return static_cast<int>(nodes.size()); }

  friend bool operator==(const ActiveGraph&, const ActiveGraph&) = default;
};

/// Keeps only the nodes reachable backwards from an output address. Unused
/// connection and parameter slots of low-arity functions do not propagate
/// activity.
inline ActiveGraph decode(const Genotype& g, const FunctionLibrary& lib) {
  validate(g, lib);
  std::vector<char> active(static_cast<std::size_t>(g.nodes), 0);
  auto mark = [&](int address) {
    if (address > g.inputs) active[static_cast<std::size_t>(address - g.inputs - 1)] = 1;
  };
  for (int k = 0; k < g.outputs; ++k) mark(g.output(k));
  // Edges point to strictly smaller addresses, so one descending sweep suffices.
  for (int r = g.nodes - 1; r >= 0; --r) {
    if (!active[static_cast<std::size_t>(r)]) continue;
    const auto& fn = lib.at(g.function(r));
    for (int j = 0; j < fn.arity; ++j) mark(g.connection(r, j));
  }

  ActiveGraph graph;
  graph.inputs = g.inputs;
  for (int r = 0; r < g.nodes; ++r) {
    if (!active[static_cast<std::size_t>(r)]) continue;
    const auto& fn = lib.at(g.function(r));
    ActiveNode node{g.node_address(r), fn.id, {}, {}};
    for (int j = 0; j < fn.arity; ++j) node.sources.push_back(g.connection(r, j));
    for (int j = 0; j < fn.param_count(); ++j) node.params.push_back(g.parameter(r, j));
    graph.nodes.push_back(std::move(node));
  }
  for (int k = 0; k < g.outputs; ++k) graph.outputs.push_back(g.output(k));
  return graph;
}

/// Evaluates the active nodes in order over one channel set.
inline IntermediateOutput execute(const ActiveGraph& graph, std::span<const Image2D> channels, const FunctionLibrary& lib) {
  if (static_cast<int>(channels.size()) != graph.inputs)
    throw input_error("graph expects " + std::to_string(graph.inputs) + " channels, got " + std::to_string(channels.size()));
  for (const auto& c : channels) require_same_size(channels[0], c, "execute");

  // Results indexed by address - inputs - 1; only active slots are filled.
  std::vector<Image2D> values(graph.nodes.empty() ? 0 : static_cast<std::size_t>(graph.nodes.back().address - graph.inputs));
  auto lookup = [&](int address) -> const Image2D& {
    return address <= graph.inputs ? channels[static_cast<std::size_t>(address - 1)]
                                   : values[static_cast<std::size_t>(address - graph.inputs - 1)];
  };

  const Image2D* srcs[2] = {nullptr, nullptr};
  for (const auto& node : graph.nodes) {
    const auto& fn = lib.at(node.function);
    for (std::size_t j = 0; j < node.sources.size(); ++j) srcs[j] = &lookup(node.sources[j]);
    values[static_cast<std::size_t>(node.address - graph.inputs - 1)] =
        apply_primitive(fn, std::span<const Image2D* const>(srcs, node.sources.size()), node.params);
  }

  IntermediateOutput out;
  out.reserve(graph.outputs.size());
  for (int address : graph.outputs) out.push_back(lookup(address));
  return out;
}

/// Pixelwise mean of per-section heuristics, rounded half up.
inline IntermediateOutput aggregate(std::span<const IntermediateOutput> sections) {
  if (sections.empty()) throw input_error("aggregate: no sections");
  if (sections.size() == 1) return sections.front();
  const auto& first = sections.front();
  for (const auto& s : sections) {
    if (s.size() != first.size()) throw input_error("aggregate: sections differ in output count");
    for (std::size_t c = 0; c < s.size(); ++c) require_same_size(first[c], s[c], "aggregate");
  }
  const std::size_t n = sections.size();
  IntermediateOutput out;
  for (std::size_t c = 0; c < first.size(); ++c) {
    Image2D img(first[c].width, first[c].height);
    for (std::size_t i = 0; i < img.size(); ++i) {
      std::size_t sum = 0;
      for (const auto& s : sections) sum += s[c].data[i];
      // floor(sum / n + 1/2) in exact integer arithmetic
      img.data[i] = static_cast<std::uint8_t>((2 * sum + n) / (2 * n));
    }
    out.push_back(std::move(img));
  }
  return out;
}

}  // namespace cgpseg
