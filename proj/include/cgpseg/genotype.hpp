#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "cgpseg/error.hpp"
#include "cgpseg/library.hpp"

namespace cgpseg {

/// Integer genotype: (nodes + outputs) rows of (1 + arity + params) genes.
///
/// Graph addresses are 1-based: inputs occupy 1..inputs, functional row k
/// (0-based) is address inputs + k + 1. Functional rows hold
/// [function, connections..., parameters...]. Output rows carry a single
/// address in column 1; their remaining columns are inert padding.
struct Genotype {
  int inputs = 1;   // iota
  int nodes = 1;    // eta
  int outputs = 1;  // o
  int arity = 1;    // alpha
  int params = 0;   // rho
  std::vector<int> matrix;

  Genotype() = default;
  Genotype(int inputs_, int nodes_, int outputs_, int arity_, int params_)
      : inputs(inputs_), nodes(nodes_), outputs(outputs_), arity(arity_), params(params_) {
    if (inputs < 1 || nodes < 1 || outputs < 1 || arity < 1 || params < 0)
      throw Error(ErrorKind::config, "genotype dimensions out of range");
    matrix.assign(static_cast<std::size_t>(rows()) * static_cast<std::size_t>(columns()), 0);
  }

  /// Shape induced by a library for the given input/node/output counts.
  static Genotype shaped_for(const FunctionLibrary& lib, int inputs, int nodes, int outputs) {
    return Genotype(inputs, nodes, outputs, lib.alpha(), lib.rho());
  }

  int rows() const noexcept { return nodes + outputs; }
  int columns() const noexcept { return 1 + arity + params; }
  int functional_genes() const noexcept { return nodes * columns(); }
  int node_address(int row) const noexcept { return inputs + row + 1; }

  int& gene(int row, int col) { return matrix[static_cast<std::size_t>(row) * columns() + col]; }
  int gene(int row, int col) const { return matrix[static_cast<std::size_t>(row) * columns() + col]; }

  int function(int row) const { return gene(row, 0); }
  int connection(int row, int j) const { return gene(row, 1 + j); }
  int parameter(int row, int j) const { return gene(row, 1 + arity + j); }
  int output(int k) const { return gene(nodes + k, 1); }
  void set_output(int k, int address) { gene(nodes + k, 1) = address; }

  /// Inclusive legal range of functional gene (row, col) given phi functions.
  struct Range {
    int lo;
    int hi;
  };
  Range functional_range(int row, int col, int phi) const {
    if (col == 0) return {1, phi};
    if (col <= arity) return {1, node_address(row) - 1};
    return {0, 255};
  }
  Range output_range() const { return {1, inputs + nodes}; }

  friend bool operator==(const Genotype&, const Genotype&) = default;
};

/// Throws ValidityError naming the first offending gene.
inline void validate(const Genotype& g, int phi) {
  if (g.inputs < 1 || g.nodes < 1 || g.outputs < 1 || g.arity < 1 || g.params < 0)
    throw ValidityError(0, 0, "genotype dimensions out of range");
  if (g.matrix.size() != static_cast<std::size_t>(g.rows()) * static_cast<std::size_t>(g.columns()))
    throw ValidityError(0, 0, "matrix has " + std::to_string(g.matrix.size()) + " genes, expected " +
                                  std::to_string(g.rows() * g.columns()));
  for (int r = 0; r < g.nodes; ++r)
    for (int c = 0; c < g.columns(); ++c) {
      const auto [lo, hi] = g.functional_range(r, c, phi);
      const int v = g.gene(r, c);
      if (v < lo || v > hi)
        throw ValidityError(static_cast<std::size_t>(r), static_cast<std::size_t>(c),
                            "value " + std::to_string(v) + " outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    }
  const auto [lo, hi] = g.output_range();
  for (int k = 0; k < g.outputs; ++k) {
    const int v = g.output(k);
    if (v < lo || v > hi)
      throw ValidityError(static_cast<std::size_t>(g.nodes + k), 1,
                          "output address " + std::to_string(v) + " outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    for (int c = 0; c < g.columns(); ++c)
      if (g.gene(g.nodes + k, c) < 0) throw ValidityError(static_cast<std::size_t>(g.nodes + k), static_cast<std::size_t>(c), "negative padding gene");
  }
}

inline void validate(const Genotype& g, const FunctionLibrary& lib) {
  if (g.arity != lib.alpha() || g.params != lib.rho())
    throw Error(ErrorKind::validity, "genotype shape (alpha=" + std::to_string(g.arity) + ", rho=" + std::to_string(g.params) +
                                         ") does not match library '" + lib.id() + "'");
  validate(g, lib.size());
}

inline bool is_valid(const Genotype& g, const FunctionLibrary& lib) noexcept {
  try {
    validate(g, lib);
    return true;
  } catch (const Error&) {
    return false;
  }
}

inline nlohmann::json to_json(const Genotype& g, const FunctionLibrary& lib) {
  return {{"iota", g.inputs}, {"eta", g.nodes},        {"o", g.outputs},
          {"alpha", g.arity}, {"rho", g.params},       {"matrix", g.matrix},
          {"library_id", lib.id()}, {"library_hash", lib.hash()}};
}

/// Parses and fully validates a genotype; the embedded library hash must
/// match `lib`.
inline Genotype genotype_from_json(const nlohmann::json& j, const FunctionLibrary& lib) {
  try {
    const auto hash = j.at("library_hash").get<std::string>();
    if (hash != lib.hash())
      throw Error(ErrorKind::hash_mismatch, "genotype was built for library '" + j.value("library_id", std::string("?")) +
                                                "' (hash " + hash + "), current library '" + lib.id() + "' has hash " + lib.hash());
    Genotype g;
    g.inputs = j.at("iota").get<int>();
    g.nodes = j.at("eta").get<int>();
    g.outputs = j.at("o").get<int>();
    g.arity = j.at("alpha").get<int>();
    g.params = j.at("rho").get<int>();
    for (const auto& v : j.at("matrix")) {
      const auto x = v.get<std::int64_t>();
      if (x < INT32_MIN || x > INT32_MAX) throw ValidityError(0, 0, "gene value overflows");
      g.matrix.push_back(static_cast<int>(x));
    }
    validate(g, lib);
    return g;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::schema, std::string("malformed genotype JSON: ") + e.what());
  }
}

}  // namespace cgpseg
