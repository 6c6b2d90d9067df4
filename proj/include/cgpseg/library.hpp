#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "cgpseg/error.hpp"
#include "cgpseg/image.hpp"

namespace cgpseg {

/// How a raw parameter gene (0..255) becomes a concrete function argument.
enum class ParamKind {
  kernel,        // odd size 2*floor(raw/32)+1, 1..15
  small_kernel,  // odd size 2*floor(raw/64)+1, 1..7 (derivative apertures)
  threshold,     // raw, unchanged
  shift,         // floor(raw/32), 0..7
  offset,        // raw - 128, -128..127
  raw            // raw, unchanged (function interprets it)
};

inline const char* to_string(ParamKind k) {
  switch (k) {
    case ParamKind::kernel: return "kernel";
    case ParamKind::small_kernel: return "small_kernel";
    case ParamKind::threshold: return "threshold";
    case ParamKind::shift: return "shift";
    case ParamKind::offset: return "offset";
    case ParamKind::raw: return "raw";
  }
  return "raw";
}

constexpr int map_param(ParamKind kind, int raw) noexcept {
  switch (kind) {
    case ParamKind::kernel: return 2 * (raw / 32) + 1;
    case ParamKind::small_kernel: return 2 * (raw / 64) + 1;
    case ParamKind::shift: return raw / 32;
    case ParamKind::offset: return raw - 128;
    case ParamKind::threshold:
    case ParamKind::raw: return raw;
  }
  return raw;
}

/// Inputs are borrowed; `args` are already mapped through each slot's ParamKind.
using Transform = std::function<Image2D(std::span<const Image2D* const> inputs, std::span<const int> args)>;

struct FunctionSpec {
  int id = 0;  // 1-based position in the library
  std::string name;
  int arity = 1;
  std::vector<ParamKind> params;
  Transform transform;
  // Python expression used by the script exporter. Placeholders: {a} {b} for
  // inputs, {p0} {p1} for mapped arguments.
  std::string python;

  int param_count() const noexcept { return static_cast<int>(params.size()); }

  /// Mapped argument for parameter slot `slot`.
  int map(std::size_t slot, int raw) const { return map_param(params.at(slot), raw); }
};

namespace detail {
inline std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}
}  // namespace detail

/// Immutable ordered list of primitives. Arity (alpha) and parameter count
/// (rho) of the genotype are induced from the widest member.
class FunctionLibrary {
 public:
  FunctionLibrary(std::string id, std::string semantics_version, std::vector<FunctionSpec> functions)
      : id_(std::move(id)), semantics_(std::move(semantics_version)), functions_(std::move(functions)) {
    if (functions_.empty()) throw Error(ErrorKind::config, "function library is empty");
    for (std::size_t i = 0; i < functions_.size(); ++i) {
      auto& f = functions_[i];
      f.id = static_cast<int>(i + 1);
      if (f.arity < 1 || f.arity > 2) throw Error(ErrorKind::config, "function '" + f.name + "' has unsupported arity");
      if (!f.transform) throw Error(ErrorKind::config, "function '" + f.name + "' has no transform");
      alpha_ = std::max(alpha_, f.arity);
      rho_ = std::max(rho_, f.param_count());
    }
    hash_ = compute_hash();
  }

  const std::string& id() const noexcept { return id_; }
  const std::string& hash() const noexcept { return hash_; }
  int size() const noexcept { return static_cast<int>(functions_.size()); }  // phi
  int alpha() const noexcept { return alpha_; }
  int rho() const noexcept { return rho_; }
  int columns() const noexcept { return 1 + alpha_ + rho_; }

  /// 1-based lookup.
  const FunctionSpec& at(int id) const {
    if (id < 1 || id > size()) throw input_error("function id " + std::to_string(id) + " outside library");
    return functions_[static_cast<std::size_t>(id - 1)];
  }
  const std::vector<FunctionSpec>& functions() const noexcept { return functions_; }

  const FunctionSpec* find(std::string_view name) const {
    auto it = std::find_if(functions_.begin(), functions_.end(), [&](const auto& f) { return f.name == name; });
    return it == functions_.end() ? nullptr : &*it;
  }

  /// Manifest JSON (without the hash field). The hash is FNV-1a 64 over its
  /// canonical dump, so any change in roster, order, arity, or parameter
  /// mapping yields a new hash.
  nlohmann::json manifest_body() const {
    nlohmann::json fns = nlohmann::json::array();
    for (const auto& f : functions_) {
      nlohmann::json params = nlohmann::json::array();
      for (auto k : f.params) params.push_back(to_string(k));
      fns.push_back({{"id", f.id}, {"name", f.name}, {"arity", f.arity}, {"params", params}});
    }
    return {{"id", id_}, {"semantics", semantics_}, {"alpha", alpha_}, {"rho", rho_}, {"functions", fns}};
  }

  nlohmann::json manifest() const {
    auto m = manifest_body();
    m["hash"] = hash_;
    return m;
  }

 private:
  std::string compute_hash() const {
    static constexpr char hex[] = "0123456789abcdef";
    auto h = detail::fnv1a(manifest_body().dump());
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i, h >>= 4) out[static_cast<std::size_t>(i)] = hex[h & 0xF];
    return out;
  }

  std::string id_;
  std::string semantics_;
  std::vector<FunctionSpec> functions_;
  int alpha_ = 1;
  int rho_ = 0;
  std::string hash_;
};

/// Runs one primitive. `raw_params` holds at least `spec.param_count()` genes.
inline Image2D apply_primitive(const FunctionSpec& spec, std::span<const Image2D* const> inputs,
                               std::span<const int> raw_params) {
  if (static_cast<int>(inputs.size()) < spec.arity)
    throw input_error(spec.name + ": expected " + std::to_string(spec.arity) + " inputs");
  for (int i = 1; i < spec.arity; ++i) require_same_size(*inputs[0], *inputs[static_cast<std::size_t>(i)], spec.name.c_str());
  if (static_cast<int>(raw_params.size()) < spec.param_count())
    throw input_error(spec.name + ": expected " + std::to_string(spec.param_count()) + " parameters");
  int args[8] = {};
  for (int i = 0; i < spec.param_count(); ++i)
    args[i] = spec.map(static_cast<std::size_t>(i), std::clamp(raw_params[static_cast<std::size_t>(i)], 0, 255));
  return spec.transform(inputs.first(static_cast<std::size_t>(spec.arity)),
                        std::span<const int>(args, static_cast<std::size_t>(spec.param_count())));
}

inline Image2D apply_primitive(const FunctionSpec& spec, std::initializer_list<const Image2D*> inputs,
                               std::initializer_list<int> raw_params = {}) {
  return apply_primitive(spec, std::span<const Image2D* const>(inputs.begin(), inputs.size()),
                         std::span<const int>(raw_params.begin(), raw_params.size()));
}

}  // namespace cgpseg
