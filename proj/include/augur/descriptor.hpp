#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "augur/error.hpp"

namespace augur {

enum class LayerKind {
  Convolution,
  Pooling,
  InnerProduct,
  ReLU,
  LRN,
  BatchNorm,
  Scale,
  Eltwise,
  Concat,
  Dropout,
  Softmax,
};

inline constexpr LayerKind kAllLayerKinds[] = {
    LayerKind::Convolution, LayerKind::Pooling, LayerKind::InnerProduct, LayerKind::ReLU,
    LayerKind::LRN,         LayerKind::BatchNorm, LayerKind::Scale,      LayerKind::Eltwise,
    LayerKind::Concat,      LayerKind::Dropout, LayerKind::Softmax,
};

inline std::string_view to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::Convolution: return "Convolution";
    case LayerKind::Pooling: return "Pooling";
    case LayerKind::InnerProduct: return "InnerProduct";
    case LayerKind::ReLU: return "ReLU";
    case LayerKind::LRN: return "LRN";
    case LayerKind::BatchNorm: return "BatchNorm";
    case LayerKind::Scale: return "Scale";
    case LayerKind::Eltwise: return "Eltwise";
    case LayerKind::Concat: return "Concat";
    case LayerKind::Dropout: return "Dropout";
    case LayerKind::Softmax: return "Softmax";
  }
  return "?";
}

inline std::optional<LayerKind> layer_kind_from_string(std::string_view text) {
  for (LayerKind kind : kAllLayerKinds) {
    if (to_string(kind) == text) return kind;
  }
  return std::nullopt;
}

// Kinds allowed to write their result over their input blob.
inline bool supports_in_place(LayerKind kind) {
  return kind == LayerKind::ReLU || kind == LayerKind::BatchNorm || kind == LayerKind::Scale ||
         kind == LayerKind::Dropout;
}

inline bool takes_multiple_bottoms(LayerKind kind) {
  return kind == LayerKind::Eltwise || kind == LayerKind::Concat;
}

// Channels x height x width of one blob. Batch is always 1.
struct TensorShape {
  std::int64_t channels = 0;
  std::int64_t height = 0;
  std::int64_t width = 0;

  std::int64_t spatial() const { return height * width; }
  std::int64_t volume() const { return channels * height * width; }
  bool positive() const { return channels > 0 && height > 0 && width > 0; }

  friend bool operator==(const TensorShape&, const TensorShape&) = default;
};

struct ConvolutionParams {
  std::int64_t num_output = 0;
  std::int64_t kernel_size = 0;
  std::int64_t stride = 1;
  std::int64_t pad = 0;
  std::int64_t group = 1;
  bool bias_term = true;

  friend bool operator==(const ConvolutionParams&, const ConvolutionParams&) = default;
};

enum class PoolMethod { Max, Ave };

struct PoolingParams {
  PoolMethod method = PoolMethod::Max;
  std::int64_t kernel_size = 0;
  std::int64_t stride = 1;
  std::int64_t pad = 0;
  bool global = false;

  friend bool operator==(const PoolingParams&, const PoolingParams&) = default;
};

struct InnerProductParams {
  std::int64_t num_output = 0;
  bool bias_term = true;

  friend bool operator==(const InnerProductParams&, const InnerProductParams&) = default;
};

struct LrnParams {
  std::int64_t local_size = 5;

  friend bool operator==(const LrnParams&, const LrnParams&) = default;
};

using LayerParams =
    std::variant<std::monostate, ConvolutionParams, PoolingParams, InnerProductParams, LrnParams>;

// The parameter record a layer of `kind` carries (monostate when none).
inline LayerParams default_params(LayerKind kind) {
  switch (kind) {
    case LayerKind::Convolution: return ConvolutionParams{};
    case LayerKind::Pooling: return PoolingParams{};
    case LayerKind::InnerProduct: return InnerProductParams{};
    case LayerKind::LRN: return LrnParams{};
    default: return std::monostate{};
  }
}

struct LayerSpec {
  std::string name;
  LayerKind kind = LayerKind::ReLU;
  std::vector<std::string> bottoms;
  std::string top;
  LayerParams params;
  // Where the layer block starts in the source text; not part of equality.
  SourcePos pos;

  template <typename P>
  const P& as() const {
    return std::get<P>(params);
  }

  bool in_place() const {
    return std::find(bottoms.begin(), bottoms.end(), top) != bottoms.end();
  }

  friend bool operator==(const LayerSpec& a, const LayerSpec& b) {
    return a.name == b.name && a.kind == b.kind && a.bottoms == b.bottoms && a.top == b.top &&
           a.params == b.params;
  }
};

struct NetworkDescriptor {
  std::string name;
  std::string input_name;
  TensorShape input_shape;
  std::vector<LayerSpec> layers;

  const LayerSpec* find_layer(std::string_view layer_name) const {
    for (const auto& layer : layers) {
      if (layer.name == layer_name) return &layer;
    }
    return nullptr;
  }

  friend bool operator==(const NetworkDescriptor&, const NetworkDescriptor&) = default;
};

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

struct Finding {
  std::string layer;  // empty for network-level findings
  std::string rule;
  std::string message;
  // Index into NetworkDescriptor::layers, or -1 for network-level findings.
  int layer_index = -1;
  // For "dangling-bottom": which bottom is unresolved.
  int bottom_index = -1;
};

struct ValidationReport {
  std::vector<Finding> findings;

  bool ok() const { return findings.empty(); }
  bool has(std::string_view rule) const {
    return std::any_of(findings.begin(), findings.end(),
                       [&](const Finding& f) { return f.rule == rule; });
  }
};

namespace detail {

inline bool params_match_kind(const LayerSpec& layer) {
  switch (layer.kind) {
    case LayerKind::Convolution: return std::holds_alternative<ConvolutionParams>(layer.params);
    case LayerKind::Pooling: return std::holds_alternative<PoolingParams>(layer.params);
    case LayerKind::InnerProduct: return std::holds_alternative<InnerProductParams>(layer.params);
    case LayerKind::LRN: return std::holds_alternative<LrnParams>(layer.params);
    default: return std::holds_alternative<std::monostate>(layer.params);
  }
}

inline void check_param_ranges(const LayerSpec& layer, int index, std::vector<Finding>& out) {
  auto add = [&](std::string message) {
    out.push_back({layer.name, "param-range", std::move(message), index, -1});
  };
  if (const auto* conv = std::get_if<ConvolutionParams>(&layer.params)) {
    if (conv->num_output < 1) add("num_output must be >= 1");
    if (conv->kernel_size < 1) add("kernel_size must be >= 1");
    if (conv->stride < 1) add("stride must be >= 1");
    if (conv->pad < 0) add("pad must be >= 0");
    if (conv->group < 1) add("group must be >= 1");
  } else if (const auto* pool = std::get_if<PoolingParams>(&layer.params)) {
    if (!pool->global && pool->kernel_size < 1) add("kernel_size must be >= 1");
    if (pool->stride < 1) add("stride must be >= 1");
    if (pool->pad < 0) add("pad must be >= 0");
  } else if (const auto* ip = std::get_if<InnerProductParams>(&layer.params)) {
    if (ip->num_output < 1) add("num_output must be >= 1");
  } else if (const auto* lrn = std::get_if<LrnParams>(&layer.params)) {
    if (lrn->local_size < 1 || lrn->local_size % 2 == 0) add("local_size must be odd and >= 1");
  }
}

}  // namespace detail

// Checks every structural invariant of a descriptor. Findings are reported in
// layer order; nothing is thrown.
inline ValidationReport validate(const NetworkDescriptor& net) {
  ValidationReport report;
  auto& out = report.findings;

  if (net.input_name.empty()) out.push_back({"", "input", "network input has no name", -1, -1});
  if (!net.input_shape.positive())
    out.push_back({"", "input", "input dimensions must be strictly positive", -1, -1});

  // Channel count per blob, when it can be traced.
  std::map<std::string, std::optional<std::int64_t>> channels;
  channels[net.input_name] = net.input_shape.positive()
                                 ? std::optional<std::int64_t>(net.input_shape.channels)
                                 : std::nullopt;
  std::set<std::string> names;

  for (int i = 0; i < static_cast<int>(net.layers.size()); ++i) {
    const LayerSpec& layer = net.layers[i];
    auto add = [&](std::string rule, std::string message, int bottom = -1) {
      out.push_back({layer.name, std::move(rule), std::move(message), i, bottom});
    };

    if (layer.name.empty()) add("name", "layer has no name");
    if (!names.insert(layer.name).second) add("unique-name", "duplicate layer name");

    if (!detail::params_match_kind(layer))
      add("params", "parameter record does not match kind " + std::string(to_string(layer.kind)));
    detail::check_param_ranges(layer, i, out);

    const std::size_t arity = layer.bottoms.size();
    if (takes_multiple_bottoms(layer.kind)) {
      if (arity < 2) add("arity", std::string(to_string(layer.kind)) + " needs at least 2 bottoms");
    } else if (arity != 1) {
      add("arity", std::string(to_string(layer.kind)) + " takes exactly 1 bottom");
    }

    bool inputs_known = true;
    std::vector<std::optional<std::int64_t>> in_channels;
    for (int b = 0; b < static_cast<int>(layer.bottoms.size()); ++b) {
      auto it = channels.find(layer.bottoms[b]);
      if (it == channels.end()) {
        add("dangling-bottom", "bottom '" + layer.bottoms[b] + "' is not produced earlier", b);
        inputs_known = false;
        in_channels.push_back(std::nullopt);
      } else {
        in_channels.push_back(it->second);
        if (!it->second) inputs_known = false;
      }
    }

    if (layer.top.empty()) {
      add("top", "layer has no top blob");
    } else if (layer.in_place()) {
      if (!supports_in_place(layer.kind))
        add("inplace", std::string(to_string(layer.kind)) + " cannot run in place");
    } else if (channels.count(layer.top)) {
      add("redefinition", "top '" + layer.top + "' overwrites an existing blob");
    }

    std::optional<std::int64_t> out_channels;
    if (inputs_known && !in_channels.empty()) {
      const std::int64_t c_in = *in_channels.front();
      switch (layer.kind) {
        case LayerKind::Convolution: {
          const auto* conv = std::get_if<ConvolutionParams>(&layer.params);
          if (conv && conv->group >= 1) {
            if (c_in % conv->group != 0)
              add("divisibility", "input channels " + std::to_string(c_in) +
                                      " not divisible by group " + std::to_string(conv->group));
            if (conv->num_output % conv->group != 0)
              add("divisibility", "num_output " + std::to_string(conv->num_output) +
                                      " not divisible by group " + std::to_string(conv->group));
          }
          if (conv) out_channels = conv->num_output;
          break;
        }
        case LayerKind::InnerProduct:
          if (const auto* ip = std::get_if<InnerProductParams>(&layer.params))
            out_channels = ip->num_output;
          break;
        case LayerKind::Concat: {
          std::int64_t sum = 0;
          for (const auto& c : in_channels) sum += *c;
          out_channels = sum;
          break;
        }
        default:
          out_channels = c_in;
          break;
      }
    }
    if (!layer.top.empty()) channels[layer.top] = out_channels;
  }
  return report;
}

}  // namespace augur
