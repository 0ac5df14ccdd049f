#pragma once

#include <algorithm>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "augur/descriptor.hpp"
#include "augur/shape_inference.hpp"

namespace augur {

inline constexpr double kBytesPerMiB = 1024.0 * 1024.0;

inline double to_mib(std::uint64_t bytes) { return static_cast<double>(bytes) / kBytesPerMiB; }

enum class WorkspaceConvention {
  Sum,  // every CONV layer owns its im2col buffer
  Max,  // one buffer shared by all CONV layers
};

struct MemoryOptions {
  std::uint64_t element_size = 4;
  WorkspaceConvention workspace = WorkspaceConvention::Sum;
};

struct NamedBytes {
  std::string name;
  std::uint64_t bytes = 0;
};

struct MemoryReport {
  std::uint64_t element_size = 4;
  WorkspaceConvention convention = WorkspaceConvention::Sum;

  std::vector<NamedBytes> parameters;  // per layer, every layer listed
  std::uint64_t parameter_bytes = 0;

  std::vector<NamedBytes> data;  // per distinct blob, network input first
  std::uint64_t data_bytes = 0;

  std::vector<NamedBytes> workspace;  // per CONV layer
  std::uint64_t workspace_bytes = 0;  // aggregate under `convention`

  // Framework/runtime overhead is outside the model and always zero.
  std::uint64_t framework_bytes = 0;

  std::uint64_t total_bytes() const { return parameter_bytes + data_bytes + workspace_bytes; }
};

// Learned values held by one layer.
inline std::uint64_t layer_parameter_count(const LayerSpec& layer, const ShapeTable& shapes) {
  const TensorShape& in = shapes.layer(layer.name).inputs.front();
  switch (layer.kind) {
    case LayerKind::Convolution: {
      const auto& p = layer.as<ConvolutionParams>();
      const auto weights = static_cast<std::uint64_t>(p.num_output) *
                           static_cast<std::uint64_t>(p.kernel_size * p.kernel_size) *
                           static_cast<std::uint64_t>(in.channels / p.group);
      return weights + (p.bias_term ? static_cast<std::uint64_t>(p.num_output) : 0);
    }
    case LayerKind::InnerProduct: {
      const auto& p = layer.as<InnerProductParams>();
      const auto weights =
          static_cast<std::uint64_t>(p.num_output) * static_cast<std::uint64_t>(in.volume());
      return weights + (p.bias_term ? static_cast<std::uint64_t>(p.num_output) : 0);
    }
    case LayerKind::BatchNorm:  // mean and variance per channel
    case LayerKind::Scale:      // scale and shift per channel
      return 2 * static_cast<std::uint64_t>(in.channels);
    default:
      return 0;
  }
}

struct ByteBreakdown {
  std::vector<NamedBytes> items;
  std::uint64_t total = 0;
};

inline ByteBreakdown parameter_memory(const NetworkDescriptor& net, const ShapeTable& shapes,
                                      std::uint64_t element_size = 4) {
  ByteBreakdown out;
  for (const LayerSpec& layer : net.layers) {
    const std::uint64_t bytes = element_size * layer_parameter_count(layer, shapes);
    out.items.push_back({layer.name, bytes});
    out.total += bytes;
  }
  return out;
}

// Network input plus every distinct top blob; in-place layers add nothing.
inline ByteBreakdown data_memory(const NetworkDescriptor& net, const ShapeTable& shapes,
                                 std::uint64_t element_size = 4) {
  ByteBreakdown out;
  std::set<std::string> seen;
  auto add = [&](const std::string& blob) {
    if (!seen.insert(blob).second) return;
    const std::uint64_t bytes = element_size * static_cast<std::uint64_t>(shapes.blob(blob).volume());
    out.items.push_back({blob, bytes});
    out.total += bytes;
  };
  add(net.input_name);
  for (const LayerSpec& layer : net.layers) add(layer.top);
  return out;
}

// im2col buffer of every CONV layer: element_size * K*K*(C_in/g) * O_h*O_w.
inline ByteBreakdown conv_workspaces(const NetworkDescriptor& net, const ShapeTable& shapes,
                                     std::uint64_t element_size = 4) {
  ByteBreakdown out;
  for (const LayerSpec& layer : net.layers) {
    if (layer.kind != LayerKind::Convolution) continue;
    const auto& p = layer.as<ConvolutionParams>();
    const LayerShapes& s = shapes.layer(layer.name);
    const auto k = static_cast<std::uint64_t>(p.kernel_size * p.kernel_size *
                                              (s.inputs.front().channels / p.group));
    const auto bytes = element_size * k * static_cast<std::uint64_t>(s.output.spatial());
    out.items.push_back({layer.name, bytes});
    out.total += bytes;
  }
  return out;
}

inline std::uint64_t workspace_memory(const NetworkDescriptor& net, const ShapeTable& shapes,
                                      WorkspaceConvention convention = WorkspaceConvention::Sum,
                                      std::uint64_t element_size = 4) {
  const ByteBreakdown per_layer = conv_workspaces(net, shapes, element_size);
  if (convention == WorkspaceConvention::Sum) return per_layer.total;
  std::uint64_t largest = 0;
  for (const auto& item : per_layer.items) largest = std::max(largest, item.bytes);
  return largest;
}

inline MemoryReport memory_report(const NetworkDescriptor& net, const ShapeTable& shapes,
                                  const MemoryOptions& options = {}) {
  MemoryReport report;
  report.element_size = options.element_size;
  report.convention = options.workspace;

  auto params = parameter_memory(net, shapes, options.element_size);
  report.parameters = std::move(params.items);
  report.parameter_bytes = params.total;

  auto data = data_memory(net, shapes, options.element_size);
  report.data = std::move(data.items);
  report.data_bytes = data.total;

  auto ws = conv_workspaces(net, shapes, options.element_size);
  report.workspace = std::move(ws.items);
  report.workspace_bytes = workspace_memory(net, shapes, options.workspace, options.element_size);
  return report;
}

}  // namespace augur
