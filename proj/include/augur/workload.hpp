#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "augur/descriptor.hpp"
#include "augur/shape_inference.hpp"

namespace augur {

// One GEMM [n x k] * [k x m] executed `group_repeat` times.
//
// Convolution lowers through im2col: n is the number of kernels per group,
// k = K*K*(C_in/g) is the kernel volume, m = O_h*O_w the number of output
// positions, and the GEMM repeats once per group. InnerProduct is the m = 1
// case with k = C_in*H_in*W_in.
struct MatMulSpec {
  std::string layer;
  LayerKind kind = LayerKind::Convolution;
  std::int64_t n = 1;
  std::int64_t m = 1;
  std::int64_t k = 1;
  std::int64_t group_repeat = 1;

  std::uint64_t flops() const {
    return static_cast<std::uint64_t>(group_repeat) * static_cast<std::uint64_t>(n) *
           static_cast<std::uint64_t>(m) * static_cast<std::uint64_t>(k);
  }
  bool is_fully_connected() const { return kind == LayerKind::InnerProduct; }

  friend bool operator==(const MatMulSpec&, const MatMulSpec&) = default;
};

inline std::optional<MatMulSpec> layer_matmul(const LayerSpec& layer, const ShapeTable& shapes) {
  const LayerShapes& s = shapes.layer(layer.name);
  const TensorShape& in = s.inputs.front();
  if (layer.kind == LayerKind::Convolution) {
    const auto& p = layer.as<ConvolutionParams>();
    return MatMulSpec{layer.name,
                      layer.kind,
                      p.num_output / p.group,
                      s.output.spatial(),
                      p.kernel_size * p.kernel_size * (in.channels / p.group),
                      p.group};
  }
  if (layer.kind == LayerKind::InnerProduct) {
    return MatMulSpec{layer.name, layer.kind, layer.as<InnerProductParams>().num_output, 1,
                      in.volume(), 1};
  }
  return std::nullopt;
}

inline std::vector<MatMulSpec> extract_matmuls(const NetworkDescriptor& net, const ShapeTable& shapes) {
  std::vector<MatMulSpec> specs;
  for (const LayerSpec& layer : net.layers) {
    if (auto spec = layer_matmul(layer, shapes)) specs.push_back(std::move(*spec));
  }
  return specs;
}

// Operation count of one layer, counting a multiply-accumulate as one FLOP.
// Non-GEMM layers follow fixed per-element conventions: pooling costs one op
// per window element, LRN one per element per neighbour, BatchNorm three per
// element, ReLU/Scale/Eltwise one per output element.
inline std::uint64_t layer_flops(const LayerSpec& layer, const ShapeTable& shapes) {
  const LayerShapes& s = shapes.layer(layer.name);
  const auto out = static_cast<std::uint64_t>(s.output.volume());
  const TensorShape& in = s.inputs.front();
  switch (layer.kind) {
    case LayerKind::Convolution:
    case LayerKind::InnerProduct:
      return layer_matmul(layer, shapes)->flops();
    case LayerKind::Pooling: {
      const auto& p = layer.as<PoolingParams>();
      const auto window = p.global ? static_cast<std::uint64_t>(in.spatial())
                                   : static_cast<std::uint64_t>(p.kernel_size * p.kernel_size);
      return out * window;
    }
    case LayerKind::LRN:
      return static_cast<std::uint64_t>(in.volume()) *
             static_cast<std::uint64_t>(layer.as<LrnParams>().local_size);
    case LayerKind::BatchNorm:
      return 3 * out;
    case LayerKind::ReLU:
    case LayerKind::Scale:
    case LayerKind::Eltwise:
      return out;
    case LayerKind::Concat:
    case LayerKind::Dropout:
    case LayerKind::Softmax:
      return 0;
  }
  return 0;
}

struct LayerFlops {
  std::string layer;
  LayerKind kind = LayerKind::ReLU;
  std::uint64_t flops = 0;
};

struct FlopsReport {
  std::vector<LayerFlops> layers;
  std::map<LayerKind, std::uint64_t> by_kind;
  std::uint64_t total = 0;

  std::uint64_t of_kind(LayerKind kind) const {
    auto it = by_kind.find(kind);
    return it == by_kind.end() ? 0 : it->second;
  }

  // Fraction of the total attributed to `kind`, in [0, 1].
  double share(LayerKind kind) const {
    return total == 0 ? 0.0 : static_cast<double>(of_kind(kind)) / static_cast<double>(total);
  }
};

inline FlopsReport network_flops(const NetworkDescriptor& net, const ShapeTable& shapes) {
  FlopsReport report;
  for (const LayerSpec& layer : net.layers) {
    const std::uint64_t f = layer_flops(layer, shapes);
    report.layers.push_back({layer.name, layer.kind, f});
    report.by_kind[layer.kind] += f;
    report.total += f;
  }
  return report;
}

}  // namespace augur
