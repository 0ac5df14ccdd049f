#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "augur/descriptor.hpp"
#include "augur/error.hpp"

namespace augur {

// floor((input + 2*pad - kernel) / stride) + 1
inline std::int64_t conv_output_dim(std::int64_t input_extent, std::int64_t kernel,
                                    std::int64_t pad, std::int64_t stride) {
  if (stride < 1 || kernel < 1 || pad < 0 || input_extent < 1 || input_extent + 2 * pad < kernel)
    throw ShapeError(ShapeErrorKind::KernelExceedsInput, "",
                     "kernel " + std::to_string(kernel) + " exceeds padded input " +
                         std::to_string(input_extent) + "+2*" + std::to_string(pad));
  return (input_extent + 2 * pad - kernel) / stride + 1;
}

// Pooling rounds up, then drops a trailing window that would start entirely
// inside the padding.
inline std::int64_t pool_output_dim(std::int64_t input_extent, std::int64_t kernel,
                                    std::int64_t pad, std::int64_t stride) {
  if (stride < 1 || kernel < 1 || pad < 0 || input_extent < 1 || input_extent + 2 * pad < kernel)
    throw ShapeError(ShapeErrorKind::KernelExceedsInput, "",
                     "pooling window " + std::to_string(kernel) + " exceeds padded input " +
                         std::to_string(input_extent) + "+2*" + std::to_string(pad));
  const std::int64_t span = input_extent + 2 * pad - kernel;
  std::int64_t out = (span + stride - 1) / stride + 1;
  if (pad > 0 && (out - 1) * stride >= input_extent + pad) --out;
  return out;
}

struct LayerShapes {
  std::vector<TensorShape> inputs;
  TensorShape output;
};

struct ShapeTable {
  std::map<std::string, TensorShape> blobs;
  std::map<std::string, LayerShapes> layers;

  const TensorShape& blob(const std::string& name) const { return blobs.at(name); }
  const LayerShapes& layer(const std::string& name) const { return layers.at(name); }
};

namespace detail {

// Rejects shapes whose element count would not fit comfortably in int64.
inline void check_volume(const TensorShape& s, const std::string& layer) {
  constexpr std::int64_t kLimit = std::int64_t{1} << 48;
  std::int64_t v = 0;
  if (__builtin_mul_overflow(s.channels, s.height, &v) || __builtin_mul_overflow(v, s.width, &v) ||
      v > kLimit)
    throw ShapeError(ShapeErrorKind::ShapeMismatch, layer, "blob volume too large");
}

}  // namespace detail

inline TensorShape infer_layer_shape(const LayerSpec& layer, const std::vector<TensorShape>& in) {
  const TensorShape& x = in.front();
  try {
    switch (layer.kind) {
      case LayerKind::Convolution: {
        const auto& p = layer.as<ConvolutionParams>();
        return {p.num_output, conv_output_dim(x.height, p.kernel_size, p.pad, p.stride),
                conv_output_dim(x.width, p.kernel_size, p.pad, p.stride)};
      }
      case LayerKind::Pooling: {
        const auto& p = layer.as<PoolingParams>();
        if (p.global) return {x.channels, 1, 1};
        return {x.channels, pool_output_dim(x.height, p.kernel_size, p.pad, p.stride),
                pool_output_dim(x.width, p.kernel_size, p.pad, p.stride)};
      }
      case LayerKind::InnerProduct:
        return {layer.as<InnerProductParams>().num_output, 1, 1};
      case LayerKind::Concat: {
        TensorShape out = x;
        for (std::size_t i = 1; i < in.size(); ++i) {
          if (in[i].height != x.height || in[i].width != x.width)
            throw ShapeError(ShapeErrorKind::ShapeMismatch, layer.name,
                             "Concat bottoms differ in spatial size");
          out.channels += in[i].channels;
        }
        return out;
      }
      case LayerKind::Eltwise:
        for (std::size_t i = 1; i < in.size(); ++i) {
          if (!(in[i] == x))
            throw ShapeError(ShapeErrorKind::ShapeMismatch, layer.name, "Eltwise bottoms differ in shape");
        }
        return x;
      default:
        return x;
    }
  } catch (const ShapeError& e) {
    if (!e.layer().empty()) throw;
    throw ShapeError(e.kind(), layer.name, e.what());
  }
}

// Traces blob shapes through the network in layer order. In-place layers
// leave their blob's entry untouched.
inline ShapeTable infer_shapes(const NetworkDescriptor& net) {
  ShapeTable table;
  table.blobs[net.input_name] = net.input_shape;
  for (const LayerSpec& layer : net.layers) {
    LayerShapes shapes;
    for (const auto& bottom : layer.bottoms) {
      auto it = table.blobs.find(bottom);
      if (it == table.blobs.end())
        throw ShapeError(ShapeErrorKind::ShapeMismatch, layer.name,
                         "bottom '" + bottom + "' has no shape");
      shapes.inputs.push_back(it->second);
    }
    if (shapes.inputs.empty())
      throw ShapeError(ShapeErrorKind::ShapeMismatch, layer.name, "layer has no bottoms");
    shapes.output = infer_layer_shape(layer, shapes.inputs);
    detail::check_volume(shapes.output, layer.name);
    if (!layer.in_place()) table.blobs[layer.top] = shapes.output;
    table.layers[layer.name] = std::move(shapes);
  }
  return table;
}

}  // namespace augur
