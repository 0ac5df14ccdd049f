#include <gtest/gtest.h>

#include <random>

#include "support.hpp"

using namespace augur;
using augur_test::load_network;

TEST(ShapeInference, ConvolutionOutputDim) {
  EXPECT_EQ(conv_output_dim(227, 11, 0, 4), 55);
  EXPECT_EQ(conv_output_dim(224, 3, 1, 1), 224);
  EXPECT_EQ(conv_output_dim(224, 7, 3, 2), 112);
  EXPECT_EQ(conv_output_dim(5, 5, 0, 1), 1);
}

TEST(ShapeInference, PoolingRoundsUp) {
  EXPECT_EQ(pool_output_dim(55, 3, 0, 2), 27);
  EXPECT_EQ(pool_output_dim(224, 2, 0, 2), 112);
  EXPECT_EQ(pool_output_dim(112, 3, 0, 2), 56);  // floor would give 55
  EXPECT_EQ(pool_output_dim(14, 3, 1, 1), 14);
  // Last window would start inside the padding.
  EXPECT_EQ(pool_output_dim(4, 2, 1, 2), 3);
}

TEST(ShapeInference, KernelLargerThanInput) {
  EXPECT_THROW(conv_output_dim(5, 7, 0, 1), ShapeError);
  EXPECT_THROW(pool_output_dim(2, 3, 0, 2), ShapeError);
  NetworkDescriptor net{"t", "data", {3, 4, 4}, {}};
  net.layers.push_back({"c", LayerKind::Convolution, {"data"}, "c", ConvolutionParams{8, 5, 1, 0, 1, true}, {}});
  try {
    infer_shapes(net);
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    EXPECT_EQ(e.kind(), ShapeErrorKind::KernelExceedsInput);
    EXPECT_EQ(e.layer(), "c");
  }
}

TEST(ShapeInference, AlexNetLadder) {
  const auto net = load_network("alexnet");
  const auto shapes = infer_shapes(net);
  EXPECT_EQ(shapes.layer("conv1").output, (TensorShape{96, 55, 55}));
  EXPECT_EQ(shapes.layer("pool1").output, (TensorShape{96, 27, 27}));
  EXPECT_EQ(shapes.layer("conv2").output, (TensorShape{256, 27, 27}));
  EXPECT_EQ(shapes.layer("pool2").output, (TensorShape{256, 13, 13}));
  EXPECT_EQ(shapes.layer("conv5").output, (TensorShape{256, 13, 13}));
  EXPECT_EQ(shapes.layer("pool5").output, (TensorShape{256, 6, 6}));
  EXPECT_EQ(shapes.layer("fc6").output, (TensorShape{4096, 1, 1}));
  EXPECT_EQ(shapes.layer("fc8").output, (TensorShape{1000, 1, 1}));
  // relu1 runs in place on conv1.
  EXPECT_EQ(shapes.blob("conv1"), (TensorShape{96, 55, 55}));
}

TEST(ShapeInference, Vgg16SpatialLadder) {
  const auto net = load_network("vgg16");
  const auto shapes = infer_shapes(net);
  const std::int64_t expected[] = {112, 56, 28, 14, 7};
  for (int i = 0; i < 5; ++i) {
    const auto& out = shapes.layer("pool" + std::to_string(i + 1)).output;
    EXPECT_EQ(out.height, expected[i]);
    EXPECT_EQ(out.width, expected[i]);
  }
  EXPECT_EQ(shapes.layer("conv1_1").output, (TensorShape{64, 224, 224}));
  EXPECT_EQ(shapes.layer("conv5_3").output, (TensorShape{512, 14, 14}));
}

TEST(ShapeInference, ConcatAndEltwise) {
  const auto googlenet = infer_shapes(load_network("googlenet"));
  EXPECT_EQ(googlenet.layer("inception_3a/output").output, (TensorShape{256, 28, 28}));
  EXPECT_EQ(googlenet.layer("pool5/7x7_s1").output, (TensorShape{1024, 1, 1}));
  const auto resnet = infer_shapes(load_network("resnet50"));
  EXPECT_EQ(resnet.layer("res2a").output, (TensorShape{256, 56, 56}));
  EXPECT_EQ(resnet.layer("res5c").output, (TensorShape{2048, 7, 7}));
  EXPECT_EQ(resnet.layer("pool5").output, (TensorShape{2048, 1, 1}));
}

TEST(ShapeInference, ConcatRejectsSpatialMismatch) {
  NetworkDescriptor net{"t", "data", {3, 8, 8}, {}};
  net.layers.push_back({"p", LayerKind::Pooling, {"data"}, "p", PoolingParams{PoolMethod::Max, 2, 2, 0, false}, {}});
  net.layers.push_back({"cat", LayerKind::Concat, {"data", "p"}, "cat", std::monostate{}, {}});
  try {
    infer_shapes(net);
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    EXPECT_EQ(e.kind(), ShapeErrorKind::ShapeMismatch);
  }
}

TEST(ShapeInference, GlobalPooling) {
  NetworkDescriptor net{"t", "data", {7, 9, 5}, {}};
  net.layers.push_back({"g", LayerKind::Pooling, {"data"}, "g", PoolingParams{PoolMethod::Ave, 0, 1, 0, true}, {}});
  EXPECT_EQ(infer_shapes(net).layer("g").output, (TensorShape{7, 1, 1}));
}

// Output extent never shrinks as the input grows, and never exceeds it for
// unpadded, stride >= 1 windows.
TEST(ShapeInference, MonotoneInInputExtent) {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::int64_t kernel = 1 + static_cast<std::int64_t>(rng() % 11);
    const std::int64_t stride = 1 + static_cast<std::int64_t>(rng() % 4);
    const std::int64_t pad = static_cast<std::int64_t>(rng() % std::min<std::int64_t>(kernel, 4));
    const std::int64_t h = std::max<std::int64_t>(1, kernel - 2 * pad) + static_cast<std::int64_t>(rng() % 200);
    EXPECT_LE(conv_output_dim(h, kernel, pad, stride), conv_output_dim(h + 1, kernel, pad, stride));
    EXPECT_LE(pool_output_dim(h, kernel, pad, stride), pool_output_dim(h + 1, kernel, pad, stride));
    EXPECT_LE(conv_output_dim(h, kernel, pad, stride), pool_output_dim(h, kernel, pad, stride));
    if (pad == 0) {
      EXPECT_LE(pool_output_dim(h, kernel, 0, stride), h);
    }
  }
}
