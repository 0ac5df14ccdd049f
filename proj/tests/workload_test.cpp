#include <gtest/gtest.h>

#include "support.hpp"

using namespace augur;
using augur_test::load_network;

namespace {

struct Loaded {
  NetworkDescriptor net;
  ShapeTable shapes;
};

Loaded load(const std::string& name) {
  Loaded l{load_network(name), {}};
  l.shapes = infer_shapes(l.net);
  return l;
}

MatMulSpec matmul_of(const Loaded& l, const std::string& layer) {
  const auto spec = layer_matmul(*l.net.find_layer(layer), l.shapes);
  EXPECT_TRUE(spec.has_value()) << layer;
  return spec.value_or(MatMulSpec{});
}

void expect_within(double actual, double target, double rel) {
  EXPECT_NEAR(actual, target, rel * target) << "target " << target;
}

}  // namespace

TEST(Workload, AlexNetConv1IsTheTextbookMatmul) {
  const auto a = load("alexnet");
  const auto mm = matmul_of(a, "conv1");
  EXPECT_EQ(mm.n, 96);
  EXPECT_EQ(mm.m, 3025);
  EXPECT_EQ(mm.k, 363);
  EXPECT_EQ(mm.group_repeat, 1);
  EXPECT_EQ(mm.flops(), 96u * 3025u * 363u);
}

TEST(Workload, OneByOneConvolution) {
  const auto r = load("resnet50");
  const auto mm = matmul_of(r, "res2a_branch2a");
  EXPECT_EQ(mm.n, 64);
  EXPECT_EQ(mm.m, 3136);
  EXPECT_EQ(mm.k, 64);
}

TEST(Workload, FullyConnectedIsMatrixVector) {
  const auto a = load("alexnet");
  const auto mm = matmul_of(a, "fc6");
  EXPECT_EQ(mm.n, 4096);
  EXPECT_EQ(mm.m, 1);
  EXPECT_EQ(mm.k, 9216);
  EXPECT_TRUE(mm.is_fully_connected());
}

TEST(Workload, NonGemmLayersHaveNoMatmul) {
  const auto a = load("alexnet");
  for (const char* name : {"relu1", "norm1", "pool1"})
    EXPECT_FALSE(layer_matmul(*a.net.find_layer(name), a.shapes).has_value()) << name;
  EXPECT_EQ(extract_matmuls(a.net, a.shapes).size(), 8u);
}

TEST(Workload, GroupedConvolutionSplitsKernels) {
  const auto a = load("alexnet");
  const auto mm = matmul_of(a, "conv2");
  EXPECT_EQ(mm.n, 128);
  EXPECT_EQ(mm.m, 729);
  EXPECT_EQ(mm.k, 1200);
  EXPECT_EQ(mm.group_repeat, 2);
  EXPECT_EQ(mm.flops(), 2u * 128u * 729u * 1200u);
}

// With g groups the per-group product is (N/g) x (K^2 C/g) and repeats g
// times, so the total is N * K^2 * C/g * OH * OW.
TEST(Workload, GroupedFlopsIdentity) {
  for (std::int64_t g : {1, 2, 4, 8}) {
    NetworkDescriptor net{"t", "data", {32, 20, 20}, {}};
    net.layers.push_back({"c", LayerKind::Convolution, {"data"}, "c", ConvolutionParams{64, 3, 1, 1, g, true}, {}});
    const auto shapes = infer_shapes(net);
    const auto mm = *layer_matmul(net.layers[0], shapes);
    EXPECT_EQ(mm.group_repeat, g);
    EXPECT_EQ(mm.flops(), static_cast<std::uint64_t>(64 * 9 * (32 / g) * 400));
    EXPECT_EQ(layer_flops(net.layers[0], shapes), mm.flops());
  }
}

TEST(Workload, ElementwiseFlops) {
  const auto a = load("alexnet");
  EXPECT_EQ(layer_flops(*a.net.find_layer("relu1"), a.shapes), 290400u);
  EXPECT_EQ(layer_flops(*a.net.find_layer("norm1"), a.shapes), 290400u * 5u);
  EXPECT_EQ(layer_flops(*a.net.find_layer("pool1"), a.shapes), 96u * 27u * 27u * 9u);
}

TEST(Workload, AlexNetFlops) {
  const auto a = load("alexnet");
  const auto report = network_flops(a.net, a.shapes);
  EXPECT_EQ(report.total, 728552384u);
  EXPECT_EQ(report.of_kind(LayerKind::Convolution), 665784864u);
  EXPECT_EQ(report.of_kind(LayerKind::InnerProduct), 58621952u);
  expect_within(static_cast<double>(report.total), 729e6, 0.02);
  expect_within(static_cast<double>(report.of_kind(LayerKind::Convolution)), 666e6, 0.02);
  expect_within(static_cast<double>(report.of_kind(LayerKind::InnerProduct)), 59e6, 0.02);
  EXPECT_GT(report.share(LayerKind::Convolution), 0.9);
}

TEST(Workload, Vgg16Flops) {
  const auto v = load("vgg16");
  const auto report = network_flops(v.net, v.shapes);
  expect_within(static_cast<double>(report.of_kind(LayerKind::Convolution)), 15360e6, 0.02);
  expect_within(static_cast<double>(report.of_kind(LayerKind::InnerProduct)), 124e6, 0.02);
}

TEST(Workload, ReportAggregatesEqualRowSums) {
  for (const char* name : {"alexnet", "vgg16", "googlenet", "resnet50"}) {
    const auto l = load(name);
    const auto report = network_flops(l.net, l.shapes);
    std::uint64_t sum = 0, by_kind = 0;
    for (const auto& row : report.layers) sum += row.flops;
    for (const auto& [kind, v] : report.by_kind) by_kind += v;
    EXPECT_EQ(sum, report.total) << name;
    EXPECT_EQ(by_kind, report.total) << name;
    ASSERT_EQ(report.layers.size(), l.net.layers.size());
  }
}

TEST(Workload, GemmLayersDominateFlops) {
  for (const char* name : {"alexnet", "vgg16", "googlenet", "resnet50"}) {
    const auto l = load(name);
    const auto report = network_flops(l.net, l.shapes);
    std::uint64_t gemm = 0;
    for (const auto& mm : extract_matmuls(l.net, l.shapes)) gemm += mm.flops();
    EXPECT_EQ(gemm, report.of_kind(LayerKind::Convolution) + report.of_kind(LayerKind::InnerProduct)) << name;
    EXPECT_GT(static_cast<double>(gemm) / static_cast<double>(report.total), 0.95) << name;
  }
}
