#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "support.hpp"

using namespace augur;

namespace {

double reference_cell(const std::vector<float>& a, const std::vector<float>& b, std::int64_t m, std::int64_t k,
                      std::int64_t i, std::int64_t j, double* magnitude = nullptr) {
  double sum = 0.0, mag = 0.0;
  for (std::int64_t p = 0; p < k; ++p) {
    const double t = double(a[i * k + p]) * double(b[p * m + j]);
    sum += t;
    mag += std::abs(t);
  }
  if (magnitude) *magnitude = mag;
  return sum;
}

}  // namespace

// Operand values are multiples of 1/8 and k <= 64, so every partial sum is
// exact in float and the kernel must match the reference exactly.
TEST(Gemm, RandomSmallInstancesMatchReference) {
  std::mt19937 rng(2024);
  gemm::Workspace ws;
  for (int trial = 0; trial < 200; ++trial) {
    const std::int64_t n = 1 + rng() % 64, m = 1 + rng() % 64, k = 1 + rng() % 64;
    gemm::Operands ops(n, m, k, static_cast<std::uint32_t>(trial));
    gemm::multiply(ops.a, ops.b, ops.c, n, m, k, ws);
    for (std::int64_t i = 0; i < n; ++i) {
      for (std::int64_t j = 0; j < m; ++j) {
        const double ref = reference_cell(ops.a, ops.b, m, k, i, j);
        const double got = ops.c[i * m + j];
        const double rel = ref == 0.0 ? std::abs(got) : std::abs(got - ref) / std::abs(ref);
        ASSERT_LE(rel, 1e-4) << "(" << n << "," << m << "," << k << ") at " << i << "," << j;
      }
    }
  }
}

TEST(Gemm, ContinuousValuesWithinRoundingBound) {
  std::mt19937 rng(99);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  gemm::Workspace ws;
  for (int trial = 0; trial < 50; ++trial) {
    const std::int64_t n = 1 + rng() % 64, m = 1 + rng() % 64, k = 1 + rng() % 64;
    std::vector<float> a(n * k), b(k * m), c(n * m);
    for (auto& v : a) v = u(rng);
    for (auto& v : b) v = u(rng);
    gemm::multiply(a, b, c, n, m, k, ws);
    for (std::int64_t i = 0; i < n; ++i) {
      for (std::int64_t j = 0; j < m; ++j) {
        double mag = 0.0;
        const double ref = reference_cell(a, b, m, k, i, j, &mag);
        ASSERT_LE(std::abs(c[i * m + j] - ref), 1e-4 * std::max(std::abs(ref), mag));
      }
    }
  }
}

TEST(Gemm, CrossesEveryBlockingBoundary) {
  gemm::Workspace ws;
  for (auto [n, m, k] : {std::tuple<std::int64_t, std::int64_t, std::int64_t>{131, 2071, 300},
                         {7, 17, 513}, {121, 5, 257}, {6, 16, 256}}) {
    gemm::Operands ops(n, m, k, 5);
    gemm::multiply(ops.a, ops.b, ops.c, n, m, k, ws);
    for (std::int64_t idx = 0; idx < n * m; idx += 13) {
      const std::int64_t i = idx / m, j = idx % m;
      ASSERT_EQ(double(ops.c[idx]), reference_cell(ops.a, ops.b, m, k, i, j)) << n << "," << m << "," << k;
    }
  }
}

TEST(Gemm, AlexNetConv1Size) {
  gemm::Operands ops(96, 3025, 363, 42);
  gemm::Workspace ws;
  gemm::multiply(ops.a, ops.b, ops.c, 96, 3025, 363, ws);
  for (std::int64_t idx = 0; idx < 96 * 3025; idx += 37) {
    const std::int64_t i = idx / 3025, j = idx % 3025;
    const double ref = reference_cell(ops.a, ops.b, 3025, 363, i, j);
    ASSERT_LE(std::abs(ops.c[idx] - ref), 1e-4 * std::max(1.0, std::abs(ref)));
  }
}

TEST(Gemm, IdentityFillReproducesB) {
  gemm::Operands ops(40, 23, 40, 3, gemm::FillMode::IdentityA);
  gemm::Workspace ws;
  gemm::multiply(ops.a, ops.b, ops.c, 40, 23, 40, ws);
  EXPECT_EQ(ops.c, ops.b);
  EXPECT_THROW(gemm::Operands(4, 4, 5, 3, gemm::FillMode::IdentityA), std::invalid_argument);
}

// mt19937 with seed 42 yields A = [[5/8, 6/8], [3/8, 4/8]] and
// B = [[-1/8, -2/8], [-6/8, 3/8]]; C sums to -27/32.
TEST(Gemm, HandComputedChecksum) {
  gemm::Operands ops(2, 2, 2, 42);
  EXPECT_EQ(ops.a, (std::vector<float>{0.625f, 0.75f, 0.375f, 0.5f}));
  EXPECT_EQ(ops.b, (std::vector<float>{-0.125f, -0.25f, -0.75f, 0.375f}));
  EXPECT_EQ(gemm::run(2, 2, 2, 42), -0.84375);
}

TEST(Gemm, MemoryCap) {
  EXPECT_EQ(gemm::Operands::bytes_needed(2, 3, 4), 4u * (8 + 12 + 6));
  EXPECT_THROW(gemm::Operands(512, 50176, 3136, 1, gemm::FillMode::Random, std::uint64_t{1} << 20),
               AllocationFailure);
  EXPECT_THROW(gemm::Operands(0, 1, 1, 1), std::invalid_argument);
}

TEST(Gemm, RejectsShortBuffers) {
  std::vector<float> a(4), b(4), c(3);
  gemm::Workspace ws;
  EXPECT_THROW(gemm::multiply(a, b, c, 2, 2, 2, ws), std::invalid_argument);
}
