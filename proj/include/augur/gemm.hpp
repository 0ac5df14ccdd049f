#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "augur/error.hpp"

namespace augur::gemm {

// Cache blocking, GotoBLAS order: an NC-wide panel of B is packed once per
// KC slice, MC rows of A are packed per block, and an MR x NR register tile
// is accumulated by the micro-kernel.
inline constexpr std::int64_t kMR = 6;
inline constexpr std::int64_t kNR = 16;
inline constexpr std::int64_t kMC = 120;
inline constexpr std::int64_t kKC = 256;
inline constexpr std::int64_t kNC = 2048;

// Below this many columns of B the packed path wastes most of each tile, so
// the product is computed as one dot product per output element.
inline constexpr std::int64_t kNarrowColumns = 4;

// Packing buffers, reusable across calls of any size.
class Workspace {
 public:
  float* packed_a(std::size_t count) { return grow(a_, count); }
  float* packed_b(std::size_t count) { return grow(b_, count); }
  float* column(std::size_t count) { return grow(col_, count); }

 private:
  static float* grow(std::vector<float>& buf, std::size_t count) {
    if (buf.size() < count) buf.resize(count);
    return buf.data();
  }
  std::vector<float> a_, b_, col_;
};

namespace detail {

// Packs rows [0, mc) x cols [0, kc) of A (leading dimension lda) into
// MR-row strips laid out k-major; the last strip is zero padded.
inline void pack_a(const float* a, std::int64_t lda, std::int64_t mc, std::int64_t kc, float* out) {
  for (std::int64_t i0 = 0; i0 < mc; i0 += kMR) {
    const std::int64_t rows = std::min(kMR, mc - i0);
    for (std::int64_t p = 0; p < kc; ++p) {
      for (std::int64_t i = 0; i < rows; ++i) out[i] = a[(i0 + i) * lda + p];
      for (std::int64_t i = rows; i < kMR; ++i) out[i] = 0.0f;
      out += kMR;
    }
  }
}

// Packs rows [0, kc) x cols [0, nc) of B into NR-column strips.
inline void pack_b(const float* b, std::int64_t ldb, std::int64_t kc, std::int64_t nc, float* out) {
  for (std::int64_t j0 = 0; j0 < nc; j0 += kNR) {
    const std::int64_t cols = std::min(kNR, nc - j0);
    for (std::int64_t p = 0; p < kc; ++p) {
      const float* row = b + p * ldb + j0;
      for (std::int64_t j = 0; j < cols; ++j) out[j] = row[j];
      for (std::int64_t j = cols; j < kNR; ++j) out[j] = 0.0f;
      out += kNR;
    }
  }
}

inline void micro_kernel(std::int64_t kc, const float* __restrict ap, const float* __restrict bp,
                         float* __restrict c, std::int64_t ldc, std::int64_t rows,
                         std::int64_t cols, bool accumulate) {
  float acc[kMR][kNR] = {};
  for (std::int64_t p = 0; p < kc; ++p) {
    const float* __restrict bv = bp + p * kNR;
    const float* __restrict av = ap + p * kMR;
#pragma GCC unroll 6
    for (std::int64_t i = 0; i < kMR; ++i) {
      const float a = av[i];
#pragma GCC unroll 16
      for (std::int64_t j = 0; j < kNR; ++j) acc[i][j] += a * bv[j];
    }
  }
  if (rows == kMR && cols == kNR) {
    for (std::int64_t i = 0; i < kMR; ++i) {
      float* crow = c + i * ldc;
      if (accumulate) {
        for (std::int64_t j = 0; j < kNR; ++j) crow[j] += acc[i][j];
      } else {
        for (std::int64_t j = 0; j < kNR; ++j) crow[j] = acc[i][j];
      }
    }
    return;
  }
  for (std::int64_t i = 0; i < rows; ++i) {
    float* crow = c + i * ldc;
    for (std::int64_t j = 0; j < cols; ++j) crow[j] = accumulate ? crow[j] + acc[i][j] : acc[i][j];
  }
}

inline float dot(const float* __restrict x, const float* __restrict y, std::int64_t len) {
  constexpr std::int64_t kLanes = 16;
  float lanes[kLanes] = {};
  std::int64_t p = 0;
  for (; p + kLanes <= len; p += kLanes) {
    for (std::int64_t j = 0; j < kLanes; ++j) lanes[j] += x[p + j] * y[p + j];
  }
  float tail = 0.0f;
  for (; p < len; ++p) tail += x[p] * y[p];
  float sum = 0.0f;
  for (float v : lanes) sum += v;
  return sum + tail;
}

inline void multiply_narrow(const float* a, const float* b, float* c, std::int64_t n,
                            std::int64_t m, std::int64_t k, Workspace& ws) {
  float* col = ws.column(static_cast<std::size_t>(k));
  for (std::int64_t j = 0; j < m; ++j) {
    for (std::int64_t p = 0; p < k; ++p) col[p] = b[p * m + j];
    for (std::int64_t i = 0; i < n; ++i) c[i * m + j] = dot(a + i * k, col, k);
  }
}

}  // namespace detail

// Row-major C[n x m] = A[n x k] * B[k x m]; C is overwritten.
inline void multiply(std::span<const float> a, std::span<const float> b, std::span<float> c,
                     std::int64_t n, std::int64_t m, std::int64_t k, Workspace& ws) {
  if (n < 1 || m < 1 || k < 1) throw std::invalid_argument("gemm dimensions must be >= 1");
  if (a.size() < static_cast<std::size_t>(n * k) || b.size() < static_cast<std::size_t>(k * m) ||
      c.size() < static_cast<std::size_t>(n * m))
    throw std::invalid_argument("gemm buffer smaller than its dimensions");

  if (m <= kNarrowColumns) {
    detail::multiply_narrow(a.data(), b.data(), c.data(), n, m, k, ws);
    return;
  }

  const std::int64_t nc_max = std::min(kNC, m);
  const std::int64_t mc_max = std::min(kMC, n);
  float* bp = ws.packed_b(static_cast<std::size_t>(kKC * ((nc_max + kNR - 1) / kNR) * kNR));
  float* ap = ws.packed_a(static_cast<std::size_t>(kKC * ((mc_max + kMR - 1) / kMR) * kMR));

  for (std::int64_t jc = 0; jc < m; jc += kNC) {
    const std::int64_t nc = std::min(kNC, m - jc);
    for (std::int64_t pc = 0; pc < k; pc += kKC) {
      const std::int64_t kc = std::min(kKC, k - pc);
      detail::pack_b(b.data() + pc * m + jc, m, kc, nc, bp);
      for (std::int64_t ic = 0; ic < n; ic += kMC) {
        const std::int64_t mc = std::min(kMC, n - ic);
        detail::pack_a(a.data() + ic * k + pc, k, mc, kc, ap);
        for (std::int64_t jr = 0; jr < nc; jr += kNR) {
          for (std::int64_t ir = 0; ir < mc; ir += kMR) {
            detail::micro_kernel(kc, ap + ir * kc, bp + jr * kc,
                                 c.data() + (ic + ir) * m + jc + jr, m, std::min(kMR, mc - ir),
                                 std::min(kNR, nc - jr), pc > 0);
          }
        }
      }
    }
  }
}

enum class FillMode {
  Random,     // A and B pseudorandom
  IdentityA,  // A = I (requires n == k), B pseudorandom
};

// Operands of one benchmark GEMM. Values are multiples of 1/8 in [-1, 1],
// drawn from std::mt19937 (its output sequence is fixed by the standard), so
// small products can be checked by hand.
struct Operands {
  std::int64_t n = 0, m = 0, k = 0;
  std::vector<float> a, b, c;

  static float draw(std::mt19937& rng) {
    return static_cast<float>(static_cast<int>(rng() % 17) - 8) / 8.0f;
  }

  static std::uint64_t bytes_needed(std::int64_t n, std::int64_t m, std::int64_t k) {
    const auto un = static_cast<std::uint64_t>(n), um = static_cast<std::uint64_t>(m),
               uk = static_cast<std::uint64_t>(k);
    return sizeof(float) * (un * uk + uk * um + un * um);
  }

  Operands(std::int64_t n_, std::int64_t m_, std::int64_t k_, std::uint32_t seed,
           FillMode mode = FillMode::Random, std::uint64_t memory_cap = std::uint64_t{1} << 30)
      : n(n_), m(m_), k(k_) {
    if (n < 1 || m < 1 || k < 1) throw std::invalid_argument("gemm dimensions must be >= 1");
    if (mode == FillMode::IdentityA && n != k)
      throw std::invalid_argument("identity fill needs n == k");
    const std::uint64_t bytes = bytes_needed(n, m, k);
    if (bytes > memory_cap)
      throw AllocationFailure("gemm (" + std::to_string(n) + "," + std::to_string(m) + "," +
                              std::to_string(k) + ") needs " + std::to_string(bytes) +
                              " bytes, cap is " + std::to_string(memory_cap));
    try {
      a.resize(static_cast<std::size_t>(n * k));
      b.resize(static_cast<std::size_t>(k * m));
      c.assign(static_cast<std::size_t>(n * m), 0.0f);
    } catch (const std::bad_alloc&) {
      throw AllocationFailure("out of memory allocating gemm operands");
    }
    std::mt19937 rng(seed);
    if (mode == FillMode::IdentityA) {
      for (std::int64_t i = 0; i < n; ++i) a[static_cast<std::size_t>(i * k + i)] = 1.0f;
    } else {
      for (float& v : a) v = draw(rng);
    }
    for (float& v : b) v = draw(rng);
  }
};

// Sum of all entries of C, accumulated in double.
inline double checksum(std::span<const float> c) {
  double sum = 0.0;
  for (float v : c) sum += v;
  return sum;
}

// Computes C = A*B for seeded operands and returns checksum(C).
inline double run(std::int64_t n, std::int64_t m, std::int64_t k, std::uint32_t seed,
                  FillMode mode = FillMode::Random,
                  std::uint64_t memory_cap = std::uint64_t{1} << 30) {
  Operands ops(n, m, k, seed, mode, memory_cap);
  Workspace ws;
  multiply(ops.a, ops.b, ops.c, n, m, k, ws);
  return checksum(ops.c);
}

}  // namespace augur::gemm
