#pragma once

// Register-blocked row kernel shared by the serial and OpenMP gemms. Each
// output element accumulates a(i, p)·b(p, j) onto its initial value for
// p = 0, 1, … in order, whatever block it falls in, so any partition of the
// rows gives bit-identical results.

#include <cstddef>
#include <vector>

namespace flexembed::kernels::detail {

inline constexpr std::size_t kBlockRows = 4;
inline constexpr std::size_t kBlockCols = 8;

// c rows [i0, i1) += a(·×k) · b(k×n), all row-major.
inline void gemm_rows(std::size_t i0, std::size_t i1, std::size_t n, std::size_t k, const double* a,
                      const double* b, double* c) {
  constexpr std::size_t R = kBlockRows, C = kBlockCols;
  std::size_t i = i0;
  for (; i + R <= i1; i += R) {
    const double* a0 = a + i * k;
    const double* a1 = a0 + k;
    const double* a2 = a1 + k;
    const double* a3 = a2 + k;
    std::size_t j = 0;
    for (; j + C <= n; j += C) {
      double acc[R][C];
      for (std::size_t r = 0; r < R; ++r) {
        for (std::size_t q = 0; q < C; ++q) acc[r][q] = c[(i + r) * n + j + q];
      }
      for (std::size_t p = 0; p < k; ++p) {
        const double x0 = a0[p], x1 = a1[p], x2 = a2[p], x3 = a3[p];
        if (x0 == 0.0 && x1 == 0.0 && x2 == 0.0 && x3 == 0.0) continue;
        const double* bp = b + p * n + j;
        for (std::size_t q = 0; q < C; ++q) {
          acc[0][q] += x0 * bp[q];
          acc[1][q] += x1 * bp[q];
          acc[2][q] += x2 * bp[q];
          acc[3][q] += x3 * bp[q];
        }
      }
      for (std::size_t r = 0; r < R; ++r) {
        for (std::size_t q = 0; q < C; ++q) c[(i + r) * n + j + q] = acc[r][q];
      }
    }
    for (; j < n; ++j) {
      for (std::size_t r = 0; r < R; ++r) {
        const double* ar = a + (i + r) * k;
        double s = c[(i + r) * n + j];
        for (std::size_t p = 0; p < k; ++p) {
          if (ar[p] != 0.0) s += ar[p] * b[p * n + j];
        }
        c[(i + r) * n + j] = s;
      }
    }
  }
  for (; i < i1; ++i) {
    const double* ai = a + i * k;
    double* ci = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double x = ai[p];
      if (x == 0.0) continue;
      const double* bp = b + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += x * bp[j];
    }
  }
}

// out(cols×rows) = in(rows×cols)ᵀ
inline void transpose(std::size_t rows, std::size_t cols, const double* in, std::vector<double>& out) {
  out.resize(rows * cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t q = 0; q < cols; ++q) out[q * rows + r] = in[r * cols + q];
  }
}

}  // namespace flexembed::kernels::detail
