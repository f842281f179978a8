#include <algorithm>
#include <cmath>
#include <vector>

#include "flexembed/kernels.hpp"
#include "gemm_block.hpp"

#ifdef FLEXEMBED_WITH_OPENMP
#include <omp.h>
#define FLEXEMBED_OMP_FOR(work) _Pragma("omp parallel for schedule(static) if((work) > 32768)")
#else
#define FLEXEMBED_OMP_FOR(work)
#endif

namespace flexembed::kernels {

namespace parallel {

namespace {

// Row blocks are distributed over threads; every block runs the same
// kernel as the serial path.
void gemm_blocks(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c) {
  const auto blocks = static_cast<long>((m + detail::kBlockRows - 1) / detail::kBlockRows);
  const std::size_t work = m * n * k;
  (void)work;
  FLEXEMBED_OMP_FOR(work)
  for (long bi = 0; bi < blocks; ++bi) {
    const std::size_t i0 = static_cast<std::size_t>(bi) * detail::kBlockRows;
    detail::gemm_rows(i0, std::min(m, i0 + detail::kBlockRows), n, k, a, b, c);
  }
}

}  // namespace

void gemm_nn(std::size_t m, std::size_t n, std::size_t k, std::span<const double> a,
             std::span<const double> b, std::span<double> c) {
  gemm_blocks(m, n, k, a.data(), b.data(), c.data());
}

void gemm_nt(std::size_t m, std::size_t n, std::size_t k, std::span<const double> a,
             std::span<const double> b, std::span<double> c) {
  thread_local std::vector<double> bt;
  detail::transpose(n, k, b.data(), bt);
  gemm_blocks(m, n, k, a.data(), bt.data(), c.data());
}

void gemm_tn(std::size_t m, std::size_t n, std::size_t k, std::span<const double> a,
             std::span<const double> b, std::span<double> c) {
  thread_local std::vector<double> at;
  detail::transpose(k, m, a.data(), at);
  gemm_blocks(m, n, k, at.data(), b.data(), c.data());
}

void row_cosine(const Matrix& x, Matrix& out) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  out = Matrix(n, n);
  std::vector<double> sq(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t p = 0; p < d; ++p) s += x(i, p) * x(i, p);
    sq[i] = s;
  }
  const long rows = static_cast<long>(n);
  const std::size_t work = n * n * d;
  (void)work;
  FLEXEMBED_OMP_FOR(work)
  for (long ii = 0; ii < rows; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    for (std::size_t j = 0; j < n; ++j) {
      double dot = 0.0;
      for (std::size_t p = 0; p < d; ++p) dot += x(i, p) * x(j, p);
      out(i, j) = dot / std::sqrt(sq[i] * sq[j]);
    }
  }
}

}  // namespace parallel

#ifdef FLEXEMBED_WITH_OPENMP
namespace impl = parallel;
#else
namespace impl = serial;
#endif

void gemm_nn(std::size_t m, std::size_t n, std::size_t k, std::span<const double> a,
             std::span<const double> b, std::span<double> c) {
  impl::gemm_nn(m, n, k, a, b, c);
}
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, std::span<const double> a,
             std::span<const double> b, std::span<double> c) {
  impl::gemm_nt(m, n, k, a, b, c);
}
void gemm_tn(std::size_t m, std::size_t n, std::size_t k, std::span<const double> a,
             std::span<const double> b, std::span<double> c) {
  impl::gemm_tn(m, n, k, a, b, c);
}
void row_cosine(const Matrix& x, Matrix& out) { impl::row_cosine(x, out); }

int max_threads() {
#ifdef FLEXEMBED_WITH_OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace flexembed::kernels
