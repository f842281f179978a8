#pragma once

// Dense kernels used by the autodiff tape and the distance computations.
//
// Every kernel exists twice: a serial reference in `kernels::serial` and an
// OpenMP version in `kernels::parallel`. Both variants assign each output
// element to exactly one thread and accumulate it in the same index order,
// so their results are bit-identical; the unqualified entry points dispatch
// to the parallel variant when the library is built with OpenMP.

#include <cstddef>
#include <span>

#include "flexembed/matrix.hpp"

namespace flexembed::kernels {

namespace serial {

/// c(m×n) += a(m×k) · b(k×n)
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, std::span<const double> a,
             std::span<const double> b, std::span<double> c);
/// c(m×n) += a(m×k) · b(n×k)ᵀ
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, std::span<const double> a,
             std::span<const double> b, std::span<double> c);
/// c(m×n) += a(k×m)ᵀ · b(k×n)
void gemm_tn(std::size_t m, std::size_t n, std::size_t k, std::span<const double> a,
             std::span<const double> b, std::span<double> c);

/// Cosine similarity of every row pair of x (n×d) written to out (n×n).
void row_cosine(const Matrix& x, Matrix& out);

}  // namespace serial

namespace parallel {

void gemm_nn(std::size_t m, std::size_t n, std::size_t k, std::span<const double> a,
             std::span<const double> b, std::span<double> c);
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, std::span<const double> a,
             std::span<const double> b, std::span<double> c);
void gemm_tn(std::size_t m, std::size_t n, std::size_t k, std::span<const double> a,
             std::span<const double> b, std::span<double> c);
void row_cosine(const Matrix& x, Matrix& out);

}  // namespace parallel

void gemm_nn(std::size_t m, std::size_t n, std::size_t k, std::span<const double> a,
             std::span<const double> b, std::span<double> c);
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, std::span<const double> a,
             std::span<const double> b, std::span<double> c);
void gemm_tn(std::size_t m, std::size_t n, std::size_t k, std::span<const double> a,
             std::span<const double> b, std::span<double> c);
void row_cosine(const Matrix& x, Matrix& out);

/// Fill the symmetric matrix out(i, j) = out(j, i) = f(i, j) for i < j with a
/// zero diagonal. Serial reference.
template <class F>
void pairwise_symmetric_serial(std::size_t n, F&& f, Matrix& out) {
  out = Matrix(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = f(i, j);
      out(i, j) = d;
      out(j, i) = d;
    }
  }
}

/// OpenMP version of pairwise_symmetric_serial; f must be thread-safe.
template <class F>
void pairwise_symmetric_parallel(std::size_t n, F&& f, Matrix& out) {
  out = Matrix(n, n);
  const auto count = static_cast<long>(n);
#ifdef FLEXEMBED_WITH_OPENMP
#pragma omp parallel for schedule(dynamic, 1)
#endif
  for (long ii = 0; ii < count; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = f(i, j);
      out(i, j) = d;
      out(j, i) = d;
    }
  }
}

template <class F>
void pairwise_symmetric(std::size_t n, F&& f, Matrix& out) {
#ifdef FLEXEMBED_WITH_OPENMP
  pairwise_symmetric_parallel(n, std::forward<F>(f), out);
#else
  pairwise_symmetric_serial(n, std::forward<F>(f), out);
#endif
}

/// Number of threads the parallel kernels may use.
int max_threads();

}  // namespace flexembed::kernels
