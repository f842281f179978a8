#include <cmath>
#include <vector>

#include "flexembed/kernels.hpp"
#include "gemm_block.hpp"

namespace flexembed {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    data_.resize(rows * cols, 0.0);
  }
}

void Matrix::fill(double v) {
  for (auto& x : data_) x = v;
}

std::string Matrix::shape_string() const {
  return "(" + std::to_string(rows_) + "x" + std::to_string(cols_) + ")";
}

namespace kernels::serial {

void gemm_nn(std::size_t m, std::size_t n, std::size_t k, std::span<const double> a,
             std::span<const double> b, std::span<double> c) {
  detail::gemm_rows(0, m, n, k, a.data(), b.data(), c.data());
}

void gemm_nt(std::size_t m, std::size_t n, std::size_t k, std::span<const double> a,
             std::span<const double> b, std::span<double> c) {
  thread_local std::vector<double> bt;
  detail::transpose(n, k, b.data(), bt);
  detail::gemm_rows(0, m, n, k, a.data(), bt.data(), c.data());
}

void gemm_tn(std::size_t m, std::size_t n, std::size_t k, std::span<const double> a,
             std::span<const double> b, std::span<double> c) {
  thread_local std::vector<double> at;
  detail::transpose(k, m, a.data(), at);
  detail::gemm_rows(0, m, n, k, at.data(), b.data(), c.data());
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
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double dot = 0.0;
      for (std::size_t p = 0; p < d; ++p) dot += x(i, p) * x(j, p);
      out(i, j) = dot / std::sqrt(sq[i] * sq[j]);
    }
  }
}

}  // namespace kernels::serial
}  // namespace flexembed
