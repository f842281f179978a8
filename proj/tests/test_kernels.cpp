#include <doctest.h>

#include <array>
#include <cmath>
#include <vector>

#include "flexembed/kernels.hpp"
#include "flexembed/rng.hpp"

using namespace flexembed;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng, double zero_share = 0.0) {
  Matrix m(r, c);
  for (auto& v : m.values()) v = rng.uniform() < zero_share ? 0.0 : rng.uniform(-1.0, 1.0);
  return m;
}

// Textbook triple loop, used as the oracle.
Matrix naive(const Matrix& a, const Matrix& b, bool ta, bool tb) {
  const std::size_t m = ta ? a.cols() : a.rows();
  const std::size_t k = ta ? a.rows() : a.cols();
  const std::size_t n = tb ? b.rows() : b.cols();
  Matrix c(m, n);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      long double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) {
        s += static_cast<long double>(ta ? a(p, i) : a(i, p)) * (tb ? b(j, p) : b(p, j));
      }
      c(i, j) = static_cast<double>(s);
    }
  }
  return c;
}

void check_close(const Matrix& x, const Matrix& y) {
  REQUIRE(x.same_shape(y));
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(x.values()[i] == doctest::Approx(y.values()[i]).epsilon(1e-12));
}

}  // namespace

using Shape = std::array<std::size_t, 3>;

TEST_CASE("gemm variants match the naive product on awkward shapes") {
  Rng rng(7);
  const std::vector<Shape> shapes = {{1, 1, 1}, {3, 5, 7}, {4, 8, 2}, {9, 17, 13}, {64, 192, 37}, {5, 3, 0}};
  for (auto [m, n, k] : shapes) {
    const Matrix a = random_matrix(m, k, rng, 0.3), b = random_matrix(k, n, rng);
    Matrix c(m, n);
    kernels::serial::gemm_nn(m, n, k, a.values(), b.values(), c.values());
    check_close(c, naive(a, b, false, false));

    const Matrix bt = random_matrix(n, k, rng);
    Matrix c2(m, n);
    kernels::serial::gemm_nt(m, n, k, a.values(), bt.values(), c2.values());
    check_close(c2, naive(a, bt, false, true));

    const Matrix at = random_matrix(k, m, rng);
    Matrix c3(m, n);
    kernels::serial::gemm_tn(m, n, k, at.values(), b.values(), c3.values());
    check_close(c3, naive(at, b, true, false));
  }
}

TEST_CASE("gemm accumulates into the output") {
  Matrix a(1, 1, {2.0}), b(1, 1, {3.0}), c(1, 1, {1.0});
  kernels::gemm_nn(1, 1, 1, a.values(), b.values(), c.values());
  CHECK(c(0, 0) == 7.0);
}

TEST_CASE("parallel kernels are bit-identical to the serial reference") {
  Rng rng(11);
  const std::vector<Shape> shapes = {{1, 1, 1}, {7, 9, 5}, {130, 70, 90}, {257, 33, 64}};
  for (auto [m, n, k] : shapes) {
    const Matrix a = random_matrix(m, k, rng, 0.2), b = random_matrix(k, n, rng);
    const Matrix init = random_matrix(m, n, rng);
    Matrix s = init, p = init;
    kernels::serial::gemm_nn(m, n, k, a.values(), b.values(), s.values());
    kernels::parallel::gemm_nn(m, n, k, a.values(), b.values(), p.values());
    CHECK(s == p);

    const Matrix bt = random_matrix(n, k, rng);
    s = init;
    p = init;
    kernels::serial::gemm_nt(m, n, k, a.values(), bt.values(), s.values());
    kernels::parallel::gemm_nt(m, n, k, a.values(), bt.values(), p.values());
    CHECK(s == p);

    const Matrix at = random_matrix(k, m, rng);
    s = init;
    p = init;
    kernels::serial::gemm_tn(m, n, k, at.values(), b.values(), s.values());
    kernels::parallel::gemm_tn(m, n, k, at.values(), b.values(), p.values());
    CHECK(s == p);
  }
  const Matrix x = random_matrix(50, 8, rng);
  Matrix cs, cp;
  kernels::serial::row_cosine(x, cs);
  kernels::parallel::row_cosine(x, cp);
  CHECK(cs == cp);
}

TEST_CASE("pairwise matrices agree between serial and parallel fills") {
  auto f = [](std::size_t i, std::size_t j) { return std::sin(static_cast<double>(i * 31 + j)); };
  Matrix s, p;
  kernels::pairwise_symmetric_serial(23, f, s);
  kernels::pairwise_symmetric_parallel(23, f, p);
  CHECK(s == p);
  for (std::size_t i = 0; i < 23; ++i) {
    CHECK(s(i, i) == 0.0);
    for (std::size_t j = 0; j < 23; ++j) CHECK(s(i, j) == s(j, i));
  }
}

TEST_CASE("row cosine of a row with itself is one") {
  Matrix x(2, 3, {1.0, 2.0, 3.0, -4.0, 0.5, 2.0});
  Matrix c;
  kernels::row_cosine(x, c);
  CHECK(c(0, 0) == doctest::Approx(1.0));
  CHECK(c(1, 1) == doctest::Approx(1.0));
  CHECK(c(0, 1) == doctest::Approx((-4.0 + 1.0 + 6.0) / (std::sqrt(14.0) * std::sqrt(20.25))));
}
