#include <doctest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <limits>

#include "flexembed/analysis.hpp"
#include "flexembed/error.hpp"
#include "flexembed/rng.hpp"
#include "flexembed/special_functions.hpp"

using namespace flexembed;
using namespace flexembed::analysis;

namespace {

const double kNaN = std::numeric_limits<double>::quiet_NaN();

clustering::Partition partition_of(std::vector<std::string> ids, std::vector<int> labels) {
  clustering::Partition p;
  p.unit_ids = std::move(ids);
  p.labels = std::move(labels);
  p.k = *std::max_element(p.labels.begin(), p.labels.end()) + 1;
  return p;
}

}  // namespace

TEST_CASE("ramp rate") {
  const std::vector<double> g = {100, 280, 100};
  CHECK(max_ramp_rate(g) == 3.0);
  const std::vector<double> gaps = {0, kNaN, 600, 540};
  CHECK(max_ramp_rate(gaps) == 1.0);
  const std::vector<double> none = {5, kNaN};
  CHECK_THROWS_AS(max_ramp_rate(none), ValidationError);
}

TEST_CASE("state frequencies ignore missing hours") {
  const std::int8_t s[] = {0, 0, 1, 2, -1, 2};
  const auto f = state_frequencies(s);
  CHECK(f[0] == doctest::Approx(0.4));
  CHECK(f[1] == doctest::Approx(0.2));
  CHECK(f[2] == doctest::Approx(0.4));
  const std::int8_t m[] = {-1, -1};
  CHECK_THROWS_AS(state_frequencies(m), ValidationError);
}

TEST_CASE("market value and factor") {
  const std::vector<double> flat = {10, 10, 10, 10};
  const std::vector<double> price = {20, 40, 60, 80};
  const auto a = market_value(flat, price);
  CHECK(a.value.value == doctest::Approx(50.0));
  CHECK(a.factor.value == doctest::Approx(1.0).epsilon(1e-12));
  const std::vector<double> peaky = {0, 0, 10, 30};
  const auto b = market_value(peaky, price);
  CHECK(b.value.value == doctest::Approx((600.0 + 2400.0) / 40.0));
  CHECK(b.factor.value == doctest::Approx(75.0 / 50.0));
  const std::vector<double> zero = {0, 0, 0, 0};
  CHECK_FALSE(market_value(zero, price).value.defined);
  CHECK(std::isnan(market_value(zero, price).value.value));
  const std::vector<double> gap = {5, kNaN, 5, 5};
  const std::vector<double> pgap = {kNaN, 1, 2, 4};
  CHECK(market_value(gap, pgap).value.value == doctest::Approx(3.0));
}

TEST_CASE("pearson correlation") {
  const std::vector<double> x = {1, 2, 3, 4, 5};
  const std::vector<double> y = {2, 1, 4, 3, 5};
  CHECK(pearson(x, y).value == doctest::Approx(0.8).epsilon(1e-12));
  const std::vector<double> c = {1, 1, 1, 1, 1};
  CHECK_FALSE(pearson(x, c).defined);
}

TEST_CASE("quantile uses linear interpolation") {
  CHECK(quantile({1, 2, 3, 4}, 0.5) == 2.5);
  CHECK(quantile({4, 1, kNaN, 3, 2}, 0.1) == doctest::Approx(1.3));
  CHECK(quantile({7}, 0.9) == 7.0);
}

TEST_CASE("must-run shares sum to one and follow the definition") {
  dataset::HourlyPanel p;
  p.timestamps = {0, 3600, 7200, 10800};
  p.unit_ids = {"a", "b", "c"};
  p.generation = Matrix(4, 3, {10, 0, 5, 20, 5, 0, 30, 15, 5, 0, 0, 0});
  p.covariates[dataset::kDayAheadPrice] = {-5, 30, 40, -1};
  p.covariates[dataset::kNationalLoad] = {100, 50, 200, 300};
  p.covariates[dataset::kResGeneration] = {0, 0, 0, 0};
  const auto part = partition_of({"c", "a", "b"}, {0, 1, 1});
  const auto r = mustrun_share(part, p, 0.25);
  // Qualifying hours: 0 and 3 (negative price) plus hour 1 (lowest residual).
  CHECK(r.qualifying_hours == 3);
  CHECK(r.negative_price_hours == 2);
  REQUIRE(r.clusters.size() == 2);
  const double total = 10 + 5 + 20 + 5 + 0;
  CHECK(r.clusters[0].share == doctest::Approx(5.0 / total));
  CHECK(r.clusters[1].share == doctest::Approx(35.0 / total));
  CHECK(r.clusters[0].share + r.clusters[1].share == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.clusters[1].mean_hourly_mwh == doctest::Approx(35.0 / 3.0));
  CHECK(r.clusters[1].total_gwh == doctest::Approx(0.035));
}

TEST_CASE("one-way ANOVA against a worked example and the F survival oracle") {
  const std::vector<std::vector<double>> g = {{1, 2, 3}, {4, 5, 6}, {7, 8, 9}};
  const auto r = anova_f(g);
  // SSB = 54 on 2 df, SSW = 6 on 6 df → F = 27.
  CHECK(r.statistic == doctest::Approx(27.0).epsilon(1e-12));
  CHECK(r.df1 == 2.0);
  CHECK(r.df2 == 6.0);
  boost::math::fisher_f dist(2.0, 6.0);
  CHECK(r.p_value == doctest::Approx(boost::math::cdf(boost::math::complement(dist, 27.0))).epsilon(1e-9));

  const auto same = anova_f({{1, 1}, {1, 1}});
  CHECK_FALSE(same.defined);
  const auto sep = anova_f({{1, 1}, {2, 2}});
  CHECK(std::isinf(sep.statistic));
  CHECK(sep.p_value == 0.0);
  CHECK_THROWS_AS(anova_f({{1, 2}}), ValidationError);
  CHECK_THROWS_AS(anova_f({{1}, {2, 3}}), ValidationError);
}

TEST_CASE("chi-square independence test") {
  const Matrix t(2, 2, {10, 20, 30, 40});
  const auto r = chi_square(t);
  // Expected counts 12, 18, 28, 42.
  const double expected = 4.0 / 12 + 4.0 / 18 + 4.0 / 28 + 4.0 / 42;
  CHECK(r.statistic == doctest::Approx(expected).epsilon(1e-12));
  CHECK(r.df1 == 1.0);
  boost::math::chi_squared dist(1.0);
  CHECK(r.p_value == doctest::Approx(boost::math::cdf(boost::math::complement(dist, expected))).epsilon(1e-9));
  CHECK_THROWS_AS(chi_square(Matrix(2, 2, {0, 0, 1, 2})), ValidationError);
  CHECK_THROWS_AS(chi_square(Matrix(1, 3, {1, 2, 3})), ValidationError);
}

TEST_CASE("special functions agree with Boost") {
  Rng rng(14);
  for (int i = 0; i < 200; ++i) {
    const double a = rng.uniform(0.2, 40.0);
    const double b = rng.uniform(0.2, 40.0);
    const double x = rng.uniform(0.0, 1.0);
    CHECK(special::regularized_beta(a, b, x) == doctest::Approx(boost::math::ibeta(a, b, x)).epsilon(1e-10));
    const double gx = rng.uniform(0.0, 80.0);
    CHECK(special::regularized_gamma_p(a, gx) == doctest::Approx(boost::math::gamma_p(a, gx)).epsilon(1e-10));
    CHECK(special::regularized_gamma_q(a, gx) == doctest::Approx(boost::math::gamma_q(a, gx)).epsilon(1e-10));
    const double f = rng.uniform(0.0, 30.0);
    const double d1 = 1.0 + static_cast<double>(rng.below(10));
    const double d2 = 1.0 + static_cast<double>(rng.below(60));
    if (f > 0.0) {
      boost::math::fisher_f fd(d1, d2);
      CHECK(special::f_survival(f, d1, d2) ==
            doctest::Approx(boost::math::cdf(boost::math::complement(fd, f))).epsilon(1e-9));
    }
    boost::math::chi_squared cd(d1);
    CHECK(special::chi_square_survival(f, d1) ==
          doctest::Approx(boost::math::cdf(boost::math::complement(cd, f))).epsilon(1e-9));
  }
  CHECK(special::f_survival(0.0, 2, 3) == 1.0);
  CHECK(special::f_survival(std::numeric_limits<double>::infinity(), 2, 3) == 0.0);
  CHECK(special::chi_square_survival(-1.0, 3) == 1.0);
}
