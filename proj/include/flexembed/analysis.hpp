#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "flexembed/clustering.hpp"
#include "flexembed/dataset.hpp"

namespace flexembed::analysis {

/// Largest |g_{t+1} − g_t| over consecutive non-missing hours, in MW/min.
/// Throws ValidationError when no valid pair exists.
double max_ramp_rate(std::span<const double> generation);

/// (p_off, p_min, p_full) over non-missing hours.
std::array<double, 3> state_frequencies(std::span<const std::int8_t> states);

/// A statistic that may be undefined; `value` is NaN when `defined` is false.
struct Estimate {
  double value = 0.0;
  bool defined = true;
  std::string note;
};

struct MarketValue {
  Estimate value;   // EUR/MWh, generation-weighted price
  Estimate factor;  // value / unweighted mean price
};

/// Over hours where both series are present.
MarketValue market_value(std::span<const double> generation, std::span<const double> price);

/// Pearson r over the non-missing overlap; undefined for zero variance.
Estimate pearson(std::span<const double> x, std::span<const double> y);

/// Linear-interpolation quantile (NaNs ignored).
double quantile(std::vector<double> values, double q);

struct MustRunCluster {
  int cluster = 0;
  double share = 0.0;            // of all generation in qualifying hours
  double mean_hourly_mwh = 0.0;  // summed over the cluster's units
  double total_gwh = 0.0;
};

struct MustRunReport {
  std::vector<MustRunCluster> clusters;
  std::size_t qualifying_hours = 0;
  std::size_t negative_price_hours = 0;
  double residual_load_threshold = 0.0;
  bool empty = false;
};

/// Hours with price < 0 or residual load below its `low_load_quantile`
/// quantile over the given panel. Partition unit ids select panel columns.
MustRunReport mustrun_share(const clustering::Partition& partition, const dataset::HourlyPanel& panel,
                            double low_load_quantile = 0.1);

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
  double df1 = 0.0;
  double df2 = 0.0;
  bool defined = true;
  std::string note;
};

/// One-way ANOVA. Needs ≥ 2 groups of ≥ 2 samples (ValidationError).
TestResult anova_f(const std::vector<std::vector<double>>& groups);

/// Pearson χ² independence test on a clusters × categories count table.
/// Throws ValidationError on a zero row or column marginal.
TestResult chi_square(const Matrix& table);

}  // namespace flexembed::analysis
