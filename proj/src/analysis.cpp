#include "flexembed/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "flexembed/error.hpp"
#include "flexembed/special_functions.hpp"

namespace flexembed::analysis {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Estimate undefined(std::string note) { return {kNaN, false, std::move(note)}; }
}  // namespace

double max_ramp_rate(std::span<const double> g) {
  double best = -1.0;
  for (std::size_t t = 0; t + 1 < g.size(); ++t) {
    if (std::isnan(g[t]) || std::isnan(g[t + 1])) continue;
    best = std::max(best, std::abs(g[t + 1] - g[t]));
  }
  if (best < 0.0) throw ValidationError("max_ramp_rate: no pair of consecutive non-missing hours");
  return best / 60.0;
}

std::array<double, 3> state_frequencies(std::span<const std::int8_t> states) {
  std::array<double, 3> counts{};
  double total = 0.0;
  for (auto s : states) {
    if (s < 0) continue;
    counts[static_cast<std::size_t>(s)] += 1.0;
    total += 1.0;
  }
  if (total == 0.0) throw ValidationError("state_frequencies: no non-missing states");
  for (auto& c : counts) c /= total;
  return counts;
}

MarketValue market_value(std::span<const double> g, std::span<const double> price) {
  if (g.size() != price.size()) throw ShapeError("market_value: series lengths differ");
  // Prices are accumulated as offsets from the first valid price, so a
  // constant price yields a factor of exactly 1.
  double ref = std::numeric_limits<double>::quiet_NaN();
  double weighted = 0.0, gen = 0.0, offset_sum = 0.0;
  std::size_t hours = 0;
  for (std::size_t t = 0; t < g.size(); ++t) {
    if (std::isnan(g[t]) || std::isnan(price[t])) continue;
    if (hours == 0) ref = price[t];
    weighted += g[t] * (price[t] - ref);
    gen += g[t];
    offset_sum += price[t] - ref;
    ++hours;
  }
  MarketValue mv;
  if (hours == 0) {
    mv.value = mv.factor = undefined("no overlapping hours");
    return mv;
  }
  if (!(gen > 0.0)) {
    mv.value = mv.factor = undefined("zero total generation");
    return mv;
  }
  mv.value = {ref + weighted / gen, true, ""};
  const double mean_price = ref + offset_sum / static_cast<double>(hours);
  if (mean_price == 0.0) {
    mv.factor = undefined("zero mean price");
  } else {
    mv.factor = {mv.value.value / mean_price, true, ""};
  }
  return mv;
}

Estimate pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ShapeError("pearson: series lengths differ");
  double sx = 0.0, sy = 0.0;
  std::size_t n = 0;
  for (std::size_t t = 0; t < x.size(); ++t) {
    if (std::isnan(x[t]) || std::isnan(y[t])) continue;
    sx += x[t];
    sy += y[t];
    ++n;
  }
  if (n < 2) return undefined("fewer than two overlapping hours");
  const double mx = sx / static_cast<double>(n), my = sy / static_cast<double>(n);
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t t = 0; t < x.size(); ++t) {
    if (std::isnan(x[t]) || std::isnan(y[t])) continue;
    const double dx = x[t] - mx, dy = y[t] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) return undefined("zero variance");
  return {std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0), true, ""};
}

double quantile(std::vector<double> values, double q) {
  std::erase_if(values, [](double v) { return std::isnan(v); });
  if (values.empty()) return kNaN;
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

MustRunReport mustrun_share(const clustering::Partition& partition, const dataset::HourlyPanel& panel,
                            double low_load_quantile) {
  if (!panel.has_covariate(dataset::kDayAheadPrice)) {
    throw ValidationError("mustrun_share: panel has no day_ahead_price column");
  }
  const auto& price = panel.covariate(dataset::kDayAheadPrice);
  const auto residual = panel.residual_load();
  MustRunReport r;
  r.residual_load_threshold = quantile(residual, low_load_quantile);

  std::vector<std::size_t> columns(partition.size());
  for (std::size_t i = 0; i < partition.size(); ++i) {
    const long c = panel.unit_index(partition.unit_ids.at(i));
    if (c < 0) throw ValidationError("mustrun_share: unit '" + partition.unit_ids[i] + "' not in panel");
    columns[i] = static_cast<std::size_t>(c);
  }
  std::vector<double> cluster_mwh(static_cast<std::size_t>(partition.k), 0.0);
  for (std::size_t t = 0; t < panel.hours(); ++t) {
    const bool negative = !std::isnan(price[t]) && price[t] < 0.0;
    const bool low = !std::isnan(residual[t]) && residual[t] < r.residual_load_threshold;
    if (!negative && !low) continue;
    ++r.qualifying_hours;
    if (negative) ++r.negative_price_hours;
    for (std::size_t i = 0; i < columns.size(); ++i) {
      const double g = panel.generation(t, columns[i]);
      if (!std::isnan(g)) cluster_mwh[static_cast<std::size_t>(partition.labels[i])] += g;
    }
  }
  double total = 0.0;
  for (double v : cluster_mwh) total += v;
  r.empty = r.qualifying_hours == 0;
  for (int c = 0; c < partition.k; ++c) {
    MustRunCluster mc;
    mc.cluster = c;
    const double mwh = cluster_mwh[static_cast<std::size_t>(c)];
    mc.share = total > 0.0 ? mwh / total : 0.0;
    mc.mean_hourly_mwh = r.qualifying_hours ? mwh / static_cast<double>(r.qualifying_hours) : 0.0;
    mc.total_gwh = mwh / 1000.0;
    r.clusters.push_back(mc);
  }
  return r;
}

TestResult anova_f(const std::vector<std::vector<double>>& groups) {
  if (groups.size() < 2) throw ValidationError("anova_f: needs at least two groups");
  double grand = 0.0;
  std::size_t n = 0;
  for (const auto& g : groups) {
    if (g.size() < 2) throw ValidationError("anova_f: every group needs at least two samples");
    for (double v : g) grand += v;
    n += g.size();
  }
  grand /= static_cast<double>(n);
  double ssb = 0.0, ssw = 0.0;
  for (const auto& g : groups) {
    double mean = 0.0;
    for (double v : g) mean += v;
    mean /= static_cast<double>(g.size());
    ssb += static_cast<double>(g.size()) * (mean - grand) * (mean - grand);
    for (double v : g) ssw += (v - mean) * (v - mean);
  }
  TestResult r;
  r.df1 = static_cast<double>(groups.size() - 1);
  r.df2 = static_cast<double>(n - groups.size());
  if (ssw == 0.0) {
    if (ssb == 0.0) {
      r.statistic = r.p_value = kNaN;
      r.defined = false;
      r.note = "zero within- and between-group variance";
    } else {
      r.statistic = std::numeric_limits<double>::infinity();
      r.p_value = 0.0;
    }
    return r;
  }
  r.statistic = (ssb / r.df1) / (ssw / r.df2);
  r.p_value = special::f_survival(r.statistic, r.df1, r.df2);
  return r;
}

TestResult chi_square(const Matrix& table) {
  const std::size_t rows = table.rows(), cols = table.cols();
  if (rows < 2 || cols < 2) throw ValidationError("chi_square: table must be at least 2×2");
  std::vector<double> rs(rows, 0.0), cs(cols, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      rs[i] += table(i, j);
      cs[j] += table(i, j);
      total += table(i, j);
    }
  }
  for (std::size_t i = 0; i < rows; ++i) {
    if (rs[i] <= 0.0) throw ValidationError("chi_square: zero marginal in row " + std::to_string(i));
  }
  for (std::size_t j = 0; j < cols; ++j) {
    if (cs[j] <= 0.0) throw ValidationError("chi_square: zero marginal in column " + std::to_string(j));
  }
  TestResult r;
  r.statistic = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      const double e = rs[i] * cs[j] / total;
      r.statistic += (table(i, j) - e) * (table(i, j) - e) / e;
    }
  }
  r.df1 = static_cast<double>((rows - 1) * (cols - 1));
  r.p_value = special::chi_square_survival(r.statistic, r.df1);
  return r;
}

}  // namespace flexembed::analysis
