#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "flexembed/matrix.hpp"
#include "flexembed/timeutil.hpp"

namespace flexembed::dataset {

// Canonical covariate names used throughout the pipeline.
inline constexpr const char* kNationalLoad = "national_load";
inline constexpr const char* kResGeneration = "res_generation";
inline constexpr const char* kGasPrice = "gas_price";
inline constexpr const char* kDayAheadPrice = "day_ahead_price";
inline constexpr const char* kHeatDemand = "heat_demand";

/// Covariates fed to the forecaster, in feature order.
inline const std::vector<std::string> kModelCovariates = {kNationalLoad, kResGeneration, kGasPrice};

enum class Technology { combined_cycle, gas_turbine, steam };
enum class OwnerClass { major_utility, municipal_utility, industry, other_utility };

std::string to_string(Technology t);
std::string to_string(OwnerClass o);
Technology parse_technology(const std::string& s);
OwnerClass parse_owner_class(const std::string& s);

struct UnitMeta {
  std::string unit_id;
  double g_max = 0.0;  // MWp
  double age_years = 0.0;
  bool chp = false;
  Technology technology = Technology::combined_cycle;
  OwnerClass owner_class = OwnerClass::major_utility;
  bool market_oriented = false;
  bool coal_based_gas = false;
};

/// Maps canonical names to the column headers of an input CSV.
struct ColumnSchema {
  std::string timestamp = "timestamp";
  std::map<std::string, std::string> covariates = {
      {kNationalLoad, kNationalLoad}, {kResGeneration, kResGeneration},
      {kGasPrice, kGasPrice},         {kDayAheadPrice, kDayAheadPrice},
      {kHeatDemand, kHeatDemand}};
  /// Covariates that must be present; the rest are picked up when found.
  std::vector<std::string> required = {kNationalLoad, kResGeneration, kGasPrice};
  /// Unit columns; empty means every column that is neither the timestamp
  /// nor a covariate.
  std::vector<std::string> units;
};

struct LoadReport {
  std::size_t input_rows = 0;
  std::size_t rows_per_hour = 1;  // 4 for quarter-hourly input
  std::size_t output_hours = 0;
  std::size_t gap_hours = 0;         // hours with no input rows at all
  std::size_t incomplete_hours = 0;  // sub-hourly groups missing rows
  std::size_t clamped_negative = 0;  // tiny negative generation set to 0
};

/// Aligned hourly time series. Missing values are NaN.
struct HourlyPanel {
  std::vector<UnixSeconds> timestamps;
  std::vector<std::string> unit_ids;
  Matrix generation;  // hours × units, MWh per hour
  std::map<std::string, std::vector<double>> covariates;
  LoadReport report;

  std::size_t hours() const { return timestamps.size(); }
  std::size_t units() const { return unit_ids.size(); }
  bool has_covariate(const std::string& name) const { return covariates.count(name) > 0; }
  const std::vector<double>& covariate(const std::string& name) const;
  std::vector<double> unit_series(std::size_t unit) const;
  long unit_index(const std::string& id) const;

  /// National load minus RES generation.
  std::vector<double> residual_load() const;

  /// Hours [begin, end).
  HourlyPanel slice_hours(std::size_t begin, std::size_t end) const;
  HourlyPanel select_units(std::span<const std::size_t> units) const;
};

inline constexpr double kNegativeTolerance = 1e-6;

/// Reads a panel CSV. Sub-hourly rows are mean-resampled to hours and gaps
/// become missing hours. Throws LoadError naming the offending row.
HourlyPanel load_panel(const std::filesystem::path& path, const ColumnSchema& schema = {});
HourlyPanel parse_panel(std::istream& in, const std::string& source,
                        const ColumnSchema& schema = {});
void write_panel(const HourlyPanel& panel, const std::filesystem::path& path);

std::vector<UnitMeta> load_unit_meta(const std::filesystem::path& path);
void write_unit_meta(std::span<const UnitMeta> units, const std::filesystem::path& path);

struct ScalerParams {
  std::string column;
  double min = 0.0;
  double max = 1.0;
  double apply(double v) const { return (v - min) / (max - min); }
};

struct ScaledPanel {
  HourlyPanel panel;
  std::vector<ScalerParams> params;
};

/// Min-max scales the named covariate columns to [0, 1]. Throws
/// ValidationError for a constant or all-missing column.
ScaledPanel minmax_scale(const HourlyPanel& panel,
                         std::span<const std::string> columns = kModelCovariates);
std::string scaler_json(std::span<const ScalerParams> params);

inline constexpr std::int8_t kMissingState = -1;

struct StateSeries {
  std::string unit_id;
  std::vector<std::int8_t> states;  // 0 off, 1 min-load, 2 full-load, -1 missing
};

/// 0 if g ≤ g_max/3, 1 if g ≤ 2·g_max/3, else 2.
std::int8_t discretize_value(double g, double g_max);
StateSeries discretize(std::span<const double> generation, double g_max,
                       const std::string& unit_id = "");

/// Shannon entropy in bits of the non-missing states.
double unit_entropy(const StateSeries& s);

struct ExcludedUnit {
  std::string unit_id;
  double entropy = 0.0;
};

struct FilterResult {
  std::vector<std::size_t> retained;
  std::vector<ExcludedUnit> excluded;
  std::vector<double> entropies;  // one per input unit
};

inline constexpr double kDefaultEntropyThreshold = 0.3;

FilterResult filter_units(std::span<const StateSeries> states,
                          double threshold = kDefaultEntropyThreshold);
std::string exclusion_json(const FilterResult& r, std::span<const StateSeries> states,
                           double threshold);

/// A 48-hour sample: context hours [start, start + context) followed by
/// forecast hours [start + context, start + context + forecast).
struct Subsequence {
  std::size_t unit_index = 0;
  std::size_t start = 0;
};

struct WindowOptions {
  std::size_t context_hours = 24;
  std::size_t forecast_hours = 24;
  std::size_t step_hours = 48;
};

struct WindowSet {
  std::vector<Subsequence> windows;
  std::size_t candidate_starts = 0;  // per unit
  std::size_t dropped = 0;           // windows touching a missing hour
  bool too_short = false;
};

/// `hour_valid[t]` marks hours whose covariates are complete.
WindowSet build_subsequences(std::span<const StateSeries> states,
                             const std::vector<bool>& hour_valid, const WindowOptions& opt = {});

struct SplitDataset {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
  std::uint64_t seed = 0;
};

struct SplitRatios {
  double train = 0.7;
  double validation = 0.2;
  double test = 0.1;
};

/// Seeded random partition of [0, count). Needs count ≥ 10.
SplitDataset split(std::size_t count, const SplitRatios& ratios, std::uint64_t seed);

/// Per-hour model features: scaled covariates, weekday one-hot (7),
/// hour-of-day one-hot (24). Built from a scaled panel.
struct FeatureTable {
  Matrix covariates;  // hours × kModelCovariates.size()
  std::vector<std::uint8_t> weekday;
  std::vector<std::uint8_t> hour;
  std::vector<bool> valid;

  std::size_t hours() const { return weekday.size(); }
};

FeatureTable build_features(const HourlyPanel& scaled_panel);

/// Everything the forecaster consumes: features, discretized states of the
/// retained units, and the window list.
struct SequenceDataset {
  FeatureTable features;
  std::vector<StateSeries> states;  // retained units only
  std::vector<std::string> unit_ids;
  std::vector<Subsequence> windows;
  WindowOptions window;

  std::size_t units() const { return unit_ids.size(); }
};

struct PrepareOptions {
  double entropy_threshold = kDefaultEntropyThreshold;
  WindowOptions window;
};

struct PreparedData {
  ScaledPanel scaled;
  std::vector<StateSeries> all_states;
  FilterResult filter;
  WindowSet window_set;
  SequenceDataset sequences;
};

/// Scale → discretize → entropy filter → window. `meta` supplies g_max for
/// every panel unit.
PreparedData prepare(const HourlyPanel& panel, std::span<const UnitMeta> meta,
                     const PrepareOptions& opt = {});

}  // namespace flexembed::dataset
