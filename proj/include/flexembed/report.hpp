#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "flexembed/analysis.hpp"
#include "flexembed/clustering.hpp"
#include "flexembed/dataset.hpp"

namespace flexembed::report {

struct ReportOptions {
  double low_load_quantile = 0.1;
};

struct UnitStats {
  std::string unit_id;
  int cluster = 0;
  analysis::Estimate max_ramp;
  std::array<double, 3> frequencies{};
};

/// One row of the flat report: cluster −1 stands for fleet-level tests.
struct MetricRow {
  int cluster = 0;
  std::string metric;
  std::string period;
  double value = 0.0;
};

struct CompositionTest {
  std::string attribute;
  std::vector<std::string> categories;
  Matrix counts;  // clusters × categories
  analysis::TestResult test;
};

struct ClusterReport {
  int k = 0;
  std::vector<std::string> periods;  // calendar years, then "all"
  std::vector<UnitStats> units;
  std::vector<MetricRow> rows;
  std::vector<CompositionTest> composition;
  std::map<std::string, analysis::TestResult> anova;
  std::map<std::string, analysis::MustRunReport> mustrun;  // per period
};

/// Per-cluster characterization of a partition over a panel. Every unit of
/// the partition must appear in the panel and the metadata.
ClusterReport build_report(const dataset::HourlyPanel& panel, std::span<const dataset::UnitMeta> meta,
                           const clustering::Partition& partition, const ReportOptions& opt = {});

std::string report_json(const ClusterReport& r, const std::string& config_hash, std::uint64_t seed);

/// Writes cluster_report.json, cluster_report.csv, appendix_table.csv,
/// state_frequencies.csv and mustrun.csv into `dir`.
void write_report(const ClusterReport& r, const std::filesystem::path& dir, const std::string& config_hash,
                  std::uint64_t seed);

}  // namespace flexembed::report
