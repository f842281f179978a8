#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "flexembed/clustering.hpp"
#include "flexembed/dataset.hpp"
#include "flexembed/timeutil.hpp"

namespace flexembed::synth {

enum class Archetype { occasional_peaker, frequent_peaker, heat_follower, industrial_baseload };
inline constexpr std::size_t kArchetypes = 4;
std::string to_string(Archetype a);
Archetype parse_archetype(const std::string& s);

struct SynthConfig {
  std::size_t hours = 17520;
  std::array<std::size_t, kArchetypes> units_per_archetype = {10, 10, 10, 10};
  double capacity_min = 100.0;  // MWp
  double capacity_max = 500.0;
  double noise = 0.04;  // output noise as a fraction of capacity
  UnixSeconds start = 1546300800;  // 2019-01-01T00:00:00Z
  std::uint64_t seed = 1;

  /// Throws ConfigError unless hours ≥ 480 and every count ≥ 1.
  void validate() const;
};

struct SynthFleet {
  dataset::HourlyPanel panel;
  std::vector<dataset::UnitMeta> meta;
  std::vector<Archetype> archetypes;  // per panel unit
  clustering::Partition ground_truth;
  std::vector<double> heat_proxy;      // also stored as the heat_demand column
};

SynthFleet generate(const SynthConfig& config);

/// panel.csv, units.csv and ground_truth.csv (unit_id,archetype).
void write_fleet(const SynthFleet& fleet, const std::filesystem::path& dir);

/// Reads ground_truth.csv back as a partition (labels = archetype index).
clustering::Partition read_ground_truth(const std::filesystem::path& path);

}  // namespace flexembed::synth
