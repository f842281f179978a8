#include "flexembed/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "flexembed/analysis.hpp"
#include "flexembed/csv.hpp"
#include "flexembed/error.hpp"
#include "flexembed/rng.hpp"

namespace flexembed::synth {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr const char* kArchetypeNames[] = {"occasional_peaker", "frequent_peaker", "heat_follower",
                                           "industrial_baseload"};
}  // namespace

std::string to_string(Archetype a) { return kArchetypeNames[static_cast<int>(a)]; }

Archetype parse_archetype(const std::string& s) {
  for (std::size_t i = 0; i < kArchetypes; ++i) {
    if (s == kArchetypeNames[i]) return static_cast<Archetype>(i);
  }
  throw ConfigError("unknown archetype '" + s + "'");
}

void SynthConfig::validate() const {
  if (hours < 480) throw ConfigError("synth: hours must be at least 480");
  for (auto c : units_per_archetype) {
    if (c < 1) throw ConfigError("synth: every archetype needs at least one unit");
  }
  if (!(capacity_min > 0.0) || capacity_max < capacity_min) {
    throw ConfigError("synth: capacity range must satisfy 0 < min <= max");
  }
  if (noise < 0.0) throw ConfigError("synth: noise must be non-negative");
}

namespace {

struct Market {
  std::vector<double> load, res, residual, gas, price, heat;
};

Market simulate_market(const SynthConfig& cfg) {
  Rng rng(mix_seed(cfg.seed, 1));
  const std::size_t n = cfg.hours;
  Market m;
  m.load.resize(n);
  m.res.resize(n);
  m.residual.resize(n);
  m.gas.resize(n);
  m.price.resize(n);
  m.heat.resize(n);
  double wind = 0.3, gas_walk = 0.0, temp_noise = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    const UnixSeconds ts = cfg.start + static_cast<UnixSeconds>(t) * kSecondsPerHour;
    const int h = hour_of_day(ts);
    const int wd = weekday(ts);
    const double doy = static_cast<double>((ts / 86400) % 365) + h / 24.0;
    const double season = std::cos(kTwoPi * (doy - 15.0) / 365.0);  // 1 in mid-January
    const double daily = std::sin(kTwoPi * (h - 6.0) / 24.0);

    temp_noise = 0.98 * temp_noise + 0.2 * rng.normal();
    const double temperature = 10.0 - 9.0 * season + 5.0 * daily + temp_noise;
    m.heat[t] = 1200.0 * std::max(0.0, 18.0 - temperature) + 500.0;

    // Electric heating couples national load to heat demand.
    m.load[t] = 50000.0 + 9000.0 * daily + 0.35 * m.heat[t] - (wd >= 5 ? 7000.0 : 0.0) + 1500.0 * rng.normal();

    wind = 0.97 * wind + 0.03 * (0.35 + 0.15 * season) + 0.06 * rng.normal();
    wind = std::clamp(wind, 0.0, 1.0);
    const double sun = std::max(0.0, std::sin(kTwoPi * (h - 6.0) / 24.0)) * (0.6 - 0.35 * season);
    m.res[t] = 40000.0 * wind + 35000.0 * sun;
    m.residual[t] = m.load[t] - m.res[t];

    gas_walk = 0.999 * gas_walk + 0.1 * rng.normal();
    m.gas[t] = std::max(3.0, 18.0 + 4.0 * season + gas_walk);
  }
  // Price: affine in residual load plus gas cost, with negative excursions
  // in the windiest/sunniest hours.
  std::vector<double> share(n);
  for (std::size_t t = 0; t < n; ++t) share[t] = m.res[t] / m.load[t];
  const double share_q90 = analysis::quantile(share, 0.9);
  for (std::size_t t = 0; t < n; ++t) {
    m.price[t] = -25.0 + 0.0011 * m.residual[t] + 0.9 * m.gas[t] + 4.0 * rng.normal();
    if (share[t] >= share_q90 && rng.uniform() < 0.3) m.price[t] = -rng.uniform(1.0, 40.0);
  }
  return m;
}

double clamp_output(double frac) { return std::clamp(frac, 0.0, 1.0); }

// Output as a fraction of capacity for one unit.
std::vector<double> dispatch(Archetype a, const Market& m, const SynthConfig& cfg, Rng& rng) {
  const std::size_t n = m.residual.size();
  std::vector<double> out(n);
  const double noise = cfg.noise;
  auto q = [&](double p) { return analysis::quantile(m.residual, p); };
  switch (a) {
    case Archetype::occasional_peaker: {
      const double hi = q(0.87 + rng.uniform(-0.015, 0.015));
      for (std::size_t t = 0; t < n; ++t) {
        const double r = m.residual[t] + 800.0 * rng.normal();
        out[t] = r > hi ? 0.9 + 0.08 * rng.uniform() : 0.02 * rng.uniform();
      }
      break;
    }
    case Archetype::frequent_peaker: {
      const double hi = q(0.66 + rng.uniform(-0.02, 0.02));
      const double mid = q(0.50 + rng.uniform(-0.02, 0.02));
      for (std::size_t t = 0; t < n; ++t) {
        const double r = m.residual[t] + 800.0 * rng.normal();
        if (r > hi) {
          out[t] = 0.85 + 0.12 * rng.uniform();
        } else if (r > mid) {
          out[t] = 0.5 + noise * rng.normal();
        } else {
          out[t] = 0.03 * rng.uniform();
        }
      }
      break;
    }
    case Archetype::heat_follower: {
      double lo = m.heat[0], hi = m.heat[0];
      for (double v : m.heat) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      const double base = rng.uniform(0.19, 0.21);
      const double gain = rng.uniform(0.79, 0.81);
      for (std::size_t t = 0; t < n; ++t) {
        const double h = (m.heat[t] - lo) / (hi - lo);
        // Morning and evening district-heating peaks.
        const int hour = hour_of_day(cfg.start + static_cast<UnixSeconds>(t) * kSecondsPerHour);
        const double peak = (hour >= 6 && hour < 10) || (hour >= 17 && hour < 22) ? 0.12 : -0.08;
        out[t] = base + gain * h + peak + noise * rng.normal();
      }
      break;
    }
    case Archetype::industrial_baseload: {
      // Min-load on working days and shut down over weekends, with
      // occasional multi-hour full-load excursions; independent of the
      // market.
      std::size_t excursion = 0;
      const double level = rng.uniform(0.45, 0.6);
      for (std::size_t t = 0; t < n; ++t) {
        const bool weekend = weekday(cfg.start + static_cast<UnixSeconds>(t) * kSecondsPerHour) >= 5;
        if (weekend) {
          excursion = 0;
          out[t] = 0.03 * rng.uniform();
          continue;
        }
        if (excursion == 0 && rng.uniform() < 0.012) excursion = 4 + rng.below(12);
        if (excursion > 0) {
          --excursion;
          out[t] = 0.85 + 0.1 * rng.uniform();
        } else {
          out[t] = level + noise * rng.normal();
        }
      }
      break;
    }
  }
  for (auto& v : out) v = clamp_output(v);
  return out;
}

dataset::UnitMeta make_meta(const std::string& id, Archetype a, const SynthConfig& cfg, Rng& rng) {
  dataset::UnitMeta m;
  m.unit_id = id;
  m.g_max = std::round(rng.uniform(cfg.capacity_min, cfg.capacity_max));
  m.age_years = std::round(rng.uniform(5.0, 50.0));
  switch (a) {
    case Archetype::occasional_peaker:
      m.technology = dataset::Technology::gas_turbine;
      m.owner_class = rng.uniform() < 0.8 ? dataset::OwnerClass::major_utility : dataset::OwnerClass::other_utility;
      m.chp = rng.uniform() < 0.1;
      m.market_oriented = true;
      break;
    case Archetype::frequent_peaker:
      m.technology = dataset::Technology::combined_cycle;
      m.owner_class = rng.uniform() < 0.7 ? dataset::OwnerClass::major_utility : dataset::OwnerClass::other_utility;
      m.chp = rng.uniform() < 0.3;
      m.market_oriented = true;
      break;
    case Archetype::heat_follower:
      m.technology = rng.uniform() < 0.5 ? dataset::Technology::steam : dataset::Technology::combined_cycle;
      m.owner_class = rng.uniform() < 0.8 ? dataset::OwnerClass::municipal_utility : dataset::OwnerClass::other_utility;
      m.chp = true;
      m.market_oriented = rng.uniform() < 0.2;
      break;
    case Archetype::industrial_baseload:
      m.technology = dataset::Technology::steam;
      m.owner_class = dataset::OwnerClass::industry;
      m.chp = rng.uniform() < 0.8;
      m.market_oriented = false;
      break;
  }
  m.coal_based_gas = rng.uniform() < 0.05;
  return m;
}

}  // namespace

SynthFleet generate(const SynthConfig& cfg) {
  cfg.validate();
  const Market market = simulate_market(cfg);

  std::vector<Archetype> kinds;
  for (std::size_t a = 0; a < kArchetypes; ++a) {
    for (std::size_t i = 0; i < cfg.units_per_archetype[a]; ++i) kinds.push_back(static_cast<Archetype>(a));
  }
  Rng order(mix_seed(cfg.seed, 2));
  order.shuffle(kinds);

  SynthFleet fleet;
  fleet.archetypes = kinds;
  fleet.heat_proxy = market.heat;
  auto& p = fleet.panel;
  const std::size_t n_units = kinds.size();
  p.timestamps.resize(cfg.hours);
  for (std::size_t t = 0; t < cfg.hours; ++t) p.timestamps[t] = cfg.start + static_cast<UnixSeconds>(t) * kSecondsPerHour;
  p.covariates[dataset::kNationalLoad] = market.load;
  p.covariates[dataset::kResGeneration] = market.res;
  p.covariates[dataset::kGasPrice] = market.gas;
  p.covariates[dataset::kDayAheadPrice] = market.price;
  p.covariates[dataset::kHeatDemand] = market.heat;
  p.generation = Matrix(cfg.hours, n_units);
  p.report.input_rows = p.report.output_hours = cfg.hours;

  const int width = n_units >= 100 ? 3 : 2;
  for (std::size_t u = 0; u < n_units; ++u) {
    std::string num = std::to_string(u + 1);
    num.insert(0, static_cast<std::size_t>(std::max(0, width - static_cast<int>(num.size()))), '0');
    const std::string id = "unit_" + num;
    p.unit_ids.push_back(id);
    Rng rng(mix_seed(cfg.seed, 1000 + u));
    fleet.meta.push_back(make_meta(id, kinds[u], cfg, rng));
    const auto frac = dispatch(kinds[u], market, cfg, rng);
    const double g_max = fleet.meta.back().g_max;
    for (std::size_t t = 0; t < cfg.hours; ++t) {
      // Round to kWh so the CSV stays compact and round-trips exactly.
      p.generation(t, u) = std::round(frac[t] * g_max * 1000.0) / 1000.0;
    }
  }

  fleet.ground_truth.unit_ids = p.unit_ids;
  for (auto a : kinds) fleet.ground_truth.labels.push_back(static_cast<int>(a));
  fleet.ground_truth.k = static_cast<int>(kArchetypes);
  fleet.ground_truth.method = "ground_truth";
  fleet.ground_truth.seed = cfg.seed;
  return fleet;
}

void write_fleet(const SynthFleet& fleet, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  dataset::write_panel(fleet.panel, dir / "panel.csv");
  dataset::write_unit_meta(fleet.meta, dir / "units.csv");
  std::ofstream out(dir / "ground_truth.csv");
  if (!out) throw Error("cannot write " + (dir / "ground_truth.csv").string());
  out << "unit_id,archetype\n";
  for (std::size_t u = 0; u < fleet.archetypes.size(); ++u) {
    out << fleet.panel.unit_ids[u] << ',' << to_string(fleet.archetypes[u]) << '\n';
  }
}

clustering::Partition read_ground_truth(const std::filesystem::path& path) {
  const auto t = csv::read(path);
  const long id = t.column("unit_id"), arch = t.column("archetype");
  if (id < 0 || arch < 0) throw LoadError(path.string() + ": expected unit_id,archetype columns", 1);
  clustering::Partition p;
  p.method = "ground_truth";
  for (const auto& row : t.rows) {
    p.unit_ids.push_back(row[static_cast<std::size_t>(id)]);
    const int a = static_cast<int>(parse_archetype(row[static_cast<std::size_t>(arch)]));
    p.labels.push_back(a);
    p.k = std::max(p.k, a + 1);
  }
  return p;
}

}  // namespace flexembed::synth
