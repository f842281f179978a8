#include "flexembed/report.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>

#include <json.hpp>

#include "flexembed/csv.hpp"
#include "flexembed/error.hpp"
#include "flexembed/timeutil.hpp"

namespace flexembed::report {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double mean_defined(const std::vector<analysis::Estimate>& xs) {
  double s = 0.0;
  std::size_t n = 0;
  for (const auto& e : xs) {
    if (!e.defined) continue;
    s += e.value;
    ++n;
  }
  return n ? s / static_cast<double>(n) : kNaN;
}

struct PeriodRange {
  std::string name;
  std::size_t begin = 0, end = 0;
};

std::vector<PeriodRange> calendar_periods(const dataset::HourlyPanel& panel) {
  std::vector<PeriodRange> out;
  for (std::size_t t = 0; t < panel.hours(); ++t) {
    const std::string year = std::to_string(year_of(panel.timestamps[t]));
    if (out.empty() || out.back().name != year) out.push_back({year, t, t});
    out.back().end = t + 1;
  }
  out.push_back({"all", 0, panel.hours()});
  return out;
}

}  // namespace

ClusterReport build_report(const dataset::HourlyPanel& panel, std::span<const dataset::UnitMeta> meta,
                           const clustering::Partition& partition, const ReportOptions& opt) {
  if (partition.unit_ids.size() != partition.labels.size()) {
    throw ValidationError("build_report: partition lacks unit ids");
  }
  std::map<std::string, const dataset::UnitMeta*> meta_by_id;
  for (const auto& m : meta) meta_by_id[m.unit_id] = &m;

  ClusterReport r;
  r.k = partition.k;
  const std::size_t n = partition.size();
  const auto k = static_cast<std::size_t>(partition.k);
  std::vector<std::size_t> column(n);
  std::vector<const dataset::UnitMeta*> unit_meta(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& id = partition.unit_ids[i];
    const long c = panel.unit_index(id);
    if (c < 0) throw ValidationError("build_report: unit '" + id + "' not in panel");
    auto it = meta_by_id.find(id);
    if (it == meta_by_id.end()) throw ValidationError("build_report: unit '" + id + "' has no metadata");
    column[i] = static_cast<std::size_t>(c);
    unit_meta[i] = it->second;
  }
  auto add = [&](int cluster, const std::string& metric, const std::string& period, double v) {
    r.rows.push_back({cluster, metric, period, v});
  };

  // Unit-level statistics over the whole panel.
  for (std::size_t i = 0; i < n; ++i) {
    UnitStats u;
    u.unit_id = partition.unit_ids[i];
    u.cluster = partition.labels[i];
    const auto g = panel.unit_series(column[i]);
    try {
      u.max_ramp = {analysis::max_ramp_rate(g), true, ""};
    } catch (const ValidationError& e) {
      u.max_ramp = {kNaN, false, e.what()};
    }
    const auto states = dataset::discretize(g, unit_meta[i]->g_max, u.unit_id);
    try {
      u.frequencies = analysis::state_frequencies(states.states);
    } catch (const ValidationError&) {
      u.frequencies = {kNaN, kNaN, kNaN};
    }
    r.units.push_back(u);
  }

  const auto periods = calendar_periods(panel);
  for (const auto& p : periods) r.periods.push_back(p.name);

  for (std::size_t c = 0; c < k; ++c) {
    const int ci = static_cast<int>(c);
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < n; ++i) {
      if (static_cast<std::size_t>(partition.labels[i]) == c) members.push_back(i);
    }
    add(ci, "size", "all", static_cast<double>(members.size()));
    std::vector<double> ramps;
    std::array<double, 3> freq{};
    for (std::size_t i : members) {
      if (r.units[i].max_ramp.defined) ramps.push_back(r.units[i].max_ramp.value);
      for (std::size_t s = 0; s < 3; ++s) freq[s] += r.units[i].frequencies[s];
    }
    double ramp_mean = kNaN;
    if (!ramps.empty()) {
      ramp_mean = 0.0;
      for (double v : ramps) ramp_mean += v;
      ramp_mean /= static_cast<double>(ramps.size());
    }
    add(ci, "max_ramp_rate_mean", "all", ramp_mean);
    add(ci, "max_ramp_rate_p10", "all", analysis::quantile(ramps, 0.1));
    add(ci, "max_ramp_rate_p50", "all", analysis::quantile(ramps, 0.5));
    add(ci, "max_ramp_rate_p90", "all", analysis::quantile(ramps, 0.9));
    const char* names[3] = {"p_off", "p_min_load", "p_full_load"};
    for (std::size_t s = 0; s < 3; ++s) add(ci, names[s], "all", freq[s] / static_cast<double>(members.size()));

    for (const auto& p : periods) {
      const bool has_price = panel.has_covariate(dataset::kDayAheadPrice);
      const bool has_heat = panel.has_covariate(dataset::kHeatDemand);
      const auto residual_all = panel.residual_load();
      std::span<const double> residual(residual_all.data() + p.begin, p.end - p.begin);
      std::vector<analysis::Estimate> mv, mvf, rl, hd, pr;
      for (std::size_t i : members) {
        const auto g_all = panel.unit_series(column[i]);
        std::span<const double> g(g_all.data() + p.begin, p.end - p.begin);
        rl.push_back(analysis::pearson(g, residual));
        if (has_price) {
          const auto& price_all = panel.covariate(dataset::kDayAheadPrice);
          std::span<const double> price(price_all.data() + p.begin, p.end - p.begin);
          const auto m = analysis::market_value(g, price);
          mv.push_back(m.value);
          mvf.push_back(m.factor);
          pr.push_back(analysis::pearson(g, price));
        }
        if (has_heat) {
          const auto& heat_all = panel.covariate(dataset::kHeatDemand);
          hd.push_back(analysis::pearson(g, std::span<const double>(heat_all.data() + p.begin, p.end - p.begin)));
        }
      }
      if (has_price) {
        add(ci, "market_value", p.name, mean_defined(mv));
        add(ci, "market_value_factor", p.name, mean_defined(mvf));
        add(ci, "price_correlation", p.name, mean_defined(pr));
      }
      add(ci, "residual_load_correlation", p.name, mean_defined(rl));
      if (has_heat) add(ci, "heat_demand_correlation", p.name, mean_defined(hd));
    }
  }

  if (panel.has_covariate(dataset::kDayAheadPrice)) {
    for (const auto& p : periods) {
      const auto mr = analysis::mustrun_share(partition, panel.slice_hours(p.begin, p.end), opt.low_load_quantile);
      for (const auto& c : mr.clusters) {
        add(c.cluster, "mustrun_share", p.name, c.share);
        add(c.cluster, "mustrun_mean_hourly_mwh", p.name, c.mean_hourly_mwh);
        add(c.cluster, "mustrun_gwh", p.name, c.total_gwh);
      }
      r.mustrun[p.name] = mr;
    }
  }

  // Composition and tests.
  auto composition = [&](const std::string& attribute, auto category_of) {
    std::set<std::string> seen;
    for (std::size_t i = 0; i < n; ++i) seen.insert(category_of(*unit_meta[i]));
    CompositionTest ct;
    ct.attribute = attribute;
    ct.categories.assign(seen.begin(), seen.end());
    ct.counts = Matrix(k, ct.categories.size());
    for (std::size_t i = 0; i < n; ++i) {
      const auto cat = category_of(*unit_meta[i]);
      const auto j = static_cast<std::size_t>(
          std::find(ct.categories.begin(), ct.categories.end(), cat) - ct.categories.begin());
      ct.counts(static_cast<std::size_t>(partition.labels[i]), j) += 1.0;
    }
    for (std::size_t c = 0; c < k; ++c) {
      for (std::size_t j = 0; j < ct.categories.size(); ++j) {
        add(static_cast<int>(c), attribute + ":" + ct.categories[j], "all", ct.counts(c, j));
      }
    }
    try {
      ct.test = analysis::chi_square(ct.counts);
    } catch (const ValidationError& e) {
      ct.test = {kNaN, kNaN, 0.0, 0.0, false, e.what()};
    }
    add(-1, "chi_square:" + attribute, "all", ct.test.statistic);
    add(-1, "chi_square_p:" + attribute, "all", ct.test.p_value);
    r.composition.push_back(std::move(ct));
  };
  composition("owner_class", [](const dataset::UnitMeta& m) { return dataset::to_string(m.owner_class); });
  composition("chp", [](const dataset::UnitMeta& m) { return std::string(m.chp ? "true" : "false"); });
  composition("technology", [](const dataset::UnitMeta& m) { return dataset::to_string(m.technology); });
  composition("market_oriented",
              [](const dataset::UnitMeta& m) { return std::string(m.market_oriented ? "true" : "false"); });

  auto anova = [&](const std::string& name, auto value_of) {
    std::vector<std::vector<double>> groups(k);
    for (std::size_t i = 0; i < n; ++i) {
      const double v = value_of(i);
      if (!std::isnan(v)) groups[static_cast<std::size_t>(partition.labels[i])].push_back(v);
    }
    analysis::TestResult t;
    try {
      t = analysis::anova_f(groups);
    } catch (const ValidationError& e) {
      t = {kNaN, kNaN, 0.0, 0.0, false, e.what()};
    }
    add(-1, "anova_f:" + name, "all", t.statistic);
    add(-1, "anova_p:" + name, "all", t.p_value);
    r.anova[name] = t;
  };
  anova("max_ramp_rate", [&](std::size_t i) { return r.units[i].max_ramp.value; });
  anova("g_max", [&](std::size_t i) { return unit_meta[i]->g_max; });
  anova("age_years", [&](std::size_t i) { return unit_meta[i]->age_years; });
  anova("p_full_load", [&](std::size_t i) { return r.units[i].frequencies[2]; });
  return r;
}

namespace {

nlohmann::ordered_json number(double v) {
  if (std::isnan(v) || std::isinf(v)) return nullptr;
  return v;
}

nlohmann::ordered_json test_json(const analysis::TestResult& t) {
  nlohmann::ordered_json j;
  j["statistic"] = number(t.statistic);
  j["p_value"] = number(t.p_value);
  j["df1"] = t.df1;
  j["df2"] = t.df2;
  j["defined"] = t.defined;
  if (std::isinf(t.statistic)) j["statistic_infinite"] = true;
  if (!t.note.empty()) j["note"] = t.note;
  return j;
}

std::string header_comment(const std::string& hash, std::uint64_t seed) {
  return "# flexembed config_hash=" + hash + " seed=" + std::to_string(seed) + "\n";
}

}  // namespace

std::string report_json(const ClusterReport& r, const std::string& config_hash, std::uint64_t seed) {
  nlohmann::ordered_json j;
  j["config_hash"] = config_hash;
  j["seed"] = seed;
  j["k"] = r.k;
  j["periods"] = r.periods;
  auto& clusters = j["clusters"] = nlohmann::ordered_json::array();
  for (int c = 0; c < r.k; ++c) {
    nlohmann::ordered_json cj;
    cj["cluster"] = c;
    auto& units = cj["units"] = nlohmann::ordered_json::array();
    for (const auto& u : r.units) {
      if (u.cluster == c) units.push_back(u.unit_id);
    }
    auto& metrics = cj["metrics"] = nlohmann::ordered_json::object();
    for (const auto& row : r.rows) {
      if (row.cluster == c) metrics[row.metric][row.period] = number(row.value);
    }
    clusters.push_back(cj);
  }
  auto& comp = j["composition_tests"] = nlohmann::ordered_json::object();
  for (const auto& ct : r.composition) {
    auto t = test_json(ct.test);
    t["categories"] = ct.categories;
    comp[ct.attribute] = t;
  }
  auto& anova = j["anova"] = nlohmann::ordered_json::object();
  for (const auto& [name, t] : r.anova) anova[name] = test_json(t);
  auto& mr = j["mustrun"] = nlohmann::ordered_json::object();
  for (const auto& [period, m] : r.mustrun) {
    mr[period] = {{"qualifying_hours", m.qualifying_hours},
                  {"negative_price_hours", m.negative_price_hours},
                  {"residual_load_threshold", number(m.residual_load_threshold)},
                  {"empty", m.empty}};
  }
  return j.dump(2) + "\n";
}

void write_report(const ClusterReport& r, const std::filesystem::path& dir, const std::string& config_hash,
                  std::uint64_t seed) {
  std::filesystem::create_directories(dir);
  auto open = [&](const std::string& name) {
    std::ofstream out(dir / name);
    if (!out) throw Error("cannot write " + (dir / name).string());
    return out;
  };
  {
    auto out = open("cluster_report.json");
    out << report_json(r, config_hash, seed);
  }
  {
    auto out = open("cluster_report.csv");
    out << header_comment(config_hash, seed) << "cluster,metric,period,value\n";
    for (const auto& row : r.rows) {
      out << (row.cluster < 0 ? std::string("all") : std::to_string(row.cluster)) << ',' << row.metric << ','
          << row.period << ',' << csv::format_number(row.value) << '\n';
    }
  }
  {
    // Metric × period rows, one column per cluster.
    auto out = open("appendix_table.csv");
    out << header_comment(config_hash, seed) << "metric,period";
    for (int c = 0; c < r.k; ++c) out << ",cluster_" << c;
    out << '\n';
    std::vector<std::pair<std::string, std::string>> keys;
    std::map<std::pair<std::string, std::string>, std::vector<double>> table;
    for (const auto& row : r.rows) {
      if (row.cluster < 0) continue;
      const auto key = std::make_pair(row.metric, row.period);
      auto it = table.find(key);
      if (it == table.end()) {
        keys.push_back(key);
        it = table.emplace(key, std::vector<double>(static_cast<std::size_t>(r.k), kNaN)).first;
      }
      it->second[static_cast<std::size_t>(row.cluster)] = row.value;
    }
    for (const auto& key : keys) {
      out << key.first << ',' << key.second;
      for (double v : table[key]) out << ',' << csv::format_number(v);
      out << '\n';
    }
  }
  {
    auto out = open("state_frequencies.csv");
    out << header_comment(config_hash, seed) << "unit_id,cluster,p_off,p_min_load,p_full_load,max_ramp_rate\n";
    for (const auto& u : r.units) {
      out << u.unit_id << ',' << u.cluster;
      for (double f : u.frequencies) out << ',' << csv::format_number(f);
      out << ',' << csv::format_number(u.max_ramp.value) << '\n';
    }
  }
  {
    auto out = open("mustrun.csv");
    out << header_comment(config_hash, seed) << "period,cluster,share,mean_hourly_mwh,total_gwh\n";
    for (const auto& period : r.periods) {
      auto it = r.mustrun.find(period);
      if (it == r.mustrun.end()) continue;
      for (const auto& c : it->second.clusters) {
        out << period << ',' << c.cluster << ',' << csv::format_number(c.share) << ','
            << csv::format_number(c.mean_hourly_mwh) << ',' << csv::format_number(c.total_gwh) << '\n';
      }
    }
  }
}

}  // namespace flexembed::report
