#include "flexembed/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "flexembed/csv.hpp"
#include "flexembed/error.hpp"
#include "flexembed/rng.hpp"

namespace flexembed::dataset {

std::string to_string(Technology t) {
  switch (t) {
    case Technology::combined_cycle: return "combined_cycle";
    case Technology::gas_turbine: return "gas_turbine";
    case Technology::steam: return "steam";
  }
  return "?";
}

std::string to_string(OwnerClass o) {
  switch (o) {
    case OwnerClass::major_utility: return "major_utility";
    case OwnerClass::municipal_utility: return "municipal_utility";
    case OwnerClass::industry: return "industry";
    case OwnerClass::other_utility: return "other_utility";
  }
  return "?";
}

Technology parse_technology(const std::string& s) {
  if (s == "combined_cycle") return Technology::combined_cycle;
  if (s == "gas_turbine") return Technology::gas_turbine;
  if (s == "steam") return Technology::steam;
  throw ValidationError("unknown technology '" + s + "'");
}

OwnerClass parse_owner_class(const std::string& s) {
  if (s == "major_utility") return OwnerClass::major_utility;
  if (s == "municipal_utility") return OwnerClass::municipal_utility;
  if (s == "industry") return OwnerClass::industry;
  if (s == "other_utility") return OwnerClass::other_utility;
  throw ValidationError("unknown owner class '" + s + "'");
}

const std::vector<double>& HourlyPanel::covariate(const std::string& name) const {
  auto it = covariates.find(name);
  if (it == covariates.end()) throw ValidationError("panel has no covariate '" + name + "'");
  return it->second;
}

std::vector<double> HourlyPanel::unit_series(std::size_t unit) const {
  std::vector<double> out(hours());
  for (std::size_t t = 0; t < hours(); ++t) out[t] = generation(t, unit);
  return out;
}

long HourlyPanel::unit_index(const std::string& id) const {
  for (std::size_t i = 0; i < unit_ids.size(); ++i) {
    if (unit_ids[i] == id) return static_cast<long>(i);
  }
  return -1;
}

std::vector<double> HourlyPanel::residual_load() const {
  const auto& load = covariate(kNationalLoad);
  const auto& res = covariate(kResGeneration);
  std::vector<double> out(load.size());
  for (std::size_t t = 0; t < load.size(); ++t) out[t] = load[t] - res[t];
  return out;
}

HourlyPanel HourlyPanel::slice_hours(std::size_t begin, std::size_t end) const {
  end = std::min(end, hours());
  begin = std::min(begin, end);
  HourlyPanel out;
  out.unit_ids = unit_ids;
  out.timestamps.assign(timestamps.begin() + static_cast<long>(begin),
                        timestamps.begin() + static_cast<long>(end));
  out.generation = Matrix(end - begin, units());
  for (std::size_t t = begin; t < end; ++t) {
    for (std::size_t u = 0; u < units(); ++u) out.generation(t - begin, u) = generation(t, u);
  }
  for (const auto& [name, values] : covariates) {
    out.covariates[name].assign(values.begin() + static_cast<long>(begin),
                                values.begin() + static_cast<long>(end));
  }
  out.report = report;
  out.report.output_hours = end - begin;
  return out;
}

HourlyPanel HourlyPanel::select_units(std::span<const std::size_t> units) const {
  HourlyPanel out;
  out.timestamps = timestamps;
  out.covariates = covariates;
  out.report = report;
  out.generation = Matrix(hours(), units.size());
  for (std::size_t k = 0; k < units.size(); ++k) {
    out.unit_ids.push_back(unit_ids.at(units[k]));
    for (std::size_t t = 0; t < hours(); ++t) out.generation(t, k) = generation(t, units[k]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV ingestion

namespace {

struct ColumnPlan {
  long timestamp = -1;
  std::vector<std::pair<std::string, long>> covariates;  // canonical name, csv index
  std::vector<std::pair<std::string, long>> units;
};

ColumnPlan plan_columns(const csv::Table& table, const ColumnSchema& schema,
                        const std::string& source) {
  ColumnPlan plan;
  plan.timestamp = table.column(schema.timestamp);
  if (plan.timestamp < 0) {
    throw LoadError(source + ": missing column '" + schema.timestamp + "'", 1);
  }
  std::set<long> used = {plan.timestamp};
  for (const auto& [canonical, header] : schema.covariates) {
    const long idx = table.column(header);
    const bool required =
        std::find(schema.required.begin(), schema.required.end(), canonical) != schema.required.end();
    if (idx < 0) {
      if (required) throw LoadError(source + ": missing column '" + header + "'", 1);
      continue;
    }
    plan.covariates.emplace_back(canonical, idx);
    used.insert(idx);
  }
  if (!schema.units.empty()) {
    for (const auto& u : schema.units) {
      const long idx = table.column(u);
      if (idx < 0) throw LoadError(source + ": missing unit column '" + u + "'", 1);
      plan.units.emplace_back(u, idx);
    }
  } else {
    for (std::size_t i = 0; i < table.header.size(); ++i) {
      if (!used.count(static_cast<long>(i))) {
        plan.units.emplace_back(table.header[i], static_cast<long>(i));
      }
    }
  }
  if (plan.units.empty()) throw LoadError(source + ": no unit columns", 1);
  return plan;
}

}  // namespace

HourlyPanel parse_panel(std::istream& in, const std::string& source, const ColumnSchema& schema) {
  const csv::Table table = csv::parse(in, source);
  const ColumnPlan plan = plan_columns(table, schema, source);
  const std::size_t n_rows = table.rows.size();
  if (n_rows == 0) throw LoadError(source + ": no data rows");

  std::vector<UnixSeconds> stamps(n_rows);
  for (std::size_t r = 0; r < n_rows; ++r) {
    const auto& field = table.rows[r][static_cast<std::size_t>(plan.timestamp)];
    auto t = parse_iso8601(field);
    if (!t) throw LoadError(source + ": unparseable timestamp '" + field + "'", table.line_numbers[r]);
    stamps[r] = *t;
    if (r > 0) {
      if (stamps[r] == stamps[r - 1]) {
        throw LoadError(source + ": duplicated timestamp " + format_iso8601(stamps[r]),
                        table.line_numbers[r]);
      }
      if (stamps[r] < stamps[r - 1]) {
        throw LoadError(source + ": non-monotone time axis at " + format_iso8601(stamps[r]),
                        table.line_numbers[r]);
      }
    }
  }

  // Input resolution: smallest spacing, which must divide one hour.
  UnixSeconds spacing = kSecondsPerHour;
  for (std::size_t r = 1; r < n_rows; ++r) spacing = std::min(spacing, stamps[r] - stamps[r - 1]);
  if (kSecondsPerHour % spacing != 0) {
    throw LoadError(source + ": time spacing of " + std::to_string(spacing) +
                    " s does not divide one hour");
  }
  const auto per_hour = static_cast<std::size_t>(kSecondsPerHour / spacing);

  auto floor_hour = [](UnixSeconds t) {
    UnixSeconds q = t / kSecondsPerHour;
    if (t % kSecondsPerHour != 0 && t < 0) --q;
    return q * kSecondsPerHour;
  };
  const UnixSeconds first = floor_hour(stamps.front());
  const UnixSeconds last = floor_hour(stamps.back());
  const auto n_hours = static_cast<std::size_t>((last - first) / kSecondsPerHour + 1);

  const std::size_t n_units = plan.units.size();
  const std::size_t n_cov = plan.covariates.size();
  const std::size_t n_cols = n_units + n_cov;
  std::vector<double> sums(n_hours * n_cols, 0.0);
  std::vector<std::size_t> counts(n_hours, 0);
  std::vector<bool> poisoned(n_hours * n_cols, false);

  HourlyPanel panel;
  panel.report.input_rows = n_rows;
  panel.report.rows_per_hour = per_hour;

  for (std::size_t r = 0; r < n_rows; ++r) {
    const auto h = static_cast<std::size_t>((floor_hour(stamps[r]) - first) / kSecondsPerHour);
    ++counts[h];
    for (std::size_t c = 0; c < n_cols; ++c) {
      const bool is_unit = c < n_units;
      const long idx = is_unit ? plan.units[c].second : plan.covariates[c - n_units].second;
      const auto& field = table.rows[r][static_cast<std::size_t>(idx)];
      double v = 0.0;
      if (!csv::parse_number(field, v) || std::isinf(v)) {
        throw LoadError(source + ": non-numeric value '" + field + "' in column '" +
                            table.header[static_cast<std::size_t>(idx)] + "'",
                        table.line_numbers[r]);
      }
      if (is_unit && !csv::is_missing(v) && v < 0.0) {
        if (v < -kNegativeTolerance) {
          throw ValidationError(source + ": negative generation " + field + " for unit '" +
                                plan.units[c].first + "' at " + format_iso8601(stamps[r]) +
                                " (row " + std::to_string(table.line_numbers[r]) + ")");
        }
        v = 0.0;
        ++panel.report.clamped_negative;
      }
      if (csv::is_missing(v)) {
        poisoned[h * n_cols + c] = true;
      } else {
        sums[h * n_cols + c] += v;
      }
    }
  }

  panel.timestamps.resize(n_hours);
  for (std::size_t h = 0; h < n_hours; ++h) {
    panel.timestamps[h] = first + static_cast<UnixSeconds>(h) * kSecondsPerHour;
  }
  for (const auto& u : plan.units) panel.unit_ids.push_back(u.first);
  panel.generation = Matrix(n_hours, n_units);
  std::vector<std::vector<double>> cov(n_cov, std::vector<double>(n_hours));
  for (std::size_t h = 0; h < n_hours; ++h) {
    const bool complete = counts[h] == per_hour;
    if (counts[h] == 0) {
      ++panel.report.gap_hours;
    } else if (!complete) {
      ++panel.report.incomplete_hours;
    }
    for (std::size_t c = 0; c < n_cols; ++c) {
      double v = csv::kMissing;
      if (complete && !poisoned[h * n_cols + c]) {
        v = sums[h * n_cols + c] / static_cast<double>(per_hour);
      }
      if (c < n_units) {
        panel.generation(h, c) = v;
      } else {
        cov[c - n_units][h] = v;
      }
    }
  }
  for (std::size_t c = 0; c < n_cov; ++c) {
    panel.covariates[plan.covariates[c].first] = std::move(cov[c]);
  }
  panel.report.output_hours = n_hours;
  return panel;
}

HourlyPanel load_panel(const std::filesystem::path& path, const ColumnSchema& schema) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open " + path.string());
  return parse_panel(in, path.string(), schema);
}

void write_panel(const HourlyPanel& panel, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "timestamp";
  for (const auto& [name, _] : panel.covariates) out << ',' << name;
  for (const auto& id : panel.unit_ids) out << ',' << id;
  out << '\n';
  for (std::size_t t = 0; t < panel.hours(); ++t) {
    out << format_iso8601(panel.timestamps[t]);
    for (const auto& [_, values] : panel.covariates) out << ',' << csv::format_number(values[t]);
    for (std::size_t u = 0; u < panel.units(); ++u) {
      out << ',' << csv::format_number(panel.generation(t, u));
    }
    out << '\n';
  }
}

namespace {

bool parse_bool(const std::string& s, long row) {
  if (s == "1" || s == "true" || s == "True" || s == "TRUE" || s == "yes") return true;
  if (s == "0" || s == "false" || s == "False" || s == "FALSE" || s == "no") return false;
  throw LoadError("invalid boolean '" + s + "'", row);
}

}  // namespace

std::vector<UnitMeta> load_unit_meta(const std::filesystem::path& path) {
  const csv::Table t = csv::read(path);
  const char* names[] = {"unit_id",     "g_max",           "age_years",     "chp",
                         "technology",  "owner_class",     "market_oriented", "coal_based_gas"};
  long idx[8];
  for (int i = 0; i < 8; ++i) {
    idx[i] = t.column(names[i]);
    if (idx[i] < 0) throw LoadError(path.string() + ": missing column '" + names[i] + "'", 1);
  }
  std::vector<UnitMeta> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const long line = t.line_numbers[r];
    auto field = [&](int i) -> const std::string& { return row[static_cast<std::size_t>(idx[i])]; };
    UnitMeta m;
    m.unit_id = field(0);
    double v = 0.0;
    if (!csv::parse_number(field(1), v) || !(v > 0.0)) {
      throw LoadError(path.string() + ": g_max must be positive for unit '" + m.unit_id + "'", line);
    }
    m.g_max = v;
    if (!csv::parse_number(field(2), v) || csv::is_missing(v)) {
      throw LoadError(path.string() + ": invalid age for unit '" + m.unit_id + "'", line);
    }
    m.age_years = v;
    m.chp = parse_bool(field(3), line);
    try {
      m.technology = parse_technology(field(4));
      m.owner_class = parse_owner_class(field(5));
    } catch (const ValidationError& e) {
      throw LoadError(path.string() + ": " + e.what(), line);
    }
    m.market_oriented = parse_bool(field(6), line);
    m.coal_based_gas = parse_bool(field(7), line);
    out.push_back(std::move(m));
  }
  return out;
}

void write_unit_meta(std::span<const UnitMeta> units, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "unit_id,g_max,age_years,chp,technology,owner_class,market_oriented,coal_based_gas\n";
  for (const auto& u : units) {
    out << u.unit_id << ',' << csv::format_number(u.g_max) << ','
        << csv::format_number(u.age_years) << ',' << (u.chp ? "true" : "false") << ','
        << to_string(u.technology) << ',' << to_string(u.owner_class) << ','
        << (u.market_oriented ? "true" : "false") << ',' << (u.coal_based_gas ? "true" : "false")
        << '\n';
  }
}

// ---------------------------------------------------------------------------
// Scaling, discretization, entropy

ScaledPanel minmax_scale(const HourlyPanel& panel, std::span<const std::string> columns) {
  ScaledPanel out{panel, {}};
  for (const auto& name : columns) {
    auto& values = out.panel.covariates.at(name);
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (double v : values) {
      if (csv::is_missing(v)) continue;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (!(hi > lo)) {
      throw ValidationError("degenerate scale for column '" + name + "': max equals min");
    }
    ScalerParams p{name, lo, hi};
    for (double& v : values) {
      if (!csv::is_missing(v)) v = p.apply(v);
    }
    out.params.push_back(p);
  }
  return out;
}

std::string scaler_json(std::span<const ScalerParams> params) {
  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  for (const auto& p : params) {
    j.push_back({{"column", p.column}, {"min", p.min}, {"max", p.max}});
  }
  return j.dump(2);
}

std::int8_t discretize_value(double g, double g_max) {
  if (csv::is_missing(g)) return kMissingState;
  if (g <= g_max / 3.0) return 0;
  if (g <= 2.0 * g_max / 3.0) return 1;
  return 2;
}

StateSeries discretize(std::span<const double> generation, double g_max, const std::string& unit_id) {
  if (!(g_max > 0.0)) throw ValidationError("g_max must be positive for unit '" + unit_id + "'");
  StateSeries s{unit_id, std::vector<std::int8_t>(generation.size())};
  for (std::size_t t = 0; t < generation.size(); ++t) {
    const double g = generation[t];
    if (!csv::is_missing(g) && g < -kNegativeTolerance) {
      throw ValidationError("negative generation " + std::to_string(g) + " for unit '" + unit_id +
                            "' at hour " + std::to_string(t));
    }
    s.states[t] = discretize_value(g, g_max);
  }
  return s;
}

double unit_entropy(const StateSeries& s) {
  std::size_t counts[3] = {0, 0, 0};
  std::size_t total = 0;
  for (auto v : s.states) {
    if (v == kMissingState) continue;
    ++counts[v];
    ++total;
  }
  if (total == 0) throw ValidationError("unit '" + s.unit_id + "' has no observed states");
  double h = 0.0;
  for (auto c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / static_cast<double>(total);
    h -= p * std::log2(p);
  }
  return h;
}

FilterResult filter_units(std::span<const StateSeries> states, double threshold) {
  FilterResult r;
  for (std::size_t i = 0; i < states.size(); ++i) {
    const double h = unit_entropy(states[i]);
    r.entropies.push_back(h);
    if (h >= threshold) {
      r.retained.push_back(i);
    } else {
      r.excluded.push_back({states[i].unit_id, h});
    }
  }
  return r;
}

std::string exclusion_json(const FilterResult& r, std::span<const StateSeries> states,
                           double threshold) {
  nlohmann::ordered_json j;
  j["threshold_bits"] = threshold;
  auto& ent = j["entropies"] = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < states.size(); ++i) ent[states[i].unit_id] = r.entropies[i];
  auto& ret = j["retained"] = nlohmann::ordered_json::array();
  for (auto i : r.retained) ret.push_back(states[i].unit_id);
  auto& exc = j["excluded"] = nlohmann::ordered_json::array();
  for (const auto& e : r.excluded) exc.push_back({{"unit_id", e.unit_id}, {"entropy", e.entropy}});
  return j.dump(2);
}

// ---------------------------------------------------------------------------
// Windows and split

WindowSet build_subsequences(std::span<const StateSeries> states, const std::vector<bool>& hour_valid,
                             const WindowOptions& opt) {
  WindowSet out;
  const std::size_t span_hours = opt.context_hours + opt.forecast_hours;
  if (span_hours == 0 || opt.step_hours == 0) throw ConfigError("window sizes must be positive");
  if (states.empty()) return out;
  const std::size_t T = states.front().states.size();
  if (T < span_hours) {
    out.too_short = true;
    return out;
  }
  out.candidate_starts = (T - span_hours) / opt.step_hours + 1;
  for (std::size_t u = 0; u < states.size(); ++u) {
    const auto& s = states[u].states;
    if (s.size() != T) throw ShapeError("state series lengths differ");
    for (std::size_t w = 0; w < out.candidate_starts; ++w) {
      const std::size_t start = w * opt.step_hours;
      bool ok = true;
      for (std::size_t t = start; t < start + span_hours && ok; ++t) {
        ok = s[t] != kMissingState && (hour_valid.empty() || hour_valid[t]);
      }
      if (ok) {
        out.windows.push_back({u, start});
      } else {
        ++out.dropped;
      }
    }
  }
  return out;
}

SplitDataset split(std::size_t count, const SplitRatios& ratios, std::uint64_t seed) {
  const double sum = ratios.train + ratios.validation + ratios.test;
  if (std::abs(sum - 1.0) > 1e-9 || ratios.train < 0 || ratios.validation < 0 || ratios.test < 0) {
    throw ConfigError("split ratios must be non-negative and sum to 1");
  }
  if (count < 10) throw ConfigError("split needs at least 10 subsequences");
  std::vector<std::size_t> idx(count);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  rng.shuffle(idx);
  const auto n = static_cast<double>(count);
  auto n_train = static_cast<std::size_t>(std::floor(ratios.train * n + 0.5));
  auto n_val = static_cast<std::size_t>(std::floor(ratios.validation * n + 0.5));
  n_train = std::min(n_train, count);
  n_val = std::min(n_val, count - n_train);
  SplitDataset s;
  s.seed = seed;
  s.train.assign(idx.begin(), idx.begin() + static_cast<long>(n_train));
  s.validation.assign(idx.begin() + static_cast<long>(n_train),
                      idx.begin() + static_cast<long>(n_train + n_val));
  s.test.assign(idx.begin() + static_cast<long>(n_train + n_val), idx.end());
  return s;
}

FeatureTable build_features(const HourlyPanel& scaled) {
  FeatureTable f;
  const std::size_t T = scaled.hours();
  f.covariates = Matrix(T, kModelCovariates.size());
  f.weekday.resize(T);
  f.hour.resize(T);
  f.valid.assign(T, true);
  for (std::size_t c = 0; c < kModelCovariates.size(); ++c) {
    const auto& col = scaled.covariate(kModelCovariates[c]);
    for (std::size_t t = 0; t < T; ++t) {
      f.covariates(t, c) = col[t];
      if (csv::is_missing(col[t])) f.valid[t] = false;
    }
  }
  for (std::size_t t = 0; t < T; ++t) {
    f.weekday[t] = static_cast<std::uint8_t>(weekday(scaled.timestamps[t]));
    f.hour[t] = static_cast<std::uint8_t>(hour_of_day(scaled.timestamps[t]));
  }
  return f;
}

PreparedData prepare(const HourlyPanel& panel, std::span<const UnitMeta> meta,
                     const PrepareOptions& opt) {
  PreparedData d;
  d.scaled = minmax_scale(panel);
  for (std::size_t u = 0; u < panel.units(); ++u) {
    const auto& id = panel.unit_ids[u];
    auto it = std::find_if(meta.begin(), meta.end(), [&](const UnitMeta& m) { return m.unit_id == id; });
    if (it == meta.end()) throw ValidationError("no metadata for unit '" + id + "'");
    d.all_states.push_back(discretize(panel.unit_series(u), it->g_max, id));
  }
  d.filter = filter_units(d.all_states, opt.entropy_threshold);

  auto& seq = d.sequences;
  seq.features = build_features(d.scaled.panel);
  seq.window = opt.window;
  for (auto i : d.filter.retained) {
    seq.states.push_back(d.all_states[i]);
    seq.unit_ids.push_back(d.all_states[i].unit_id);
  }
  d.window_set = build_subsequences(seq.states, seq.features.valid, opt.window);
  seq.windows = d.window_set.windows;
  return d;
}

}  // namespace flexembed::dataset
