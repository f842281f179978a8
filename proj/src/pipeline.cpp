#include "flexembed/pipeline.hpp"

#include <chrono>
#include <fstream>
#include <ostream>

#include <json.hpp>

#include "flexembed/baselines.hpp"
#include "flexembed/clustering.hpp"
#include "flexembed/csv.hpp"
#include "flexembed/dataset.hpp"
#include "flexembed/error.hpp"
#include "flexembed/model.hpp"
#include "flexembed/report.hpp"
#include "flexembed/synth.hpp"
#include "flexembed/timeutil.hpp"

namespace flexembed::pipeline {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

Layout layout(const config::RunConfig& cfg) { return {fs::path(cfg.str("out"))}; }

const std::vector<std::string>& commands() {
  static const std::vector<std::string> names = {"synth", "prepare", "train", "embed",
                                                 "cluster", "analyze", "robustness", "report"};
  return names;
}

namespace {

struct Context {
  const config::RunConfig& cfg;
  Layout out;
  std::ostream& log;
  std::string hash;
  std::uint64_t seed;

  std::string comment() const { return "flexembed config_hash=" + hash + " seed=" + std::to_string(seed); }

  json stamp() const {
    json j;
    j["config_hash"] = hash;
    j["seed"] = seed;
    return j;
  }
};

void require(const fs::path& path, const std::string& producer) {
  if (!fs::exists(path)) throw MissingArtifactError(path.string(), producer);
}

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json read_json(const fs::path& path, const std::string& producer) {
  require(path, producer);
  std::ifstream in(path);
  return json::parse(in);
}

fs::path input_path(const Context& c, const std::string& key, const std::string& file) {
  const auto& v = c.cfg.str(key);
  return v.empty() ? c.out.data() / file : fs::path(v);
}

dataset::HourlyPanel load_panel(const Context& c) {
  const auto path = input_path(c, "panel", "panel.csv");
  require(path, "synth");
  return dataset::load_panel(path);
}

std::vector<dataset::UnitMeta> load_meta(const Context& c) {
  const auto path = input_path(c, "metadata", "units.csv");
  require(path, "synth");
  return dataset::load_unit_meta(path);
}

dataset::PrepareOptions prepare_options(const config::RunConfig& cfg) {
  dataset::PrepareOptions o;
  o.entropy_threshold = cfg.num("entropy_threshold");
  o.window.context_hours = static_cast<std::size_t>(cfg.integer("context_hours"));
  o.window.forecast_hours = static_cast<std::size_t>(cfg.integer("forecast_hours"));
  o.window.step_hours = static_cast<std::size_t>(cfg.integer("window_stride"));
  return o;
}

dataset::SplitRatios split_ratios(const config::RunConfig& cfg) {
  return {cfg.num("split.train"), cfg.num("split.validation"), cfg.num("split.test")};
}

model::TrainConfig train_config(const Context& c) {
  model::TrainConfig t;
  t.lr = c.cfg.num("lr");
  t.batch_size = static_cast<std::size_t>(c.cfg.integer("batch"));
  t.max_epochs = static_cast<std::size_t>(c.cfg.integer("epochs"));
  t.patience = static_cast<std::size_t>(c.cfg.integer("patience"));
  t.hidden = static_cast<std::size_t>(c.cfg.integer("hidden"));
  t.embedding = static_cast<std::size_t>(c.cfg.integer("embedding"));
  t.identifier = model::parse_identifier_mode(c.cfg.str("identifier"));
  t.decoder_covariates = model::parse_decoder_covariates(c.cfg.str("decoder_covariates"));
  t.seed = c.seed;
  return t;
}

json metrics_json(const model::EvalMetrics& m) {
  json j;
  j["accuracy"] = m.accuracy;
  j["balanced_accuracy"] = m.balanced_accuracy;
  j["missing_class"] = m.missing_class;
  j["recall"] = json::array();
  for (std::size_t k = 0; k < model::kClasses; ++k) {
    j["recall"].push_back(m.class_present[k] ? json(m.recall[k]) : json(nullptr));
  }
  j["confusion"] = json::array();
  for (const auto& row : m.confusion) j["confusion"].push_back(row);
  return j;
}

// Training plus evaluation on one panel; shared by `train` and the period
// retraining of `robustness`.
struct Trained {
  dataset::PreparedData prepared;
  dataset::SplitDataset split;
  model::TrainResult result;
};

Trained train_on(const Context& c, const dataset::HourlyPanel& panel, std::span<const dataset::UnitMeta> meta,
                 const std::string& label) {
  auto prepared = dataset::prepare(panel, meta, prepare_options(c.cfg));
  auto split = dataset::split(prepared.sequences.windows.size(), split_ratios(c.cfg), c.seed);
  auto result = model::train(prepared.sequences, split, train_config(c), [&](const model::EpochRecord& r) {
    c.log << label << " epoch " << r.epoch << " loss " << r.train_loss << " val_balanced_acc "
          << r.validation_balanced_accuracy << std::endl;
  });
  return Trained{std::move(prepared), std::move(split), std::move(result)};
}

json majority_baseline(const dataset::SequenceDataset& data, std::span<const std::size_t> windows) {
  std::array<double, model::kClasses> counts{};
  double total = 0.0;
  for (std::size_t w : windows) {
    const auto& win = data.windows[w];
    const auto& states = data.states[win.unit_index].states;
    const std::size_t begin = win.start + data.window.context_hours;
    for (std::size_t t = begin; t < begin + data.window.forecast_hours; ++t) {
      counts[static_cast<std::size_t>(states[t])] += 1.0;
      total += 1.0;
    }
  }
  double best = 0.0;
  for (double v : counts) best = std::max(best, v);
  return total > 0.0 ? json(best / total) : json(nullptr);
}

// --- commands -------------------------------------------------------------

void cmd_synth(const Context& c) {
  synth::SynthConfig sc;
  sc.seed = c.seed;
  sc.hours = static_cast<std::size_t>(c.cfg.integer("synth.hours"));
  sc.units_per_archetype.fill(static_cast<std::size_t>(c.cfg.integer("synth.units_per_archetype")));
  sc.noise = c.cfg.num("synth.noise");
  const auto fleet = synth::generate(sc);
  synth::write_fleet(fleet, c.out.data());
  c.log << "synth: " << fleet.panel.units() << " units, " << fleet.panel.hours() << " hours -> "
        << c.out.data().string() << std::endl;
}

void cmd_prepare(const Context& c) {
  const auto panel = load_panel(c);
  const auto meta = load_meta(c);
  const auto opt = prepare_options(c.cfg);
  const auto p = dataset::prepare(panel, meta, opt);
  const auto rep = c.out.reports();
  write_text(rep / "scaler.json", dataset::scaler_json(p.scaled.params) + "\n");
  write_text(rep / "exclusions.json", dataset::exclusion_json(p.filter, p.all_states, opt.entropy_threshold) + "\n");
  const auto split = dataset::split(p.sequences.windows.size(), split_ratios(c.cfg), c.seed);
  json j = c.stamp();
  j["hours"] = panel.hours();
  j["units"] = panel.units();
  j["retained_units"] = p.sequences.units();
  j["excluded_units"] = p.filter.excluded.size();
  j["windows"] = p.sequences.windows.size();
  j["dropped_windows"] = p.window_set.dropped;
  j["split"] = {{"train", split.train.size()}, {"validation", split.validation.size()}, {"test", split.test.size()}};
  j["load_report"] = {{"input_rows", panel.report.input_rows},
                      {"rows_per_hour", panel.report.rows_per_hour},
                      {"gap_hours", panel.report.gap_hours},
                      {"incomplete_hours", panel.report.incomplete_hours},
                      {"clamped_negative", panel.report.clamped_negative}};
  write_json(rep / "prepare_summary.json", j);
  c.log << "prepare: " << p.sequences.units() << " of " << panel.units() << " units retained, "
        << p.sequences.windows.size() << " windows" << std::endl;
}

void cmd_train(const Context& c) {
  require(c.out.reports() / "prepare_summary.json", "prepare");
  const auto panel = load_panel(c);
  const auto meta = load_meta(c);
  const auto t = train_on(c, panel, meta, "train");
  const auto tc = train_config(c);
  const auto& data = t.prepared.sequences;
  json extra = c.stamp();
  model::save_model(t.result.model, data.unit_ids, c.out.checkpoints() / "model.ckpt", extra.dump());
  write_text(c.out.reports() / "training_history.json", model::history_json(t.result, tc) + "\n");
  json m = c.stamp();
  m["best_epoch"] = t.result.best_epoch;
  m["diverged"] = t.result.diverged;
  m["validation"] = metrics_json(model::evaluate(t.result.model, data, t.split.validation));
  m["test"] = metrics_json(model::evaluate(t.result.model, data, t.split.test));
  m["validation_majority_baseline"] = majority_baseline(data, t.split.validation);
  m["test_majority_baseline"] = majority_baseline(data, t.split.test);
  write_json(c.out.reports() / "training_metrics.json", m);
  if (t.result.diverged) c.log << "train: warning: training diverged; best snapshot kept" << std::endl;
}

model::Embeddings load_embeddings(const Context& c) {
  const auto path = c.out.embeddings() / "embeddings.csv";
  require(path, "embed");
  return model::read_embeddings_csv(path);
}

void cmd_embed(const Context& c) {
  const auto ckpt = c.out.checkpoints() / "model.ckpt";
  require(ckpt, "train");
  const auto loaded = model::load_model(ckpt);
  const auto e = model::extract_embeddings(loaded.model, loaded.unit_ids);
  model::write_embeddings_csv(e, c.out.embeddings() / "embeddings.csv", c.comment());
  for (std::size_t i = 0; i < e.unit_ids.size(); ++i) {
    if (e.all_zero[i]) c.log << "embed: warning: unit '" << e.unit_ids[i] << "' kept its zero embedding" << std::endl;
  }
  const auto d = clustering::cosine_distance_matrix(e.values, e.unit_ids);
  clustering::write_distance_csv(d, c.out.embeddings() / "distance.csv", c.comment());
}

clustering::Partition main_partition(const Context& c) {
  const auto path = c.out.clusters() / "partition.csv";
  require(path, "cluster");
  auto p = clustering::read_partition_csv(path);
  p.method = c.cfg.str("linkage");
  p.seed = c.seed;
  p.period = "all";
  return p;
}

void cmd_cluster(const Context& c) {
  const auto e = load_embeddings(c);
  const auto d = clustering::cosine_distance_matrix(e.values, e.unit_ids);
  const auto linkage = clustering::parse_linkage(c.cfg.str("linkage"));
  const std::size_t n = d.size();
  auto k = static_cast<std::size_t>(c.cfg.integer("k"));
  json sel = c.stamp();
  if (k == 0) {
    const auto k_min = static_cast<std::size_t>(c.cfg.integer("k_min"));
    const auto k_max = std::min<std::size_t>(static_cast<std::size_t>(c.cfg.integer("k_max")), n - 1);
    const auto s = clustering::select_k(d.values, linkage, k_min, k_max);
    k = s.best_k;
    std::ofstream out((fs::create_directories(c.out.clusters()), c.out.clusters() / "silhouette.csv"));
    out << "# " << c.comment() << "\nk,silhouette\n";
    for (const auto& [kk, score] : s.scores) out << kk << ',' << csv::format_number(score) << '\n';
    sel["selected_by"] = "silhouette";
  } else {
    sel["selected_by"] = "config";
  }
  sel["k"] = k;
  const auto tree = clustering::hierarchical_cluster(d, linkage);
  auto p = clustering::cut_tree(tree, k);
  p.unit_ids = e.unit_ids;
  p.method = clustering::to_string(linkage);
  p.seed = c.seed;
  p.period = "all";
  fs::create_directories(c.out.clusters());
  clustering::write_tree_csv(tree, c.out.clusters() / "tree.csv", c.comment());
  clustering::write_partition_csv(p, c.out.clusters() / "partition.csv", c.comment());
  write_text(c.out.clusters() / "partition.json", clustering::partition_json(p, c.hash) + "\n");
  if (p.k >= 2) sel["silhouette"] = clustering::silhouette(d.values, p.labels);
  const auto gt_path = input_path(c, "ground_truth", "ground_truth.csv");
  if (fs::exists(gt_path)) {
    const auto [truth, found] = clustering::restrict_to_common(synth::read_ground_truth(gt_path), p);
    const auto a = clustering::agreement(truth, found);
    sel["ground_truth"] = {{"units", truth.size()}, {"agreement", a.agreement}, {"adjusted_rand", a.adjusted_rand}};
  }
  write_json(c.out.clusters() / "selection.json", sel);
  c.log << "cluster: k = " << k << " (" << sel["selected_by"].get<std::string>() << ")" << std::endl;
}

void cmd_analyze(const Context& c) {
  const auto p = main_partition(c);
  const auto panel = load_panel(c);
  const auto meta = load_meta(c);
  report::ReportOptions opt;
  opt.low_load_quantile = c.cfg.num("low_load_quantile");
  const auto r = report::build_report(panel, meta, p, opt);
  report::write_report(r, c.out.reports(), c.hash, c.seed);
}

UnixSeconds period_split(const Context& c, const dataset::HourlyPanel& panel) {
  const auto& v = c.cfg.str("period_split");
  if (v == "auto") return panel.timestamps[panel.hours() / 2];
  const auto t = parse_iso8601(v);
  if (!t) throw ConfigError("period_split: cannot parse '" + v + "' as an ISO 8601 instant");
  return *t;
}

void cmd_robustness(const Context& c) {
  const auto main = main_partition(c);
  const auto e = load_embeddings(c);
  const auto k = static_cast<std::size_t>(c.cfg.integer("robustness.k"));
  const auto d = clustering::cosine_distance_matrix(e.values, e.unit_ids);
  json out = c.stamp();
  out["k"] = k;
  json timing;

  // Method comparison at fixed k.
  std::vector<clustering::Partition> methods;
  for (auto l : {clustering::Linkage::complete, clustering::Linkage::average, clustering::Linkage::single}) {
    auto p = clustering::cut_tree(clustering::hierarchical_cluster(d, l), k);
    p.method = clustering::to_string(l);
    methods.push_back(p);
  }
  for (auto m : {clustering::KMeansMetric::euclidean, clustering::KMeansMetric::cosine}) {
    methods.push_back(clustering::kmeans(e.values, k, m, c.seed).partition);
  }
  for (auto& p : methods) {
    p.unit_ids = e.unit_ids;
    p.seed = c.seed;
    p.period = "all";
  }
  {
    std::ofstream csv_out((fs::create_directories(c.out.reports()), c.out.reports() / "agreement_matrix.csv"));
    csv_out << "# " << c.comment() << "\nmethod";
    for (const auto& p : methods) csv_out << ',' << p.method;
    csv_out << '\n';
    json matrix = json::object();
    for (const auto& a : methods) {
      csv_out << a.method;
      for (const auto& b : methods) {
        const auto r = clustering::agreement(a, b);
        csv_out << ',' << csv::format_number(r.agreement);
        matrix[a.method][b.method] = {{"agreement", r.agreement}, {"adjusted_rand", r.adjusted_rand}};
      }
      csv_out << '\n';
    }
    out["methods"] = matrix;
  }
  for (const auto& p : methods) {
    clustering::write_partition_csv(p, c.out.clusters() / ("robustness_" + p.method + ".csv"), c.comment());
  }

  const auto panel = load_panel(c);
  const auto meta = load_meta(c);
  const auto linkage = clustering::parse_linkage(c.cfg.str("linkage"));

  if (c.cfg.flag("robustness.periods")) {
    const UnixSeconds split_at = period_split(c, panel);
    std::size_t cut = 0;
    while (cut < panel.hours() && panel.timestamps[cut] < split_at) ++cut;
    json periods;
    periods["split"] = format_iso8601(split_at);
    std::vector<clustering::Partition> halves;
    const std::pair<std::size_t, std::size_t> ranges[] = {{0, cut}, {cut, panel.hours()}};
    const char* names[] = {"pre", "post"};
    for (int h = 0; h < 2; ++h) {
      const auto sub = panel.slice_hours(ranges[h].first, ranges[h].second);
      const auto t = train_on(c, sub, meta, std::string("robustness ") + names[h]);
      const auto emb = model::extract_embeddings(t.result.model, t.prepared.sequences.unit_ids);
      const auto dh = clustering::cosine_distance_matrix(emb.values, emb.unit_ids);
      auto p = clustering::cut_tree(clustering::hierarchical_cluster(dh, linkage), std::min(k, dh.size()));
      p.unit_ids = emb.unit_ids;
      p.method = clustering::to_string(linkage);
      p.seed = c.seed;
      p.period = names[h];
      clustering::write_partition_csv(p, c.out.clusters() / (std::string("partition_") + names[h] + ".csv"),
                                      c.comment());
      const auto [a, b] = clustering::restrict_to_common(main, p);
      const auto r = clustering::agreement(a, b);
      periods[names[h]] = {{"hours", sub.hours()},
                           {"units", p.size()},
                           {"agreement_with_full", r.agreement},
                           {"adjusted_rand_with_full", r.adjusted_rand}};
      halves.push_back(p);
    }
    const auto [a, b] = clustering::restrict_to_common(halves[0], halves[1]);
    const auto r = clustering::agreement(a, b);
    periods["pre_vs_post"] = {{"units", a.size()}, {"agreement", r.agreement}, {"adjusted_rand", r.adjusted_rand}};
    out["periods"] = periods;
  }

  if (c.cfg.flag("baselines")) {
    // Baselines cluster the same units as the main partition.
    std::vector<std::size_t> cols;
    std::vector<double> g_max;
    std::map<std::string, double> cap;
    for (const auto& m : meta) cap[m.unit_id] = m.g_max;
    for (const auto& id : main.unit_ids) {
      const long col = panel.unit_index(id);
      if (col < 0 || !cap.count(id)) throw ValidationError("robustness: unit '" + id + "' missing from panel or metadata");
      cols.push_back(static_cast<std::size_t>(col));
      g_max.push_back(cap[id]);
    }
    const auto sub = panel.select_units(cols);
    const auto set = baselines::scaled_series(sub.generation, main.unit_ids, g_max,
                                              static_cast<std::size_t>(c.cfg.integer("baseline.block_hours")));
    json b;
    b["series_length"] = set.length();
    auto compare = [&](clustering::Partition p, const std::string& name) {
      p.unit_ids = main.unit_ids;
      p.seed = c.seed;
      p.period = "all";
      p.method = name;
      clustering::write_partition_csv(p, c.out.clusters() / ("baseline_" + name + ".csv"), c.comment());
      const auto r = clustering::agreement(main, p);
      return json{{"agreement", r.agreement}, {"adjusted_rand", r.adjusted_rand}};
    };
    const auto dtw = baselines::dtw_kmedoids(set, k, c.seed);
    b["dtw_kmedoids"] = compare(dtw.partition, "dtw_kmedoids");
    b["dtw_kmedoids"]["cost"] = dtw.cost;
    timing["dtw_distance_seconds"] = dtw.distance_seconds;
    timing["dtw_clustering_seconds"] = dtw.clustering_seconds;
    const double pairs = static_cast<double>(set.size()) * static_cast<double>(set.size() - 1) / 2.0;
    timing["dtw_pairs"] = pairs;
    timing["dtw_series_length"] = set.length();
    if (set.length() > 0 && pairs > 0) {
      // DTW cost grows with the square of the series length.
      const double hourly = static_cast<double>(sub.hours());
      const double scale = (hourly / static_cast<double>(set.length())) * (hourly / static_cast<double>(set.length()));
      timing["dtw_full_resolution_estimate_seconds"] = dtw.distance_seconds * scale;
    }
    const auto corr = baselines::correlation_distance_matrix(set);
    b["correlation_" + clustering::to_string(linkage)] =
        compare(clustering::cut_tree(clustering::hierarchical_cluster(corr, linkage), k),
                "correlation_" + clustering::to_string(linkage));
    auto fourier = [&](std::size_t n_coeffs) -> json {
      if (2 * n_coeffs > set.length()) {
        return json{{"skipped", "series of length " + std::to_string(set.length()) + " too short for " +
                                    std::to_string(n_coeffs) + " coefficients"}};
      }
      const auto x = baselines::fourier_feature_matrix(set, n_coeffs);
      return compare(clustering::kmeans(x, k, clustering::KMeansMetric::euclidean, c.seed).partition,
                     "fourier_" + std::to_string(n_coeffs));
    };
    b["fourier"] = fourier(static_cast<std::size_t>(c.cfg.integer("baseline.fourier_coeffs")));
    json sweep = json::object();
    for (long n_coeffs : c.cfg.int_list("baseline.fourier_sweep")) {
      if (n_coeffs <= 0) throw ConfigError("baseline.fourier_sweep entries must be positive");
      sweep[std::to_string(n_coeffs)] = fourier(static_cast<std::size_t>(n_coeffs));
    }
    b["fourier_sweep"] = sweep;
    out["baselines"] = b;
  }
  write_json(c.out.reports() / "robustness.json", out);
  write_json(c.out.logs() / "timing.json", timing);
}

void cmd_report(const Context& c) {
  json s = c.stamp();
  s["cluster_report"] = read_json(c.out.reports() / "cluster_report.json", "analyze");
  const auto optional = [&](const fs::path& p) { return fs::exists(p) ? read_json(p, "") : json(nullptr); };
  s["selection"] = optional(c.out.clusters() / "selection.json");
  s["training"] = optional(c.out.reports() / "training_metrics.json");
  s["prepare"] = optional(c.out.reports() / "prepare_summary.json");
  s["robustness"] = optional(c.out.reports() / "robustness.json");
  write_json(c.out.reports() / "summary.json", s);

  // A short human-readable digest.
  std::string md = "# flexembed run summary\n\nconfig_hash: " + c.hash + "  \nseed: " + std::to_string(c.seed) + "\n\n";
  const auto& cr = s["cluster_report"];
  md += "## Clusters\n\n| cluster | size | p_off | p_min_load | p_full_load | max ramp (MW/min) |\n|---|---|---|---|---|---|\n";
  for (const auto& cl : cr["clusters"]) {
    const auto& m = cl["metrics"];
    auto val = [&](const char* name) {
      if (!m.contains(name) || m[name]["all"].is_null()) return std::string("NA");
      return csv::format_number(std::round(m[name]["all"].get<double>() * 1000.0) / 1000.0);
    };
    md += "| " + std::to_string(cl["cluster"].get<int>()) + " | " + val("size") + " | " + val("p_off") + " | " +
          val("p_min_load") + " | " + val("p_full_load") + " | " + val("max_ramp_rate_mean") + " |\n";
  }
  if (!s["robustness"].is_null() && s["robustness"].contains("methods")) {
    md += "\n## Method agreement (k = " + std::to_string(s["robustness"]["k"].get<std::size_t>()) + ")\n\n";
    const auto& methods = s["robustness"]["methods"];
    md += "| |";
    for (const auto& [name, _] : methods.items()) md += " " + name + " |";
    md += "\n|---|";
    for (std::size_t i = 0; i < methods.size(); ++i) md += "---|";
    md += "\n";
    for (const auto& [row, cols] : methods.items()) {
      md += "| " + row + " |";
      for (const auto& [_, v] : cols.items()) {
        md += " " + csv::format_number(std::round(v["agreement"].get<double>() * 1000.0) / 1000.0) + " |";
      }
      md += "\n";
    }
  }
  write_text(c.out.reports() / "summary.md", md);
}

}  // namespace

void run(const std::string& command, const config::RunConfig& cfg, std::ostream& log) {
  const Context c{cfg, layout(cfg), log, cfg.hash(), cfg.seed()};
  const fs::path marker = c.out.logs() / (command + ".failed");
  try {
    for (const auto& dir : {c.out.checkpoints(), c.out.embeddings(), c.out.clusters(), c.out.reports()}) {
      fs::create_directories(dir);
    }
    if (command == "synth") cmd_synth(c);
    else if (command == "prepare") cmd_prepare(c);
    else if (command == "train") cmd_train(c);
    else if (command == "embed") cmd_embed(c);
    else if (command == "cluster") cmd_cluster(c);
    else if (command == "analyze") cmd_analyze(c);
    else if (command == "robustness") cmd_robustness(c);
    else if (command == "report") cmd_report(c);
    else throw ConfigError("unknown command '" + command + "'");
  } catch (const std::exception& e) {
    std::error_code ec;
    fs::create_directories(c.out.logs(), ec);
    std::ofstream(marker) << e.what() << '\n';
    throw;
  }
  std::error_code ec;
  fs::remove(marker, ec);
}

void run_all(const config::RunConfig& cfg, std::ostream& log) {
  for (const auto& command : commands()) {
    if (command == "synth" && !cfg.str("panel").empty()) continue;
    run(command, cfg, log);
  }
}

}  // namespace flexembed::pipeline
