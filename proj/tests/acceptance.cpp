// Acceptance suite: one PASS/FAIL line per criterion.
//   acceptance                 run every criterion
//   acceptance --criterion N   run criterion N only

#include <sys/wait.h>

#include <algorithm>
#include <array>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/fisher_f.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "flexembed/analysis.hpp"
#include "flexembed/baselines.hpp"
#include "flexembed/clustering.hpp"
#include "flexembed/dataset.hpp"
#include "flexembed/model.hpp"
#include "flexembed/numeric.hpp"
#include "flexembed/rng.hpp"
#include "flexembed/synth.hpp"
#include "oracles.hpp"

using namespace flexembed;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

// ---------------------------------------------------------------- 1

Outcome gradient_check() {
  const auto t0 = Clock::now();
  synth::SynthConfig sc;
  sc.hours = 24 * 21;
  sc.units_per_archetype = {1, 1, 1, 1};
  sc.seed = 3;
  const auto fleet = synth::generate(sc);
  dataset::PrepareOptions po;
  po.window = {4, 4, 8};
  po.entropy_threshold = 0.0;
  auto prep = dataset::prepare(fleet.panel, fleet.meta, po);
  // Keep two units.
  auto& seq = prep.sequences;
  seq.states.resize(2);
  seq.unit_ids.resize(2);
  std::erase_if(seq.windows, [](const dataset::Subsequence& w) { return w.unit_index >= 2; });

  model::ModelConfig cfg;
  cfg.units = 2;
  cfg.hidden = 8;
  cfg.seed = 11;
  model::EncoderDecoderModel m(cfg);
  Rng rng(5);
  for (auto& v : m.params().value(*m.params().find("embedding")).values()) v = rng.uniform(-0.5, 0.5);
  const std::vector<std::size_t> batch_windows = {0, 1, seq.windows.size() - 2, seq.windows.size() - 1};
  const auto batch = model::make_batch(seq, batch_windows, cfg);
  std::vector<Matrix> grads;
  model::loss_and_gradients(m, batch, &grads);
  auto loss = [&](const numeric::ParameterSet& p) {
    return model::loss_and_gradients(model::EncoderDecoderModel(cfg, p), batch, nullptr);
  };
  const auto r = numeric::finite_diff_check(loss, m.params(), grads, {1e-5, 0, 1});
  const double secs = seconds_since(t0);
  std::ostringstream d;
  d << "max relative error " << r.max_rel_error << " over " << r.checked << " coordinates (worst "
    << r.worst_parameter << "[" << r.worst_index << "] analytic " << r.worst_analytic << " numeric "
    << r.worst_numeric << "), " << secs << " s";
  return {r.max_rel_error <= 1e-4 && secs < 10.0, d.str()};
}

// ---------------------------------------------------------------- 2

Outcome overfit() {
  const auto t0 = Clock::now();
  synth::SynthConfig sc;
  sc.hours = 24 * 40;
  sc.units_per_archetype = {1, 1, 1, 1};
  sc.seed = 7;
  const auto fleet = synth::generate(sc);
  const auto prep = dataset::prepare(fleet.panel, fleet.meta);
  const auto& seq = prep.sequences;
  // Eight windows spread over the units.
  dataset::SplitDataset sp;
  for (std::size_t i = 0; i < 8; ++i) sp.train.push_back(i * seq.windows.size() / 8);
  sp.validation = sp.train;

  model::TrainConfig tc;
  tc.hidden = 64;
  tc.embedding = 8;
  tc.lr = 1e-2;
  tc.batch_size = 8;
  tc.max_epochs = 200;
  tc.patience = 200;
  tc.seed = 7;

  // Loss on the fixed batch must fall between step 0 and step 5 at lr 1e-3.
  // The 200 memorization epochs are a single batch each, so they use a
  // larger step.
  model::EncoderDecoderModel probe(model::model_config_for(seq, tc));
  auto adam = numeric::make_adam_state(probe.params(), {1e-3, 0.9, 0.999, 1e-8});
  const auto batch = model::make_batch(seq, sp.train, probe.config());
  std::vector<Matrix> grads;
  const double loss0 = model::loss_and_gradients(probe, batch, &grads);
  for (int s = 0; s < 5; ++s) {
    numeric::adam_step(probe.params(), grads, adam);
    model::loss_and_gradients(probe, batch, &grads);
  }
  const double loss5 = model::loss_and_gradients(probe, batch, nullptr);

  std::size_t reached = 0;
  const auto res = model::train(seq, sp, tc, [&](const model::EpochRecord& r) {
    if (reached == 0 && r.validation_accuracy >= 0.99) reached = r.epoch;
  });
  const auto final_metrics = model::evaluate(res.model, seq, sp.train);
  const double secs = seconds_since(t0);
  std::ostringstream d;
  d << "train accuracy " << final_metrics.accuracy << " (>= 0.99 first at epoch " << reached << "), loss step0 "
    << loss0 << " -> step5 " << loss5 << ", " << secs << " s";
  return {final_metrics.accuracy >= 0.99 && reached > 0 && loss5 < loss0 && secs < 120.0, d.str()};
}

// ---------------------------------------------------------------- 3, 4

constexpr std::array<std::uint64_t, 5> kRecoverySeeds = {1, 2, 3, 4, 5};
constexpr std::size_t kRecoveryEpochs = 10;

struct RecoveryRun {
  std::uint64_t seed = 0;
  clustering::Partition truth;
  model::Embeddings embeddings;
  double seconds = 0.0;
};

fs::path cache_dir() { return fs::current_path() / "acceptance_cache"; }

// Trains one seed and caches the embeddings. With reuse = true a cache left
// by the recovery criterion in the same build tree is read instead.
RecoveryRun recovery_run(std::uint64_t seed, bool reuse) {
  RecoveryRun run;
  run.seed = seed;
  synth::SynthConfig sc;
  sc.seed = seed;
  const auto fleet = synth::generate(sc);
  run.truth = fleet.ground_truth;
  const auto cached = cache_dir() / ("embeddings_seed" + std::to_string(seed) + "_e" +
                                     std::to_string(kRecoveryEpochs) + ".csv");
  if (reuse && fs::exists(cached)) {
    run.embeddings = model::read_embeddings_csv(cached);
    return run;
  }
  const auto t0 = Clock::now();
  const auto prep = dataset::prepare(fleet.panel, fleet.meta);
  const auto sp = dataset::split(prep.sequences.windows.size(), {}, seed);
  model::TrainConfig tc;
  tc.hidden = 64;
  tc.embedding = 8;
  tc.max_epochs = kRecoveryEpochs;
  tc.seed = seed;
  const auto res = model::train(prep.sequences, sp, tc);
  run.embeddings = model::extract_embeddings(res.model, prep.sequences.unit_ids);
  run.seconds = seconds_since(t0);
  fs::create_directories(cache_dir());
  model::write_embeddings_csv(run.embeddings, cached);
  return run;
}

clustering::DistanceMatrix distances_of(const RecoveryRun& r) {
  return clustering::cosine_distance_matrix(r.embeddings.values, r.embeddings.unit_ids);
}

clustering::Partition complete_cut(const clustering::DistanceMatrix& d, std::size_t k, const RecoveryRun& r) {
  auto p = clustering::cut_tree(clustering::hierarchical_cluster(d, clustering::Linkage::complete), k);
  p.unit_ids = r.embeddings.unit_ids;
  return p;
}

Outcome recovery() {
  const auto t0 = Clock::now();
  std::size_t good = 0;
  std::ostringstream d;
  for (auto seed : kRecoverySeeds) {
    const auto run = recovery_run(seed, false);
    const auto dist = distances_of(run);
    const auto sel = clustering::select_k(dist.values, clustering::Linkage::complete, 2, 8);
    const auto p = complete_cut(dist, sel.best_k, run);
    const auto [truth, found] = clustering::restrict_to_common(run.truth, p);
    const double ari = clustering::adjusted_rand_index(truth.labels, found.labels);
    const bool ok = sel.best_k == 4 && ari >= 0.9;
    good += ok;
    d << "seed " << seed << ": k*=" << sel.best_k << " ARI=" << ari << (ok ? "" : " (miss)") << "; ";
  }
  const double secs = seconds_since(t0);
  d << good << "/5 seeds, " << secs << " s";
  return {good >= 4 && secs < 1800.0, d.str()};
}

Outcome robustness() {
  std::size_t good = 0;
  std::ostringstream d;
  for (auto seed : kRecoverySeeds) {
    const auto run = recovery_run(seed, true);
    const auto dist = distances_of(run);
    const auto ref = complete_cut(dist, 4, run);
    auto avg = clustering::cut_tree(clustering::hierarchical_cluster(dist, clustering::Linkage::average), 4);
    avg.unit_ids = run.embeddings.unit_ids;
    auto ke = clustering::kmeans(run.embeddings.values, 4, clustering::KMeansMetric::euclidean, seed).partition;
    auto kc = clustering::kmeans(run.embeddings.values, 4, clustering::KMeansMetric::cosine, seed).partition;
    ke.unit_ids = kc.unit_ids = run.embeddings.unit_ids;
    const double a1 = clustering::agreement(ref, avg).agreement;
    const double a2 = clustering::agreement(ref, ke).agreement;
    const double a3 = clustering::agreement(ref, kc).agreement;
    const bool ok = std::min({a1, a2, a3}) >= 0.8;
    good += ok;
    d << "seed " << seed << ": average " << a1 << ", kmeans-euclidean " << a2 << ", kmeans-cosine " << a3
      << (ok ? "" : " (miss)") << "; ";
  }
  // Same seeds as the recovery criterion, which passes on 4 of 5.
  d << good << "/5 seeds";
  return {good >= 4, d.str()};
}

// ---------------------------------------------------------------- 5

Outcome clustering_oracles() {
  Rng rng(2024);
  std::size_t mismatches = 0, trials = 0;
  double worst_height = 0.0, worst_sil = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng.below(11);
    Matrix d(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) d(i, j) = d(j, i) = rng.uniform(0.0, 2.0);
    for (auto linkage : {clustering::Linkage::complete, clustering::Linkage::average, clustering::Linkage::single}) {
      ++trials;
      const auto tree = clustering::hierarchical_cluster(d, linkage);
      const auto ref = oracle::agglomerate(d, linkage);
      bool same = tree.merges.size() == ref.size();
      for (std::size_t s = 0; same && s < ref.size(); ++s) {
        const auto& m = tree.merges[s];
        same = m.left == ref[s].left && m.right == ref[s].right && m.size == ref[s].size;
        const double dh = std::abs(m.height - ref[s].height);
        worst_height = std::max(worst_height, dh);
        // Complete and single linkage heights are matrix entries; average
        // linkage heights are means whose summation order differs.
        same = same && (linkage == clustering::Linkage::average ? dh <= 1e-12 : dh == 0.0);
      }
      for (std::size_t k = 1; same && k <= n; ++k) same = clustering::cut_tree(tree, k).labels == oracle::cut(ref, n, k);
      mismatches += !same;
    }
    if (n <= 10 && n >= 3) {
      std::vector<int> labels(n);
      for (auto& v : labels) v = static_cast<int>(rng.below(std::min<std::size_t>(n - 1, 4)));
      labels[0] = 0;
      labels[1] = 1;
      worst_sil = std::max(worst_sil, std::abs(clustering::silhouette(d, labels) - oracle::silhouette(d, labels)));
    }
  }
  std::ostringstream out;
  out << mismatches << " tree mismatches in " << trials << " linkage trials (max height diff " << worst_height
      << "), max silhouette diff " << worst_sil;
  return {mismatches == 0 && worst_sil <= 1e-12, out.str()};
}

// ---------------------------------------------------------------- 6

Outcome dtw_oracle() {
  Rng rng(77);
  std::size_t bad = 0;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> x(1 + rng.below(10)), y(1 + rng.below(10));
    for (auto& v : x) v = rng.uniform(-1.0, 1.0);
    for (auto& v : y) v = rng.uniform(-1.0, 1.0);
    const double a = baselines::dtw(x, y);
    bad += a != oracle::dtw(x, y);
    bad += baselines::dtw(x, x) != 0.0;
    bad += a != baselines::dtw(y, x);
  }
  return {bad == 0, std::to_string(bad) + " violations over 200 pairs"};
}

// ---------------------------------------------------------------- 7

Outcome formulas() {
  std::vector<std::string> failures;
  auto expect = [&](bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  };
  dataset::StateSeries s{"x", {}};
  s.states.insert(s.states.end(), 95, 0);
  s.states.insert(s.states.end(), 5, 1);
  const double h = dataset::unit_entropy(s);
  expect(std::abs(h - 0.28640) <= 1e-4 && h < dataset::kDefaultEntropyThreshold, "entropy " + std::to_string(h));

  const Matrix e(4, 2, {1.0, 0.0, 3.0, 0.0, 0.0, 2.0, -5.0, 0.0});
  const std::vector<std::string> ids = {"a", "b", "c", "d"};
  const auto d = clustering::cosine_distance_matrix(e, ids);
  expect(d.values(0, 1) == 0.0 && d.values(0, 2) == 1.0 && d.values(0, 3) == 2.0, "cosine endpoints");

  const auto chi = analysis::chi_square(Matrix(2, 2, {10, 10, 10, 10}));
  expect(chi.statistic == 0.0 && chi.p_value == 1.0, "chi-square of a uniform table");
  const auto an = analysis::anova_f({{1, 2, 3}, {1, 2, 3}, {1, 2, 3}});
  expect(an.statistic == 0.0 && an.p_value == 1.0, "ANOVA of identical groups");

  // Statistic oracles: direct formulas and Boost distributions.
  Rng rng(99);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::vector<double>> groups(2 + rng.below(3));
    for (auto& g : groups) {
      g.resize(2 + rng.below(6));
      for (auto& v : g) v = rng.normal() + 0.3 * static_cast<double>(&g - groups.data());
    }
    long double grand = 0.0L;
    std::size_t n = 0;
    for (const auto& g : groups) {
      for (double v : g) grand += v;
      n += g.size();
    }
    grand /= static_cast<long double>(n);
    long double ssb = 0.0L, ssw = 0.0L;
    for (const auto& g : groups) {
      long double m = 0.0L;
      for (double v : g) m += v;
      m /= static_cast<long double>(g.size());
      ssb += static_cast<long double>(g.size()) * (m - grand) * (m - grand);
      for (double v : g) ssw += (v - m) * (v - m);
    }
    const double df1 = static_cast<double>(groups.size() - 1), df2 = static_cast<double>(n - groups.size());
    const double f = static_cast<double>((ssb / df1) / (ssw / df2));
    const auto r = analysis::anova_f(groups);
    const double pf = boost::math::cdf(boost::math::complement(boost::math::fisher_f(df1, df2), f));
    worst = std::max({worst, std::abs(r.statistic - f) / std::max(1.0, f), std::abs(r.p_value - pf)});

    const std::size_t rows = 2 + rng.below(3), cols = 2 + rng.below(3);
    Matrix t(rows, cols);
    for (auto& v : t.values()) v = static_cast<double>(1 + rng.below(20));
    std::vector<double> rs(rows, 0.0), cs(cols, 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j) {
        rs[i] += t(i, j);
        cs[j] += t(i, j);
        total += t(i, j);
      }
    long double x2 = 0.0L;
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j) {
        const long double ex = static_cast<long double>(rs[i]) * cs[j] / total;
        x2 += (t(i, j) - ex) * (t(i, j) - ex) / ex;
      }
    const double df = static_cast<double>((rows - 1) * (cols - 1));
    const auto c = analysis::chi_square(t);
    const double pc = boost::math::cdf(boost::math::complement(boost::math::chi_squared(df), static_cast<double>(x2)));
    worst = std::max({worst, std::abs(c.statistic - static_cast<double>(x2)) / std::max(1.0, c.statistic),
                      std::abs(c.p_value - pc)});
  }
  expect(worst <= 1e-9, "statistic oracles differ by " + std::to_string(worst));

  std::ostringstream out;
  out << "entropy " << h << ", oracle max diff " << worst;
  for (const auto& f : failures) out << "; failed: " << f;
  return {failures.empty(), out.str()};
}

// ---------------------------------------------------------------- 8

Outcome market_statistics() {
  std::vector<std::string> failures;
  const std::vector<double> ramp = {0, 180, 300};
  const double rr = analysis::max_ramp_rate(ramp);
  if (rr != 3.0) failures.push_back("ramp rate " + std::to_string(rr));

  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> g(500), p(500, rng.uniform(-20.0, 120.0));
    for (auto& v : g) v = rng.uniform(0.0, 400.0);
    const auto mv = analysis::market_value(g, p);
    if (!(mv.factor.defined && mv.factor.value == 1.0)) {
      failures.push_back("market value factor " + std::to_string(mv.factor.value));
      break;
    }
  }

  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    synth::SynthConfig sc;
    sc.seed = seed;
    sc.hours = 24 * 120;
    sc.units_per_archetype = {3, 3, 3, 3};
    const auto fleet = synth::generate(sc);
    for (double q : {0.05, 0.1, 0.3}) {
      const auto m = analysis::mustrun_share(fleet.ground_truth, fleet.panel, q);
      double sum = 0.0;
      for (const auto& c : m.clusters) sum += c.share;
      worst = std::max(worst, std::abs(sum - 1.0));
    }
  }
  if (worst > 1e-9) failures.push_back("must-run shares off by " + std::to_string(worst));
  std::ostringstream out;
  out << "ramp " << rr << ", must-run share sum max deviation " << worst;
  for (const auto& f : failures) out << "; failed: " << f;
  return {failures.empty(), out.str()};
}

// ---------------------------------------------------------------- 9

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(FLEXEMBED_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int raw = std::system(cmd.c_str());
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome determinism() {
  const auto root = fs::temp_directory_path() / "flexembed_acceptance_determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  const auto cfg = root / "small.conf";
  std::ofstream(cfg) << "seed = 13\n"
                        "synth.hours = 2880\n"
                        "synth.units_per_archetype = 3\n"
                        "hidden = 16\n"
                        "epochs = 3\n"
                        "k_max = 6\n"
                        "baseline.fourier_sweep = 8,16\n"
                        "baseline.fourier_coeffs = 16\n";
  for (const char* run : {"a", "b"}) {
    const int status = run_cli("all --config " + cfg.string() + " --out " + (root / run).string(),
                               root / (std::string(run) + ".log"));
    if (status != 0) return {false, std::string("pipeline run ") + run + " exited with " + std::to_string(status)};
  }
  std::size_t compared = 0;
  std::vector<std::string> differing;
  for (const char* sub : {"embeddings", "clusters", "reports"}) {
    for (const auto& entry : fs::recursive_directory_iterator(root / "a" / sub)) {
      if (!entry.is_regular_file()) continue;
      const auto rel = fs::relative(entry.path(), root / "a");
      ++compared;
      if (!fs::exists(root / "b" / rel) || read_bytes(entry.path()) != read_bytes(root / "b" / rel)) {
        differing.push_back(rel.string());
      }
    }
  }
  std::ostringstream out;
  out << compared << " files compared";
  for (const auto& f : differing) out << "; differs: " << f;
  const bool ok = differing.empty() && compared > 0;
  if (ok) fs::remove_all(root);
  return {ok, out.str()};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  int only = 0;
  app.add_option("--criterion", only, "run a single criterion (1-9)")->check(CLI::Range(1, 9));
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"gradient check", gradient_check},
      {"overfit sanity", overfit},
      {"synthetic cluster recovery", recovery},
      {"robustness agreement", robustness},
      {"clustering oracles", clustering_oracles},
      {"DTW oracle", dtw_oracle},
      {"formula checks", formulas},
      {"ramp-rate and market statistics", market_statistics},
      {"determinism", determinism},
  };
  bool all_pass = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (only != 0 && static_cast<std::size_t>(only) != i + 1) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    all_pass = all_pass && o.pass;
    std::cout << "criterion " << i + 1 << " " << (o.pass ? "PASS" : "FAIL") << "  " << criteria[i].first << ": "
              << o.detail << std::endl;
  }
  return all_pass ? 0 : 1;
}
