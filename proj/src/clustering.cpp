#include "flexembed/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>

#include <json.hpp>

#include "flexembed/csv.hpp"
#include "flexembed/error.hpp"
#include "flexembed/kernels.hpp"
#include "flexembed/rng.hpp"

namespace flexembed::clustering {

DistanceMatrix cosine_distance_matrix(const Matrix& e, std::span<const std::string> ids) {
  if (ids.size() != e.rows()) throw ShapeError("cosine_distance_matrix: label count mismatch");
  for (std::size_t i = 0; i < e.rows(); ++i) {
    double s = 0.0;
    for (double v : e.row(i)) s += v * v;
    if (s == 0.0) {
      throw ValidationError("cosine distance undefined: zero-norm embedding for unit '" + ids[i] + "'");
    }
  }
  Matrix sim;
  kernels::row_cosine(e, sim);
  DistanceMatrix d{{ids.begin(), ids.end()}, Matrix(e.rows(), e.rows())};
  for (std::size_t i = 0; i < e.rows(); ++i) {
    for (std::size_t j = i + 1; j < e.rows(); ++j) {
      const double c = std::clamp(sim(i, j), -1.0, 1.0);
      d.values(i, j) = d.values(j, i) = 1.0 - c;
    }
  }
  return d;
}

std::string to_string(Linkage l) {
  switch (l) {
    case Linkage::complete: return "complete";
    case Linkage::average: return "average";
    case Linkage::single: return "single";
  }
  return "?";
}

Linkage parse_linkage(const std::string& s) {
  if (s == "complete") return Linkage::complete;
  if (s == "average") return Linkage::average;
  if (s == "single") return Linkage::single;
  throw ConfigError("linkage must be complete, average or single, got '" + s + "'");
}

MergeTree hierarchical_cluster(const Matrix& d, Linkage linkage) {
  const std::size_t n = d.rows();
  if (d.cols() != n) throw ShapeError("hierarchical_cluster: distance matrix must be square");
  MergeTree tree;
  tree.leaves = n;
  if (n == 0) return tree;

  // Slot i holds the cluster whose smallest member is leaf i. For average
  // linkage `link` keeps the sum of member-pair distances.
  Matrix link = d;
  std::vector<std::size_t> node(n), size(n, 1);
  std::vector<bool> active(n, true);
  std::iota(node.begin(), node.end(), 0);

  auto height_of = [&](std::size_t i, std::size_t j) {
    return linkage == Linkage::average ? link(i, j) / static_cast<double>(size[i] * size[j])
                                       : link(i, j);
  };

  for (std::size_t step = 0; step + 1 < n; ++step) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t bi = 0, bj = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!active[i]) continue;
      for (std::size_t j = i + 1; j < n; ++j) {
        if (!active[j]) continue;
        const double h = height_of(i, j);
        if (h < best) {
          best = h;
          bi = i;
          bj = j;
        }
      }
    }
    tree.merges.push_back({node[bi], node[bj], best, size[bi] + size[bj]});
    for (std::size_t k = 0; k < n; ++k) {
      if (!active[k] || k == bi || k == bj) continue;
      double v = 0.0;
      switch (linkage) {
        case Linkage::complete: v = std::max(link(bi, k), link(bj, k)); break;
        case Linkage::single: v = std::min(link(bi, k), link(bj, k)); break;
        case Linkage::average: v = link(bi, k) + link(bj, k); break;
      }
      link(bi, k) = link(k, bi) = v;
    }
    active[bj] = false;
    size[bi] += size[bj];
    node[bi] = n + step;
  }

  // Leaf order of the dendrogram, left subtree first.
  std::vector<std::size_t> stack = {n == 1 ? 0 : 2 * n - 2};
  while (!stack.empty()) {
    const std::size_t id = stack.back();
    stack.pop_back();
    if (id < n) {
      tree.leaf_order.push_back(id);
    } else {
      const Merge& m = tree.merges[id - n];
      stack.push_back(m.right);
      stack.push_back(m.left);
    }
  }
  return tree;
}

std::vector<std::vector<std::size_t>> Partition::members() const {
  std::vector<std::vector<std::size_t>> out(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < labels.size(); ++i) out[static_cast<std::size_t>(labels[i])].push_back(i);
  return out;
}

std::vector<int> canonical_labels(std::span<const int> labels) {
  std::map<int, int> remap;
  std::vector<int> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto it = remap.find(labels[i]);
    if (it == remap.end()) it = remap.emplace(labels[i], static_cast<int>(remap.size())).first;
    out[i] = it->second;
  }
  return out;
}

Partition cut_tree(const MergeTree& tree, std::size_t k) {
  const std::size_t n = tree.leaves;
  if (k < 1 || k > n) {
    throw ConfigError("cut_tree: k = " + std::to_string(k) + " outside [1, " + std::to_string(n) + "]");
  }
  std::vector<std::size_t> parent(2 * n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t s = 0; s < n - k; ++s) {
    const auto& m = tree.merges[s];
    parent[find(m.left)] = n + s;
    parent[find(m.right)] = n + s;
  }
  std::vector<int> roots(n);
  for (std::size_t i = 0; i < n; ++i) roots[i] = static_cast<int>(find(i));
  Partition p;
  p.labels = canonical_labels(roots);
  p.k = static_cast<int>(k);
  return p;
}

// ---------------------------------------------------------------------------
// K-means

namespace {

double sq_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

struct KMeansRun {
  std::vector<int> labels;
  Matrix centroids;
  double cost = 0.0;
};

KMeansRun kmeans_once(const Matrix& x, std::size_t k, KMeansMetric metric, Rng& rng,
                      std::size_t max_iterations) {
  const std::size_t n = x.rows(), m = x.cols();
  const bool cosine = metric == KMeansMetric::cosine;
  auto distance = [&](std::size_t i, const Matrix& c, std::size_t j) {
    return cosine ? 1.0 - dot(x.row(i), c.row(j)) : sq_dist(x.row(i), c.row(j));
  };

  // k-means++ seeding on squared Euclidean distance (for unit vectors this
  // is 2·(1 − cos), so the same rule serves both metrics).
  KMeansRun run;
  run.centroids = Matrix(k, m);
  std::vector<bool> chosen(n, false);
  std::size_t first = static_cast<std::size_t>(rng.below(n));
  chosen[first] = true;
  std::copy(x.row(first).begin(), x.row(first).end(), run.centroids.row(0).begin());
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], sq_dist(x.row(i), run.centroids.row(c - 1)));
      if (!chosen[i]) total += d2[i];
    }
    std::size_t pick = n;
    if (total > 0.0) {
      double r = rng.uniform() * total;
      for (std::size_t i = 0; i < n; ++i) {
        if (chosen[i]) continue;
        r -= d2[i];
        pick = i;
        if (r < 0.0) break;
      }
    } else {
      for (std::size_t i = 0; i < n && pick == n; ++i) {
        if (!chosen[i]) pick = i;
      }
    }
    chosen[pick] = true;
    std::copy(x.row(pick).begin(), x.row(pick).end(), run.centroids.row(c).begin());
  }

  run.labels.assign(n, -1);
  std::vector<double> own(n, 0.0);
  for (std::size_t iter = 0; iter < max_iterations; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      double bd = distance(i, run.centroids, 0);
      for (std::size_t c = 1; c < k; ++c) {
        const double dc = distance(i, run.centroids, c);
        if (dc < bd) {
          bd = dc;
          best = static_cast<int>(c);
        }
      }
      own[i] = bd;
      if (run.labels[i] != best) {
        run.labels[i] = best;
        changed = true;
      }
    }
    // Re-seed clusters that lost all their points.
    std::vector<std::size_t> counts(k, 0);
    for (int l : run.labels) ++counts[static_cast<std::size_t>(l)];
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] > 0) continue;
      std::size_t far = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (counts[static_cast<std::size_t>(run.labels[i])] <= 1) continue;
        if (far == n || own[i] > own[far]) far = i;
      }
      if (far == n) break;
      --counts[static_cast<std::size_t>(run.labels[far])];
      run.labels[far] = static_cast<int>(c);
      counts[c] = 1;
      own[far] = 0.0;
      changed = true;
    }
    if (!changed && iter > 0) break;
    // Update step.
    Matrix next(k, m);
    for (std::size_t i = 0; i < n; ++i) {
      auto row = next.row(static_cast<std::size_t>(run.labels[i]));
      for (std::size_t j = 0; j < m; ++j) row[j] += x(i, j);
    }
    for (std::size_t c = 0; c < k; ++c) {
      auto row = next.row(c);
      if (counts[c] == 0) {
        std::copy(run.centroids.row(c).begin(), run.centroids.row(c).end(), row.begin());
        continue;
      }
      if (cosine) {
        const double norm = std::sqrt(dot(row, row));
        if (norm > 0.0) {
          for (auto& v : row) v /= norm;
        } else {
          std::copy(run.centroids.row(c).begin(), run.centroids.row(c).end(), row.begin());
        }
      } else {
        for (auto& v : row) v /= static_cast<double>(counts[c]);
      }
    }
    run.centroids = std::move(next);
  }
  run.cost = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    run.cost += distance(i, run.centroids, static_cast<std::size_t>(run.labels[i]));
  }
  return run;
}

}  // namespace

KMeansResult kmeans(const Matrix& points, std::size_t k, KMeansMetric metric, std::uint64_t seed,
                    std::size_t restarts, std::size_t max_iterations) {
  const std::size_t n = points.rows();
  if (k < 1 || k > n) {
    throw ConfigError("kmeans: k = " + std::to_string(k) + " outside [1, " + std::to_string(n) + "]");
  }
  Matrix x = points;
  if (metric == KMeansMetric::cosine) {
    for (std::size_t i = 0; i < n; ++i) {
      auto row = x.row(i);
      const double norm = std::sqrt(dot(row, row));
      if (norm == 0.0) throw ValidationError("kmeans(cosine): zero-norm point " + std::to_string(i));
      for (auto& v : row) v /= norm;
    }
  }
  Rng rng(seed);
  KMeansRun best;
  bool have = false;
  for (std::size_t r = 0; r < std::max<std::size_t>(restarts, 1); ++r) {
    KMeansRun run = kmeans_once(x, k, metric, rng, max_iterations);
    if (!have || run.cost < best.cost) {
      best = std::move(run);
      have = true;
    }
  }
  // Canonical label order; reorder centroids to match.
  KMeansResult out;
  out.partition.labels = canonical_labels(best.labels);
  out.partition.k = static_cast<int>(k);
  out.partition.seed = seed;
  out.partition.method = metric == KMeansMetric::cosine ? "kmeans-cosine" : "kmeans-euclidean";
  out.centroids = Matrix(k, x.cols());
  for (std::size_t i = 0; i < n; ++i) {
    const auto src = best.centroids.row(static_cast<std::size_t>(best.labels[i]));
    std::copy(src.begin(), src.end(), out.centroids.row(static_cast<std::size_t>(out.partition.labels[i])).begin());
  }
  out.cost = best.cost;
  return out;
}

// ---------------------------------------------------------------------------
// Silhouette and model selection

double silhouette(const Matrix& d, std::span<const int> labels) {
  const std::size_t n = labels.size();
  if (d.rows() != n || d.cols() != n) throw ShapeError("silhouette: distance/label size mismatch");
  int k = 0;
  for (int l : labels) k = std::max(k, l + 1);
  if (k < 2) throw ConfigError("silhouette needs at least two clusters");
  std::vector<std::size_t> count(static_cast<std::size_t>(k), 0);
  for (int l : labels) ++count[static_cast<std::size_t>(l)];
  double total = 0.0;
  std::vector<double> sums(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < n; ++i) {
    const auto own = static_cast<std::size_t>(labels[i]);
    if (count[own] <= 1) continue;
    std::fill(sums.begin(), sums.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) sums[static_cast<std::size_t>(labels[j])] += d(i, j);
    }
    const double a = sums[own] / static_cast<double>(count[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < sums.size(); ++c) {
      if (c == own || count[c] == 0) continue;
      b = std::min(b, sums[c] / static_cast<double>(count[c]));
    }
    const double denom = std::max(a, b);
    if (denom > 0.0) total += (b - a) / denom;
  }
  return total / static_cast<double>(n);
}

SelectKResult select_k(const Matrix& d, Linkage linkage, std::size_t k_min, std::size_t k_max) {
  const std::size_t n = d.rows();
  if (k_min < 2 || k_max < k_min || k_max + 1 > n) {
    throw ConfigError("select_k: range [" + std::to_string(k_min) + ", " + std::to_string(k_max) +
                      "] must lie within [2, " + std::to_string(n > 0 ? n - 1 : 0) + "]");
  }
  const MergeTree tree = hierarchical_cluster(d, linkage);
  SelectKResult r;
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t k = k_min; k <= k_max; ++k) {
    const double s = silhouette(d, cut_tree(tree, k).labels);
    r.scores.emplace_back(k, s);
    if (s > best) {
      best = s;
      r.best_k = k;
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// Exports

namespace {

std::ofstream open_out(const std::filesystem::path& path, const std::string& comment) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  if (!comment.empty()) out << "# " << comment << '\n';
  return out;
}

}  // namespace

void write_distance_csv(const DistanceMatrix& d, const std::filesystem::path& path,
                        const std::string& comment) {
  auto out = open_out(path, comment);
  out << "unit_id";
  for (const auto& l : d.labels) out << ',' << l;
  out << '\n';
  for (std::size_t i = 0; i < d.size(); ++i) {
    out << d.labels[i];
    for (double v : d.values.row(i)) out << ',' << csv::format_number(v);
    out << '\n';
  }
}

void write_tree_csv(const MergeTree& tree, const std::filesystem::path& path,
                    const std::string& comment) {
  auto out = open_out(path, comment);
  out << "left,right,height,size\n";
  for (const auto& m : tree.merges) {
    out << m.left << ',' << m.right << ',' << csv::format_number(m.height) << ',' << m.size << '\n';
  }
}

void write_partition_csv(const Partition& p, const std::filesystem::path& path,
                         const std::string& comment) {
  auto out = open_out(path, comment);
  out << "unit_id,label\n";
  for (std::size_t i = 0; i < p.labels.size(); ++i) {
    out << (i < p.unit_ids.size() ? p.unit_ids[i] : std::to_string(i)) << ',' << p.labels[i] << '\n';
  }
}

std::string partition_json(const Partition& p, const std::string& config_hash) {
  nlohmann::ordered_json j;
  j["provenance"] = {{"method", p.method}, {"seed", p.seed}, {"period", p.period}};
  if (!config_hash.empty()) j["config_hash"] = config_hash;
  j["k"] = p.k;
  auto& a = j["assignments"] = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < p.labels.size(); ++i) {
    a[i < p.unit_ids.size() ? p.unit_ids[i] : std::to_string(i)] = p.labels[i];
  }
  return j.dump(2);
}

Partition read_partition_csv(const std::filesystem::path& path) {
  const auto t = csv::read(path);
  const long id = t.column("unit_id");
  const long lab = t.column("label");
  if (id < 0 || lab < 0) throw LoadError(path.string() + ": expected unit_id,label columns", 1);
  Partition p;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    p.unit_ids.push_back(t.rows[r][static_cast<std::size_t>(id)]);
    double v = 0.0;
    if (!csv::parse_number(t.rows[r][static_cast<std::size_t>(lab)], v) || csv::is_missing(v) || v < 0) {
      throw LoadError(path.string() + ": invalid label", t.line_numbers[r]);
    }
    p.labels.push_back(static_cast<int>(v));
    p.k = std::max(p.k, static_cast<int>(v) + 1);
  }
  return p;
}

}  // namespace flexembed::clustering
