#include "flexembed/baselines.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>

#include "flexembed/error.hpp"
#include "flexembed/kernels.hpp"
#include "flexembed/rng.hpp"

namespace flexembed::baselines {

RawSeriesSet scaled_series(const Matrix& generation, std::span<const std::string> unit_ids,
                           std::span<const double> g_max, std::size_t block_hours) {
  const std::size_t hours = generation.rows(), units = generation.cols();
  if (unit_ids.size() != units || g_max.size() != units) {
    throw ShapeError("scaled_series: unit metadata does not match the generation matrix");
  }
  if (block_hours == 0) throw ConfigError("scaled_series: block length must be positive");
  const std::size_t blocks = hours / block_hours;
  if (blocks == 0) throw ValidationError("scaled_series: series shorter than one block");
  RawSeriesSet set{{unit_ids.begin(), unit_ids.end()}, Matrix(units, blocks)};
  for (std::size_t u = 0; u < units; ++u) {
    if (!(g_max[u] > 0.0)) throw ValidationError("scaled_series: non-positive capacity for unit '" + unit_ids[u] + "'");
    double total = 0.0;
    std::size_t seen = 0;
    for (std::size_t t = 0; t < hours; ++t) {
      const double g = generation(t, u);
      if (!std::isnan(g)) {
        total += g / g_max[u];
        ++seen;
      }
    }
    if (seen == 0) throw ValidationError("scaled_series: unit '" + unit_ids[u] + "' has no data");
    const double overall = total / static_cast<double>(seen);
    for (std::size_t b = 0; b < blocks; ++b) {
      double s = 0.0;
      std::size_t c = 0;
      for (std::size_t t = b * block_hours; t < (b + 1) * block_hours; ++t) {
        const double g = generation(t, u);
        if (!std::isnan(g)) {
          s += g / g_max[u];
          ++c;
        }
      }
      set.series(u, b) = c ? s / static_cast<double>(c) : overall;
    }
  }
  return set;
}

double dtw(std::span<const double> x, std::span<const double> y) {
  if (x.empty() || y.empty()) throw ValidationError("dtw: empty sequence");
  const std::size_t m = y.size();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> prev(m + 1, inf), cur(m + 1, inf);
  prev[0] = 0.0;
  for (std::size_t i = 1; i <= x.size(); ++i) {
    cur[0] = inf;
    for (std::size_t j = 1; j <= m; ++j) {
      const double best = std::min({prev[j], cur[j - 1], prev[j - 1]});
      cur[j] = std::abs(x[i - 1] - y[j - 1]) + best;
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

Matrix dtw_matrix(const RawSeriesSet& set) {
  Matrix out;
  kernels::pairwise_symmetric(
      set.size(), [&](std::size_t i, std::size_t j) { return dtw(set.series.row(i), set.series.row(j)); }, out);
  return out;
}

Matrix dtw_matrix_serial(const RawSeriesSet& set) {
  Matrix out;
  kernels::pairwise_symmetric_serial(
      set.size(), [&](std::size_t i, std::size_t j) { return dtw(set.series.row(i), set.series.row(j)); }, out);
  return out;
}

namespace {

double assignment_cost(const Matrix& d, std::span<const std::size_t> medoids) {
  double cost = 0.0;
  for (std::size_t i = 0; i < d.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t m : medoids) best = std::min(best, d(i, m));
    cost += best;
  }
  return cost;
}

std::vector<std::size_t> build_init(const Matrix& d, std::size_t k) {
  const std::size_t n = d.rows();
  std::vector<std::size_t> medoids;
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  std::vector<bool> chosen(n, false);
  for (std::size_t step = 0; step < k; ++step) {
    std::size_t best = n;
    double best_cost = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < n; ++c) {
      if (chosen[c]) continue;
      double cost = 0.0;
      for (std::size_t i = 0; i < n; ++i) cost += std::min(nearest[i], d(i, c));
      if (cost < best_cost) {
        best_cost = cost;
        best = c;
      }
    }
    chosen[best] = true;
    medoids.push_back(best);
    for (std::size_t i = 0; i < n; ++i) nearest[i] = std::min(nearest[i], d(i, best));
  }
  return medoids;
}

}  // namespace

MedoidResult kmedoids(const Matrix& d, std::size_t k, std::uint64_t seed, std::size_t restarts) {
  const std::size_t n = d.rows();
  if (k < 1 || k > n) throw ConfigError("kmedoids: k = " + std::to_string(k) + " outside [1, " + std::to_string(n) + "]");
  Rng rng(seed);
  std::vector<std::size_t> best_medoids;
  double best_cost = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < std::max<std::size_t>(restarts, 1); ++r) {
    std::vector<std::size_t> medoids;
    if (r == 0) {
      medoids = build_init(d, k);
    } else {
      std::vector<std::size_t> idx(n);
      for (std::size_t i = 0; i < n; ++i) idx[i] = i;
      rng.shuffle(idx);
      medoids.assign(idx.begin(), idx.begin() + static_cast<long>(k));
    }
    double cost = assignment_cost(d, medoids);
    // Swap phase: take the best improving (medoid, non-medoid) swap until none remains.
    for (;;) {
      double swap_cost = cost;
      std::size_t slot = k, candidate = n;
      for (std::size_t s = 0; s < k; ++s) {
        const std::size_t keep = medoids[s];
        for (std::size_t c = 0; c < n; ++c) {
          if (std::find(medoids.begin(), medoids.end(), c) != medoids.end()) continue;
          medoids[s] = c;
          const double trial = assignment_cost(d, medoids);
          if (trial < swap_cost - 1e-12 * std::max(1.0, std::abs(swap_cost))) {
            swap_cost = trial;
            slot = s;
            candidate = c;
          }
        }
        medoids[s] = keep;
      }
      if (slot == k) break;
      medoids[slot] = candidate;
      cost = swap_cost;
    }
    if (cost < best_cost) {
      best_cost = cost;
      best_medoids = medoids;
    }
  }
  std::sort(best_medoids.begin(), best_medoids.end());
  MedoidResult out;
  out.medoids = best_medoids;
  out.cost = best_cost;
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t arg = 0;
    for (std::size_t s = 1; s < k; ++s) {
      if (d(i, best_medoids[s]) < d(i, best_medoids[arg])) arg = s;
    }
    labels[i] = static_cast<int>(arg);
  }
  out.partition.labels = clustering::canonical_labels(labels);
  out.partition.k = static_cast<int>(k);
  out.partition.seed = seed;
  out.partition.method = "kmedoids";
  return out;
}

MedoidResult dtw_kmedoids(const RawSeriesSet& set, std::size_t k, std::uint64_t seed) {
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  const Matrix d = dtw_matrix(set);
  const auto t1 = clock::now();
  MedoidResult r = kmedoids(d, k, seed);
  const auto t2 = clock::now();
  r.distance_seconds = std::chrono::duration<double>(t1 - t0).count();
  r.clustering_seconds = std::chrono::duration<double>(t2 - t1).count();
  r.partition.method = "dtw-kmedoids";
  r.partition.unit_ids = set.unit_ids;
  return r;
}

clustering::DistanceMatrix correlation_distance_matrix(const RawSeriesSet& set) {
  const std::size_t n = set.size(), len = set.length();
  Matrix centered(n, len);
  std::vector<double> ss(n);
  for (std::size_t i = 0; i < n; ++i) {
    double mean = 0.0;
    for (double v : set.series.row(i)) mean += v;
    mean /= static_cast<double>(len);
    double s = 0.0;
    for (std::size_t t = 0; t < len; ++t) {
      centered(i, t) = set.series(i, t) - mean;
      s += centered(i, t) * centered(i, t);
    }
    if (!(s > 0.0)) throw ValidationError("correlation distance undefined: zero variance for unit '" + set.unit_ids[i] + "'");
    ss[i] = s;
  }
  clustering::DistanceMatrix out{set.unit_ids, {}};
  kernels::pairwise_symmetric(
      n,
      [&](std::size_t i, std::size_t j) {
        double sxy = 0.0;
        for (std::size_t t = 0; t < len; ++t) sxy += centered(i, t) * centered(j, t);
        const double r = std::clamp(sxy / std::sqrt(ss[i] * ss[j]), -1.0, 1.0);
        return 1.0 - r;
      },
      out.values);
  return out;
}

std::vector<double> fourier_features(std::span<const double> x, std::size_t n_coeffs) {
  const std::size_t len = x.size();
  if (n_coeffs == 0 || 2 * n_coeffs > len) {
    throw ConfigError("fourier_features: n_coeffs = " + std::to_string(n_coeffs) + " needs series length >= " +
                      std::to_string(2 * n_coeffs) + ", got " + std::to_string(len));
  }
  std::vector<double> out(2 * n_coeffs);
  const double w = 2.0 * std::numbers::pi / static_cast<double>(len);
  for (std::size_t k = 0; k < n_coeffs; ++k) {
    double re = 0.0, im = 0.0;
    for (std::size_t t = 0; t < len; ++t) {
      const double angle = w * static_cast<double>((k * t) % len);
      re += x[t] * std::cos(angle);
      im -= x[t] * std::sin(angle);
    }
    out[2 * k] = re;
    out[2 * k + 1] = im;
  }
  return out;
}

Matrix fourier_feature_matrix(const RawSeriesSet& set, std::size_t n_coeffs) {
  Matrix out(set.size(), 2 * n_coeffs);
  for (std::size_t i = 0; i < set.size(); ++i) {
    const auto f = fourier_features(set.series.row(i), n_coeffs);
    std::copy(f.begin(), f.end(), out.row(i).begin());
  }
  return out;
}

}  // namespace flexembed::baselines
