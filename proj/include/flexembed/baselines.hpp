#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "flexembed/clustering.hpp"
#include "flexembed/matrix.hpp"

namespace flexembed::baselines {

/// Equal-length per-unit series, one row per unit.
struct RawSeriesSet {
  std::vector<std::string> unit_ids;
  Matrix series;

  std::size_t size() const { return series.rows(); }
  std::size_t length() const { return series.cols(); }
};

/// Builds the set from a panel's generation matrix: each unit is divided by
/// its capacity, then averaged over consecutive blocks of `block_hours`
/// (missing hours are skipped inside a block; an all-missing block takes the
/// unit's overall mean).
RawSeriesSet scaled_series(const Matrix& generation, std::span<const std::string> unit_ids,
                           std::span<const double> g_max, std::size_t block_hours);

/// Dynamic time warping with absolute local cost, full window.
double dtw(std::span<const double> x, std::span<const double> y);

Matrix dtw_matrix(const RawSeriesSet& set);
Matrix dtw_matrix_serial(const RawSeriesSet& set);

struct MedoidResult {
  clustering::Partition partition;
  std::vector<std::size_t> medoids;
  double cost = 0.0;
  double distance_seconds = 0.0;
  double clustering_seconds = 0.0;
};

/// PAM on a precomputed distance matrix. Restart 0 uses the greedy BUILD
/// initialisation, later restarts draw seeded random medoids.
MedoidResult kmedoids(const Matrix& distances, std::size_t k, std::uint64_t seed,
                      std::size_t restarts = 5);

/// DTW matrix followed by PAM; records wall-clock time of both phases.
MedoidResult dtw_kmedoids(const RawSeriesSet& set, std::size_t k, std::uint64_t seed);

/// d = 1 − Pearson r. Throws ValidationError naming a zero-variance unit.
clustering::DistanceMatrix correlation_distance_matrix(const RawSeriesSet& set);

/// Interleaved (re, im) parts of DFT coefficients 0..n_coeffs−1.
std::vector<double> fourier_features(std::span<const double> series, std::size_t n_coeffs);

Matrix fourier_feature_matrix(const RawSeriesSet& set, std::size_t n_coeffs);

}  // namespace flexembed::baselines
