#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "flexembed/matrix.hpp"

namespace flexembed::clustering {

/// Symmetric n×n distances with a zero diagonal.
struct DistanceMatrix {
  std::vector<std::string> labels;
  Matrix values;

  std::size_t size() const { return values.rows(); }
};

/// d_ij = 1 − cos(e_i, e_j). Throws ValidationError naming the unit when a
/// row has zero norm.
DistanceMatrix cosine_distance_matrix(const Matrix& embeddings, std::span<const std::string> ids);

enum class Linkage { complete, average, single };
std::string to_string(Linkage l);
Linkage parse_linkage(const std::string& s);

/// Node ids follow the usual dendrogram convention: leaves are 0..n−1 and
/// merge i creates node n + i.
struct Merge {
  std::size_t left = 0;
  std::size_t right = 0;
  double height = 0.0;
  std::size_t size = 0;
};

struct MergeTree {
  std::size_t leaves = 0;
  std::vector<Merge> merges;
  std::vector<std::size_t> leaf_order;
};

/// Agglomerative clustering on a precomputed distance matrix. Among equally
/// close cluster pairs the one with the lexicographically smallest pair of
/// (smallest member) indices merges first.
MergeTree hierarchical_cluster(const Matrix& distances, Linkage linkage);
inline MergeTree hierarchical_cluster(const DistanceMatrix& d, Linkage linkage) {
  return hierarchical_cluster(d.values, linkage);
}

/// Cluster labels 0..k−1, numbered by first appearance in unit order.
struct Partition {
  std::vector<int> labels;
  int k = 0;
  std::string method;
  std::uint64_t seed = 0;
  std::string period;
  std::vector<std::string> unit_ids;

  std::size_t size() const { return labels.size(); }
  std::vector<std::vector<std::size_t>> members() const;
};

/// Relabels so that labels appear in increasing order of first occurrence.
std::vector<int> canonical_labels(std::span<const int> labels);

/// Undoes the last n − k merges.
Partition cut_tree(const MergeTree& tree, std::size_t k);

enum class KMeansMetric { euclidean, cosine };

struct KMeansResult {
  Partition partition;
  Matrix centroids;
  double cost = 0.0;  // Σ squared distance, or Σ (1 − cos) in cosine mode
};

/// Lloyd iterations from k-means++ seeds, best of `restarts` by cost. Cosine
/// mode normalizes points and keeps centroids on the unit sphere. A cluster
/// that empties is re-seeded with the point farthest from its centroid.
KMeansResult kmeans(const Matrix& points, std::size_t k, KMeansMetric metric, std::uint64_t seed,
                    std::size_t restarts = 10, std::size_t max_iterations = 300);

/// Mean silhouette on precomputed distances; singleton clusters score 0.
double silhouette(const Matrix& distances, std::span<const int> labels);

struct SelectKResult {
  std::size_t best_k = 0;
  std::vector<std::pair<std::size_t, double>> scores;
};

/// Silhouette of the tree cut at every k in [k_min, k_max]; ties → smaller k.
SelectKResult select_k(const Matrix& distances, Linkage linkage, std::size_t k_min = 2,
                       std::size_t k_max = 10);

struct AgreementResult {
  double agreement = 0.0;
  double adjusted_rand = 0.0;
  std::vector<int> mapping;  // label of the second partition → label of the first (−1 unmatched)
};

/// Share of units in corresponding clusters after aligning labels by a
/// maximum-weight matching of the contingency table.
AgreementResult agreement(const Partition& a, const Partition& b);
double adjusted_rand_index(std::span<const int> a, std::span<const int> b);

/// Maximum-weight assignment of rows to columns of a square matrix.
/// Returns the column assigned to each row.
std::vector<std::size_t> max_weight_assignment(const Matrix& weights);

/// Restricts both partitions to their common unit ids (order of `a`).
std::pair<Partition, Partition> restrict_to_common(const Partition& a, const Partition& b);

// Exports.
void write_distance_csv(const DistanceMatrix& d, const std::filesystem::path& path,
                        const std::string& comment = "");
void write_tree_csv(const MergeTree& tree, const std::filesystem::path& path,
                    const std::string& comment = "");
void write_partition_csv(const Partition& p, const std::filesystem::path& path,
                         const std::string& comment = "");
std::string partition_json(const Partition& p, const std::string& config_hash = "");
Partition read_partition_csv(const std::filesystem::path& path);

}  // namespace flexembed::clustering
