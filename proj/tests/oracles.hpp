#pragma once
// Deliberately naive reference implementations used to cross-check the
// library in unit tests and in the acceptance suite.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <span>
#include <vector>

#include "flexembed/clustering.hpp"
#include "flexembed/matrix.hpp"

namespace oracle {

struct OracleMerge {
  std::size_t left, right;
  double height;
  std::size_t size;
};

// Recomputes every cluster-pair linkage from the member lists at each step.
inline std::vector<OracleMerge> agglomerate(const flexembed::Matrix& d, flexembed::clustering::Linkage linkage) {
  using flexembed::clustering::Linkage;
  const std::size_t n = d.rows();
  struct Cluster {
    std::vector<std::size_t> members;
    std::size_t node;
  };
  std::vector<Cluster> clusters;
  for (std::size_t i = 0; i < n; ++i) clusters.push_back({{i}, i});
  auto link = [&](const Cluster& a, const Cluster& b) {
    double mx = -std::numeric_limits<double>::infinity(), mn = std::numeric_limits<double>::infinity();
    long double total = 0.0L;
    for (auto i : a.members) {
      for (auto j : b.members) {
        mx = std::max(mx, d(i, j));
        mn = std::min(mn, d(i, j));
        total += d(i, j);
      }
    }
    switch (linkage) {
      case Linkage::complete: return mx;
      case Linkage::single: return mn;
      case Linkage::average: break;
    }
    return static_cast<double>(total / static_cast<long double>(a.members.size() * b.members.size()));
  };
  std::vector<OracleMerge> out;
  for (std::size_t step = 0; step + 1 < n; ++step) {
    // Clusters are kept sorted by smallest member.
    std::sort(clusters.begin(), clusters.end(),
              [](const Cluster& a, const Cluster& b) { return a.members.front() < b.members.front(); });
    double best = std::numeric_limits<double>::infinity();
    std::size_t bi = 0, bj = 0;
    for (std::size_t i = 0; i < clusters.size(); ++i) {
      for (std::size_t j = i + 1; j < clusters.size(); ++j) {
        const double h = link(clusters[i], clusters[j]);
        if (h < best) {
          best = h;
          bi = i;
          bj = j;
        }
      }
    }
    Cluster merged;
    merged.members = clusters[bi].members;
    merged.members.insert(merged.members.end(), clusters[bj].members.begin(), clusters[bj].members.end());
    std::sort(merged.members.begin(), merged.members.end());
    merged.node = n + step;
    out.push_back({clusters[bi].node, clusters[bj].node, best, merged.members.size()});
    clusters.erase(clusters.begin() + static_cast<long>(bj));
    clusters[bi] = merged;
  }
  return out;
}

// Flat labels after replaying the first n − k merges, numbered by first
// appearance.
inline std::vector<int> cut(const std::vector<OracleMerge>& merges, std::size_t n, std::size_t k) {
  std::vector<std::vector<std::size_t>> members(2 * n);
  for (std::size_t i = 0; i < n; ++i) members[i] = {i};
  std::vector<bool> alive(2 * n, false);
  std::fill(alive.begin(), alive.begin() + static_cast<long>(n), true);
  for (std::size_t s = 0; s < n - k; ++s) {
    const auto& m = merges[s];
    members[n + s] = members[m.left];
    members[n + s].insert(members[n + s].end(), members[m.right].begin(), members[m.right].end());
    alive[m.left] = alive[m.right] = false;
    alive[n + s] = true;
  }
  std::vector<int> raw(n, -1);
  int next = 0;
  std::map<std::size_t, int> id;
  for (std::size_t c = 0; c < 2 * n; ++c) {
    if (!alive[c]) continue;
    for (auto i : members[c]) raw[i] = static_cast<int>(c);
  }
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto it = id.find(static_cast<std::size_t>(raw[i]));
    if (it == id.end()) it = id.emplace(static_cast<std::size_t>(raw[i]), next++).first;
    labels[i] = it->second;
  }
  return labels;
}

inline double silhouette(const flexembed::Matrix& d, std::span<const int> labels) {
  const std::size_t n = labels.size();
  const int k = *std::max_element(labels.begin(), labels.end()) + 1;
  long double total = 0.0L;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<long double> sum(static_cast<std::size_t>(k), 0.0L);
    std::vector<std::size_t> count(static_cast<std::size_t>(k), 0);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      sum[static_cast<std::size_t>(labels[j])] += d(i, j);
      ++count[static_cast<std::size_t>(labels[j])];
    }
    const auto own = static_cast<std::size_t>(labels[i]);
    if (count[own] == 0) continue;  // singleton contributes 0
    const long double a = sum[own] / static_cast<long double>(count[own]);
    long double b = std::numeric_limits<long double>::infinity();
    for (std::size_t c = 0; c < static_cast<std::size_t>(k); ++c) {
      if (c != own && count[c] > 0) b = std::min(b, sum[c] / static_cast<long double>(count[c]));
    }
    const long double den = std::max(a, b);
    if (den > 0.0L) total += (b - a) / den;
  }
  return static_cast<double>(total / static_cast<long double>(n));
}

// Textbook DTW recursion with memoization.
inline double dtw(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size(), m = y.size();
  std::vector<double> memo(n * m, -1.0);
  std::function<double(std::size_t, std::size_t)> rec = [&](std::size_t i, std::size_t j) -> double {
    double& slot = memo[i * m + j];
    if (slot >= 0.0) return slot;
    const double c = std::abs(x[i] - y[j]);
    double prev;
    if (i == 0 && j == 0) {
      prev = 0.0;
    } else if (i == 0) {
      prev = rec(0, j - 1);
    } else if (j == 0) {
      prev = rec(i - 1, 0);
    } else {
      prev = std::min({rec(i - 1, j), rec(i, j - 1), rec(i - 1, j - 1)});
    }
    return slot = c + prev;
  };
  return rec(n - 1, m - 1);
}

// Best label matching by trying every permutation (k ≤ 8).
inline double agreement(std::span<const int> a, std::span<const int> b) {
  const int k = std::max(*std::max_element(a.begin(), a.end()), *std::max_element(b.begin(), b.end())) + 1;
  std::vector<int> perm(static_cast<std::size_t>(k));
  std::iota(perm.begin(), perm.end(), 0);
  std::size_t best = 0;
  do {
    std::size_t hit = 0;
    for (std::size_t i = 0; i < a.size(); ++i) hit += perm[static_cast<std::size_t>(b[i])] == a[i];
    best = std::max(best, hit);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return static_cast<double>(best) / static_cast<double>(a.size());
}

// Rand index adjusted for chance, from explicit pair enumeration.
inline double adjusted_rand(std::span<const int> a, std::span<const int> b) {
  const std::size_t n = a.size();
  double both = 0, in_a = 0, in_b = 0, pairs = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool sa = a[i] == a[j], sb = b[i] == b[j];
      both += sa && sb;
      in_a += sa;
      in_b += sb;
      pairs += 1;
    }
  }
  const double expected = in_a * in_b / pairs;
  const double max_index = 0.5 * (in_a + in_b);
  if (max_index == expected) return 1.0;
  return (both - expected) / (max_index - expected);
}

}  // namespace oracle
