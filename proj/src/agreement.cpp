#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "flexembed/clustering.hpp"
#include "flexembed/error.hpp"

namespace flexembed::clustering {

std::vector<std::size_t> max_weight_assignment(const Matrix& w) {
  // Hungarian algorithm with potentials on cost = max − w (1-based arrays).
  const std::size_t n = w.rows();
  if (w.cols() != n) throw ShapeError("max_weight_assignment: matrix must be square");
  if (n == 0) return {};
  double top = 0.0;
  for (double v : w.values()) top = std::max(top, v);
  auto cost = [&](std::size_t i, std::size_t j) { return top - w(i - 1, j - 1); };

  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0, j) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> row_to_col(n);
  for (std::size_t j = 1; j <= n; ++j) row_to_col[p[j] - 1] = j - 1;
  return row_to_col;
}

double adjusted_rand_index(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) throw ShapeError("adjusted_rand_index: length mismatch");
  const auto n = static_cast<double>(a.size());
  std::map<std::pair<int, int>, double> cells;
  std::map<int, double> ra, rb;
  for (std::size_t i = 0; i < a.size(); ++i) {
    cells[{a[i], b[i]}] += 1.0;
    ra[a[i]] += 1.0;
    rb[b[i]] += 1.0;
  }
  auto c2 = [](double x) { return x * (x - 1.0) / 2.0; };
  double sum_cells = 0.0, sum_a = 0.0, sum_b = 0.0;
  for (const auto& [_, c] : cells) sum_cells += c2(c);
  for (const auto& [_, c] : ra) sum_a += c2(c);
  for (const auto& [_, c] : rb) sum_b += c2(c);
  const double total = c2(n);
  if (total == 0.0) return 1.0;
  const double expected = sum_a * sum_b / total;
  const double max_index = 0.5 * (sum_a + sum_b);
  if (max_index == expected) return sum_cells == expected ? 1.0 : 0.0;
  return (sum_cells - expected) / (max_index - expected);
}

AgreementResult agreement(const Partition& a, const Partition& b) {
  if (a.size() != b.size()) throw ValidationError("agreement: partitions cover different unit sets");
  if (!a.unit_ids.empty() && !b.unit_ids.empty() && a.unit_ids != b.unit_ids) {
    throw ValidationError("agreement: partitions cover different unit sets");
  }
  int ka = 0, kb = 0;
  for (int l : a.labels) ka = std::max(ka, l + 1);
  for (int l : b.labels) kb = std::max(kb, l + 1);
  const auto size = static_cast<std::size_t>(std::max(ka, kb));
  Matrix table(size, size);
  for (std::size_t i = 0; i < a.size(); ++i) {
    table(static_cast<std::size_t>(a.labels[i]), static_cast<std::size_t>(b.labels[i])) += 1.0;
  }
  const auto assign = max_weight_assignment(table);
  AgreementResult r;
  r.mapping.assign(static_cast<std::size_t>(kb), -1);
  double matched = 0.0;
  for (std::size_t row = 0; row < size; ++row) {
    const std::size_t col = assign[row];
    matched += table(row, col);
    if (col < static_cast<std::size_t>(kb) && row < static_cast<std::size_t>(ka)) {
      r.mapping[col] = static_cast<int>(row);
    }
  }
  r.agreement = a.size() ? matched / static_cast<double>(a.size()) : 1.0;
  r.adjusted_rand = adjusted_rand_index(a.labels, b.labels);
  return r;
}

std::pair<Partition, Partition> restrict_to_common(const Partition& a, const Partition& b) {
  std::map<std::string, int> lb;
  for (std::size_t i = 0; i < b.unit_ids.size(); ++i) lb[b.unit_ids[i]] = b.labels[i];
  Partition ra = a, rb = b;
  ra.labels.clear();
  ra.unit_ids.clear();
  rb.labels.clear();
  rb.unit_ids.clear();
  for (std::size_t i = 0; i < a.unit_ids.size(); ++i) {
    auto it = lb.find(a.unit_ids[i]);
    if (it == lb.end()) continue;
    ra.unit_ids.push_back(a.unit_ids[i]);
    ra.labels.push_back(a.labels[i]);
    rb.unit_ids.push_back(a.unit_ids[i]);
    rb.labels.push_back(it->second);
  }
  ra.labels = canonical_labels(ra.labels);
  rb.labels = canonical_labels(rb.labels);
  ra.k = ra.labels.empty() ? 0 : *std::max_element(ra.labels.begin(), ra.labels.end()) + 1;
  rb.k = rb.labels.empty() ? 0 : *std::max_element(rb.labels.begin(), rb.labels.end()) + 1;
  return {ra, rb};
}

}  // namespace flexembed::clustering
