#include <algorithm>
#include <cmath>
#include <numeric>

#include "flexembed/error.hpp"
#include "flexembed/numeric.hpp"

namespace flexembed::numeric {

GradCheckResult finite_diff_check(const std::function<double(const ParameterSet&)>& loss,
                                  ParameterSet params, std::span<const Matrix> analytic,
                                  const GradCheckOptions& opt) {
  if (analytic.size() != params.size()) throw ShapeError("finite_diff_check: gradient count");
  GradCheckResult res;
  Rng rng(opt.seed);
  for (std::size_t p = 0; p < params.size(); ++p) {
    Matrix& w = params.value(p);
    std::vector<std::size_t> coords(w.size());
    std::iota(coords.begin(), coords.end(), 0);
    if (opt.coords_per_tensor > 0 && opt.coords_per_tensor < coords.size()) {
      rng.shuffle(coords);
      coords.resize(opt.coords_per_tensor);
    }
    for (auto k : coords) {
      const double saved = w.data()[k];
      w.data()[k] = saved + opt.step;
      const double up = loss(params);
      w.data()[k] = saved - opt.step;
      const double down = loss(params);
      w.data()[k] = saved;
      const double numeric = (up - down) / (2.0 * opt.step);
      const double a = analytic[p].data()[k];
      const double err = std::abs(a - numeric) / std::max(std::abs(a) + std::abs(numeric), 1e-6);
      ++res.checked;
      if (err > res.max_rel_error) {
        res.max_rel_error = err;
        res.worst_parameter = params.name(p);
        res.worst_index = k;
        res.worst_analytic = a;
        res.worst_numeric = numeric;
      }
    }
  }
  return res;
}

}  // namespace flexembed::numeric
