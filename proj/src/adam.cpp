#include <cmath>

#include "flexembed/error.hpp"
#include "flexembed/numeric.hpp"

namespace flexembed::numeric {

std::size_t ParameterSet::add(std::string name, Matrix init) {
  if (find(name)) throw ConfigError("duplicate parameter '" + name + "'");
  names_.push_back(std::move(name));
  values_.push_back(std::move(init));
  return values_.size() - 1;
}

std::optional<std::size_t> ParameterSet::find(const std::string& name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return i;
  }
  return std::nullopt;
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& v : values_) n += v.size();
  return n;
}

Matrix uniform_init(std::size_t rows, std::size_t cols, std::size_t fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  Matrix m(rows, cols);
  for (auto& v : m.values()) v = rng.uniform(-bound, bound);
  return m;
}

AdamState make_adam_state(const ParameterSet& params, const AdamConfig& config) {
  AdamState s;
  s.config = config;
  for (std::size_t i = 0; i < params.size(); ++i) {
    s.m.emplace_back(params.value(i).rows(), params.value(i).cols());
    s.v.emplace_back(params.value(i).rows(), params.value(i).cols());
  }
  return s;
}

void adam_step(ParameterSet& params, std::span<const Matrix> grads, AdamState& state) {
  if (grads.size() != params.size() || state.m.size() != params.size()) {
    throw ShapeError("adam_step: gradient count does not match parameters");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!grads[i].same_shape(params.value(i))) {
      throw ShapeError("adam_step: gradient shape " + grads[i].shape_string() + " for '" +
                       params.name(i) + "' " + params.value(i).shape_string());
    }
    for (double g : grads[i].values()) {
      if (!std::isfinite(g)) {
        throw NumericError("adam_step: non-finite gradient for parameter '" + params.name(i) + "'");
      }
    }
  }
  const auto& c = state.config;
  state.t += 1;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    double* p = params.value(i).data();
    double* m = state.m[i].data();
    double* v = state.v[i].data();
    const double* g = grads[i].data();
    const std::size_t n = params.value(i).size();
    for (std::size_t k = 0; k < n; ++k) {
      m[k] = c.beta1 * m[k] + (1.0 - c.beta1) * g[k];
      v[k] = c.beta2 * v[k] + (1.0 - c.beta2) * g[k] * g[k];
      const double mhat = m[k] / bc1;
      const double vhat = v[k] / bc2;
      p[k] -= c.lr * mhat / (std::sqrt(vhat) + c.eps);
    }
  }
}

}  // namespace flexembed::numeric
