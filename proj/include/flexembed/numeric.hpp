#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "flexembed/matrix.hpp"
#include "flexembed/rng.hpp"

namespace flexembed::numeric {

/// Named dense tensors in insertion order. Shapes are fixed once added.
class ParameterSet {
 public:
  std::size_t add(std::string name, Matrix init);

  std::size_t size() const { return values_.size(); }
  const std::string& name(std::size_t i) const { return names_[i]; }
  Matrix& value(std::size_t i) { return values_[i]; }
  const Matrix& value(std::size_t i) const { return values_[i]; }
  std::optional<std::size_t> find(const std::string& name) const;
  std::size_t scalar_count() const;

  friend bool operator==(const ParameterSet&, const ParameterSet&) = default;

 private:
  std::vector<std::string> names_;
  std::vector<Matrix> values_;
};

/// Uniform in ±1/√fan_in.
Matrix uniform_init(std::size_t rows, std::size_t cols, std::size_t fan_in, Rng& rng);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::vector<Matrix> m;
  std::vector<Matrix> v;
  std::uint64_t t = 0;
};

AdamState make_adam_state(const ParameterSet& params, const AdamConfig& config = {});

/// One bias-corrected Adam update. Throws NumericError naming the first
/// parameter with a non-finite gradient; nothing is modified in that case.
void adam_step(ParameterSet& params, std::span<const Matrix> grads, AdamState& state);

struct GradCheckOptions {
  double step = 1e-5;
  /// Coordinates sampled per tensor; 0 checks every coordinate.
  std::size_t coords_per_tensor = 0;
  std::uint64_t seed = 1;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t checked = 0;
};

/// Compares analytic gradients against central differences of `loss`.
/// Relative error per coordinate is |a − n| / max(|a| + |n|, 1e-6). The floor
/// keeps gradients at the round-off level of the central difference (about
/// 1e-16·|loss| / h) from reporting large relative errors.
GradCheckResult finite_diff_check(const std::function<double(const ParameterSet&)>& loss,
                                  ParameterSet params, std::span<const Matrix> analytic,
                                  const GradCheckOptions& opt = {});

// Checkpoint file layout (version 1, little endian):
//   "FLEXCKPT"                magic, 8 bytes
//   u32 version               = 1
//   u64 n, n bytes            metadata (UTF-8 JSON)
//   u32 tensor count
//   per tensor: u32 name length, name bytes, u64 rows, u64 cols,
//               rows·cols IEEE-754 binary64 values, row-major
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  ParameterSet params;
  std::string metadata;
};

void save_checkpoint(const std::filesystem::path& path, const ParameterSet& params,
                     const std::string& metadata);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace flexembed::numeric
