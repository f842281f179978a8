#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "flexembed/dataset.hpp"
#include "flexembed/matrix.hpp"
#include "flexembed/numeric.hpp"
#include "flexembed/tape.hpp"

namespace flexembed::model {

inline constexpr std::size_t kClasses = 3;
inline constexpr std::size_t kWeekdays = 7;
inline constexpr std::size_t kHours = 24;

/// How the decoder learns which unit it is forecasting.
enum class IdentifierMode { embedding, one_hot };
/// Which per-hour variables the decoder sees besides the identifier.
enum class DecoderCovariates { calendar_only, all };

std::string to_string(IdentifierMode m);
std::string to_string(DecoderCovariates m);
IdentifierMode parse_identifier_mode(const std::string& s);
DecoderCovariates parse_decoder_covariates(const std::string& s);

struct ModelConfig {
  std::size_t units = 1;
  std::size_t hidden = 512;
  std::size_t embedding = 8;
  std::size_t layers = 2;
  std::size_t covariates = dataset::kModelCovariates.size();
  IdentifierMode identifier = IdentifierMode::embedding;
  DecoderCovariates decoder_covariates = DecoderCovariates::all;
  std::uint64_t seed = 0;

  std::size_t encoder_input() const { return kClasses + covariates + kWeekdays + kHours; }
  std::size_t decoder_features() const {
    return (decoder_covariates == DecoderCovariates::all ? covariates : 0) + kWeekdays + kHours;
  }
  std::size_t identifier_width() const {
    return identifier == IdentifierMode::embedding ? embedding : units;
  }
};

/// Two stacked GRU layers encode the context window; the decoder's stacked
/// GRU layers start from the encoder's final states and consume forecast
/// features concatenated with the unit identifier at every step; an affine
/// head maps the top decoder state to three class logits per hour.
///
/// GRU convention: r = σ(x·Wxr + bxr + h·Whr + bhr), z likewise,
/// n = tanh(x·Wxn + bxn + r ⊙ (h·Whn + bhn)), h' = (1 − z) ⊙ n + z ⊙ h.
/// Gate blocks are stored side by side as [r | z | n] columns.
class EncoderDecoderModel {
 public:
  explicit EncoderDecoderModel(const ModelConfig& config);
  EncoderDecoderModel(const ModelConfig& config, numeric::ParameterSet params);

  const ModelConfig& config() const { return config_; }
  numeric::ParameterSet& params() { return params_; }
  const numeric::ParameterSet& params() const { return params_; }

  /// n×m embedding matrix; throws ConfigError in one-hot mode.
  const Matrix& embeddings() const;

 private:
  ModelConfig config_;
  numeric::ParameterSet params_;
};

/// Model inputs for a batch of subsequences, one matrix per hour.
struct Batch {
  std::vector<Matrix> context;   // context_hours × (B × encoder_input)
  std::vector<Matrix> forecast;  // forecast_hours × (B × decoder_features)
  std::vector<std::size_t> units;
  std::vector<std::vector<int>> targets;  // forecast_hours × B

  std::size_t size() const { return units.size(); }
};

Batch make_batch(const dataset::SequenceDataset& data, std::span<const std::size_t> windows,
                 const ModelConfig& config);

/// Graph nodes produced by one forward pass.
struct ForwardGraph {
  std::vector<numeric::Var> params;  // aligned with the ParameterSet
  std::vector<numeric::Var> logits;  // one B×3 node per forecast hour
  numeric::Var loss;                 // mean cross-entropy over hours and items
};

ForwardGraph build_forward(numeric::Tape& tape, const EncoderDecoderModel& model,
                           const Batch& batch, bool requires_grad);

/// Logits per item, each forecast_hours × 3.
std::vector<Matrix> forward(const EncoderDecoderModel& model, const Batch& batch);

/// Loss of a batch; fills grads (aligned with params) when non-null.
double loss_and_gradients(const EncoderDecoderModel& model, const Batch& batch,
                          std::vector<Matrix>* grads);

struct EvalMetrics {
  double accuracy = 0.0;
  double balanced_accuracy = 0.0;
  std::array<std::array<std::size_t, kClasses>, kClasses> confusion{};  // [truth][pred]
  std::array<double, kClasses> recall{};
  std::array<bool, kClasses> class_present{};
  bool missing_class = false;  // some class absent from the ground truth
  std::size_t predictions = 0;
};

EvalMetrics metrics_from_predictions(std::span<const int> truth, std::span<const int> predicted);
EvalMetrics evaluate(const EncoderDecoderModel& model, const dataset::SequenceDataset& data,
                     std::span<const std::size_t> windows, std::size_t batch_size = 256);

struct TrainConfig {
  double lr = 1e-3;
  std::size_t batch_size = 64;
  std::size_t max_epochs = 100;
  std::size_t patience = 10;
  std::uint64_t seed = 0;
  std::size_t hidden = 512;
  std::size_t embedding = 8;
  IdentifierMode identifier = IdentifierMode::embedding;
  DecoderCovariates decoder_covariates = DecoderCovariates::all;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double train_balanced_accuracy = 0.0;
  double validation_accuracy = 0.0;
  double validation_balanced_accuracy = 0.0;
};

struct TrainResult {
  EncoderDecoderModel model;
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  std::uint64_t steps = 0;
  bool diverged = false;
};

ModelConfig model_config_for(const dataset::SequenceDataset& data, const TrainConfig& train);

TrainResult train(const dataset::SequenceDataset& data, const dataset::SplitDataset& split,
                  const TrainConfig& config,
                  const std::function<void(const EpochRecord&)>& on_epoch = {});

std::string history_json(const TrainResult& result, const TrainConfig& config);

struct Embeddings {
  std::vector<std::string> unit_ids;
  Matrix values;              // n × m
  std::vector<bool> all_zero;  // row never moved from its initialization
};

Embeddings extract_embeddings(const EncoderDecoderModel& model,
                              std::span<const std::string> unit_ids);

/// `unit_id,e_1,…,e_m`, preceded by an optional `# ` comment line.
void write_embeddings_csv(const Embeddings& e, const std::filesystem::path& path,
                          const std::string& comment = "");
Embeddings read_embeddings_csv(const std::filesystem::path& path);

/// Checkpoint metadata carries the model config and unit order.
void save_model(const EncoderDecoderModel& model, std::span<const std::string> unit_ids,
                const std::filesystem::path& path, const std::string& extra_json = "{}");
struct LoadedModel {
  EncoderDecoderModel model;
  std::vector<std::string> unit_ids;
};
LoadedModel load_model(const std::filesystem::path& path);

}  // namespace flexembed::model
