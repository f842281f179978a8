#include "flexembed/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "flexembed/csv.hpp"
#include "flexembed/error.hpp"
#include "flexembed/rng.hpp"

namespace flexembed::model {

using numeric::Tape;
using numeric::Var;

std::string to_string(IdentifierMode m) {
  return m == IdentifierMode::embedding ? "embedding" : "one_hot";
}

std::string to_string(DecoderCovariates m) {
  return m == DecoderCovariates::all ? "all" : "calendar_only";
}

IdentifierMode parse_identifier_mode(const std::string& s) {
  if (s == "embedding") return IdentifierMode::embedding;
  if (s == "one_hot") return IdentifierMode::one_hot;
  throw ConfigError("identifier must be 'embedding' or 'one_hot', got '" + s + "'");
}

DecoderCovariates parse_decoder_covariates(const std::string& s) {
  if (s == "all") return DecoderCovariates::all;
  if (s == "calendar_only") return DecoderCovariates::calendar_only;
  throw ConfigError("decoder_covariates must be 'all' or 'calendar_only', got '" + s + "'");
}

namespace {

std::string layer_name(const char* block, std::size_t layer, const char* what) {
  return std::string(block) + "." + std::to_string(layer) + "." + what;
}

void add_gru_layer(numeric::ParameterSet& p, const char* block, std::size_t layer, std::size_t in,
                   std::size_t hidden, Rng& rng) {
  p.add(layer_name(block, layer, "w_x"), numeric::uniform_init(in, 3 * hidden, in, rng));
  p.add(layer_name(block, layer, "w_h"), numeric::uniform_init(hidden, 3 * hidden, hidden, rng));
  p.add(layer_name(block, layer, "b_x"), numeric::uniform_init(1, 3 * hidden, hidden, rng));
  p.add(layer_name(block, layer, "b_h"), numeric::uniform_init(1, 3 * hidden, hidden, rng));
}

void validate(const ModelConfig& c) {
  if (c.units == 0 || c.hidden == 0 || c.layers == 0 ||
      (c.identifier == IdentifierMode::embedding && c.embedding == 0)) {
    throw ConfigError("model sizes must be positive");
  }
}

// Parameter layout: per GRU layer 4 tensors (encoder layers first), then
// head.w, head.b and, in embedding mode, the embedding table.
struct Layout {
  std::size_t layers;
  std::size_t encoder(std::size_t l) const { return 4 * l; }
  std::size_t decoder(std::size_t l) const { return 4 * (layers + l); }
  std::size_t head() const { return 8 * layers; }
  std::size_t embedding() const { return 8 * layers + 2; }
};

struct GruVars {
  Var w_x, w_h, b_x, b_h;
};

Var gru_step(Tape& t, const GruVars& g, Var x, Var h, std::size_t H) {
  const Var gx = numeric::affine(t, x, g.w_x, g.b_x);
  const Var gh = numeric::affine(t, h, g.w_h, g.b_h);
  const Var r = numeric::sigmoid(
      t, numeric::add(t, numeric::slice_cols(t, gx, 0, H), numeric::slice_cols(t, gh, 0, H)));
  const Var z = numeric::sigmoid(t, numeric::add(t, numeric::slice_cols(t, gx, H, 2 * H),
                                                 numeric::slice_cols(t, gh, H, 2 * H)));
  const Var n = numeric::tanh(
      t, numeric::add(t, numeric::slice_cols(t, gx, 2 * H, 3 * H),
                      numeric::mul(t, r, numeric::slice_cols(t, gh, 2 * H, 3 * H))));
  return numeric::add(t, n, numeric::mul(t, z, numeric::sub(t, h, n)));
}

}  // namespace

EncoderDecoderModel::EncoderDecoderModel(const ModelConfig& config) : config_(config) {
  validate(config_);
  Rng rng(mix_seed(config_.seed, 0x6d6f64656cULL));
  const std::size_t H = config_.hidden;
  for (std::size_t l = 0; l < config_.layers; ++l) {
    add_gru_layer(params_, "encoder", l, l == 0 ? config_.encoder_input() : H, H, rng);
  }
  const std::size_t dec_in = config_.decoder_features() + config_.identifier_width();
  for (std::size_t l = 0; l < config_.layers; ++l) {
    add_gru_layer(params_, "decoder", l, l == 0 ? dec_in : H, H, rng);
  }
  params_.add("head.w", numeric::uniform_init(H, kClasses, H, rng));
  params_.add("head.b", numeric::uniform_init(1, kClasses, H, rng));
  if (config_.identifier == IdentifierMode::embedding) {
    params_.add("embedding", Matrix(config_.units, config_.embedding, 0.0));
  }
}

EncoderDecoderModel::EncoderDecoderModel(const ModelConfig& config, numeric::ParameterSet params)
    : config_(config), params_(std::move(params)) {
  validate(config_);
  const EncoderDecoderModel shape_ref(config);
  if (shape_ref.params().size() != params_.size()) {
    throw ShapeError("parameter count does not match the model configuration");
  }
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_.name(i) != shape_ref.params().name(i) ||
        !params_.value(i).same_shape(shape_ref.params().value(i))) {
      throw ShapeError("parameter '" + params_.name(i) + "' " + params_.value(i).shape_string() +
                       " does not match the model configuration");
    }
  }
}

const Matrix& EncoderDecoderModel::embeddings() const {
  if (config_.identifier != IdentifierMode::embedding) {
    throw ConfigError("one-hot identifier models have no embedding matrix");
  }
  return params_.value(Layout{config_.layers}.embedding());
}

Batch make_batch(const dataset::SequenceDataset& data, std::span<const std::size_t> windows,
                 const ModelConfig& config) {
  const std::size_t B = windows.size();
  const std::size_t C = data.window.context_hours;
  const std::size_t F = data.window.forecast_hours;
  const std::size_t ncov = config.covariates;
  if (data.features.covariates.cols() != ncov) {
    throw ShapeError("feature table has " + std::to_string(data.features.covariates.cols()) +
                     " covariates, model expects " + std::to_string(ncov));
  }
  const bool dec_cov = config.decoder_covariates == DecoderCovariates::all;
  Batch b;
  b.context.assign(C, Matrix(B, config.encoder_input()));
  b.forecast.assign(F, Matrix(B, config.decoder_features()));
  b.targets.assign(F, std::vector<int>(B));
  b.units.resize(B);
  const auto& feat = data.features;
  for (std::size_t i = 0; i < B; ++i) {
    const auto& w = data.windows.at(windows[i]);
    if (w.unit_index >= config.units) {
      throw ShapeError("unit index " + std::to_string(w.unit_index) + " outside model with " +
                       std::to_string(config.units) + " units");
    }
    b.units[i] = w.unit_index;
    const auto& states = data.states[w.unit_index].states;
    for (std::size_t t = 0; t < C; ++t) {
      const std::size_t hr = w.start + t;
      auto row = b.context[t].row(i);
      row[static_cast<std::size_t>(states[hr])] = 1.0;
      for (std::size_t c = 0; c < ncov; ++c) row[kClasses + c] = feat.covariates(hr, c);
      row[kClasses + ncov + feat.weekday[hr]] = 1.0;
      row[kClasses + ncov + kWeekdays + feat.hour[hr]] = 1.0;
    }
    for (std::size_t t = 0; t < F; ++t) {
      const std::size_t hr = w.start + C + t;
      auto row = b.forecast[t].row(i);
      std::size_t off = 0;
      if (dec_cov) {
        for (std::size_t c = 0; c < ncov; ++c) row[c] = feat.covariates(hr, c);
        off = ncov;
      }
      row[off + feat.weekday[hr]] = 1.0;
      row[off + kWeekdays + feat.hour[hr]] = 1.0;
      b.targets[t][i] = states[hr];
    }
  }
  return b;
}

ForwardGraph build_forward(Tape& t, const EncoderDecoderModel& model, const Batch& batch,
                           bool requires_grad) {
  const auto& cfg = model.config();
  const auto& params = model.params();
  const Layout layout{cfg.layers};
  const std::size_t H = cfg.hidden;
  const std::size_t B = batch.size();
  if (!batch.context.empty() && batch.context[0].cols() != cfg.encoder_input()) {
    throw ShapeError("context features " + batch.context[0].shape_string() +
                     " do not match encoder input width " + std::to_string(cfg.encoder_input()));
  }
  if (!batch.forecast.empty() && batch.forecast[0].cols() != cfg.decoder_features()) {
    throw ShapeError("forecast features " + batch.forecast[0].shape_string() +
                     " do not match decoder feature width " + std::to_string(cfg.decoder_features()));
  }

  ForwardGraph g;
  for (std::size_t i = 0; i < params.size(); ++i) {
    g.params.push_back(t.parameter(params.value(i), requires_grad));
  }
  auto gru_vars = [&](std::size_t base) {
    return GruVars{g.params[base], g.params[base + 1], g.params[base + 2], g.params[base + 3]};
  };

  std::vector<Var> h(cfg.layers, t.constant(Matrix(B, H)));
  for (const auto& step : batch.context) {
    Var x = t.constant(step);
    for (std::size_t l = 0; l < cfg.layers; ++l) {
      h[l] = gru_step(t, gru_vars(layout.encoder(l)), x, h[l], H);
      x = h[l];
    }
  }

  Var ident;
  if (cfg.identifier == IdentifierMode::embedding) {
    ident = numeric::lookup_rows(t, g.params[layout.embedding()], batch.units);
  } else {
    Matrix onehot(B, cfg.units);
    for (std::size_t i = 0; i < B; ++i) onehot(i, batch.units[i]) = 1.0;
    ident = t.constant(std::move(onehot));
  }

  const Var head_w = g.params[layout.head()];
  const Var head_b = g.params[layout.head() + 1];
  Var total;
  for (std::size_t s = 0; s < batch.forecast.size(); ++s) {
    const Var feats = t.constant(batch.forecast[s]);
    const Var parts[] = {feats, ident};
    Var x = numeric::concat_cols(t, parts);
    for (std::size_t l = 0; l < cfg.layers; ++l) {
      h[l] = gru_step(t, gru_vars(layout.decoder(l)), x, h[l], H);
      x = h[l];
    }
    const Var logits = numeric::affine(t, x, head_w, head_b);
    g.logits.push_back(logits);
    const Var ce = numeric::softmax_cross_entropy(t, logits, batch.targets[s]);
    total = s == 0 ? ce : numeric::add(t, total, ce);
  }
  const double inv = batch.forecast.empty() ? 0.0 : 1.0 / static_cast<double>(batch.forecast.size());
  g.loss = numeric::scale(t, total, inv);
  return g;
}

std::vector<Matrix> forward(const EncoderDecoderModel& model, const Batch& batch) {
  Tape t;
  const auto g = build_forward(t, model, batch, false);
  std::vector<Matrix> out(batch.size(), Matrix(g.logits.size(), kClasses));
  for (std::size_t s = 0; s < g.logits.size(); ++s) {
    const Matrix& L = t.value(g.logits[s]);
    for (std::size_t i = 0; i < batch.size(); ++i) {
      for (std::size_t c = 0; c < kClasses; ++c) out[i](s, c) = L(i, c);
    }
  }
  return out;
}

double loss_and_gradients(const EncoderDecoderModel& model, const Batch& batch,
                          std::vector<Matrix>* grads) {
  Tape t;
  const auto g = build_forward(t, model, batch, grads != nullptr);
  const double loss = t.value(g.loss)(0, 0);
  if (grads) {
    t.backward(g.loss);
    grads->clear();
    for (auto v : g.params) grads->push_back(t.grad(v));
  }
  return loss;
}

// ---------------------------------------------------------------------------
// Metrics

EvalMetrics metrics_from_predictions(std::span<const int> truth, std::span<const int> predicted) {
  if (truth.size() != predicted.size()) throw ShapeError("metrics: length mismatch");
  EvalMetrics m;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const auto y = static_cast<std::size_t>(truth[i]);
    const auto p = static_cast<std::size_t>(predicted[i]);
    if (y >= kClasses || p >= kClasses) throw ShapeError("metrics: class index out of range");
    ++m.confusion[y][p];
    correct += y == p;
  }
  m.predictions = truth.size();
  m.accuracy = truth.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(truth.size());
  double recall_sum = 0.0;
  std::size_t present = 0;
  for (std::size_t c = 0; c < kClasses; ++c) {
    std::size_t row = 0;
    for (std::size_t p = 0; p < kClasses; ++p) row += m.confusion[c][p];
    m.class_present[c] = row > 0;
    if (row > 0) {
      m.recall[c] = static_cast<double>(m.confusion[c][c]) / static_cast<double>(row);
      recall_sum += m.recall[c];
      ++present;
    } else {
      m.missing_class = true;
    }
  }
  m.balanced_accuracy = present ? recall_sum / static_cast<double>(present) : 0.0;
  return m;
}

namespace {

int argmax_row(const Matrix& m, std::size_t r) {
  int best = 0;
  for (std::size_t c = 1; c < m.cols(); ++c) {
    if (m(r, c) > m(r, static_cast<std::size_t>(best))) best = static_cast<int>(c);
  }
  return best;
}

}  // namespace

EvalMetrics evaluate(const EncoderDecoderModel& model, const dataset::SequenceDataset& data,
                     std::span<const std::size_t> windows, std::size_t batch_size) {
  std::vector<int> truth;
  std::vector<int> pred;
  batch_size = std::max<std::size_t>(batch_size, 1);
  for (std::size_t begin = 0; begin < windows.size(); begin += batch_size) {
    const auto chunk = windows.subspan(begin, std::min(batch_size, windows.size() - begin));
    const Batch b = make_batch(data, chunk, model.config());
    const auto logits = forward(model, b);
    for (std::size_t i = 0; i < b.size(); ++i) {
      for (std::size_t s = 0; s < b.targets.size(); ++s) {
        truth.push_back(b.targets[s][i]);
        pred.push_back(argmax_row(logits[i], s));
      }
    }
  }
  return metrics_from_predictions(truth, pred);
}

// ---------------------------------------------------------------------------
// Training

ModelConfig model_config_for(const dataset::SequenceDataset& data, const TrainConfig& train) {
  ModelConfig c;
  c.units = data.units();
  c.hidden = train.hidden;
  c.embedding = train.embedding;
  c.identifier = train.identifier;
  c.decoder_covariates = train.decoder_covariates;
  c.seed = train.seed;
  c.covariates = data.features.covariates.cols();
  return c;
}

TrainResult train(const dataset::SequenceDataset& data, const dataset::SplitDataset& split,
                  const TrainConfig& config, const std::function<void(const EpochRecord&)>& on_epoch) {
  if (split.train.empty() || split.validation.empty()) {
    throw ConfigError("training needs non-empty train and validation sets");
  }
  if (config.batch_size == 0 || config.max_epochs == 0 || !(config.lr > 0.0)) {
    throw ConfigError("batch size, epochs and learning rate must be positive");
  }
  TrainResult result{EncoderDecoderModel(model_config_for(data, config)), {}, 0, 0, false};
  EncoderDecoderModel current = result.model;
  auto adam = numeric::make_adam_state(current.params(), {config.lr, 0.9, 0.999, 1e-8});
  double best_score = -1.0;

  std::vector<std::size_t> order = split.train;
  std::vector<Matrix> grads;
  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    order = split.train;
    Rng rng(mix_seed(config.seed, 0x65706f6368ULL + epoch));
    rng.shuffle(order);

    double loss_sum = 0.0;
    std::size_t loss_items = 0;
    std::vector<int> truth;
    std::vector<int> pred;
    bool diverged = false;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      const std::span<const std::size_t> chunk(
          order.data() + begin, std::min(config.batch_size, order.size() - begin));
      const Batch b = make_batch(data, chunk, current.config());
      Tape t;
      const auto g = build_forward(t, current, b, true);
      const double loss = t.value(g.loss)(0, 0);
      if (!std::isfinite(loss)) {
        diverged = true;
        break;
      }
      for (std::size_t s = 0; s < g.logits.size(); ++s) {
        const Matrix& L = t.value(g.logits[s]);
        for (std::size_t i = 0; i < b.size(); ++i) {
          truth.push_back(b.targets[s][i]);
          pred.push_back(argmax_row(L, i));
        }
      }
      t.backward(g.loss);
      grads.clear();
      for (auto v : g.params) grads.push_back(t.grad(v));
      try {
        numeric::adam_step(current.params(), grads, adam);
      } catch (const NumericError&) {
        diverged = true;
        break;
      }
      ++result.steps;
      loss_sum += loss * static_cast<double>(b.size());
      loss_items += b.size();
    }
    if (diverged) {
      result.diverged = true;
      if (best_score < 0.0) result.model = current;
      break;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_items ? loss_sum / static_cast<double>(loss_items) : 0.0;
    const auto tm = metrics_from_predictions(truth, pred);
    rec.train_accuracy = tm.accuracy;
    rec.train_balanced_accuracy = tm.balanced_accuracy;
    const auto vm = evaluate(current, data, split.validation);
    rec.validation_accuracy = vm.accuracy;
    rec.validation_balanced_accuracy = vm.balanced_accuracy;
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);

    if (rec.validation_balanced_accuracy > best_score) {
      best_score = rec.validation_balanced_accuracy;
      result.best_epoch = epoch;
      result.model = current;
    } else if (epoch - result.best_epoch >= config.patience) {
      break;
    }
  }
  return result;
}

std::string history_json(const TrainResult& result, const TrainConfig& config) {
  nlohmann::ordered_json j;
  j["seed"] = config.seed;
  j["best_epoch"] = result.best_epoch;
  j["optimizer_steps"] = result.steps;
  j["diverged"] = result.diverged;
  auto& h = j["epochs"] = nlohmann::ordered_json::array();
  for (const auto& r : result.history) {
    h.push_back({{"epoch", r.epoch},
                 {"train_loss", r.train_loss},
                 {"train_accuracy", r.train_accuracy},
                 {"train_balanced_accuracy", r.train_balanced_accuracy},
                 {"validation_accuracy", r.validation_accuracy},
                 {"validation_balanced_accuracy", r.validation_balanced_accuracy}});
  }
  return j.dump(2);
}

// ---------------------------------------------------------------------------
// Embeddings and checkpoints

Embeddings extract_embeddings(const EncoderDecoderModel& model, std::span<const std::string> unit_ids) {
  const Matrix& e = model.embeddings();
  if (unit_ids.size() != e.rows()) {
    throw ShapeError("extract_embeddings: " + std::to_string(unit_ids.size()) + " ids for " +
                     std::to_string(e.rows()) + " embedding rows");
  }
  Embeddings out{{unit_ids.begin(), unit_ids.end()}, e, std::vector<bool>(e.rows(), true)};
  for (std::size_t i = 0; i < e.rows(); ++i) {
    for (double v : e.row(i)) {
      if (v != 0.0) {
        out.all_zero[i] = false;
        break;
      }
    }
  }
  return out;
}

void write_embeddings_csv(const Embeddings& e, const std::filesystem::path& path,
                          const std::string& comment) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  if (!comment.empty()) out << "# " << comment << '\n';
  out << "unit_id";
  for (std::size_t j = 0; j < e.values.cols(); ++j) out << ",e_" << (j + 1);
  out << '\n';
  for (std::size_t i = 0; i < e.values.rows(); ++i) {
    out << e.unit_ids[i];
    for (double v : e.values.row(i)) out << ',' << csv::format_number(v);
    out << '\n';
  }
}

Embeddings read_embeddings_csv(const std::filesystem::path& path) {
  const auto t = csv::read(path);
  if (t.header.empty() || t.header[0] != "unit_id") {
    throw LoadError(path.string() + ": first column must be unit_id", 1);
  }
  const std::size_t m = t.header.size() - 1;
  Embeddings e;
  e.values = Matrix(t.rows.size(), m);
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    e.unit_ids.push_back(t.rows[i][0]);
    bool zero = true;
    for (std::size_t j = 0; j < m; ++j) {
      double v = 0.0;
      if (!csv::parse_number(t.rows[i][j + 1], v) || csv::is_missing(v)) {
        throw LoadError(path.string() + ": invalid embedding value", t.line_numbers[i]);
      }
      e.values(i, j) = v;
      zero = zero && v == 0.0;
    }
    e.all_zero.push_back(zero);
  }
  return e;
}

void save_model(const EncoderDecoderModel& model, std::span<const std::string> unit_ids,
                const std::filesystem::path& path, const std::string& extra_json) {
  const auto& c = model.config();
  nlohmann::ordered_json meta;
  meta["format"] = "flexembed-model";
  meta["units"] = c.units;
  meta["hidden"] = c.hidden;
  meta["embedding"] = c.embedding;
  meta["layers"] = c.layers;
  meta["covariates"] = c.covariates;
  meta["identifier"] = to_string(c.identifier);
  meta["decoder_covariates"] = to_string(c.decoder_covariates);
  meta["seed"] = c.seed;
  meta["unit_ids"] = std::vector<std::string>(unit_ids.begin(), unit_ids.end());
  meta["extra"] = nlohmann::ordered_json::parse(extra_json);
  numeric::save_checkpoint(path, model.params(), meta.dump());
}

LoadedModel load_model(const std::filesystem::path& path) {
  auto ck = numeric::load_checkpoint(path);
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(ck.metadata);
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(path.string() + ": corrupt checkpoint metadata: " + e.what());
  }
  ModelConfig c;
  c.units = meta.at("units").get<std::size_t>();
  c.hidden = meta.at("hidden").get<std::size_t>();
  c.embedding = meta.at("embedding").get<std::size_t>();
  c.layers = meta.at("layers").get<std::size_t>();
  c.covariates = meta.at("covariates").get<std::size_t>();
  c.identifier = parse_identifier_mode(meta.at("identifier").get<std::string>());
  c.decoder_covariates = parse_decoder_covariates(meta.at("decoder_covariates").get<std::string>());
  c.seed = meta.at("seed").get<std::uint64_t>();
  return {EncoderDecoderModel(c, std::move(ck.params)),
          meta.at("unit_ids").get<std::vector<std::string>>()};
}

}  // namespace flexembed::model
