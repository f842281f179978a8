#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numeric>

#include "flexembed/error.hpp"
#include "flexembed/model.hpp"
#include "flexembed/numeric.hpp"
#include "test_support.hpp"

using namespace flexembed;
using namespace flexembed::model;

namespace {

double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Plain-loop GRU cell: gates stored [r | z | n] along columns.
std::vector<double> gru_cell(const numeric::ParameterSet& p, const std::string& prefix,
                             const std::vector<double>& x, const std::vector<double>& h) {
  const Matrix& wx = p.value(*p.find(prefix + ".w_x"));
  const Matrix& wh = p.value(*p.find(prefix + ".w_h"));
  const Matrix& bx = p.value(*p.find(prefix + ".b_x"));
  const Matrix& bh = p.value(*p.find(prefix + ".b_h"));
  const std::size_t H = h.size();
  std::vector<double> gx(3 * H), gh(3 * H);
  for (std::size_t c = 0; c < 3 * H; ++c) {
    double sx = bx(0, c), sh = bh(0, c);
    for (std::size_t i = 0; i < x.size(); ++i) sx += x[i] * wx(i, c);
    for (std::size_t i = 0; i < H; ++i) sh += h[i] * wh(i, c);
    gx[c] = sx;
    gh[c] = sh;
  }
  std::vector<double> out(H);
  for (std::size_t j = 0; j < H; ++j) {
    const double r = sig(gx[j] + gh[j]);
    const double z = sig(gx[H + j] + gh[H + j]);
    const double n = std::tanh(gx[2 * H + j] + r * gh[2 * H + j]);
    out[j] = (1.0 - z) * n + z * h[j];
  }
  return out;
}

std::vector<double> row_of(const Matrix& m, std::size_t r) {
  return {m.row(r).begin(), m.row(r).end()};
}

// Logits of batch item i computed without the tape.
Matrix oracle_logits(const EncoderDecoderModel& model, const Batch& b, std::size_t i) {
  const auto& cfg = model.config();
  const auto& p = model.params();
  std::vector<std::vector<double>> h(cfg.layers, std::vector<double>(cfg.hidden, 0.0));
  for (const auto& step : b.context) {
    auto x = row_of(step, i);
    for (std::size_t l = 0; l < cfg.layers; ++l) {
      h[l] = gru_cell(p, "encoder." + std::to_string(l), x, h[l]);
      x = h[l];
    }
  }
  std::vector<double> ident;
  if (cfg.identifier == IdentifierMode::embedding) {
    ident = row_of(model.embeddings(), b.units[i]);
  } else {
    ident.assign(cfg.units, 0.0);
    ident[b.units[i]] = 1.0;
  }
  const Matrix& hw = p.value(*p.find("head.w"));
  const Matrix& hb = p.value(*p.find("head.b"));
  Matrix out(b.forecast.size(), kClasses);
  for (std::size_t s = 0; s < b.forecast.size(); ++s) {
    auto x = row_of(b.forecast[s], i);
    x.insert(x.end(), ident.begin(), ident.end());
    for (std::size_t l = 0; l < cfg.layers; ++l) {
      h[l] = gru_cell(p, "decoder." + std::to_string(l), x, h[l]);
      x = h[l];
    }
    for (std::size_t c = 0; c < kClasses; ++c) {
      double v = hb(0, c);
      for (std::size_t j = 0; j < cfg.hidden; ++j) v += x[j] * hw(j, c);
      out(s, c) = v;
    }
  }
  return out;
}

void randomize_embeddings(EncoderDecoderModel& m, std::uint64_t seed) {
  Rng rng(seed);
  auto idx = m.params().find("embedding");
  REQUIRE(idx.has_value());
  for (auto& v : m.params().value(*idx).values()) v = rng.uniform(-1.0, 1.0);
}

}  // namespace

TEST_CASE("forward pass matches the plain-loop GRU oracle") {
  const auto data = testsupport::random_dataset(3, 24 * 7, 5, 4, 21);
  for (auto ident : {IdentifierMode::embedding, IdentifierMode::one_hot}) {
    for (auto dec : {DecoderCovariates::all, DecoderCovariates::calendar_only}) {
      ModelConfig cfg;
      cfg.units = 3;
      cfg.hidden = 6;
      cfg.embedding = 2;
      cfg.identifier = ident;
      cfg.decoder_covariates = dec;
      cfg.seed = 4;
      EncoderDecoderModel m(cfg);
      if (ident == IdentifierMode::embedding) randomize_embeddings(m, 8);
      const std::vector<std::size_t> w = {0, 5, 9, 14};
      const auto batch = make_batch(data, w, cfg);
      const auto logits = forward(m, batch);
      for (std::size_t i = 0; i < w.size(); ++i) {
        const Matrix o = oracle_logits(m, batch, i);
        for (std::size_t k = 0; k < o.size(); ++k) {
          CHECK(logits[i].values()[k] == doctest::Approx(o.values()[k]).epsilon(1e-12));
        }
      }
    }
  }
}

TEST_CASE("batch encoding") {
  const auto data = testsupport::random_dataset(2, 24 * 3, 4, 3, 1);
  ModelConfig cfg;
  cfg.units = 2;
  const std::vector<std::size_t> w = {3};
  const auto b = make_batch(data, w, cfg);
  REQUIRE(b.context.size() == 4);
  REQUIRE(b.forecast.size() == 3);
  CHECK(b.context[0].cols() == 3 + 3 + 7 + 24);
  CHECK(b.forecast[0].cols() == 3 + 7 + 24);
  const auto& win = data.windows[3];
  const auto& row = b.context[1].row(0);
  const int state = data.states[win.unit_index].states[win.start + 1];
  CHECK(row[static_cast<std::size_t>(state)] == 1.0);
  CHECK(std::accumulate(row.begin(), row.begin() + 3, 0.0) == 1.0);
  CHECK(std::accumulate(row.begin() + 6, row.begin() + 13, 0.0) == 1.0);
  CHECK(std::accumulate(row.begin() + 13, row.end(), 0.0) == 1.0);
  CHECK(b.targets[2][0] == data.states[win.unit_index].states[win.start + 6]);
  cfg.units = 1;
  const std::vector<std::size_t> last = {data.windows.size() - 1};
  REQUIRE(data.windows[last[0]].unit_index == 1);
  CHECK_THROWS_AS(make_batch(data, last, cfg), ShapeError);
}

TEST_CASE("analytic gradients agree with finite differences") {
  const auto data = testsupport::random_dataset(2, 24 * 2, 4, 4, 3);
  ModelConfig cfg;
  cfg.units = 2;
  cfg.hidden = 8;
  cfg.embedding = 3;
  cfg.seed = 5;
  EncoderDecoderModel m(cfg);
  randomize_embeddings(m, 2);
  const std::vector<std::size_t> w = {0, 7};
  const auto batch = make_batch(data, w, cfg);
  std::vector<Matrix> grads;
  loss_and_gradients(m, batch, &grads);
  auto loss = [&](const numeric::ParameterSet& p) {
    return loss_and_gradients(EncoderDecoderModel(cfg, p), batch, nullptr);
  };
  const auto r = numeric::finite_diff_check(loss, m.params(), grads, {1e-5, 6, 1});
  CHECK(r.max_rel_error <= 1e-4);
  CHECK(r.checked > 60);
}

TEST_CASE("metrics from predictions") {
  const int truth[] = {0, 0, 1, 1, 1, 2};
  const int pred[] = {0, 1, 1, 1, 0, 2};
  const auto m = metrics_from_predictions(truth, pred);
  CHECK(m.accuracy == doctest::Approx(4.0 / 6.0));
  CHECK(m.recall[0] == doctest::Approx(0.5));
  CHECK(m.recall[1] == doctest::Approx(2.0 / 3.0));
  CHECK(m.recall[2] == 1.0);
  CHECK(m.balanced_accuracy == doctest::Approx((0.5 + 2.0 / 3.0 + 1.0) / 3.0));
  CHECK(m.confusion[1][0] == 1);
  CHECK_FALSE(m.missing_class);

  const int t2[] = {0, 0, 1};
  const int p2[] = {0, 1, 1};
  const auto m2 = metrics_from_predictions(t2, p2);
  CHECK(m2.missing_class);
  CHECK_FALSE(m2.class_present[2]);
  CHECK(m2.balanced_accuracy == doctest::Approx(0.75));
}

TEST_CASE("one-hot models have no embedding matrix") {
  ModelConfig cfg;
  cfg.units = 4;
  cfg.hidden = 4;
  cfg.identifier = IdentifierMode::one_hot;
  EncoderDecoderModel m(cfg);
  CHECK_THROWS_AS(m.embeddings(), ConfigError);
  CHECK_FALSE(m.params().find("embedding").has_value());
  CHECK(parse_identifier_mode("one_hot") == IdentifierMode::one_hot);
  CHECK_THROWS_AS(parse_decoder_covariates("some"), ConfigError);
}

TEST_CASE("mismatched parameter sets are rejected") {
  ModelConfig cfg;
  cfg.units = 2;
  cfg.hidden = 4;
  EncoderDecoderModel m(cfg);
  ModelConfig other = cfg;
  other.hidden = 5;
  CHECK_THROWS_AS(EncoderDecoderModel(other, m.params()), ShapeError);
}

TEST_CASE("training reduces the loss and is deterministic") {
  const auto data = testsupport::random_dataset(2, 24 * 20, 6, 6, 9);
  const auto sp = dataset::split(data.windows.size(), {}, 3);
  TrainConfig tc;
  tc.hidden = 8;
  tc.embedding = 2;
  tc.max_epochs = 3;
  tc.batch_size = 8;
  tc.lr = 1e-2;
  tc.seed = 7;
  const auto a = train(data, sp, tc);
  const auto b = train(data, sp, tc);
  REQUIRE(a.history.size() == 3);
  CHECK(a.history.back().train_loss < a.history.front().train_loss);
  CHECK(a.model.params() == b.model.params());
  CHECK(a.history.back().train_loss == b.history.back().train_loss);
}

TEST_CASE("embeddings and models round-trip through files") {
  ModelConfig cfg;
  cfg.units = 3;
  cfg.hidden = 4;
  cfg.embedding = 2;
  EncoderDecoderModel m(cfg);
  randomize_embeddings(m, 5);
  m.params().value(*m.params().find("embedding")).row(1)[0] = 0.0;
  m.params().value(*m.params().find("embedding")).row(1)[1] = 0.0;
  const std::vector<std::string> ids = {"a", "b", "c"};
  const auto e = extract_embeddings(m, ids);
  CHECK(e.all_zero == std::vector<bool>{false, true, false});
  const auto dir = std::filesystem::temp_directory_path();
  write_embeddings_csv(e, dir / "flexembed_emb.csv", "comment");
  const auto back = read_embeddings_csv(dir / "flexembed_emb.csv");
  CHECK(back.unit_ids == ids);
  CHECK(back.values == e.values);

  save_model(m, ids, dir / "flexembed_model.ckpt");
  const auto loaded = load_model(dir / "flexembed_model.ckpt");
  CHECK(loaded.unit_ids == ids);
  CHECK(loaded.model.params() == m.params());
  CHECK(loaded.model.config().hidden == 4);
  std::filesystem::remove(dir / "flexembed_emb.csv");
  std::filesystem::remove(dir / "flexembed_model.ckpt");
}
