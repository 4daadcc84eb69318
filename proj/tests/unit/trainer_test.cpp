#include <gtest/gtest.h>

#include <sstream>

#include "fixtures.hpp"
#include "screencorr/errors.hpp"
#include "screencorr/synthcorpus.hpp"
#include "screencorr/trainer.hpp"

namespace screencorr {
namespace {

using testing::small_screen;
using testing::tiny_config;

std::vector<int> every_third(const ModalityTokens& t) {
  std::vector<int> mask;
  for (int i = 0; i < t.size(); i += 3) mask.push_back(i);
  return mask;
}

TEST(GradCheck, TinyModelMatchesFiniteDifferences) {
  const HashingTextEncoder enc;
  const EncoderModel model = init_model(tiny_config());
  const ModalityTokens tokens = tokenize_screen(small_screen(), enc, model.config().features());
  const GradCheckReport r = grad_check(model, tokens, every_third(tokens));
  for (const auto& e : r.entries) EXPECT_LT(e.relative_error, 1e-4) << e.tensor;
  EXPECT_LT(r.max_relative_error, 1e-4);
}

TEST(GradCheck, AbsolutePositionModel) {
  const HashingTextEncoder enc;
  EncoderConfig cfg = tiny_config(8, 2, 2);
  cfg.use_relative = false;
  const EncoderModel model = init_model(cfg);
  const ModalityTokens tokens = tokenize_screen(small_screen(), enc, cfg.features());
  EXPECT_LT(grad_check(model, tokens, every_third(tokens)).max_relative_error, 1e-4);
}

TEST(GradCheck, TrainedishParametersStillAgree) {
  // Non-zero relative tables and perturbed norms exercise every path.
  const HashingTextEncoder enc;
  EncoderModel model = init_model(tiny_config(8, 2, 2));
  Rng rng(5);
  for (double& v : model.values()) v += 0.2 * normal(rng);
  const ModalityTokens tokens = tokenize_screen(small_screen(), enc, model.config().features());
  EXPECT_LT(grad_check(model, tokens, {0, 1, 2, 5, 7}).max_relative_error, 1e-4);
}

TEST(Masking, PositionTokensNeverMasked) {
  const HashingTextEncoder enc;
  FeatureOptions opts;
  opts.use_relative = false;
  const ModalityTokens tokens = tokenize_screen(small_screen(), enc, opts);
  Rng rng(1);
  const MaskedTokens m = mask_tokens(tokens, 1.0, rng);
  for (int t : m.mask) EXPECT_NE(tokens.tokens[t].modality, Modality::kAbsPosition);
  for (int t = 0; t < tokens.size(); ++t) {
    if (tokens.tokens[t].modality == Modality::kAbsPosition) {
      EXPECT_EQ(m.tokens.tokens[t].features, tokens.tokens[t].features);
    } else {
      EXPECT_TRUE(m.tokens.tokens[t].features.isZero());
    }
  }
}

TEST(Masking, RateIsRespectedOnAverage) {
  const HashingTextEncoder enc;
  const ModalityTokens tokens = tokenize_screen(small_screen(), enc, {});
  Rng rng(9);
  long masked = 0;
  const int trials = 2000;
  for (int i = 0; i < trials; ++i) masked += static_cast<long>(mask_tokens(tokens, 0.15, rng).mask.size());
  const double rate = static_cast<double>(masked) / (trials * tokens.size());
  EXPECT_NEAR(rate, 0.15, 0.01);
}

TEST(Loss, IsPerModalityMean) {
  const HashingTextEncoder enc;
  const EncoderModel model = init_model(tiny_config());
  const ModalityTokens tokens = tokenize_screen(small_screen(), enc, model.config().features());
  const MaskedTokens m = apply_mask(tokens, every_third(tokens));
  const TrainLoss l = compute_loss(model, tokens, m);
  EXPECT_NEAR(l.total, l.l2_appearance + l.l2_text + l.ce_category, 1e-12);
  EXPECT_EQ(l.masked_token_count, static_cast<int>(m.mask.size()));
}

TEST(Adam, WeightDecaySkipsBiasesAndNorms) {
  const EncoderModel model = init_model(tiny_config());
  TrainConfig cfg;
  cfg.weight_decay = 0.1;
  AdamOptimizer opt(model.layout(), cfg);
  std::vector<double> values(model.values().begin(), model.values().end());
  const std::vector<double> before = values;
  std::vector<double> zero(values.size(), 0.0);
  opt.step(values, zero);
  for (const auto& t : model.layout().tensors()) {
    bool moved = false;
    for (std::size_t i = t.offset; i < t.offset + t.size(); ++i) moved |= values[i] != before[i];
    if (!t.decay) EXPECT_FALSE(moved) << t.name;
    const bool is_bias_or_norm = t.name.find("bias") != std::string::npos || t.name.find("gain") != std::string::npos;
    if (is_bias_or_norm) EXPECT_FALSE(t.decay) << t.name;
  }
}

TEST(Adam, SingleStepDescends) {
  // Descent sanity over many random samples with a small learning rate.
  const HashingTextEncoder enc;
  CorpusConfig cc;
  cc.seed = 4;
  cc.screens_total = 20;
  const Dataset d = generate_pairs(cc);
  int improved = 0, trials = 0;
  Rng rng(8);
  for (const auto& [id, s] : d.screens) {
    for (int rep = 0; rep < 5; ++rep) {
      EncoderModel model = init_model(tiny_config(16, 1, 2));
      const ModalityTokens tokens = tokenize_screen(s, enc, model.config().features());
      const MaskedTokens m = mask_tokens(tokens, 0.3, rng);
      if (m.mask.empty()) continue;
      std::vector<double> grad(model.layout().total_size(), 0.0);
      const double before = loss_and_gradient(model, tokens, m, false, nullptr, grad).total;
      TrainConfig cfg;
      cfg.learning_rate = 1e-4;
      AdamOptimizer opt(model.layout(), cfg);
      opt.step(model.values(), grad);
      const double after = compute_loss(model, tokens, m).total;
      improved += after < before;
      ++trials;
    }
  }
  ASSERT_GE(trials, 95);
  EXPECT_GE(improved, static_cast<int>(0.95 * trials));
}

TEST(Train, EmptyCorpusThrows) {
  const HashingTextEncoder enc;
  try {
    train(init_model(tiny_config()), {}, {}, TrainConfig{}, enc);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyCorpus);
  }
}

TEST(Train, HistoryStartsWithUntrainedModelAndIsDeterministic) {
  const HashingTextEncoder enc;
  CorpusConfig cc;
  cc.seed = 2;
  cc.screens_total = 12;
  const Dataset d = generate_pairs(cc);
  std::vector<Screen> screens;
  for (const auto& [id, s] : d.screens) screens.push_back(s);
  const std::vector<Screen> val(screens.begin(), screens.begin() + 3);
  const std::vector<Screen> tr(screens.begin() + 3, screens.end());
  TrainConfig cfg;
  cfg.max_epochs = 3;
  cfg.learning_rate = 1e-3;
  cfg.seed = 5;
  const EncoderModel m0 = init_model(tiny_config(16, 1, 2));
  const TrainResult a = train(m0, tr, val, cfg, enc);
  const TrainResult b = train(m0, tr, val, cfg, enc);
  ASSERT_EQ(a.history.size(), 4u);
  EXPECT_EQ(a.history[0].epoch, 0);
  EXPECT_EQ(a.model.version(), b.model.version());
  EXPECT_EQ(a.history.back().val.total, b.history.back().val.total);
  EXPECT_LT(a.history[static_cast<std::size_t>(a.best_epoch)].val.total, a.history[0].val.total);
  std::ostringstream csv;
  write_history_csv(csv, a.history);
  EXPECT_NE(csv.str().find("epoch,train_total,val_total"), std::string::npos);
}

TEST(Train, EarlyStoppingRestoresBestEpoch) {
  const HashingTextEncoder enc;
  CorpusConfig cc;
  cc.seed = 3;
  cc.screens_total = 10;
  const Dataset d = generate_pairs(cc);
  std::vector<Screen> screens;
  for (const auto& [id, s] : d.screens) screens.push_back(s);
  TrainConfig cfg;
  cfg.max_epochs = 30;
  cfg.patience = 2;
  cfg.learning_rate = 5e-2;  // large enough to oscillate
  const TrainResult r = train(init_model(tiny_config(8, 1, 2)), screens, screens, cfg, enc);
  double best = r.history[0].val.total;
  int best_epoch = 0;
  for (const auto& rec : r.history) {
    if (rec.val.total < best) {
      best = rec.val.total;
      best_epoch = rec.epoch;
    }
  }
  EXPECT_EQ(r.best_epoch, best_epoch);
  EXPECT_LE(static_cast<int>(r.history.size()) - 1 - r.best_epoch, cfg.patience);
}

}  // namespace
}  // namespace screencorr
