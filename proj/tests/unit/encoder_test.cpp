#include <gtest/gtest.h>

#include <algorithm>

#include "fixtures.hpp"
#include "screencorr/encoder.hpp"
#include "screencorr/errors.hpp"

namespace screencorr {
namespace {

using testing::element;
using testing::small_screen;
using testing::tiny_config;

TEST(EncoderConfig, Defaults) {
  const EncoderConfig c;
  EXPECT_EQ(c.hidden, 256);
  EXPECT_EQ(c.layers, 4);
  EXPECT_EQ(c.heads, 4);
  EXPECT_DOUBLE_EQ(c.dropout, 0.25);
}

TEST(EncoderConfig, Validation) {
  EncoderConfig c;
  c.hidden = 30;
  EXPECT_THROW(c.validate(), Error);
  c = EncoderConfig{};
  c.layers = 0;
  EXPECT_THROW(c.validate(), Error);
  c = EncoderConfig{};
  c.dropout = 1.0;
  EXPECT_THROW(c.validate(), Error);
  EXPECT_THROW(init_model(c), Error);
}

TEST(EncoderConfig, JsonRoundTrip) {
  EncoderConfig c = tiny_config(16, 2, 4);
  c.use_text = false;
  EXPECT_EQ(EncoderConfig::from_json(c.to_json()), c);
}

TEST(InitModel, SeedDeterminism) {
  EncoderConfig c = tiny_config(16, 2, 2);
  c.seed = 7;
  const EncoderModel a = init_model(c), b = init_model(c);
  EXPECT_TRUE(std::ranges::equal(a.values(), b.values()));
  c.seed = 8;
  EXPECT_FALSE(std::ranges::equal(a.values(), init_model(c).values()));
  EXPECT_TRUE(a.all_finite());
}

TEST(InitModel, TensorShapes) {
  const EncoderModel m = init_model(tiny_config(16, 2, 4));
  const auto& t = m.tensors();
  EXPECT_EQ(m.tensor(t.input_weight[0]).rows(), 83);
  EXPECT_EQ(m.tensor(t.input_weight[1]).rows(), 88);
  EXPECT_EQ(m.tensor(t.input_weight[2]).rows(), 128);
  EXPECT_EQ(m.tensor(t.input_weight[3]).rows(), 4);
  EXPECT_EQ(m.tensor(t.rel_x).rows(), 4);
  EXPECT_EQ(m.tensor(t.rel_x).cols(), 33);
  EXPECT_EQ(m.tensor(t.layers[0].w1).cols(), 64);
  EXPECT_EQ(m.tensor(t.head_weight[0]).cols(), 83);
  EXPECT_EQ(m.tensor(t.head_weight[1]).cols(), 88);
  EXPECT_EQ(m.tensor(t.head_weight[2]).cols(), 128);
  EXPECT_EQ(t.layers.size(), 2u);
}

TEST(Forward, OneEmbeddingPerElement) {
  const HashingTextEncoder enc;
  const EncoderModel m = init_model(tiny_config(16, 2, 2));
  const ElementEmbeddings e = embed_screen(m, small_screen(), enc);
  EXPECT_EQ(e.size(), 5);
  EXPECT_EQ(e.vectors.cols(), 16);
  EXPECT_TRUE(e.vectors.allFinite());
  EXPECT_EQ(e.element_ids.front(), "s1.title");
}

TEST(Forward, PoolingIsMeanOfElementTokens) {
  const HashingTextEncoder enc;
  const EncoderModel m = init_model(tiny_config(16, 2, 2));
  const ModalityTokens t = tokenize_screen(small_screen(), enc, m.config().features());
  const ForwardOutput out = forward(m, t);
  for (int el = 0; el < t.element_count; ++el) {
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(16);
    int n = 0;
    for (int i = 0; i < t.size(); ++i) {
      if (t.tokens[i].element != el) continue;
      sum += out.token_outputs.row(i).transpose();
      ++n;
    }
    EXPECT_LT((sum / n - out.element_embeddings.row(el).transpose()).norm(), 1e-12);
  }
}

TEST(Forward, SingleTokenElementEqualsItsOutput) {
  const HashingTextEncoder enc;
  Screen s;
  s.id = "one";
  s.elements = {element("a", BaseClass::kPicture, {0.1, 0.1, 0.5, 0.5})};
  const EncoderModel m = init_model(tiny_config());
  const ModalityTokens t = tokenize_screen(s, enc, m.config().features());
  ASSERT_EQ(t.size(), 1);
  const ForwardOutput out = forward(m, t);
  EXPECT_EQ(out.element_embeddings.row(0), out.token_outputs.row(0));
}

TEST(Forward, PermutationEquivariant) {
  const HashingTextEncoder enc;
  const EncoderModel m = init_model(tiny_config(16, 2, 2));
  Screen s = small_screen();
  const ElementEmbeddings a = embed_screen(m, s, enc);
  std::reverse(s.elements.begin(), s.elements.end());
  const ElementEmbeddings b = embed_screen(m, s, enc);
  for (int i = 0; i < a.size(); ++i) {
    const int j = a.size() - 1 - i;
    EXPECT_EQ(a.element_ids[i], b.element_ids[j]);
    EXPECT_LT((a.vectors.row(i) - b.vectors.row(j)).cwiseAbs().maxCoeff(), 1e-5);
  }
}

TEST(Forward, TranslationInvariantInRelativeMode) {
  const HashingTextEncoder enc;
  const EncoderModel m = init_model(tiny_config(16, 2, 2));
  Screen s = small_screen();
  const ElementEmbeddings a = embed_screen(m, s, enc);
  for (auto& e : s.elements) e.bounds = e.bounds.translated(0.05, 0.05);
  const ElementEmbeddings b = embed_screen(m, s, enc);
  EXPECT_LT((a.vectors - b.vectors).cwiseAbs().maxCoeff(), 1e-5);
}

TEST(Forward, AbsolutePositionModeSeesTranslation) {
  const HashingTextEncoder enc;
  EncoderConfig c = tiny_config(16, 2, 2);
  c.use_relative = false;
  const EncoderModel m = init_model(c);
  Screen s = small_screen();
  const ElementEmbeddings a = embed_screen(m, s, enc);
  for (auto& e : s.elements) e.bounds = e.bounds.translated(0.05, 0.05);
  EXPECT_GT((a.vectors - embed_screen(m, s, enc).vectors).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Forward, AttentionRowsSumToOne) {
  const HashingTextEncoder enc;
  const EncoderModel m = init_model(tiny_config(16, 2, 4));
  const ModalityTokens t = tokenize_screen(small_screen(), enc, m.config().features());
  ForwardCache cache;
  forward(m, t, false, nullptr, &cache);
  ASSERT_EQ(cache.layers.size(), 2u);
  for (const auto& layer : cache.layers) {
    ASSERT_EQ(layer.probs.size(), 4u);
    for (const auto& p : layer.probs) {
      EXPECT_LT((p.rowwise().sum().array() - 1.0).abs().maxCoeff(), 1e-12);
    }
  }
}

TEST(Forward, EvalModeIsReproducibleAndDropoutIsNot) {
  const HashingTextEncoder enc;
  EncoderConfig c = tiny_config(16, 2, 2);
  c.dropout = 0.5;
  const EncoderModel m = init_model(c);
  const ModalityTokens t = tokenize_screen(small_screen(), enc, c.features());
  EXPECT_EQ(forward(m, t).token_outputs, forward(m, t).token_outputs);
  Rng rng(1);
  EXPECT_NE(forward(m, t, true, &rng).token_outputs, forward(m, t).token_outputs);
}

TEST(Forward, MismatchedTokensThrow) {
  const HashingTextEncoder enc;
  const EncoderModel m = init_model(tiny_config());
  // absolute-position tokens against a relative-mode model
  const ModalityTokens t = tokenize_screen(small_screen(), enc, {false, true, true});
  try {
    forward(m, t);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDimensionMismatch);
  }
}

TEST(Reconstruct, HeadShapesAndPositionTokensSkipped) {
  const HashingTextEncoder enc;
  EncoderConfig c = tiny_config();
  c.use_relative = false;
  const EncoderModel m = init_model(c);
  const ModalityTokens t = tokenize_screen(small_screen(), enc, c.features());
  const auto rec = reconstruct(m, t, forward(m, t).token_outputs);
  EXPECT_EQ(rec.size(), 14u);
  for (const auto& r : rec) {
    ASSERT_NE(r.modality, Modality::kAbsPosition);
    EXPECT_EQ(r.values.size(), modality_dim(r.modality));
  }
}

TEST(ModelVersion, DependsOnParameters) {
  EncoderModel a = init_model(tiny_config());
  const std::string v = a.version();
  EXPECT_EQ(v, init_model(tiny_config()).version());
  a.values()[0] += 1.0;
  EXPECT_NE(a.version(), v);
}

}  // namespace
}  // namespace screencorr
