#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "screencorr/applications.hpp"
#include "screencorr/errors.hpp"
#include "screencorr/synthcorpus.hpp"

namespace screencorr {
namespace {

using testing::small_screen;
using testing::tiny_config;

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kIo;
}

Screen renamed(Screen s, const std::string& id) {
  const std::string old = s.id;
  s.id = id;
  for (auto& e : s.elements) e.id = id + e.id.substr(old.size());
  return s;
}

class Applications : public ::testing::Test {
 protected:
  HashingTextEncoder enc;
  EncoderModel model = init_model(tiny_config(16, 1, 2));
};

TEST(ElementTags, BaseAndLabel) {
  const UIElement icon = testing::element("i", BaseClass::kIcon, {0, 0, 0.1, 0.1}, std::nullopt, "add");
  EXPECT_EQ(element_tags(icon), (std::vector<std::string>{"icon", "icon:add"}));
  const UIElement button = testing::element("b", BaseClass::kButton, {0, 0, 0.1, 0.1}, "OK");
  EXPECT_EQ(element_tags(button), (std::vector<std::string>{"button"}));
}

TEST_F(Applications, IndexScreenStoresOneEntryPerElementAndScreenMean) {
  Store store = Store::in_memory();
  const Screen s = small_screen();
  const IndexResult r = index_screen(store, s, model, enc);
  EXPECT_EQ(r.screen_id, "s1");
  ASSERT_EQ(r.element_ids.size(), 5u);
  EXPECT_EQ(store.index().size(), 5u);
  ASSERT_EQ(store.index().screens().size(), 1u);
  const ElementEmbeddings emb = embed_screen(model, s, enc);
  const Eigen::VectorXf mean = emb.vectors.colwise().mean().transpose().cast<float>();
  EXPECT_TRUE(store.index().screens()[0].embedding.isApprox(mean, 1e-6f));
  EXPECT_NE(store.screen("s1"), nullptr);

  // Re-indexing replaces rather than appends.
  Screen smaller = s;
  smaller.elements.pop_back();
  index_screen(store, smaller, model, enc);
  EXPECT_EQ(store.index().size(), 4u);
  EXPECT_EQ(store.screen("s1")->elements.size(), 4u);
}

TEST_F(Applications, IndexRejectsOtherModelVersion) {
  Store store = Store::in_memory();
  index_screen(store, small_screen(), model, enc);
  EncoderConfig other = tiny_config(16, 1, 2);
  other.seed = 99;
  const EncoderModel m2 = init_model(other);
  ASSERT_NE(m2.version(), model.version());
  EXPECT_EQ(code_of([&] { index_screen(store, small_screen("s2"), m2, enc); }), ErrorCode::kModelVersionMismatch);
  EXPECT_EQ(store.index().size(), 5u);
}

TEST_F(Applications, IndexPersistsToDisk) {
  const auto dir = testing::temp_dir("apps");
  {
    Store store = Store::open(dir);
    index_screen(store, small_screen(), model, enc);
  }
  const Store back = Store::open(dir);
  EXPECT_EQ(back.index().size(), 5u);
  EXPECT_EQ(back.index().model_version(), model.version());
}

TEST_F(Applications, OverlayNeedsAnnotations) {
  Store store = Store::in_memory();
  index_screen(store, small_screen(), model, enc);
  EXPECT_EQ(code_of([&] { transfer_overlay(store, small_screen("t"), model, enc, {}); }),
            ErrorCode::kEmptyAnnotationStore);
}

TEST_F(Applications, IdenticalTargetReceivesEveryAnnotation) {
  Store store = Store::in_memory();
  index_screen(store, small_screen(), model, enc);
  store.add_annotation({"", "s1", "s1.user", "Type your username", ""});
  store.add_annotation({"", "s1", "s1.pass", "Then your password", ""});
  store.add_annotation({"", "s1", "s1.login", "Tap to sign in", ""});
  const Screen target = renamed(small_screen(), "t");
  const OverlaySpec spec = transfer_overlay(store, target, model, enc, {});
  ASSERT_TRUE(spec.transferred()) << spec.reason;
  EXPECT_EQ(spec.source_screen, "s1");
  EXPECT_NEAR(spec.screen_distance, 0.0, 1e-6);
  ASSERT_EQ(spec.items.size(), 3u);
  for (const auto& it : spec.items) {
    EXPECT_EQ(it.target_element, "t" + it.source_element.substr(2));
    EXPECT_NEAR(it.score, 1.0, 1e-9);
    const auto idx = target.find(it.target_element);
    ASSERT_TRUE(idx.has_value());
    EXPECT_EQ(it.bbox, target.elements[*idx].bounds);
    EXPECT_GE(it.bbox.x1, 0.0);
    EXPECT_LE(it.bbox.x2, 1.0);
  }
  const auto j = spec.to_json();
  EXPECT_EQ(j["items"].size(), 3u);
  EXPECT_FALSE(j.contains("reason"));
}

TEST_F(Applications, OverlayGatesReportReasons) {
  Store store = Store::in_memory();
  index_screen(store, small_screen(), model, enc);
  store.add_annotation({"", "s1", "s1.user", "Type your username", ""});
  const Screen target = renamed(small_screen(), "t");

  OverlayParams p;
  p.max_screen_distance = -1.0;
  OverlaySpec spec = transfer_overlay(store, target, model, enc, p);
  EXPECT_EQ(spec.reason, "no similar exemplar");
  EXPECT_TRUE(spec.items.empty());

  p = {};
  p.min_matches = 6;
  spec = transfer_overlay(store, target, model, enc, p);
  EXPECT_EQ(spec.reason, "too few matched elements");
  EXPECT_EQ(spec.matches, 5);

  p = {};
  p.min_mean_score = 1.5;
  spec = transfer_overlay(store, target, model, enc, p);
  EXPECT_EQ(spec.reason, "mean match score below threshold");
  EXPECT_EQ(spec.to_json()["reason"], "mean match score below threshold");
}

TEST_F(Applications, OverlayPicksNearestAnnotatedScreen) {
  Store store = Store::in_memory();
  Rng rng(4);
  const Screen login = generate_screen(ScreenCategory::kLogin, rng, "login");
  const Screen other = generate_screen("media_player", rng, "media");
  index_screen(store, login, model, enc);
  index_screen(store, other, model, enc);
  store.add_annotation({"", "media", other.elements[0].id, "media hint", ""});
  store.add_annotation({"", "login", login.elements[0].id, "login hint", ""});
  OverlayParams p;
  p.max_screen_distance = 2.0;
  const OverlaySpec spec = transfer_overlay(store, renamed(login, "t"), model, enc, p);
  EXPECT_EQ(spec.source_screen, "login");
}

TEST_F(Applications, ReplayIdentityAndDeletion) {
  const Screen recorded = small_screen();
  TraceStep step;
  step.screen = recorded;
  step.target = "s1.pass";
  step.action.type = "type";
  step.action.params = {{"text", "hunter2"}};
  const ReplayResult r = replay_step(step, renamed(recorded, "live"), model, enc, {});
  EXPECT_EQ(r.element_id, "live.pass");
  EXPECT_EQ(r.action.type, "type");
  EXPECT_EQ(r.action.params["text"], "hunter2");
  EXPECT_NEAR(r.score, 1.0, 1e-9);

  Screen missing = renamed(recorded, "live");
  std::erase_if(missing.elements, [](const UIElement& e) { return e.id == "live.pass"; });
  EXPECT_EQ(code_of([&] { replay_step(step, missing, model, enc, {}); }), ErrorCode::kNoMatch);
}

TEST_F(Applications, ReplayFollowsStylePerturbedTarget) {
  Rng rng(21);
  const Screen recorded = generate_screen(ScreenCategory::kLogin, rng, "rec");
  PerturbSpec spec;
  spec.style_noise_sigma = 0.05;
  spec.seed = 3;
  spec.target_id = "live";
  const PerturbResult live = perturb(recorded, spec);
  for (const auto& gt : live.gt_pairs) {
    TraceStep step;
    step.screen = recorded;
    step.target = gt.first;
    EXPECT_EQ(replay_step(step, live.screen, model, enc, {}).element_id, gt.second) << gt.first;
  }
}

}  // namespace
}  // namespace screencorr
