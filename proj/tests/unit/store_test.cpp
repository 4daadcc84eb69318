#include <gtest/gtest.h>

#include <fstream>

#include "fixtures.hpp"
#include "screencorr/errors.hpp"
#include "screencorr/store.hpp"

namespace screencorr {
namespace {

using testing::small_screen;

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kIo;
}

nlohmann::json trace_json(const Screen& s, const std::string& target) {
  return {{"steps", {{{"index", 0}, {"screen", serialize_screen(s)}, {"target", target},
                      {"action", {{"type", "type"}, {"text", "bob"}}}}}}};
}

TEST(Store, OpenCreatesLayout) {
  const auto dir = testing::temp_dir("store") / "nested";
  const Store s = Store::open(dir);
  EXPECT_TRUE(s.persistent());
  EXPECT_TRUE(std::filesystem::is_directory(dir / "traces"));
  EXPECT_TRUE(std::filesystem::is_directory(dir / "screens"));
  EXPECT_TRUE(s.annotations().empty());
  EXPECT_FALSE(Store::in_memory().persistent());
}

TEST(Store, AnnotationsNeedKnownElements) {
  Store s = Store::in_memory();
  Annotation a{"", "s1", "s1.user", "Type your username", "tester"};
  EXPECT_EQ(code_of([&] { s.add_annotation(a); }), ErrorCode::kNotFound);
  s.put_screen(small_screen());
  a.element_id = "s1.nothing";
  EXPECT_EQ(code_of([&] { s.add_annotation(a); }), ErrorCode::kNotFound);
  a.element_id = "s1.user";
  EXPECT_EQ(s.add_annotation(a).id, "ann-1");
  EXPECT_EQ(s.add_annotation(a).id, "ann-2");
}

TEST(Store, ReopenRestoresEverythingAndContinuesIds) {
  const auto dir = testing::temp_dir("store");
  {
    Store s = Store::open(dir);
    s.put_screen(small_screen());
    s.add_annotation({"", "s1", "s1.pass", "Enter your password", "a"});
    s.add_annotation({"", "s1", "s1.login", "Then tap here", "b"});
    s.add_trace(Trace::from_json(trace_json(small_screen(), "s1.user")));
  }
  Store s = Store::open(dir);
  ASSERT_EQ(s.annotations().size(), 2u);
  EXPECT_EQ(s.annotations()[1].instruction, "Then tap here");
  EXPECT_EQ(s.annotations()[1].author, "b");
  ASSERT_NE(s.screen("s1"), nullptr);
  EXPECT_EQ(serialize_screen(*s.screen("s1")), serialize_screen(small_screen()));
  const Trace* t = s.trace("trace-1");
  ASSERT_NE(t, nullptr);
  EXPECT_EQ(t->steps[0].target, "s1.user");
  EXPECT_EQ(t->steps[0].action.type, "type");
  EXPECT_EQ(t->steps[0].action.params["text"], "bob");
  EXPECT_EQ(s.add_annotation({"", "s1", "s1.user", "x", ""}).id, "ann-3");
  EXPECT_EQ(s.add_trace(Trace::from_json(trace_json(small_screen(), "s1.pass"))).id, "trace-2");
  EXPECT_EQ(s.trace("trace-9"), nullptr);
}

TEST(Trace, TargetMustExist) {
  EXPECT_EQ(code_of([] { Trace::from_json(trace_json(small_screen(), "s1.ghost")); }), ErrorCode::kNotFound);
}

TEST(Trace, MalformedInputs) {
  EXPECT_EQ(code_of([] { Trace::from_json({{"steps", nlohmann::json::array()}}); }), ErrorCode::kMalformedDocument);
  EXPECT_EQ(code_of([] { Trace::from_json({{"steps", {{{"target", "x"}}}}}); }), ErrorCode::kMalformedDocument);
  EXPECT_EQ(code_of([] { TraceAction::from_json({{"type", "pinch"}}); }), ErrorCode::kMalformedDocument);
}

TEST(Trace, RoundTrip) {
  const Trace t = Trace::from_json(trace_json(small_screen(), "s1.login"));
  const Trace back = Trace::from_json(t.to_json());
  EXPECT_EQ(back.to_json(), t.to_json());
}

TEST(Store, RejectsUnsafeIds) {
  Store s = Store::in_memory();
  Screen bad = small_screen();
  bad.id = "../escape";
  EXPECT_EQ(code_of([&] { s.put_screen(bad); }), ErrorCode::kMalformedDocument);
}

TEST(Store, CorruptAnnotationsFileIsReported) {
  const auto dir = testing::temp_dir("store");
  Store::open(dir);
  std::ofstream(dir / "annotations.jsonl") << "{not json\n";
  EXPECT_EQ(code_of([&] { Store::open(dir); }), ErrorCode::kMalformedDocument);
}

}  // namespace
}  // namespace screencorr
