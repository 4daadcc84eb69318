#include <gtest/gtest.h>

#include <atomic>
#include <thread>

#include "fixtures.hpp"
#include "screencorr/http_service.hpp"

// After Eigen: resolv.h defines a _res macro.
#include <httplib.h>

namespace screencorr {
namespace {

using nlohmann::json;
using testing::small_screen;
using testing::tiny_config;

Screen renamed(Screen s, const std::string& id) {
  const std::string old = s.id;
  s.id = id;
  for (auto& e : s.elements) e.id = id + e.id.substr(old.size());
  return s;
}

// Service on an ephemeral port, torn down per test.
class Http : public ::testing::Test {
 protected:
  void start(Store store, EncoderModel model) {
    service_ = std::make_unique<Service>(std::move(store), std::move(model), std::make_shared<HashingTextEncoder>());
    server_ = std::make_unique<HttpServer>(*service_);
    port_ = server_->bind("127.0.0.1", 0);
    ASSERT_GT(port_, 0);
    thread_ = std::thread([this] { server_->listen(); });
    server_->wait_until_ready();
    client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
  }
  void SetUp() override { start(Store::in_memory(), init_model(tiny_config(16, 1, 2))); }
  void TearDown() override {
    server_->stop();
    if (thread_.joinable()) thread_.join();
  }

  std::pair<int, json> post(const std::string& path, const json& body) { return post_raw(path, body.dump()); }
  std::pair<int, json> post_raw(const std::string& path, const std::string& body) {
    auto res = client_->Post(path, body, "application/json");
    if (!res) return {0, {}};
    return {res->status, json::parse(res->body, nullptr, false)};
  }
  std::pair<int, json> get(const std::string& path) {
    auto res = client_->Get(path);
    if (!res) return {0, {}};
    return {res->status, json::parse(res->body, nullptr, false)};
  }

  std::unique_ptr<Service> service_;
  std::unique_ptr<HttpServer> server_;
  std::unique_ptr<httplib::Client> client_;
  std::thread thread_;
  int port_ = 0;
};

TEST_F(Http, PostAndGetScreen) {
  auto [status, body] = post("/v1/screens", serialize_screen(small_screen()));
  EXPECT_EQ(status, 201);
  EXPECT_EQ(body["screen_id"], "s1");
  EXPECT_EQ(body["element_ids"].size(), 5u);
  auto [gs, doc] = get("/v1/screens/s1");
  EXPECT_EQ(gs, 200);
  EXPECT_EQ(doc, serialize_screen(small_screen()));
  EXPECT_EQ(get("/v1/screens/nope").first, 404);
}

TEST_F(Http, MalformedBodiesAre400) {
  EXPECT_EQ(post_raw("/v1/screens", "{oops").first, 400);
  EXPECT_EQ(post("/v1/screens", json{{"id", "x"}}).first, 400);
  EXPECT_EQ(post("/v1/correspond", json{{"screen_a", "s1"}}).first, 400);
  auto [status, body] = post("/v1/overlay", json::object());
  EXPECT_EQ(status, 400);
  EXPECT_EQ(body["error"], "MalformedDocument");
}

TEST_F(Http, UnknownRouteIs404) { EXPECT_EQ(get("/v1/nothing").first, 404); }

TEST_F(Http, SearchFiltersByTagAndText) {
  post("/v1/screens", serialize_screen(small_screen()));
  auto [status, body] = get("/v1/search?tags=textfield&text=pass&k=5");
  EXPECT_EQ(status, 200);
  ASSERT_EQ(body["results"].size(), 1u);
  EXPECT_EQ(body["results"][0]["element_id"], "s1.pass");
  EXPECT_EQ(get("/v1/search?tags=icon").second["results"].size(), 1u);
  EXPECT_EQ(get("/v1/search?k=2").second["results"].size(), 2u);
}

TEST_F(Http, SimilarExcludesQueryAndRanksCopyFirst) {
  post("/v1/screens", serialize_screen(small_screen()));
  post("/v1/screens", serialize_screen(renamed(small_screen(), "s2")));
  auto [status, body] = get("/v1/elements/s1.login/similar?k=3");
  EXPECT_EQ(status, 200);
  ASSERT_EQ(body["results"].size(), 3u);
  EXPECT_EQ(body["results"][0]["element_id"], "s2.login");
  EXPECT_NEAR(body["results"][0]["score"].get<double>(), 1.0, 1e-6);
  for (const auto& r : body["results"]) EXPECT_NE(r["element_id"], "s1.login");
  EXPECT_EQ(get("/v1/elements/zzz/similar").first, 404);
}

TEST_F(Http, CorrespondByIdAndInline) {
  post("/v1/screens", serialize_screen(small_screen()));
  auto [status, body] = post("/v1/correspond", json{{"screen_a", "s1"},
                                                     {"screen_b", serialize_screen(renamed(small_screen(), "t"))},
                                                     {"params", {{"c", 0.5}}}});
  EXPECT_EQ(status, 200);
  ASSERT_EQ(body["pairs"].size(), 5u);
  EXPECT_EQ(post("/v1/correspond", json{{"screen_a", "s1"}, {"screen_b", "ghost"}}).first, 404);
}

TEST_F(Http, AnnotationsAndOverlay) {
  post("/v1/screens", serialize_screen(small_screen()));
  const Screen target = renamed(small_screen(), "t");
  auto [s0, b0] = post("/v1/overlay", json{{"screen", serialize_screen(target)}});
  EXPECT_EQ(s0, 422);
  EXPECT_EQ(b0["error"], "EmptyAnnotationStore");

  EXPECT_EQ(post("/v1/annotations", json{{"screen_id", "s1"}, {"element_id", "ghost"}, {"instruction", "x"}}).first,
            404);
  auto [s1, b1] = post("/v1/annotations",
                       json{{"screen_id", "s1"}, {"element_id", "s1.user"}, {"instruction", "Type your name"}});
  EXPECT_EQ(s1, 201);
  EXPECT_EQ(b1["id"], "ann-1");
  post("/v1/annotations", json{{"screen_id", "s1"}, {"element_id", "s1.login"}, {"instruction", "Tap"}});

  auto [s2, b2] = post("/v1/overlay", json{{"screen", serialize_screen(target)}});
  EXPECT_EQ(s2, 200);
  ASSERT_EQ(b2["items"].size(), 2u);
  EXPECT_EQ(b2["items"][0]["element_id"], "t.user");

  auto [s3, b3] = post("/v1/overlay", json{{"screen", serialize_screen(target)}, {"params", {{"min_matches", 9}}}});
  EXPECT_EQ(s3, 422);
  EXPECT_EQ(b3["reason"], "too few matched elements");
}

TEST_F(Http, TraceReplay) {
  const Screen recorded = small_screen();
  const json trace = {{"steps",
                       {{{"screen", serialize_screen(recorded)}, {"target", "s1.user"}, {"action", {{"type", "tap"}}}},
                        {{"screen", serialize_screen(recorded)},
                         {"target", "s1.pass"},
                         {"action", {{"type", "type"}, {"text", "pw"}}}}}}};
  auto [s0, b0] = post("/v1/traces", trace);
  EXPECT_EQ(s0, 201);
  const std::string id = b0["trace_id"];
  const json live = serialize_screen(renamed(recorded, "live"));

  auto [s1, b1] = post("/v1/traces/" + id + "/replay-step", json{{"screen", live}});
  EXPECT_EQ(s1, 200);
  EXPECT_EQ(b1["element_id"], "live.user");
  EXPECT_EQ(b1["action"]["type"], "tap");
  auto [s2, b2] = post("/v1/traces/" + id + "/replay-step", json{{"screen", live}});
  EXPECT_EQ(b2["element_id"], "live.pass");
  EXPECT_EQ(b2["action"]["text"], "pw");
  EXPECT_EQ(post("/v1/traces/" + id + "/replay-step", json{{"screen", live}}).first, 404);

  Screen missing = renamed(recorded, "live");
  std::erase_if(missing.elements, [](const UIElement& e) { return e.id == "live.user"; });
  auto [s3, b3] = post("/v1/traces/" + id + "/replay-step", json{{"screen", serialize_screen(missing)}, {"step", 0}});
  EXPECT_EQ(s3, 422);
  EXPECT_EQ(b3["error"], "NoMatch");

  EXPECT_EQ(post("/v1/traces/ghost/replay-step", json{{"screen", live}}).first, 404);
  EXPECT_EQ(post("/v1/traces", json{{"steps", {{{"screen", serialize_screen(recorded)}, {"target", "nope"}}}}}).first,
            404);
}

TEST_F(Http, ConcurrentSearchesAgree) {
  post("/v1/screens", serialize_screen(small_screen()));
  post("/v1/screens", serialize_screen(renamed(small_screen(), "s2")));
  const json expected = get("/v1/elements/s1.user/similar?k=4").second;
  std::vector<std::thread> threads;
  std::atomic<int> ok{0};
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&] {
      httplib::Client c("127.0.0.1", port_);
      for (int i = 0; i < 10; ++i) {
        auto res = c.Get("/v1/elements/s1.user/similar?k=4");
        if (res && json::parse(res->body) == expected) ++ok;
      }
    });
  }
  for (auto& th : threads) th.join();
  EXPECT_EQ(ok.load(), 40);
}

class HttpVersion : public Http {
  void SetUp() override {}
};

TEST_F(HttpVersion, OtherModelIndexIs409) {
  Store store = Store::in_memory();
  const HashingTextEncoder enc;
  index_screen(store, small_screen(), init_model(tiny_config(16, 1, 2)), enc);
  EncoderConfig other = tiny_config(16, 1, 2);
  other.seed = 77;
  start(std::move(store), init_model(other));
  auto [status, body] = post("/v1/screens", serialize_screen(small_screen("s2")));
  EXPECT_EQ(status, 409);
  EXPECT_EQ(body["error"], "ModelVersionMismatch");
}

TEST(HttpStatus, Mapping) {
  EXPECT_EQ(http_status(ErrorCode::kMalformedDocument), 400);
  EXPECT_EQ(http_status(ErrorCode::kNotFound), 404);
  EXPECT_EQ(http_status(ErrorCode::kModelVersionMismatch), 409);
  EXPECT_EQ(http_status(ErrorCode::kNoMatch), 422);
  EXPECT_EQ(http_status(ErrorCode::kEmptyIndex), 422);
}

}  // namespace
}  // namespace screencorr
