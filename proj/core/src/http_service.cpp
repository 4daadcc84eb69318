#include "screencorr/http_service.hpp"

#include <httplib.h>

#include <mutex>
#include <sstream>

#include "screencorr/errors.hpp"

namespace screencorr {
namespace {

int parse_k(const std::string& s, int fallback) {
  if (s.empty()) return fallback;
  try {
    std::size_t used = 0;
    const int k = std::stoi(s, &used);
    if (used != s.size() || k < 1) throw std::invalid_argument("k");
    return k;
  } catch (const std::exception&) {
    throw Error(ErrorCode::kMalformedDocument, "k must be a positive integer");
  }
}

std::vector<std::string> split_tags(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string t;
  while (std::getline(in, t, ',')) {
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

}  // namespace

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNotFound:
      return 404;
    case ErrorCode::kModelVersionMismatch:
    case ErrorCode::kCheckpointMismatch:
      return 409;
    case ErrorCode::kNoMatch:
    case ErrorCode::kEmptyIndex:
    case ErrorCode::kEmptyAnnotationStore:
      return 422;
    case ErrorCode::kIo:
      return 500;
    default:
      return 400;
  }
}

Service::Service(Store store, EncoderModel model, std::shared_ptr<const TextEncoder> encoder, OverlayParams overlay)
    : store_(std::move(store)), model_(std::move(model)), encoder_(std::move(encoder)), overlay_(overlay) {}

Screen Service::resolve_screen(const nlohmann::json& ref) const {
  if (ref.is_string()) {
    const Screen* s = store_.screen(ref.get<std::string>());
    if (!s) throw Error(ErrorCode::kNotFound, "unknown screen '" + ref.get<std::string>() + "'");
    return *s;
  }
  if (ref.is_object()) return parse_screen(ref);
  throw Error(ErrorCode::kMalformedDocument, "screen must be an id or a screen document");
}

nlohmann::json Service::hit_json(const ElementIndexEntry& e, double score) const {
  return {{"element_id", e.element_id},
          {"screen_id", e.screen_id},
          {"score", score},
          {"tags", e.tags},
          {"text", e.text},
          {"bbox", {e.bounds.x1, e.bounds.y1, e.bounds.x2, e.bounds.y2}}};
}

nlohmann::json Service::post_screen(const nlohmann::json& body) {
  const Screen s = parse_screen(body);
  std::unique_lock lock(mu_);
  const IndexResult r = index_screen(store_, s, model_, *encoder_);
  return {{"screen_id", r.screen_id}, {"element_ids", r.element_ids}};
}

nlohmann::json Service::get_screen(const std::string& id) const {
  std::shared_lock lock(mu_);
  const Screen* s = store_.screen(id);
  if (!s) throw Error(ErrorCode::kNotFound, "unknown screen '" + id + "'");
  return serialize_screen(*s);
}

nlohmann::json Service::search(const std::string& tags, const std::string& text, int k) const {
  SearchFilters f{split_tags(tags), text, std::nullopt};
  std::shared_lock lock(mu_);
  nlohmann::json results = nlohmann::json::array();
  for (std::size_t i : store_.index().filter(f, static_cast<std::size_t>(k))) {
    results.push_back(hit_json(store_.index().entries()[i], 1.0));
  }
  return {{"results", std::move(results)}};
}

nlohmann::json Service::similar(const std::string& element_id, int k, const std::string& screen_id) const {
  std::shared_lock lock(mu_);
  const auto& index = store_.index();
  const auto at = index.find_element(element_id, screen_id);
  if (!at) throw Error(ErrorCode::kNotFound, "unknown element '" + element_id + "'");
  const auto& query = index.entries()[*at];
  SearchFilters f;
  f.exclude_element = element_id;
  nlohmann::json results = nlohmann::json::array();
  for (const auto& hit : index.nn_search(query.embedding.cast<double>(), k, f)) {
    results.push_back(hit_json(index.entries()[hit.entry], hit.score));
  }
  return {{"query", hit_json(query, 1.0)}, {"results", std::move(results)}};
}

nlohmann::json Service::correspond(const nlohmann::json& body) const {
  if (!body.is_object() || !body.contains("screen_a") || !body.contains("screen_b")) {
    throw Error(ErrorCode::kMalformedDocument, "body needs screen_a and screen_b");
  }
  const MatchParams p = body.contains("params") ? MatchParams::from_json(body["params"]) : MatchParams{};
  std::shared_lock lock(mu_);
  const Screen a = resolve_screen(body["screen_a"]);
  const Screen b = resolve_screen(body["screen_b"]);
  return screencorr::correspond(a, b, model_, *encoder_, p).to_json();
}

nlohmann::json Service::post_annotation(const nlohmann::json& body) {
  Annotation a = Annotation::from_json(body);
  std::unique_lock lock(mu_);
  return store_.add_annotation(std::move(a)).to_json();
}

nlohmann::json Service::overlay(const nlohmann::json& body) const {
  if (!body.is_object() || !body.contains("screen")) throw Error(ErrorCode::kMalformedDocument, "body needs screen");
  OverlayParams params = overlay_;
  if (body.contains("params")) {
    const auto& pj = body["params"];
    params.max_screen_distance = pj.value("max_screen_distance", params.max_screen_distance);
    params.min_matches = pj.value("min_matches", params.min_matches);
    params.min_mean_score = pj.value("min_mean_score", params.min_mean_score);
    if (pj.contains("match")) params.match = MatchParams::from_json(pj["match"]);
  }
  std::shared_lock lock(mu_);
  const Screen target = resolve_screen(body["screen"]);
  const OverlaySpec spec = transfer_overlay(store_, target, model_, *encoder_, params);
  if (!spec.transferred()) throw Error(ErrorCode::kNoMatch, spec.reason);
  return spec.to_json();
}

nlohmann::json Service::post_trace(const nlohmann::json& body) {
  Trace t = Trace::from_json(body);
  std::unique_lock lock(mu_);
  const Trace& stored = store_.add_trace(std::move(t));
  cursors_[stored.id] = 0;
  return {{"trace_id", stored.id}, {"steps", stored.steps.size()}};
}

nlohmann::json Service::replay_step(const std::string& trace_id, const nlohmann::json& body) {
  if (!body.is_object() || !body.contains("screen")) throw Error(ErrorCode::kMalformedDocument, "body needs screen");
  const MatchParams p = body.contains("params") ? MatchParams::from_json(body["params"]) : MatchParams{};
  const Screen live = resolve_screen(body["screen"]);
  std::unique_lock lock(mu_);
  const Trace* t = store_.trace(trace_id);
  if (!t) throw Error(ErrorCode::kNotFound, "unknown trace '" + trace_id + "'");
  int& cursor = cursors_[trace_id];
  int step = cursor;
  if (body.contains("step")) {
    if (!body["step"].is_number_integer()) throw Error(ErrorCode::kMalformedDocument, "step must be an integer");
    step = body["step"].get<int>();
  }
  if (step < 0 || step >= static_cast<int>(t->steps.size())) {
    throw Error(ErrorCode::kNotFound, "trace has no step " + std::to_string(step));
  }
  const ReplayResult r = screencorr::replay_step(t->steps[static_cast<std::size_t>(step)], live, model_, *encoder_, p);
  cursor = step + 1;
  return {{"element_id", r.element_id}, {"action", r.action.to_json()}, {"score", r.score}, {"step", step}};
}

struct HttpServer::Impl {
  httplib::Server server;
};

HttpServer::HttpServer(Service& service) : impl_(std::make_unique<Impl>()) {
  auto& srv = impl_->server;

  auto reply = [](httplib::Response& res, const nlohmann::json& j, int status = 200) {
    res.status = status;
    res.set_content(j.dump(), "application/json; charset=utf-8");
  };
  // Wraps a handler so Error and JSON failures map onto status codes.
  auto guarded = [reply](auto fn) {
    return [fn, reply](const httplib::Request& req, httplib::Response& res) {
      try {
        fn(req, res);
      } catch (const Error& e) {
        nlohmann::json body = {{"error", std::string(error_code_name(e.code()))}, {"message", e.message()}};
        if (http_status(e.code()) == 422) body["reason"] = e.message();
        reply(res, body, http_status(e.code()));
      } catch (const nlohmann::json::exception& e) {
        reply(res, {{"error", "MalformedDocument"}, {"message", e.what()}}, 400);
      }
    };
  };
  auto body_json = [](const httplib::Request& req) {
    auto j = nlohmann::json::parse(req.body, nullptr, false);
    if (j.is_discarded()) throw Error(ErrorCode::kMalformedDocument, "request body is not JSON");
    return j;
  };

  srv.Post("/v1/screens", guarded([&service, reply, body_json](const auto& req, auto& res) {
             reply(res, service.post_screen(body_json(req)), 201);
           }));
  srv.Get(R"(/v1/screens/([^/]+))", guarded([&service, reply](const auto& req, auto& res) {
            reply(res, service.get_screen(req.matches[1]));
          }));
  srv.Get("/v1/search", guarded([&service, reply](const auto& req, auto& res) {
            reply(res, service.search(req.get_param_value("tags"), req.get_param_value("text"),
                                      parse_k(req.get_param_value("k"), 20)));
          }));
  srv.Get(R"(/v1/elements/([^/]+)/similar)", guarded([&service, reply](const auto& req, auto& res) {
            reply(res, service.similar(req.matches[1], parse_k(req.get_param_value("k"), 10),
                                       req.get_param_value("screen")));
          }));
  srv.Post("/v1/correspond", guarded([&service, reply, body_json](const auto& req, auto& res) {
             reply(res, service.correspond(body_json(req)));
           }));
  srv.Post("/v1/annotations", guarded([&service, reply, body_json](const auto& req, auto& res) {
             reply(res, service.post_annotation(body_json(req)), 201);
           }));
  srv.Post("/v1/overlay", guarded([&service, reply, body_json](const auto& req, auto& res) {
             reply(res, service.overlay(body_json(req)));
           }));
  srv.Post("/v1/traces", guarded([&service, reply, body_json](const auto& req, auto& res) {
             reply(res, service.post_trace(body_json(req)), 201);
           }));
  srv.Post(R"(/v1/traces/([^/]+)/replay-step)", guarded([&service, reply, body_json](const auto& req, auto& res) {
             reply(res, service.replay_step(req.matches[1], body_json(req)));
           }));
  srv.set_error_handler([reply](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty()) reply(res, {{"error", "NotFound"}, {"message", "no such endpoint"}}, res.status);
  });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) return impl_->server.bind_to_any_port(host);
  return impl_->server.bind_to_port(host, port) ? port : -1;
}

bool HttpServer::listen() { return impl_->server.listen_after_bind(); }

void HttpServer::stop() {
  if (impl_) impl_->server.stop();
}

void HttpServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace screencorr
