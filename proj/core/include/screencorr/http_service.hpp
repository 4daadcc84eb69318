#pragma once

#include <map>
#include <memory>
#include <shared_mutex>
#include <string>

#include <nlohmann/json.hpp>

#include "screencorr/applications.hpp"
#include "screencorr/errors.hpp"

namespace screencorr {

/// Endpoint logic behind the HTTP API. Thread-safe: searches share the lock,
/// mutations take it exclusively. Failures throw Error; see http_status().
class Service {
 public:
  Service(Store store, EncoderModel model, std::shared_ptr<const TextEncoder> encoder, OverlayParams overlay = {});

  /// {screen_id, element_ids}
  nlohmann::json post_screen(const nlohmann::json& body);
  nlohmann::json get_screen(const std::string& id) const;
  nlohmann::json search(const std::string& tags, const std::string& text, int k) const;
  nlohmann::json similar(const std::string& element_id, int k, const std::string& screen_id = {}) const;
  /// {screen_a, screen_b, params}; screens are stored ids or inline documents.
  nlohmann::json correspond(const nlohmann::json& body) const;
  nlohmann::json post_annotation(const nlohmann::json& body);
  /// Throws Error(kNoMatch) carrying the gate reason when nothing transfers.
  nlohmann::json overlay(const nlohmann::json& body) const;
  nlohmann::json post_trace(const nlohmann::json& body);
  /// {screen, step?}; without "step" the trace's cursor is used and advanced.
  nlohmann::json replay_step(const std::string& trace_id, const nlohmann::json& body);

  const EncoderModel& model() const { return model_; }

 private:
  Screen resolve_screen(const nlohmann::json& ref) const;
  nlohmann::json hit_json(const ElementIndexEntry& e, double score) const;

  mutable std::shared_mutex mu_;
  Store store_;
  EncoderModel model_;
  std::shared_ptr<const TextEncoder> encoder_;
  OverlayParams overlay_;
  std::map<std::string, int> cursors_;
};

int http_status(ErrorCode code);

/// cpp-httplib front end for a Service.
class HttpServer {
 public:
  explicit HttpServer(Service& service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds; port 0 picks a free port. Returns the bound port or -1.
  int bind(const std::string& host, int port);
  /// Blocks until stop().
  bool listen();
  void stop();
  /// Blocks until the server accepts connections.
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace screencorr
