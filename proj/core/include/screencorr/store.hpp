#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "screencorr/element_index.hpp"
#include "screencorr/screen.hpp"

namespace screencorr {

struct Annotation {
  std::string id;
  std::string screen_id;
  std::string element_id;
  std::string instruction;
  std::string author;

  nlohmann::json to_json() const;
  static Annotation from_json(const nlohmann::json& j);
};

struct TraceAction {
  /// tap | swipe | type
  std::string type = "tap";
  nlohmann::json params = nlohmann::json::object();

  nlohmann::json to_json() const;
  static TraceAction from_json(const nlohmann::json& j);
};

struct TraceStep {
  int index = 0;
  Screen screen;
  std::string target;
  TraceAction action;
};

struct Trace {
  std::string id;
  std::vector<TraceStep> steps;

  nlohmann::json to_json() const;
  /// Throws Error(kNotFound) when a target is missing from its recorded screen.
  static Trace from_json(const nlohmann::json& j);
};

/// Directory store: index.bin, annotations.jsonl, traces/ and screens/.
/// Not synchronized; callers serialize mutations.
class Store {
 public:
  /// Creates the directory layout when missing and loads whatever exists.
  static Store open(const std::filesystem::path& dir);
  /// In-memory store that never touches disk.
  static Store in_memory();

  const std::filesystem::path& dir() const { return dir_; }
  bool persistent() const { return !dir_.empty(); }

  ElementIndex& index() { return index_; }
  const ElementIndex& index() const { return index_; }

  const Screen* screen(const std::string& id) const;
  void put_screen(const Screen& s);
  const std::map<std::string, Screen>& screens() const { return screens_; }

  /// Throws Error(kNotFound) unless the element belongs to a stored screen.
  const Annotation& add_annotation(Annotation a);
  const std::vector<Annotation>& annotations() const { return annotations_; }

  const Trace& add_trace(Trace t);
  const Trace* trace(const std::string& id) const;

  void flush_index() const;

 private:
  std::filesystem::path dir_;
  ElementIndex index_;
  std::map<std::string, Screen> screens_;
  std::vector<Annotation> annotations_;
  std::map<std::string, Trace> traces_;
  int next_annotation_ = 1;
  int next_trace_ = 1;
};

}  // namespace screencorr
