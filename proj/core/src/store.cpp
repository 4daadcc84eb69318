#include "screencorr/store.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "screencorr/errors.hpp"

namespace screencorr {
namespace {

namespace fs = std::filesystem;

std::string require_string(const nlohmann::json& j, const char* key) {
  if (!j.is_object() || !j.contains(key) || !j[key].is_string()) {
    throw Error(ErrorCode::kMalformedDocument, std::string("missing string field '") + key + "'");
  }
  return j[key].get<std::string>();
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  std::stringstream buf;
  buf << in.rdbuf();
  auto j = nlohmann::json::parse(buf.str(), nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::kMalformedDocument, "invalid JSON in " + path.string());
  return j;
}

// Ids become file names.
void check_file_id(const std::string& id) {
  const bool ok = !id.empty() && id != "." && id != ".." && std::all_of(id.begin(), id.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '-' || c == '_' || c == '.';
  });
  if (!ok) throw Error(ErrorCode::kMalformedDocument, "id '" + id + "' must use [A-Za-z0-9._-]");
}

int serial_after(const std::string& id, const std::string& prefix) {
  if (!id.starts_with(prefix)) return 0;
  try {
    return std::stoi(id.substr(prefix.size())) + 1;
  } catch (const std::exception&) {
    return 0;
  }
}

}  // namespace

nlohmann::json Annotation::to_json() const {
  return {{"id", id}, {"screen_id", screen_id}, {"element_id", element_id}, {"instruction", instruction},
          {"author", author}};
}

Annotation Annotation::from_json(const nlohmann::json& j) {
  Annotation a;
  a.id = j.is_object() ? j.value("id", "") : "";
  a.screen_id = require_string(j, "screen_id");
  a.element_id = require_string(j, "element_id");
  a.instruction = require_string(j, "instruction");
  a.author = j.value("author", "");
  return a;
}

nlohmann::json TraceAction::to_json() const {
  nlohmann::json j = params.is_object() ? params : nlohmann::json::object();
  j["type"] = type;
  return j;
}

TraceAction TraceAction::from_json(const nlohmann::json& j) {
  TraceAction a;
  if (!j.is_object()) throw Error(ErrorCode::kMalformedDocument, "action must be an object");
  a.type = require_string(j, "type");
  if (a.type != "tap" && a.type != "swipe" && a.type != "type") {
    throw Error(ErrorCode::kMalformedDocument, "action type must be tap, swipe or type");
  }
  a.params = j;
  a.params.erase("type");
  return a;
}

nlohmann::json Trace::to_json() const {
  nlohmann::json steps_j = nlohmann::json::array();
  for (const auto& s : steps) {
    steps_j.push_back({{"index", s.index}, {"screen", serialize_screen(s.screen)}, {"target", s.target},
                       {"action", s.action.to_json()}});
  }
  return {{"id", id}, {"steps", std::move(steps_j)}};
}

Trace Trace::from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("steps") || !j["steps"].is_array() || j["steps"].empty()) {
    throw Error(ErrorCode::kMalformedDocument, "trace needs a non-empty steps array");
  }
  Trace t;
  t.id = j.value("id", "");
  for (const auto& sj : j["steps"]) {
    TraceStep step;
    step.index = static_cast<int>(t.steps.size());
    if (!sj.is_object() || !sj.contains("screen")) throw Error(ErrorCode::kMalformedDocument, "step needs a screen");
    step.screen = parse_screen(sj["screen"]);
    step.target = require_string(sj, "target");
    step.action = sj.contains("action") ? TraceAction::from_json(sj["action"]) : TraceAction{};
    if (!step.screen.find(step.target)) {
      throw Error(ErrorCode::kNotFound, "target '" + step.target + "' not in recorded screen " + step.screen.id);
    }
    t.steps.push_back(std::move(step));
  }
  return t;
}

Store Store::open(const fs::path& dir) {
  fs::create_directories(dir / "traces");
  fs::create_directories(dir / "screens");
  Store s;
  s.dir_ = dir;
  if (fs::exists(dir / "index.bin")) s.index_ = ElementIndex::load(dir / "index.bin");
  for (const auto& entry : fs::directory_iterator(dir / "screens")) {
    if (entry.path().extension() != ".json") continue;
    Screen sc = parse_screen(read_json(entry.path()));
    const std::string id = sc.id;
    s.screens_.emplace(id, std::move(sc));
  }
  if (std::ifstream in(dir / "annotations.jsonl"); in) {
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      auto j = nlohmann::json::parse(line, nullptr, false);
      if (j.is_discarded()) throw Error(ErrorCode::kMalformedDocument, "invalid line in annotations.jsonl");
      Annotation a = Annotation::from_json(j);
      s.next_annotation_ = std::max(s.next_annotation_, serial_after(a.id, "ann-"));
      s.annotations_.push_back(std::move(a));
    }
  }
  for (const auto& entry : fs::directory_iterator(dir / "traces")) {
    if (entry.path().extension() != ".json") continue;
    Trace t = Trace::from_json(read_json(entry.path()));
    s.next_trace_ = std::max(s.next_trace_, serial_after(t.id, "trace-"));
    const std::string id = t.id;
    s.traces_.emplace(id, std::move(t));
  }
  return s;
}

Store Store::in_memory() { return Store{}; }

const Screen* Store::screen(const std::string& id) const {
  auto it = screens_.find(id);
  return it == screens_.end() ? nullptr : &it->second;
}

void Store::put_screen(const Screen& s) {
  check_file_id(s.id);
  screens_.insert_or_assign(s.id, s);
  if (persistent()) save_screen(s, dir_ / "screens" / (s.id + ".json"));
}

const Annotation& Store::add_annotation(Annotation a) {
  const Screen* s = screen(a.screen_id);
  if (!s) throw Error(ErrorCode::kNotFound, "screen '" + a.screen_id + "' is not indexed");
  if (!s->find(a.element_id)) throw Error(ErrorCode::kNotFound, "element '" + a.element_id + "' not on screen");
  if (a.id.empty()) a.id = "ann-" + std::to_string(next_annotation_++);
  if (persistent()) {
    std::ofstream out(dir_ / "annotations.jsonl", std::ios::app);
    if (!out) throw Error(ErrorCode::kIo, "cannot append annotation");
    out << a.to_json().dump() << '\n';
  }
  annotations_.push_back(std::move(a));
  return annotations_.back();
}

const Trace& Store::add_trace(Trace t) {
  if (t.id.empty()) t.id = "trace-" + std::to_string(next_trace_++);
  check_file_id(t.id);
  if (persistent()) {
    std::ofstream out(dir_ / "traces" / (t.id + ".json"));
    if (!out) throw Error(ErrorCode::kIo, "cannot write trace");
    out << t.to_json().dump() << '\n';
  }
  const std::string id = t.id;
  return traces_.insert_or_assign(id, std::move(t)).first->second;
}

const Trace* Store::trace(const std::string& id) const {
  auto it = traces_.find(id);
  return it == traces_.end() ? nullptr : &it->second;
}

void Store::flush_index() const {
  if (persistent() && !index_.empty()) index_.save(dir_ / "index.bin");
}

}  // namespace screencorr
