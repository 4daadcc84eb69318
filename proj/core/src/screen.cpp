#include "screencorr/screen.hpp"

#include <array>
#include <fstream>
#include <set>
#include <sstream>

#include "screencorr/errors.hpp"

namespace screencorr {
namespace {

using nlohmann::json;

constexpr std::array<std::string_view, kScreenCategoryCount> kScreenCategoryNames = {
    "media_player", "in_app_purchase", "login",  "permission_request", "register",
    "pre_login",    "pop_up",          "search", "website_view",
};

[[noreturn]] void malformed(const std::string& what) { throw Error(ErrorCode::kMalformedDocument, what); }

const json& require(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) malformed(std::string("missing field '") + key + "'");
  return *it;
}

std::string require_string(const json& obj, const char* key) {
  const json& v = require(obj, key);
  if (!v.is_string()) malformed(std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

std::vector<double> number_array(const json& v, const char* key) {
  if (!v.is_array()) malformed(std::string("field '") + key + "' must be an array");
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& x : v) {
    if (!x.is_number()) malformed(std::string("field '") + key + "' must contain numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

bool blank(std::string_view s) { return s.find_first_not_of(" \t\r\n") == std::string_view::npos; }

UIElement parse_element(const json& e, bool pixel, int width, int height) {
  if (!e.is_object()) malformed("element must be an object");
  UIElement out;
  out.id = require_string(e, "element_id");
  if (out.id.empty()) malformed("empty element_id");

  auto box = number_array(require(e, "bbox"), "bbox");
  if (box.size() != 4) malformed("bbox must have 4 coordinates");
  if (pixel) {
    box[0] /= width;
    box[2] /= width;
    box[1] /= height;
    box[3] /= height;
  }
  out.bounds = {box[0], box[1], box[2], box[3]};
  if (!out.bounds.valid()) {
    std::ostringstream msg;
    msg << "element '" << out.id << "' has bbox (" << box[0] << "," << box[1] << "," << box[2] << "," << box[3]
        << ")";
    throw Error(ErrorCode::kMalformedBounds, msg.str());
  }

  const std::string cat_name = require_string(e, "category");
  auto base = base_class_from_name(cat_name);
  if (!base) throw Error(ErrorCode::kUnknownCategoryName, cat_name);
  std::string sub;
  if (*base == BaseClass::kIcon && e.contains("icon_type") && e["icon_type"].is_string()) {
    sub = e["icon_type"].get<std::string>();
  } else if ((*base == BaseClass::kToggle || *base == BaseClass::kCheckbox) && e.contains("state") &&
             e["state"].is_string()) {
    sub = e["state"].get<std::string>();
  }
  out.category = ElementCategory::lookup(*base, sub);

  if (auto it = e.find("confidence"); it != e.end()) {
    if (!it->is_number()) malformed("confidence must be a number");
    out.confidence = it->get<double>();
    if (out.confidence < 0.0 || out.confidence > 1.0) malformed("confidence outside [0,1]");
  }
  if (auto it = e.find("text"); it != e.end() && !it->is_null()) {
    if (!it->is_string()) malformed("text must be a string");
    auto s = it->get<std::string>();
    if (!blank(s)) out.text = std::move(s);
  }
  if (auto it = e.find("appearance_vector"); it != e.end() && !it->is_null()) {
    out.appearance_vector = number_array(*it, "appearance_vector");
  }
  if (auto it = e.find("crop_path"); it != e.end() && !it->is_null()) {
    if (!it->is_string()) malformed("crop_path must be a string");
    out.crop_path = it->get<std::string>();
  }
  if (auto it = e.find("text_vector"); it != e.end() && !it->is_null()) {
    out.text_vector = number_array(*it, "text_vector");
  }
  if (auto it = e.find("role_label"); it != e.end() && !it->is_null()) {
    if (!it->is_string()) malformed("role_label must be a string");
    out.role_label = it->get<std::string>();
  }
  return out;
}

}  // namespace

std::string_view screen_category_name(ScreenCategory c) { return kScreenCategoryNames[static_cast<int>(c)]; }

std::optional<ScreenCategory> screen_category_from_name(std::string_view name) {
  for (int i = 0; i < kScreenCategoryCount; ++i) {
    if (kScreenCategoryNames[i] == name) return static_cast<ScreenCategory>(i);
  }
  return std::nullopt;
}

const std::vector<ScreenCategory>& all_screen_categories() {
  static const std::vector<ScreenCategory> all = [] {
    std::vector<ScreenCategory> v;
    for (int i = 0; i < kScreenCategoryCount; ++i) v.push_back(static_cast<ScreenCategory>(i));
    return v;
  }();
  return all;
}

std::optional<std::size_t> Screen::find(std::string_view element_id) const {
  for (std::size_t i = 0; i < elements.size(); ++i) {
    if (elements[i].id == element_id) return i;
  }
  return std::nullopt;
}

Screen parse_screen(const json& doc) {
  if (!doc.is_object()) malformed("screen document must be a JSON object");
  Screen s;
  s.id = require_string(doc, "screen_id");
  s.app_id = doc.contains("app_id") && doc["app_id"].is_string() ? doc["app_id"].get<std::string>() : "";
  if (auto it = doc.find("screen_category"); it != doc.end() && !it->is_null()) {
    if (!it->is_string()) malformed("screen_category must be a string");
    auto c = screen_category_from_name(it->get<std::string>());
    if (!c) malformed("unknown screen_category '" + it->get<std::string>() + "'");
    s.category = c;
  }
  const json& w = require(doc, "width_px");
  const json& h = require(doc, "height_px");
  if (!w.is_number_integer() || !h.is_number_integer() || w.get<long>() <= 0 || h.get<long>() <= 0) {
    malformed("width_px and height_px must be positive integers");
  }
  s.width_px = w.get<int>();
  s.height_px = h.get<int>();

  bool pixel = false;
  if (auto it = doc.find("coords"); it != doc.end()) {
    if (*it == "pixel") {
      pixel = true;
    } else if (*it != "normalized") {
      malformed("coords must be \"pixel\" or \"normalized\"");
    }
  }

  const json& elements = require(doc, "elements");
  if (!elements.is_array()) malformed("elements must be an array");
  std::set<std::string> seen;
  for (const auto& e : elements) {
    UIElement el = parse_element(e, pixel, s.width_px, s.height_px);
    if (!seen.insert(el.id).second) throw Error(ErrorCode::kDuplicateElementId, el.id);
    s.elements.push_back(std::move(el));
  }
  return s;
}

Screen parse_screen_text(std::string_view text) {
  json doc = json::parse(text.begin(), text.end(), nullptr, false);
  if (doc.is_discarded()) malformed("invalid JSON");
  return parse_screen(doc);
}

json serialize_screen(const Screen& screen) {
  json doc;
  doc["screen_id"] = screen.id;
  doc["app_id"] = screen.app_id;
  if (screen.category) doc["screen_category"] = std::string(screen_category_name(*screen.category));
  doc["width_px"] = screen.width_px;
  doc["height_px"] = screen.height_px;
  doc["coords"] = "normalized";
  json elements = json::array();
  for (const auto& e : screen.elements) {
    json j;
    j["element_id"] = e.id;
    j["bbox"] = {e.bounds.x1, e.bounds.y1, e.bounds.x2, e.bounds.y2};
    j["category"] = std::string(base_class_name(e.category.base()));
    if (e.category.base() == BaseClass::kIcon && !e.category.sub_kind().empty()) {
      j["icon_type"] = std::string(e.category.sub_kind());
    } else if (e.category.base() == BaseClass::kToggle || e.category.base() == BaseClass::kCheckbox) {
      j["state"] = std::string(e.category.sub_kind());
    }
    j["confidence"] = e.confidence;
    if (e.text) j["text"] = *e.text;
    if (e.appearance_vector) j["appearance_vector"] = *e.appearance_vector;
    if (e.crop_path) j["crop_path"] = *e.crop_path;
    if (e.text_vector) j["text_vector"] = *e.text_vector;
    if (e.role_label) j["role_label"] = *e.role_label;
    elements.push_back(std::move(j));
  }
  doc["elements"] = std::move(elements);
  return doc;
}

Screen load_screen(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_screen_text(buf.str());
}

void save_screen(const Screen& screen, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << serialize_screen(screen).dump(1) << '\n';
}

}  // namespace screencorr
