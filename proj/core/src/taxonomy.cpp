#include "screencorr/taxonomy.hpp"

#include <algorithm>

#include "screencorr/errors.hpp"

namespace screencorr {
namespace {

constexpr std::array<std::string_view, kBaseClassCount> kBaseNames = {
    "Button", "Checkbox", "Container", "Dialog", "Icon", "PageControl",
    "Picture", "SegmentedControl", "Slider", "Text", "TextField", "Toggle",
};

// 69 icon sub-kinds plus the generic Icon entry.
constexpr std::array<std::string_view, 69> kIconKinds = {
    "add",          "arrow_back",   "arrow_forward", "arrow_up",      "arrow_down",
    "close",        "search",       "settings",      "share",         "menu",
    "more",         "home",         "favorite",      "star",          "cart",
    "play",         "pause",        "stop",          "skip_next",     "skip_previous",
    "volume",       "mute",         "camera",        "microphone",    "location",
    "notifications", "person",      "edit",          "delete",        "refresh",
    "download",     "upload",       "send",          "info",          "help",
    "lock",         "unlock",       "email",         "phone",         "chat",
    "calendar",     "time",         "filter",        "sort",          "bookmark",
    "check",        "expand",       "collapse",      "fullscreen",    "repeat",
    "shuffle",      "cast",         "link",          "globe",         "visibility",
    "visibility_off", "apple",      "google",        "facebook",      "twitter",
    "gift",         "image",        "video",         "music",         "list",
    "grid",         "attach",       "copy",          "bluetooth",
};

constexpr std::array<CategoryEntry, kCategoryCount> build_table() {
  std::array<CategoryEntry, kCategoryCount> t{};
  int i = 0;
  t[i++] = {BaseClass::kButton, ""};
  t[i++] = {BaseClass::kCheckbox, "off"};
  t[i++] = {BaseClass::kCheckbox, "on"};
  t[i++] = {BaseClass::kContainer, ""};
  t[i++] = {BaseClass::kDialog, ""};
  t[i++] = {BaseClass::kIcon, ""};
  for (auto kind : kIconKinds) t[i++] = {BaseClass::kIcon, kind};
  t[i++] = {BaseClass::kPageControl, ""};
  t[i++] = {BaseClass::kPicture, ""};
  t[i++] = {BaseClass::kSegmentedControl, ""};
  t[i++] = {BaseClass::kSlider, ""};
  t[i++] = {BaseClass::kText, ""};
  t[i++] = {BaseClass::kTextField, ""};
  t[i++] = {BaseClass::kToggle, "off"};
  t[i++] = {BaseClass::kToggle, "on"};
  return t;
}

constexpr std::array<CategoryEntry, kCategoryCount> kTable = build_table();
static_assert(kTable[kCategoryCount - 1].base == BaseClass::kToggle);

bool has_state(BaseClass base) { return base == BaseClass::kToggle || base == BaseClass::kCheckbox; }

}  // namespace

std::string_view base_class_name(BaseClass base) { return kBaseNames[static_cast<int>(base)]; }

std::optional<BaseClass> base_class_from_name(std::string_view name) {
  for (int i = 0; i < kBaseClassCount; ++i) {
    if (kBaseNames[i] == name) return static_cast<BaseClass>(i);
  }
  return std::nullopt;
}

std::span<const CategoryEntry, kCategoryCount> category_table() { return kTable; }

std::optional<int> find_category_index(BaseClass base, std::string_view sub_kind) {
  for (int i = 0; i < kCategoryCount; ++i) {
    if (kTable[i].base == base && kTable[i].sub_kind == sub_kind) return i;
  }
  return std::nullopt;
}

ElementCategory ElementCategory::from_index(int flat_index) {
  if (flat_index < 0 || flat_index >= kCategoryCount) {
    throw Error(ErrorCode::kUnknownCategory, "category index " + std::to_string(flat_index));
  }
  return ElementCategory(flat_index);
}

ElementCategory ElementCategory::lookup(BaseClass base, std::string_view sub_kind) {
  if (has_state(base)) {
    return ElementCategory(*find_category_index(base, sub_kind == "on" ? "on" : "off"));
  }
  if (base == BaseClass::kIcon) {
    if (auto idx = find_category_index(base, sub_kind)) return ElementCategory(*idx);
    return ElementCategory(*find_category_index(base, ""));
  }
  return ElementCategory(*find_category_index(base, ""));
}

BaseClass ElementCategory::base() const { return kTable[index_].base; }

std::string_view ElementCategory::sub_kind() const { return kTable[index_].sub_kind; }

std::string ElementCategory::label() const {
  std::string out(base_class_name(base()));
  if (!sub_kind().empty()) {
    out += ':';
    out += sub_kind();
  }
  return out;
}

}  // namespace screencorr
