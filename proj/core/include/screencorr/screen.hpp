#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "screencorr/geometry.hpp"
#include "screencorr/taxonomy.hpp"

namespace screencorr {

/// The nine screen categories used for labeled evaluation groups.
enum class ScreenCategory {
  kMediaPlayer,
  kInAppPurchase,
  kLogin,
  kPermissionRequest,
  kRegister,
  kPreLogin,
  kPopUp,
  kSearch,
  kWebsiteView,
};

inline constexpr int kScreenCategoryCount = 9;

std::string_view screen_category_name(ScreenCategory c);
std::optional<ScreenCategory> screen_category_from_name(std::string_view name);
const std::vector<ScreenCategory>& all_screen_categories();

struct UIElement {
  std::string id;
  BoundingBox bounds;
  ElementCategory category;
  double confidence = 1.0;
  std::optional<std::string> text;
  std::optional<std::vector<double>> appearance_vector;
  std::optional<std::string> crop_path;
  std::optional<std::vector<double>> text_vector;
  std::optional<std::string> role_label;

  bool operator==(const UIElement&) const = default;
};

struct Screen {
  std::string id;
  std::string app_id;
  std::optional<ScreenCategory> category;
  int width_px = 1;
  int height_px = 1;
  std::vector<UIElement> elements;

  /// Index of the element with the given id, or nullopt.
  std::optional<std::size_t> find(std::string_view element_id) const;

  bool operator==(const Screen&) const = default;
};

/// Validates and normalizes a screen document. Pixel coordinates
/// ("coords": "pixel") are divided by the declared screen size.
Screen parse_screen(const nlohmann::json& doc);
Screen parse_screen_text(std::string_view text);

/// Canonical document with normalized coordinates.
nlohmann::json serialize_screen(const Screen& screen);

Screen load_screen(const std::filesystem::path& path);
void save_screen(const Screen& screen, const std::filesystem::path& path);

}  // namespace screencorr
