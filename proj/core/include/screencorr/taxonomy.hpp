#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace screencorr {

/// Detector classes produced by the upstream element detector.
enum class BaseClass {
  kButton,
  kCheckbox,
  kContainer,
  kDialog,
  kIcon,
  kPageControl,
  kPicture,
  kSegmentedControl,
  kSlider,
  kText,
  kTextField,
  kToggle,
};

inline constexpr int kBaseClassCount = 12;
inline constexpr int kCategoryCount = 83;
inline constexpr std::string_view kTaxonomyVersion = "ui-taxonomy-83/1";

std::string_view base_class_name(BaseClass base);
std::optional<BaseClass> base_class_from_name(std::string_view name);

/// One row of the flattened taxonomy. `sub_kind` is the icon type for Icon
/// entries and "on"/"off" for Toggle and Checkbox; empty otherwise.
struct CategoryEntry {
  BaseClass base;
  std::string_view sub_kind;
};

class ElementCategory {
 public:
  ElementCategory() = default;

  /// Throws Error(kUnknownCategory) when index is outside [0, 83).
  static ElementCategory from_index(int flat_index);

  /// Unknown icon names degrade to the generic Icon entry. Toggle and
  /// Checkbox default to the "off" state when none is given.
  static ElementCategory lookup(BaseClass base, std::string_view sub_kind = {});

  int flat_index() const { return index_; }
  BaseClass base() const;
  std::string_view sub_kind() const;

  /// "Button", "Icon:add", "Toggle:on", ...
  std::string label() const;

  friend bool operator==(ElementCategory a, ElementCategory b) { return a.index_ == b.index_; }

 private:
  explicit ElementCategory(int index) : index_(index) {}
  int index_ = 0;
};

/// The fixed 83-entry table in flat-index order.
std::span<const CategoryEntry, kCategoryCount> category_table();

/// Inverse of category_table(); nullopt when the pair is not an exact entry.
std::optional<int> find_category_index(BaseClass base, std::string_view sub_kind);

}  // namespace screencorr
