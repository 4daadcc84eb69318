#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "screencorr/dataset.hpp"
#include "screencorr/random.hpp"
#include "screencorr/screen.hpp"

namespace screencorr {

inline constexpr std::string_view kGeneratorVersion = "synthcorpus/1";

/// One role slot of a screen template.
struct TemplateSlot {
  std::string role;
  BaseClass base = BaseClass::kText;
  std::string sub_kind;
  BoundingBox box;
  /// Probability the slot is instantiated.
  double presence = 1.0;
  std::vector<std::string> phrases;
  /// Appearance family; empty uses the element category.
  std::string family;
};

struct ScreenTemplate {
  ScreenCategory category = ScreenCategory::kLogin;
  std::vector<TemplateSlot> slots;
  /// Same-category slots whose boxes trade places on half of the screens, so
  /// that position alone cannot tell them apart across apps.
  std::vector<std::pair<std::string, std::string>> swappable;
};

const ScreenTemplate& screen_template(ScreenCategory c);

/// Role-labeled screen from the category template. Element ids are "<screen_id>.<role>".
Screen generate_screen(ScreenCategory category, Rng& rng, const std::string& screen_id = "screen",
                       const std::string& app_id = "app");
/// Throws Error(kUnknownCategory) for names outside the nine screen categories.
Screen generate_screen(std::string_view category, Rng& rng, const std::string& screen_id = "screen",
                       const std::string& app_id = "app");

struct PerturbSpec {
  double dx = 0.0;
  double dy = 0.0;
  double style_noise_sigma = 0.0;
  double text_variant_rate = 0.0;
  int insert_count = 0;
  int delete_count = 0;
  bool reorder = false;
  std::uint64_t seed = 0;
  /// When set, the perturbed screen and its element ids are renamed to this id.
  std::string target_id;

  void validate() const;
};

struct PerturbResult {
  Screen screen;
  std::vector<ElementPair> gt_pairs;
};

PerturbResult perturb(const Screen& s, const PerturbSpec& spec);

struct CorpusConfig {
  std::uint64_t seed = 0;
  std::vector<ScreenCategory> categories = all_screen_categories();
  /// Standalone screens per category.
  int screens_per_category = 0;
  /// Total standalone screens spread round-robin over the categories; added to the above.
  int screens_total = 0;
  int intra_class_per_category = 0;
  int same_screen_per_category = 0;
  /// Same-screen perturbation; each of `edits` is an insert or a delete with equal odds.
  double translate_x = 0.05;
  double translate_y = 0.05;
  double style_noise_sigma = 0.05;
  double text_variant_rate = 0.1;
  int edits = 1;
  bool reorder = true;

  void validate() const;
  nlohmann::json to_json() const;
  static CorpusConfig from_toml(std::string_view text);
  static CorpusConfig from_toml_file(const std::filesystem::path& path);
};

/// Pure function of the config: standalone screens plus intra-class and same-screen pairs.
Dataset generate_pairs(const CorpusConfig& config);

nlohmann::json corpus_manifest(const CorpusConfig& config, const Dataset& d);

/// Generates and writes screens/, pairs/ and manifest.json.
Dataset write_corpus(const CorpusConfig& config, const std::filesystem::path& out);

}  // namespace screencorr
