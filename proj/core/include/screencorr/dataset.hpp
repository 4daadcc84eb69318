#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "screencorr/screen.hpp"

namespace screencorr {

enum class PairRelation { kIntraClass, kSameScreen };

std::string_view relation_name(PairRelation r);
std::optional<PairRelation> relation_from_name(std::string_view name);

using ElementPair = std::pair<std::string, std::string>;

/// One pairs/*.json document.
struct PairFile {
  std::string id;
  std::string screen_a;
  std::string screen_b;
  std::vector<ElementPair> gt_pairs;
  PairRelation relation = PairRelation::kIntraClass;
  /// Elements a labeler inspected; when absent, elements carrying a role label count as labeled.
  std::optional<std::vector<std::string>> labeled_a;
  std::optional<std::vector<std::string>> labeled_b;

  nlohmann::json to_json() const;
  static PairFile from_json(const nlohmann::json& j, std::string fallback_id = {});
};

/// screens/*.json + pairs/*.json under one directory.
struct Dataset {
  std::map<std::string, Screen> screens;
  std::vector<PairFile> pairs;

  const Screen& screen(const std::string& id) const;

  static Dataset load(const std::filesystem::path& dir);
  /// Writes screens/, pairs/ and manifest.json (manifest content supplied by the caller).
  void save(const std::filesystem::path& dir, const nlohmann::json& manifest) const;
};

/// Every screens/*.json below `dir` (or `dir/screens`), sorted by file name.
std::vector<Screen> load_screens(const std::filesystem::path& dir);

}  // namespace screencorr
