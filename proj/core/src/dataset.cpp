#include "screencorr/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "screencorr/errors.hpp"

namespace screencorr {
namespace {

namespace fs = std::filesystem;

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  auto j = nlohmann::json::parse(buf.str(), nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::kMalformedDocument, "invalid JSON in " + path.string());
  return j;
}

std::vector<fs::path> json_files(const fs::path& dir) {
  std::vector<fs::path> out;
  if (!fs::is_directory(dir)) return out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::string> string_list(const nlohmann::json& j, const char* key) {
  if (!j.is_array()) throw Error(ErrorCode::kMalformedDocument, std::string(key) + " must be an array");
  std::vector<std::string> out;
  for (const auto& x : j) out.push_back(x.get<std::string>());
  return out;
}

}  // namespace

std::string_view relation_name(PairRelation r) {
  return r == PairRelation::kIntraClass ? "intra_class" : "same_screen";
}

std::optional<PairRelation> relation_from_name(std::string_view name) {
  if (name == "intra_class") return PairRelation::kIntraClass;
  if (name == "same_screen") return PairRelation::kSameScreen;
  return std::nullopt;
}

nlohmann::json PairFile::to_json() const {
  nlohmann::json gt = nlohmann::json::array();
  for (const auto& [a, b] : gt_pairs) gt.push_back({a, b});
  nlohmann::json j = {{"pair_id", id},
                      {"screen_a", screen_a},
                      {"screen_b", screen_b},
                      {"gt_pairs", std::move(gt)},
                      {"relation", std::string(relation_name(relation))}};
  if (labeled_a) j["labeled_a"] = *labeled_a;
  if (labeled_b) j["labeled_b"] = *labeled_b;
  return j;
}

PairFile PairFile::from_json(const nlohmann::json& j, std::string fallback_id) {
  if (!j.is_object()) throw Error(ErrorCode::kMalformedDocument, "pair file must be an object");
  try {
    PairFile p;
    p.id = j.value("pair_id", fallback_id);
    p.screen_a = j.at("screen_a").get<std::string>();
    p.screen_b = j.at("screen_b").get<std::string>();
    for (const auto& gp : j.at("gt_pairs")) {
      if (!gp.is_array() || gp.size() != 2) throw Error(ErrorCode::kMalformedDocument, "gt pair must have 2 ids");
      p.gt_pairs.emplace_back(gp[0].get<std::string>(), gp[1].get<std::string>());
    }
    auto rel = relation_from_name(j.at("relation").get<std::string>());
    if (!rel) throw Error(ErrorCode::kMalformedDocument, "unknown relation");
    p.relation = *rel;
    if (j.contains("labeled_a")) p.labeled_a = string_list(j["labeled_a"], "labeled_a");
    if (j.contains("labeled_b")) p.labeled_b = string_list(j["labeled_b"], "labeled_b");
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedDocument, std::string("pair file: ") + e.what());
  }
}

const Screen& Dataset::screen(const std::string& id) const {
  auto it = screens.find(id);
  if (it == screens.end()) throw Error(ErrorCode::kNotFound, "screen '" + id + "' not in dataset");
  return it->second;
}

Dataset Dataset::load(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::kIo, dir.string() + " is not a directory");
  Dataset d;
  for (const auto& path : json_files(dir / "screens")) {
    Screen s = parse_screen(read_json(path));
    const std::string id = s.id;
    d.screens.emplace(id, std::move(s));
  }
  for (const auto& path : json_files(dir / "pairs")) {
    PairFile p = PairFile::from_json(read_json(path), path.stem().string());
    d.screen(p.screen_a);
    d.screen(p.screen_b);
    d.pairs.push_back(std::move(p));
  }
  return d;
}

void Dataset::save(const fs::path& dir, const nlohmann::json& manifest) const {
  fs::create_directories(dir / "screens");
  fs::create_directories(dir / "pairs");
  for (const auto& [id, s] : screens) save_screen(s, dir / "screens" / (id + ".json"));
  for (const auto& p : pairs) {
    std::ofstream out(dir / "pairs" / (p.id + ".json"));
    if (!out) throw Error(ErrorCode::kIo, "cannot write pair " + p.id);
    out << p.to_json().dump(1) << '\n';
  }
  std::ofstream out(dir / "manifest.json");
  out << manifest.dump(2) << '\n';
}

std::vector<Screen> load_screens(const fs::path& dir) {
  const fs::path screens_dir = fs::is_directory(dir / "screens") ? dir / "screens" : dir;
  std::vector<Screen> out;
  for (const auto& path : json_files(screens_dir)) out.push_back(parse_screen(read_json(path)));
  return out;
}

}  // namespace screencorr
