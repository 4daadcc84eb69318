#include "screencorr/element_index.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "screencorr/errors.hpp"

namespace screencorr {
namespace {

constexpr char kMagic[8] = {'S', 'C', 'R', 'I', 'D', 'X', '0', '1'};
constexpr int kIndexFormatVersion = 1;

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw Error(ErrorCode::kIo, "truncated index file");
  return std::uint32_t{b[0]} | std::uint32_t{b[1]} << 8 | std::uint32_t{b[2]} << 16 | std::uint32_t{b[3]} << 24;
}

void put_string(std::ostream& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& in) {
  std::string s(get_u32(in), '\0');
  if (!in.read(s.data(), static_cast<std::streamsize>(s.size()))) throw Error(ErrorCode::kIo, "truncated index file");
  return s;
}

void put_floats(std::ostream& out, const Eigen::VectorXf& v) {
  for (float f : v) put_u32(out, std::bit_cast<std::uint32_t>(f));
}

Eigen::VectorXf get_floats(std::istream& in, int n) {
  Eigen::VectorXf v(n);
  for (int i = 0; i < n; ++i) v[i] = std::bit_cast<float>(get_u32(in));
  return v;
}

double norm(const Eigen::VectorXd& q) {
  double s = 0.0;
  for (double x : q) s += x * x;
  return std::sqrt(s);
}

std::vector<SearchHit> rank(std::vector<SearchHit> hits, int k) {
  const auto keep = std::min(hits.size(), static_cast<std::size_t>(std::max(k, 0)));
  std::stable_sort(hits.begin(), hits.end(), [](const SearchHit& a, const SearchHit& b) { return a.score > b.score; });
  hits.resize(keep);
  return hits;
}

}  // namespace

double cosine(const Eigen::VectorXf& stored, const Eigen::VectorXd& query) {
  double dot = 0.0;
  double ns = 0.0;
  for (Eigen::Index i = 0; i < stored.size(); ++i) {
    const double s = stored[i];
    dot += s * query[i];
    ns += s * s;
  }
  const double nq = norm(query);
  if (ns == 0.0 || nq == 0.0) return 0.0;
  return std::clamp(dot / (std::sqrt(ns) * nq), -1.0, 1.0);
}

bool SearchFilters::accepts(const ElementIndexEntry& e) const {
  if (exclude_element && e.element_id == *exclude_element) return false;
  for (const auto& t : tags) {
    const std::string lt = lower(t);
    if (std::find(e.tags.begin(), e.tags.end(), lt) == e.tags.end()) return false;
  }
  if (!text.empty() && lower(e.text).find(lower(text)) == std::string::npos) return false;
  return true;
}

void ElementIndex::upsert_screen(const std::string& screen_id, const std::string& model_version,
                                 std::vector<ElementIndexEntry> entries, Eigen::VectorXf screen_vector) {
  if (model_version_.empty()) {
    model_version_ = model_version;
  } else if (model_version != model_version_) {
    throw Error(ErrorCode::kModelVersionMismatch,
                "index built with " + model_version_ + ", got embeddings from " + model_version);
  }
  const int dim = static_cast<int>(screen_vector.size());
  if (dim_ == 0) dim_ = dim;
  for (const auto& e : entries) {
    if (e.embedding.size() != dim_ || dim != dim_) {
      throw Error(ErrorCode::kDimensionMismatch, "embedding width differs from index width " + std::to_string(dim_));
    }
  }
  std::erase_if(entries_, [&](const ElementIndexEntry& e) { return e.screen_id == screen_id; });
  std::erase_if(screens_, [&](const ScreenVector& s) { return s.screen_id == screen_id; });
  for (auto& e : entries) {
    e.screen_id = screen_id;
    entries_.push_back(std::move(e));
  }
  screens_.push_back({screen_id, std::move(screen_vector)});
}

bool ElementIndex::contains_screen(const std::string& screen_id) const {
  return std::any_of(screens_.begin(), screens_.end(), [&](const auto& s) { return s.screen_id == screen_id; });
}

std::optional<std::size_t> ElementIndex::find_element(const std::string& element_id,
                                                      const std::string& screen_id) const {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].element_id == element_id && (screen_id.empty() || entries_[i].screen_id == screen_id)) return i;
  }
  return std::nullopt;
}

std::vector<SearchHit> ElementIndex::nn_search(const Eigen::VectorXd& query, int k, const SearchFilters& filters) const {
  if (entries_.empty()) throw Error(ErrorCode::kEmptyIndex, "index is empty");
  if (query.size() != dim_) {
    throw Error(ErrorCode::kDimensionMismatch,
                "query has " + std::to_string(query.size()) + " dims, index has " + std::to_string(dim_));
  }
  std::vector<SearchHit> hits;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (filters.accepts(entries_[i])) hits.push_back({i, cosine(entries_[i].embedding, query)});
  }
  return rank(std::move(hits), k);
}

std::vector<std::size_t> ElementIndex::filter(const SearchFilters& filters, std::size_t limit) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < entries_.size() && out.size() < limit; ++i) {
    if (filters.accepts(entries_[i])) out.push_back(i);
  }
  return out;
}

std::vector<SearchHit> ElementIndex::screen_search(const Eigen::VectorXd& query, int k) const {
  if (screens_.empty()) throw Error(ErrorCode::kEmptyIndex, "index is empty");
  std::vector<SearchHit> hits;
  for (std::size_t i = 0; i < screens_.size(); ++i) hits.push_back({i, cosine(screens_[i].embedding, query)});
  return rank(std::move(hits), k);
}

void ElementIndex::save(const std::filesystem::path& path) const {
  const auto tmp = std::filesystem::path(path).concat(".tmp");
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + tmp.string());
    out.write(kMagic, sizeof kMagic);
    const nlohmann::json header = {{"format_version", kIndexFormatVersion},
                                   {"model_version", model_version_},
                                   {"dim", dim_},
                                   {"entries", entries_.size()},
                                   {"screens", screens_.size()}};
    put_string(out, header.dump());
    for (const auto& e : entries_) {
      const nlohmann::json meta = {{"element_id", e.element_id},
                                   {"screen_id", e.screen_id},
                                   {"tags", e.tags},
                                   {"text", e.text},
                                   {"bounds", {e.bounds.x1, e.bounds.y1, e.bounds.x2, e.bounds.y2}}};
      put_string(out, meta.dump());
      put_floats(out, e.embedding);
    }
    for (const auto& s : screens_) {
      put_string(out, s.screen_id);
      put_floats(out, s.embedding);
    }
    if (!out) throw Error(ErrorCode::kIo, "failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

ElementIndex ElementIndex::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) {
    throw Error(ErrorCode::kIo, path.string() + " is not an element index");
  }
  try {
    const auto header = nlohmann::json::parse(get_string(in));
    if (header.at("format_version").get<int>() != kIndexFormatVersion) {
      throw Error(ErrorCode::kIo, "unsupported index format");
    }
    ElementIndex idx(header.at("model_version").get<std::string>(), header.at("dim").get<int>());
    const auto n_entries = header.at("entries").get<std::size_t>();
    const auto n_screens = header.at("screens").get<std::size_t>();
    for (std::size_t i = 0; i < n_entries; ++i) {
      const auto meta = nlohmann::json::parse(get_string(in));
      ElementIndexEntry e;
      e.element_id = meta.at("element_id").get<std::string>();
      e.screen_id = meta.at("screen_id").get<std::string>();
      e.tags = meta.at("tags").get<std::vector<std::string>>();
      e.text = meta.at("text").get<std::string>();
      const auto b = meta.at("bounds").get<std::vector<double>>();
      e.bounds = {b.at(0), b.at(1), b.at(2), b.at(3)};
      e.embedding = get_floats(in, idx.dim_);
      idx.entries_.push_back(std::move(e));
    }
    for (std::size_t i = 0; i < n_screens; ++i) {
      ScreenVector s;
      s.screen_id = get_string(in);
      s.embedding = get_floats(in, idx.dim_);
      idx.screens_.push_back(std::move(s));
    }
    return idx;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kIo, std::string("corrupt index header: ") + e.what());
  }
}

}  // namespace screencorr
