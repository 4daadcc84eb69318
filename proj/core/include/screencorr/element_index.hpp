#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "screencorr/geometry.hpp"

namespace screencorr {

struct ElementIndexEntry {
  std::string element_id;
  std::string screen_id;
  /// Stored as float32, the on-disk precision, so reopened indexes rank identically.
  Eigen::VectorXf embedding;
  /// Lowercase labels such as "icon", "icon:add", "toggle:on".
  std::vector<std::string> tags;
  std::string text;
  BoundingBox bounds;
};

struct ScreenVector {
  std::string screen_id;
  Eigen::VectorXf embedding;
};

struct SearchFilters {
  /// Every listed tag must be present (case-insensitive).
  std::vector<std::string> tags;
  /// Case-insensitive substring of the element text.
  std::string text;
  std::optional<std::string> exclude_element;

  bool accepts(const ElementIndexEntry& e) const;
};

struct SearchHit {
  std::size_t entry = 0;
  double score = 0.0;
};

/// Exact-scan cosine index over element embeddings.
class ElementIndex {
 public:
  ElementIndex() = default;
  ElementIndex(std::string model_version, int dim) : model_version_(std::move(model_version)), dim_(dim) {}

  const std::string& model_version() const { return model_version_; }
  int dim() const { return dim_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const std::vector<ElementIndexEntry>& entries() const { return entries_; }
  const std::vector<ScreenVector>& screens() const { return screens_; }

  /// Replaces every entry of the screen. The first insert fixes the model
  /// version and dimension; later mismatches throw Error(kModelVersionMismatch)
  /// or Error(kDimensionMismatch).
  void upsert_screen(const std::string& screen_id, const std::string& model_version,
                     std::vector<ElementIndexEntry> entries, Eigen::VectorXf screen_vector);

  bool contains_screen(const std::string& screen_id) const;
  std::optional<std::size_t> find_element(const std::string& element_id,
                                          const std::string& screen_id = {}) const;

  /// Exact top-k by cosine; filters apply before ranking; ties keep insertion
  /// order. Throws Error(kEmptyIndex) and Error(kDimensionMismatch).
  std::vector<SearchHit> nn_search(const Eigen::VectorXd& query, int k, const SearchFilters& filters = {}) const;

  /// Filter-only listing in insertion order.
  std::vector<std::size_t> filter(const SearchFilters& filters, std::size_t limit) const;

  /// Top-k screens by cosine of their mean element embedding.
  std::vector<SearchHit> screen_search(const Eigen::VectorXd& query, int k) const;

  void save(const std::filesystem::path& path) const;
  static ElementIndex load(const std::filesystem::path& path);

 private:
  std::string model_version_;
  int dim_ = 0;
  std::vector<ElementIndexEntry> entries_;
  std::vector<ScreenVector> screens_;
};

/// Cosine in double precision; 0 when either vector is zero.
double cosine(const Eigen::VectorXf& stored, const Eigen::VectorXd& query);

}  // namespace screencorr
