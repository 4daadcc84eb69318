#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "screencorr/encoder.hpp"
#include "screencorr/matcher.hpp"
#include "screencorr/store.hpp"

namespace screencorr {

struct IndexResult {
  std::string screen_id;
  std::vector<std::string> element_ids;
};

/// Lowercase base class and full label, e.g. {"icon", "icon:add"}.
std::vector<std::string> element_tags(const UIElement& e);

/// Embeds the screen, replaces its index entries and stores the document.
/// Throws Error(kModelVersionMismatch) when the index holds another model's embeddings.
IndexResult index_screen(Store& store, const Screen& s, const EncoderModel& model, const TextEncoder& encoder);

Eigen::VectorXd mean_embedding(const ElementEmbeddings& e);

struct OverlayParams {
  /// Largest cosine distance to the nearest annotated screen.
  double max_screen_distance = 0.5;
  int min_matches = 2;
  double min_mean_score = 0.5;
  MatchParams match;

  nlohmann::json to_json() const;
};

struct OverlayItem {
  std::string annotation_id;
  std::string instruction;
  std::string target_element;
  BoundingBox bbox;
  std::string source_screen;
  std::string source_element;
  double score = 0.0;
};

struct OverlaySpec {
  std::string target_screen;
  std::string source_screen;
  double screen_distance = 0.0;
  int matches = 0;
  double mean_score = 0.0;
  std::vector<OverlayItem> items;
  /// Empty when the gates passed.
  std::string reason;

  bool transferred() const { return reason.empty(); }
  nlohmann::json to_json() const;
};

/// Finds the nearest annotated screen and carries its annotations onto the
/// target through correspond(). Gates: screen distance, match count and mean
/// match score. Throws Error(kEmptyAnnotationStore).
OverlaySpec transfer_overlay(const Store& store, const Screen& target, const EncoderModel& model,
                             const TextEncoder& encoder, const OverlayParams& params);

struct ReplayResult {
  std::string element_id;
  TraceAction action;
  double score = 0.0;
};

/// Element of `live` matched to the recorded target. Throws Error(kNoMatch).
ReplayResult replay_step(const TraceStep& step, const Screen& live, const EncoderModel& model,
                         const TextEncoder& encoder, const MatchParams& params);

}  // namespace screencorr
