#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "screencorr/assignment.hpp"
#include "screencorr/encoder.hpp"
#include "screencorr/screen.hpp"

namespace screencorr {

enum class AssignmentMethod { kOptimal, kGreedy };

struct MatchParams {
  int k = 5;
  double c = 0.4;
  AssignmentMethod assignment = AssignmentMethod::kOptimal;

  void validate() const;
  nlohmann::json to_json() const;
  static MatchParams from_json(const nlohmann::json& j);
};

/// Cosine similarities between source rows and target columns. `candidate`
/// marks cells that survived pruning.
struct SimilarityMatrix {
  std::string source_screen;
  std::string target_screen;
  std::vector<std::string> row_ids;
  std::vector<std::string> col_ids;
  Eigen::MatrixXd values;
  BoolMatrix candidate;

  int rows() const { return static_cast<int>(values.rows()); }
  int cols() const { return static_cast<int>(values.cols()); }
};

struct CorrespondencePair {
  std::string source;
  std::string target;
  double score = 0.0;
};

struct CorrespondenceMapping {
  std::string source_screen;
  std::string target_screen;
  MatchParams params;
  std::string model_version;
  std::vector<CorrespondencePair> pairs;

  /// {source, target, params, model_version, pairs:[{a, b, score}]}
  nlohmann::json to_json() const;
  static CorrespondenceMapping from_json(const nlohmann::json& j);
};

inline constexpr const char* kHeuristicModelVersion = "heuristic";

double cosine_similarity(const Eigen::Ref<const Eigen::VectorXd>& u, const Eigen::Ref<const Eigen::VectorXd>& v);

/// Throws Error(kDimensionMismatch) when embedding widths differ or either side is empty.
SimilarityMatrix similarity_matrix(const ElementEmbeddings& a, const ElementEmbeddings& b);

/// Keeps (i, j) when j is among row i's k best or i among column j's k best;
/// ties go to the lower index.
SimilarityMatrix prune_topk(SimilarityMatrix s, int k);

std::vector<MatchPair> assign(const SimilarityMatrix& s);
std::vector<MatchPair> greedy_assign(const SimilarityMatrix& s);

/// Drops pairs scoring strictly below c.
CorrespondenceMapping filter_matches(const std::vector<MatchPair>& pairs, const SimilarityMatrix& s, double c);

/// Similarity, pruning, assignment and filtering over precomputed embeddings.
CorrespondenceMapping match_embeddings(const ElementEmbeddings& a, const ElementEmbeddings& b, const MatchParams& p,
                                       const std::string& model_version);

CorrespondenceMapping correspond(const Screen& a, const Screen& b, const EncoderModel& model,
                                 const TextEncoder& encoder, const MatchParams& p);

/// Schema-matching baseline: one-hot category vectors through the same pipeline.
CorrespondenceMapping heuristic_correspond(const Screen& a, const Screen& b, const MatchParams& p);

ElementEmbeddings category_embeddings(const Screen& s);

}  // namespace screencorr
