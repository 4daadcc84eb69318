#include "screencorr/matcher.hpp"

#include <algorithm>
#include <numeric>

#include "screencorr/errors.hpp"

namespace screencorr {
namespace {

// Indices of the k largest entries, ties toward the lower index.
std::vector<int> top_k(const Eigen::Ref<const Eigen::VectorXd>& v, int k) {
  std::vector<int> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  const auto keep = static_cast<std::size_t>(std::min<Eigen::Index>(k, v.size()));
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(keep), idx.end(), [&](int a, int b) {
    if (v[a] != v[b]) return v[a] > v[b];
    return a < b;
  });
  idx.resize(keep);
  return idx;
}

}  // namespace

void MatchParams::validate() const {
  if (k < 1) throw Error(ErrorCode::kInvalidConfig, "k must be at least 1");
  if (!(c >= -1.0 && c <= 1.0)) throw Error(ErrorCode::kInvalidConfig, "c must lie in [-1, 1]");
}

nlohmann::json MatchParams::to_json() const {
  return {{"k", k}, {"c", c}, {"assignment", assignment == AssignmentMethod::kOptimal ? "optimal" : "greedy"}};
}

MatchParams MatchParams::from_json(const nlohmann::json& j) {
  MatchParams p;
  if (!j.is_object()) return p;
  p.k = j.value("k", p.k);
  p.c = j.value("c", p.c);
  const std::string a = j.value("assignment", std::string("optimal"));
  if (a == "greedy") {
    p.assignment = AssignmentMethod::kGreedy;
  } else if (a != "optimal") {
    throw Error(ErrorCode::kInvalidConfig, "assignment must be \"optimal\" or \"greedy\"");
  }
  p.validate();
  return p;
}

nlohmann::json CorrespondenceMapping::to_json() const {
  nlohmann::json pj = nlohmann::json::array();
  for (const auto& p : pairs) pj.push_back({{"a", p.source}, {"b", p.target}, {"score", p.score}});
  return {{"source", source_screen},
          {"target", target_screen},
          {"params", params.to_json()},
          {"model_version", model_version},
          {"pairs", std::move(pj)}};
}

CorrespondenceMapping CorrespondenceMapping::from_json(const nlohmann::json& j) {
  CorrespondenceMapping m;
  m.source_screen = j.at("source").get<std::string>();
  m.target_screen = j.at("target").get<std::string>();
  if (j.contains("params")) m.params = MatchParams::from_json(j["params"]);
  m.model_version = j.value("model_version", "");
  for (const auto& p : j.at("pairs")) {
    m.pairs.push_back({p.at("a").get<std::string>(), p.at("b").get<std::string>(), p.at("score").get<double>()});
  }
  return m;
}

double cosine_similarity(const Eigen::Ref<const Eigen::VectorXd>& u, const Eigen::Ref<const Eigen::VectorXd>& v) {
  const double nu = u.norm();
  const double nv = v.norm();
  if (nu == 0.0 || nv == 0.0) return 0.0;
  return std::clamp(u.dot(v) / (nu * nv), -1.0, 1.0);
}

SimilarityMatrix similarity_matrix(const ElementEmbeddings& a, const ElementEmbeddings& b) {
  if (a.size() == 0 || b.size() == 0) throw Error(ErrorCode::kDimensionMismatch, "empty embedding set");
  if (a.vectors.cols() != b.vectors.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, "embedding widths differ: " + std::to_string(a.vectors.cols()) +
                                                   " vs " + std::to_string(b.vectors.cols()));
  }
  SimilarityMatrix s;
  s.source_screen = a.screen_id;
  s.target_screen = b.screen_id;
  s.row_ids = a.element_ids;
  s.col_ids = b.element_ids;
  s.values.resize(a.size(), b.size());
  for (int i = 0; i < a.size(); ++i) {
    for (int j = 0; j < b.size(); ++j) {
      s.values(i, j) = cosine_similarity(a.vectors.row(i).transpose(), b.vectors.row(j).transpose());
    }
  }
  s.candidate = BoolMatrix::Constant(a.size(), b.size(), true);
  return s;
}

SimilarityMatrix prune_topk(SimilarityMatrix s, int k) {
  if (k < 1) throw Error(ErrorCode::kInvalidConfig, "k must be at least 1");
  BoolMatrix keep = BoolMatrix::Constant(s.rows(), s.cols(), false);
  for (int i = 0; i < s.rows(); ++i) {
    for (int j : top_k(s.values.row(i).transpose(), k)) keep(i, j) = true;
  }
  for (int j = 0; j < s.cols(); ++j) {
    for (int i : top_k(s.values.col(j), k)) keep(i, j) = true;
  }
  s.candidate = s.candidate && keep;
  return s;
}

std::vector<MatchPair> assign(const SimilarityMatrix& s) { return max_weight_matching(s.values, s.candidate); }

std::vector<MatchPair> greedy_assign(const SimilarityMatrix& s) { return greedy_matching(s.values, s.candidate); }

CorrespondenceMapping filter_matches(const std::vector<MatchPair>& pairs, const SimilarityMatrix& s, double c) {
  CorrespondenceMapping m;
  m.source_screen = s.source_screen;
  m.target_screen = s.target_screen;
  m.params.c = c;
  for (const auto& p : pairs) {
    if (p.score < c) continue;
    m.pairs.push_back({s.row_ids[p.row], s.col_ids[p.col], p.score});
  }
  return m;
}

CorrespondenceMapping match_embeddings(const ElementEmbeddings& a, const ElementEmbeddings& b, const MatchParams& p,
                                       const std::string& model_version) {
  p.validate();
  const SimilarityMatrix s = prune_topk(similarity_matrix(a, b), p.k);
  const auto pairs = p.assignment == AssignmentMethod::kOptimal ? assign(s) : greedy_assign(s);
  CorrespondenceMapping m = filter_matches(pairs, s, p.c);
  m.params = p;
  m.model_version = model_version;
  return m;
}

CorrespondenceMapping correspond(const Screen& a, const Screen& b, const EncoderModel& model,
                                 const TextEncoder& encoder, const MatchParams& p) {
  return match_embeddings(embed_screen(model, a, encoder), embed_screen(model, b, encoder), p, model.version());
}

ElementEmbeddings category_embeddings(const Screen& s) {
  if (s.elements.empty()) throw Error(ErrorCode::kEmptyScreen, "screen '" + s.id + "' has no elements");
  ElementEmbeddings e;
  e.screen_id = s.id;
  e.vectors = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(s.elements.size()), kCategoryDim);
  for (std::size_t i = 0; i < s.elements.size(); ++i) {
    e.element_ids.push_back(s.elements[i].id);
    e.vectors.row(static_cast<Eigen::Index>(i)) = encode_category(s.elements[i].category).transpose();
  }
  return e;
}

CorrespondenceMapping heuristic_correspond(const Screen& a, const Screen& b, const MatchParams& p) {
  return match_embeddings(category_embeddings(a), category_embeddings(b), p, kHeuristicModelVersion);
}

}  // namespace screencorr
