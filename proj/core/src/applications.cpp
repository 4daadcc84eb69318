#include "screencorr/applications.hpp"

#include <cctype>
#include <map>

#include "screencorr/errors.hpp"

namespace screencorr {
namespace {

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace

std::vector<std::string> element_tags(const UIElement& e) {
  std::vector<std::string> tags{lower(std::string(base_class_name(e.category.base())))};
  const std::string label = lower(e.category.label());
  if (label != tags.front()) tags.push_back(label);
  return tags;
}

Eigen::VectorXd mean_embedding(const ElementEmbeddings& e) { return e.vectors.colwise().mean().transpose(); }

IndexResult index_screen(Store& store, const Screen& s, const EncoderModel& model, const TextEncoder& encoder) {
  const std::string version = model.version();
  auto& index = store.index();
  if (!index.model_version().empty() && index.model_version() != version) {
    throw Error(ErrorCode::kModelVersionMismatch,
                "index built with " + index.model_version() + ", model is " + version);
  }
  const ElementEmbeddings emb = embed_screen(model, s, encoder);
  std::vector<ElementIndexEntry> entries;
  IndexResult out{s.id, {}};
  for (std::size_t i = 0; i < s.elements.size(); ++i) {
    const auto& e = s.elements[i];
    entries.push_back({e.id, s.id, emb.vectors.row(static_cast<Eigen::Index>(i)).transpose().cast<float>(),
                       element_tags(e), e.text.value_or(""), e.bounds});
    out.element_ids.push_back(e.id);
  }
  store.put_screen(s);
  index.upsert_screen(s.id, version, std::move(entries), mean_embedding(emb).cast<float>());
  store.flush_index();
  return out;
}

nlohmann::json OverlayParams::to_json() const {
  return {{"max_screen_distance", max_screen_distance},
          {"min_matches", min_matches},
          {"min_mean_score", min_mean_score},
          {"match", match.to_json()}};
}

nlohmann::json OverlaySpec::to_json() const {
  nlohmann::json items_j = nlohmann::json::array();
  for (const auto& it : items) {
    items_j.push_back({{"annotation_id", it.annotation_id},
                       {"instruction", it.instruction},
                       {"element_id", it.target_element},
                       {"bbox", {it.bbox.x1, it.bbox.y1, it.bbox.x2, it.bbox.y2}},
                       {"score", it.score},
                       {"source_screen", it.source_screen},
                       {"source_element", it.source_element}});
  }
  nlohmann::json j = {{"target_screen", target_screen},
                      {"source_screen", source_screen},
                      {"screen_distance", screen_distance},
                      {"matches", matches},
                      {"mean_score", mean_score},
                      {"items", std::move(items_j)}};
  if (!reason.empty()) j["reason"] = reason;
  return j;
}

OverlaySpec transfer_overlay(const Store& store, const Screen& target, const EncoderModel& model,
                             const TextEncoder& encoder, const OverlayParams& params) {
  std::map<std::string, std::vector<const Annotation*>> by_screen;
  for (const auto& a : store.annotations()) by_screen[a.screen_id].push_back(&a);
  if (by_screen.empty()) throw Error(ErrorCode::kEmptyAnnotationStore, "no annotations stored");

  OverlaySpec spec;
  spec.target_screen = target.id;
  const ElementEmbeddings target_emb = embed_screen(model, target, encoder);
  const Eigen::VectorXd query = mean_embedding(target_emb);

  // Nearest annotated exemplar by screen embedding, first stored wins ties.
  const Screen* best = nullptr;
  double best_sim = -2.0;
  for (const auto& sv : store.index().screens()) {
    if (!by_screen.contains(sv.screen_id)) continue;
    const Screen* s = store.screen(sv.screen_id);
    if (!s) continue;
    const double sim = cosine(sv.embedding, query);
    if (sim > best_sim) {
      best_sim = sim;
      best = s;
    }
  }
  if (!best) {
    spec.reason = "no similar exemplar";
    return spec;
  }
  spec.source_screen = best->id;
  spec.screen_distance = 1.0 - best_sim;
  if (spec.screen_distance > params.max_screen_distance) {
    spec.reason = "no similar exemplar";
    return spec;
  }

  const CorrespondenceMapping m =
      match_embeddings(embed_screen(model, *best, encoder), target_emb, params.match, model.version());
  spec.matches = static_cast<int>(m.pairs.size());
  double sum = 0.0;
  for (const auto& p : m.pairs) sum += p.score;
  spec.mean_score = m.pairs.empty() ? 0.0 : sum / static_cast<double>(m.pairs.size());
  if (spec.matches < params.min_matches) {
    spec.reason = "too few matched elements";
    return spec;
  }
  if (spec.mean_score < params.min_mean_score) {
    spec.reason = "mean match score below threshold";
    return spec;
  }

  std::map<std::string, const CorrespondencePair*> by_source;
  for (const auto& p : m.pairs) by_source.emplace(p.source, &p);
  for (const Annotation* a : by_screen[best->id]) {
    auto it = by_source.find(a->element_id);
    if (it == by_source.end()) continue;
    const auto idx = target.find(it->second->target);
    if (!idx) continue;
    spec.items.push_back({a->id, a->instruction, it->second->target, target.elements[*idx].bounds, best->id,
                          a->element_id, it->second->score});
  }
  return spec;
}

ReplayResult replay_step(const TraceStep& step, const Screen& live, const EncoderModel& model,
                         const TextEncoder& encoder, const MatchParams& params) {
  const CorrespondenceMapping m = correspond(step.screen, live, model, encoder, params);
  for (const auto& p : m.pairs) {
    if (p.source == step.target) return {p.target, step.action, p.score};
  }
  throw Error(ErrorCode::kNoMatch, "recorded target '" + step.target + "' has no match on screen " + live.id);
}

}  // namespace screencorr
