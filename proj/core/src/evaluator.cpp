#include "screencorr/evaluator.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <tuple>

namespace screencorr {

EvalRecord make_eval_record(const PairFile& pair, const Screen& a, const Screen& b) {
  EvalRecord r;
  r.pair_id = pair.id;
  r.relation = pair.relation;
  r.screen_category = a.category ? a.category : b.category;
  r.gt_pairs = pair.gt_pairs;
  auto labeled = [](const std::optional<std::vector<std::string>>& explicit_ids, const Screen& s) {
    std::set<std::string> out;
    if (explicit_ids) {
      out.insert(explicit_ids->begin(), explicit_ids->end());
    } else {
      for (const auto& e : s.elements) {
        if (e.role_label) out.insert(e.id);
      }
    }
    return out;
  };
  r.labeled_a = labeled(pair.labeled_a, a);
  r.labeled_b = labeled(pair.labeled_b, b);
  for (const auto& [ea, eb] : r.gt_pairs) {
    r.labeled_a.insert(ea);
    r.labeled_b.insert(eb);
  }
  return r;
}

double f1_score(double precision, double recall) {
  const double s = precision + recall;
  return s > 0.0 ? 2.0 * precision * recall / s : 0.0;
}

ScoreReport report_from_counts(int tp, int fp, int fn) {
  ScoreReport r;
  r.tp = tp;
  r.fp = fp;
  r.fn = fn;
  r.precision_defined = tp + fp > 0;
  r.precision = r.precision_defined ? static_cast<double>(tp) / (tp + fp) : 0.0;
  r.recall = tp + fn > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
  r.f1 = f1_score(r.precision, r.recall);
  return r;
}

ScoreReport score(const CorrespondenceMapping& predicted, const EvalRecord& record) {
  const std::set<ElementPair> gt(record.gt_pairs.begin(), record.gt_pairs.end());
  std::set<ElementPair> hits;
  int fp = 0;
  int ignored = 0;
  for (const auto& p : predicted.pairs) {
    ElementPair key{p.source, p.target};
    if (gt.contains(key)) {
      hits.insert(std::move(key));
    } else if (record.labeled_a.contains(p.source) && record.labeled_b.contains(p.target)) {
      ++fp;
    } else {
      ++ignored;
    }
  }
  const int tp = static_cast<int>(hits.size());
  ScoreReport r = report_from_counts(tp, fp, static_cast<int>(gt.size()) - tp);
  r.ignored = ignored;
  return r;
}

std::map<std::string, std::string> align_to_ground_truth(const std::vector<UIElement>& predicted,
                                                         const std::vector<UIElement>& ground_truth,
                                                         double iou_floor) {
  std::vector<std::tuple<double, std::size_t, std::size_t>> cand;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    for (std::size_t j = 0; j < ground_truth.size(); ++j) {
      const double v = iou(predicted[i].bounds, ground_truth[j].bounds);
      if (v >= iou_floor) cand.emplace_back(v, i, j);
    }
  }
  std::sort(cand.begin(), cand.end(), [](const auto& x, const auto& y) {
    if (std::get<0>(x) != std::get<0>(y)) return std::get<0>(x) > std::get<0>(y);
    return std::tie(std::get<1>(x), std::get<2>(x)) < std::tie(std::get<1>(y), std::get<2>(y));
  });
  std::vector<bool> used_p(predicted.size()), used_g(ground_truth.size());
  std::map<std::string, std::string> out;
  for (const auto& [v, i, j] : cand) {
    if (used_p[i] || used_g[j]) continue;
    used_p[i] = used_g[j] = true;
    out.emplace(predicted[i].id, ground_truth[j].id);
  }
  return out;
}

CorrespondenceMapping translate_mapping(const CorrespondenceMapping& m, const std::map<std::string, std::string>& map_a,
                                        const std::map<std::string, std::string>& map_b) {
  CorrespondenceMapping out = m;
  out.pairs.clear();
  for (const auto& p : m.pairs) {
    auto ia = map_a.find(p.source);
    auto ib = map_b.find(p.target);
    if (ia == map_a.end() || ib == map_b.end()) continue;
    out.pairs.push_back({ia->second, ib->second, p.score});
  }
  return out;
}

std::vector<CategoryRow> category_report(const std::vector<std::pair<EvalRecord, ScoreReport>>& results,
                                         bool all_categories) {
  struct Acc {
    int tp = 0, fp = 0, fn = 0, n = 0;
    std::set<PairRelation> relations;
  };
  std::map<std::string, Acc> by_cat;
  Acc overall;
  auto add = [](Acc& acc, const EvalRecord& rec, const ScoreReport& r) {
    acc.tp += r.tp;
    acc.fp += r.fp;
    acc.fn += r.fn;
    acc.n += 1;
    acc.relations.insert(rec.relation);
  };
  for (const auto& [rec, r] : results) {
    const std::string name = rec.screen_category ? std::string(screen_category_name(*rec.screen_category)) : "unknown";
    add(by_cat[name], rec, r);
    add(overall, rec, r);
  }
  auto relation_label = [](const Acc& acc) -> std::string {
    if (acc.relations.size() == 1) return std::string(relation_name(*acc.relations.begin()));
    return acc.relations.empty() ? "none" : "mixed";
  };
  auto row = [&](const std::string& name, const Acc& acc) {
    return CategoryRow{name, relation_label(acc), report_from_counts(acc.tp, acc.fp, acc.fn), acc.n};
  };

  std::vector<CategoryRow> rows;
  for (ScreenCategory c : all_screen_categories()) {
    const std::string name(screen_category_name(c));
    auto it = by_cat.find(name);
    if (it != by_cat.end()) {
      rows.push_back(row(name, it->second));
      by_cat.erase(it);
    } else if (all_categories) {
      rows.push_back(row(name, Acc{}));
    }
  }
  for (const auto& [name, acc] : by_cat) rows.push_back(row(name, acc));
  rows.push_back(row("overall", overall));
  return rows;
}

void write_report_csv(std::ostream& out, const std::vector<CategoryRow>& rows) {
  out << "category,relation,P,R,F1,TP,FP,FN,n_pairs\n";
  char buf[64];
  for (const auto& r : rows) {
    out << r.category << ',' << r.relation;
    for (double v : {r.report.precision, r.report.recall, r.report.f1}) {
      std::snprintf(buf, sizeof buf, ",%.6f", v);
      out << buf;
    }
    out << ',' << r.report.tp << ',' << r.report.fp << ',' << r.report.fn << ',' << r.n_pairs << '\n';
  }
}

bool is_easy_pair(const Screen& a, const Screen& b, double iou_floor) {
  const std::size_t n = a.elements.size();
  if (n != b.elements.size()) return false;
  std::vector<std::vector<std::size_t>> adj(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (iou(a.elements[i].bounds, b.elements[j].bounds) >= iou_floor) adj[i].push_back(j);
    }
  }
  // Kuhn's augmenting paths.
  std::vector<int> owner(n, -1);
  std::vector<bool> seen;
  auto augment = [&](auto&& self, std::size_t i) -> bool {
    for (std::size_t j : adj[i]) {
      if (seen[j]) continue;
      seen[j] = true;
      if (owner[j] < 0 || self(self, static_cast<std::size_t>(owner[j]))) {
        owner[j] = static_cast<int>(i);
        return true;
      }
    }
    return false;
  };
  for (std::size_t i = 0; i < n; ++i) {
    seen.assign(n, false);
    if (!augment(augment, i)) return false;
  }
  return true;
}

}  // namespace screencorr
