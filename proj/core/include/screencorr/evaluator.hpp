#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "screencorr/dataset.hpp"
#include "screencorr/matcher.hpp"
#include "screencorr/screen.hpp"

namespace screencorr {

struct EvalRecord {
  std::string pair_id;
  PairRelation relation = PairRelation::kIntraClass;
  std::optional<ScreenCategory> screen_category;
  std::vector<ElementPair> gt_pairs;
  std::set<std::string> labeled_a;
  std::set<std::string> labeled_b;
};

/// Labeled sets come from the pair file when given, otherwise from elements
/// with a role label. gt endpoints are always labeled.
EvalRecord make_eval_record(const PairFile& pair, const Screen& a, const Screen& b);

struct ScoreReport {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  int tp = 0;
  int fp = 0;
  int fn = 0;
  /// False when nothing was predicted; precision is then reported as 0.
  bool precision_defined = true;
  /// Predicted pairs touching an unlabeled element.
  int ignored = 0;
};

/// 2PR/(P+R), or 0 when P+R is 0.
double f1_score(double precision, double recall);

ScoreReport report_from_counts(int tp, int fp, int fn);

ScoreReport score(const CorrespondenceMapping& predicted, const EvalRecord& record);

inline constexpr double kAlignmentIouFloor = 0.5;
inline constexpr double kEasyPairIouFloor = 0.9;

/// Greedy descending-IoU alignment of predicted to ground-truth elements.
/// Returns predicted id -> gt id.
std::map<std::string, std::string> align_to_ground_truth(const std::vector<UIElement>& predicted,
                                                         const std::vector<UIElement>& ground_truth,
                                                         double iou_floor = kAlignmentIouFloor);

/// Rewrites mapping endpoints through the alignments; pairs with an unaligned endpoint are dropped.
CorrespondenceMapping translate_mapping(const CorrespondenceMapping& m, const std::map<std::string, std::string>& map_a,
                                        const std::map<std::string, std::string>& map_b);

struct CategoryRow {
  std::string category;
  std::string relation;
  ScoreReport report;
  int n_pairs = 0;
};

/// Micro-averaged rows: one per screen category present (or all nine when
/// `all_categories`), then "overall".
std::vector<CategoryRow> category_report(const std::vector<std::pair<EvalRecord, ScoreReport>>& results,
                                         bool all_categories = false);

/// Columns: category, relation, P, R, F1, TP, FP, FN, n_pairs.
void write_report_csv(std::ostream& out, const std::vector<CategoryRow>& rows);

/// Equal element counts and a perfect one-to-one matching with every pair at IoU >= floor.
bool is_easy_pair(const Screen& a, const Screen& b, double iou_floor = kEasyPairIouFloor);

}  // namespace screencorr
