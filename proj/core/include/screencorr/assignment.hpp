#pragma once

#include <vector>

#include <Eigen/Dense>

namespace screencorr {

using BoolMatrix = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

struct MatchPair {
  int row = 0;
  int col = 0;
  double score = 0.0;

  friend bool operator==(const MatchPair&, const MatchPair&) = default;
};

/// Kuhn-Munkres with potentials on a square cost matrix. Returns the column
/// assigned to each row and writes the minimal total to `total`.
std::vector<int> solve_min_cost_assignment(const Eigen::MatrixXd& cost, double* total = nullptr);

/// Maximum-weight one-to-one partial matching over `allowed` cells with
/// positive weight. Among optimal matchings the lexicographically smallest
/// (row, col) sequence is returned; pairs are ordered by row.
std::vector<MatchPair> max_weight_matching(const Eigen::MatrixXd& weights, const BoolMatrix& allowed);

/// Repeatedly takes the largest remaining positive allowed cell, ties toward (row, col) order.
std::vector<MatchPair> greedy_matching(const Eigen::MatrixXd& weights, const BoolMatrix& allowed);

double total_score(const std::vector<MatchPair>& pairs);

}  // namespace screencorr
