#include "screencorr/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

namespace screencorr {
namespace {

// Best total over rows/cols subsets, with unmatched allowed (weight 0).
double best_total(const Eigen::MatrixXd& w, const std::vector<int>& rows, const std::vector<int>& cols) {
  if (rows.empty() || cols.empty()) return 0.0;
  const auto n = static_cast<Eigen::Index>(std::max(rows.size(), cols.size()));
  Eigen::MatrixXd cost = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) cost(i, j) = -w(rows[i], cols[j]);
  }
  double total = 0.0;
  solve_min_cost_assignment(cost, &total);
  return -total;
}

}  // namespace

std::vector<int> solve_min_cost_assignment(const Eigen::MatrixXd& cost, double* total) {
  const int n = static_cast<int>(cost.rows());
  const double inf = std::numeric_limits<double>::infinity();
  // 1-based potentials; p[j] is the row matched to column j.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> assignment(n, -1);
  for (int j = 1; j <= n; ++j) {
    if (p[j] != 0) assignment[p[j] - 1] = j - 1;
  }
  if (total) {
    double t = 0.0;
    for (int i = 0; i < n; ++i) t += cost(i, assignment[i]);
    *total = t;
  }
  return assignment;
}

std::vector<MatchPair> max_weight_matching(const Eigen::MatrixXd& weights, const BoolMatrix& allowed) {
  const int m = static_cast<int>(weights.rows());
  const int n = static_cast<int>(weights.cols());
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(m, n);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      if (allowed(i, j) && weights(i, j) > 0.0) w(i, j) = weights(i, j);
    }
  }

  std::vector<int> rows(m), cols(n);
  for (int i = 0; i < m; ++i) rows[i] = i;
  for (int j = 0; j < n; ++j) cols[j] = j;
  double remaining = best_total(w, rows, cols);
  const double tol = 1e-9 * std::max(1.0, std::abs(remaining));

  // Fix rows in order, each to the smallest column that keeps the optimum reachable.
  std::vector<MatchPair> out;
  for (int i = 0; i < m && !cols.empty(); ++i) {
    std::vector<int> later(rows.begin() + i + 1, rows.end());
    for (std::size_t c = 0; c < cols.size(); ++c) {
      const int j = cols[c];
      if (w(i, j) <= 0.0) continue;
      std::vector<int> rest = cols;
      rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(c));
      const double sub = best_total(w, later, rest);
      if (w(i, j) + sub >= remaining - tol) {
        out.push_back({i, j, weights(i, j)});
        remaining = sub;
        cols = std::move(rest);
        break;
      }
    }
  }
  return out;
}

std::vector<MatchPair> greedy_matching(const Eigen::MatrixXd& weights, const BoolMatrix& allowed) {
  std::vector<std::tuple<double, int, int>> cells;
  for (int i = 0; i < weights.rows(); ++i) {
    for (int j = 0; j < weights.cols(); ++j) {
      if (allowed(i, j) && weights(i, j) > 0.0) cells.emplace_back(-weights(i, j), i, j);
    }
  }
  std::sort(cells.begin(), cells.end());
  std::vector<char> row_used(weights.rows(), 0), col_used(weights.cols(), 0);
  std::vector<MatchPair> out;
  for (const auto& [neg, i, j] : cells) {
    if (row_used[i] || col_used[j]) continue;
    row_used[i] = col_used[j] = 1;
    out.push_back({i, j, -neg});
  }
  std::sort(out.begin(), out.end(), [](const MatchPair& a, const MatchPair& b) { return a.row < b.row; });
  return out;
}

double total_score(const std::vector<MatchPair>& pairs) {
  double t = 0.0;
  for (const auto& p : pairs) t += p.score;
  return t;
}

}  // namespace screencorr
