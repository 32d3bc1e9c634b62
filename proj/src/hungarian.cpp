#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "psg4d/error.hpp"
#include "psg4d/matching.hpp"

namespace psg4d {

namespace {

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

struct Solution {
  std::vector<std::size_t> row_to_col;
  std::vector<double> u;
  std::vector<double> v;
};

// Shortest augmenting path Kuhn-Munkres on a square matrix. Keeps dual
// potentials with reduced cost a(i,j) - u(i) - v(j) >= 0.
Solution solve_square(const Eigen::MatrixXd& a) {
  const auto n = static_cast<std::size_t>(a.rows());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = a(static_cast<Eigen::Index>(i0 - 1), static_cast<Eigen::Index>(j - 1)) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
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
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  Solution s;
  s.row_to_col.assign(n, kNone);
  for (std::size_t j = 1; j <= n; ++j) s.row_to_col[p[j] - 1] = j - 1;
  s.u.assign(u.begin() + 1, u.end());
  s.v.assign(v.begin() + 1, v.end());
  return s;
}

}  // namespace

Assignment hungarian(const Eigen::MatrixXd& cost) {
  const auto rows = static_cast<std::size_t>(cost.rows());
  const auto cols = static_cast<std::size_t>(cost.cols());
  if (rows == 0 || cols == 0) throw Error(ErrorCode::EmptyMatrix, "cost matrix has no entries");
  if (!cost.allFinite()) throw Error(ErrorCode::InvalidArgument, "cost matrix has non-finite entries");

  // Pad with zero-cost dummies; dummy indices sort after real ones, which
  // makes the row-by-row greedy below produce the lexicographic minimum.
  const std::size_t n = std::max(rows, cols);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  a.topLeftCorner(cost.rows(), cost.cols()) = cost;

  Solution sol = solve_square(a);
  const double tol = 1e-9 * (1.0 + a.cwiseAbs().maxCoeff());
  // With optimal duals, an assignment is optimal iff it uses only tight edges.
  auto tight = [&](std::size_t i, std::size_t j) {
    return a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) - sol.u[i] - sol.v[j] <= tol;
  };

  std::vector<std::size_t>& row_to_col = sol.row_to_col;
  std::vector<std::size_t> col_to_row(n, kNone);
  for (std::size_t i = 0; i < n; ++i) col_to_row[row_to_col[i]] = i;
  std::vector<char> fixed_col(n, 0);

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (fixed_col[j] || !tight(i, j)) continue;
      if (row_to_col[i] == j) break;
      // Try forcing (i, j): the row holding j must reach i's current column.
      const std::size_t holder = col_to_row[j];
      const std::size_t freed = row_to_col[i];
      std::vector<std::size_t> via(n, kNone);  // row -> predecessor row in BFS
      std::vector<std::size_t> via_col(n, kNone);
      std::vector<char> seen(n, 0);
      std::deque<std::size_t> queue{holder};
      seen[holder] = 1;
      std::size_t end_row = kNone;
      while (!queue.empty() && end_row == kNone) {
        const std::size_t r = queue.front();
        queue.pop_front();
        for (std::size_t c = 0; c < n; ++c) {
          if (fixed_col[c] || c == j || !tight(r, c)) continue;
          if (c == freed) {
            end_row = r;
            via_col[r] = c;
            break;
          }
          const std::size_t next = col_to_row[c];
          if (next == i || seen[next]) continue;
          seen[next] = 1;
          via[next] = r;
          via_col[next] = c;  // next gives up c to r
          queue.push_back(next);
        }
      }
      if (end_row == kNone) continue;
      // Shift columns along the path: end_row takes `freed`, each predecessor
      // takes the column its successor released.
      std::size_t r = end_row;
      std::size_t take = freed;
      while (true) {
        const std::size_t released = row_to_col[r];
        row_to_col[r] = take;
        col_to_row[take] = r;
        if (r == holder) break;
        take = released;
        r = via[r];
      }
      row_to_col[i] = j;
      col_to_row[j] = i;
      break;
    }
    fixed_col[row_to_col[i]] = 1;
  }

  Assignment out;
  for (std::size_t i = 0; i < rows; ++i) {
    const std::size_t j = row_to_col[i];
    if (j < cols) {
      out.pairs.emplace_back(i, j);
      out.cost += cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
  }
  return out;
}

}  // namespace psg4d
