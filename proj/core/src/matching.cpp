#include "tsr/matching.hpp"

#include <cmath>
#include <limits>

#include "tsr/error.hpp"

namespace tsr {

int Assignment::gt_for(int q) const noexcept {
  for (const auto& [query, gt] : pairs)
    if (query == q) return gt;
  return -1;
}

namespace {

// Shortest augmenting path with potentials; requires n <= m.
std::vector<int> solve_wide(std::span<const double> cost, int n, int m) {
  const double inf = std::numeric_limits<double>::infinity();
  auto a = [&](int i, int j) { return cost[static_cast<std::size_t>((i - 1) * m + (j - 1))]; };
  std::vector<double> u(static_cast<std::size_t>(n + 1)), v(static_cast<std::size_t>(m + 1));
  std::vector<int> p(static_cast<std::size_t>(m + 1)), way(static_cast<std::size_t>(m + 1));
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(m + 1), inf);
    std::vector<char> used(static_cast<std::size_t>(m + 1), 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const int i0 = p[static_cast<std::size_t>(j0)];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= m; ++j) {
        const auto uj = static_cast<std::size_t>(j);
        if (used[uj]) continue;
        const double cur = a(i0, j) - u[static_cast<std::size_t>(i0)] - v[uj];
        if (cur < minv[uj]) {
          minv[uj] = cur;
          way[uj] = j0;
        }
        if (minv[uj] < delta) {
          delta = minv[uj];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        const auto uj = static_cast<std::size_t>(j);
        if (used[uj]) {
          u[static_cast<std::size_t>(p[uj])] += delta;
          v[uj] -= delta;
        } else {
          minv[uj] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> row_to_col(static_cast<std::size_t>(n), -1);
  for (int j = 1; j <= m; ++j)
    if (p[static_cast<std::size_t>(j)] != 0) row_to_col[static_cast<std::size_t>(p[static_cast<std::size_t>(j)] - 1)] = j - 1;
  return row_to_col;
}

}  // namespace

std::vector<int> solve_assignment(std::span<const double> cost, int rows, int cols) {
  if (rows < 0 || cols < 0 || cost.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols))
    throw InvalidInput("solve_assignment: cost matrix size mismatch");
  if (rows == 0 || cols == 0) return std::vector<int>(static_cast<std::size_t>(rows), -1);
  for (double c : cost)
    if (!std::isfinite(c)) throw InvalidInput("solve_assignment: costs must be finite");
  if (rows <= cols) return solve_wide(cost, rows, cols);

  std::vector<double> t(cost.size());
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j)
      t[static_cast<std::size_t>(j * rows + i)] = cost[static_cast<std::size_t>(i * cols + j)];
  const auto col_to_row = solve_wide(t, cols, rows);
  std::vector<int> row_to_col(static_cast<std::size_t>(rows), -1);
  for (int j = 0; j < cols; ++j)
    if (col_to_row[static_cast<std::size_t>(j)] >= 0) row_to_col[static_cast<std::size_t>(col_to_row[static_cast<std::size_t>(j)])] = j;
  return row_to_col;
}

double match_cost(double ref_index, const Separator& gt, double ref_position, MatchStrategy strategy) {
  const double center = gt.center_at(ref_position);
  const double dist = std::abs(ref_index - center);
  if (strategy == MatchStrategy::Unconstrained) return dist;
  const bool inside = ref_index > gt.top_at(ref_position) && ref_index < gt.bottom_at(ref_position);
  return inside ? dist : kInfCost;
}

Assignment match_references(std::span<const double> ref_indices, std::span<const Separator> gts,
                            double ref_position, MatchStrategy strategy) {
  const int nq = static_cast<int>(ref_indices.size());
  const int ng = static_cast<int>(gts.size());
  std::vector<double> cost(static_cast<std::size_t>(nq) * static_cast<std::size_t>(ng));
  for (int q = 0; q < nq; ++q)
    for (int g = 0; g < ng; ++g)
      cost[static_cast<std::size_t>(q * ng + g)] =
          match_cost(ref_indices[static_cast<std::size_t>(q)], gts[static_cast<std::size_t>(g)], ref_position, strategy);

  const auto row_to_col = solve_assignment(cost, nq, ng);
  Assignment out;
  std::vector<char> gt_used(static_cast<std::size_t>(ng), 0);
  for (int q = 0; q < nq; ++q) {
    const int g = row_to_col[static_cast<std::size_t>(q)];
    const double c = g >= 0 ? cost[static_cast<std::size_t>(q * ng + g)] : kInfCost;
    if (g >= 0 && c < kInfCost) {
      out.pairs.emplace_back(q, g);
      out.costs.push_back(c);
      gt_used[static_cast<std::size_t>(g)] = 1;
    } else {
      out.unmatched_queries.push_back(q);
    }
  }
  for (int g = 0; g < ng; ++g)
    if (!gt_used[static_cast<std::size_t>(g)]) out.unmatched_gts.push_back(g);
  return out;
}

}  // namespace tsr
