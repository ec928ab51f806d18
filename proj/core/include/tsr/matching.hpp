#pragma once

#include <span>
#include <utility>
#include <vector>

#include "tsr/geometry.hpp"

namespace tsr {

/// Stand-in for an infinite cost inside the assignment solver.
inline constexpr double kInfCost = 1e9;

struct Assignment {
  /// (query index, ground-truth index), ascending by query.
  std::vector<std::pair<int, int>> pairs;
  std::vector<double> costs;
  std::vector<int> unmatched_queries;
  std::vector<int> unmatched_gts;

  /// Ground-truth index for query q, or -1.
  int gt_for(int q) const noexcept;
};

/// Minimum-cost assignment on a row-major rows x cols matrix. Every row is
/// assigned when rows <= cols, every column otherwise. Returns the column of
/// each row or -1.
std::vector<int> solve_assignment(std::span<const double> cost, int rows, int cols);

enum class MatchStrategy {
  /// Finite cost only when the reference point lies inside the separator band.
  PriorEnhanced,
  /// Plain distance cost between every query and every separator.
  Unconstrained,
};

/// Cost of query at `ref_index` against `gt` evaluated on the prior line at
/// `ref_position`.
double match_cost(double ref_index, const Separator& gt, double ref_position, MatchStrategy strategy);

/// Solves the assignment on match_cost and strips pairs whose cost is kInfCost.
Assignment match_references(std::span<const double> ref_indices, std::span<const Separator> gts,
                            double ref_position, MatchStrategy strategy = MatchStrategy::PriorEnhanced);

inline Assignment prior_enhanced_match(std::span<const double> ref_indices, std::span<const Separator> gts,
                                       double ref_position) {
  return match_references(ref_indices, gts, ref_position, MatchStrategy::PriorEnhanced);
}

}  // namespace tsr
