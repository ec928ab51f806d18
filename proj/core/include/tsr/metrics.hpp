#pragma once

#include <compare>
#include <span>
#include <vector>

#include "tsr/geometry.hpp"
#include "tsr/grid.hpp"

namespace tsr {

/// Direct neighbor relation between two cells of one table, stored with a < b.
struct AdjacencyRelation {
  int a = 0;
  int b = 0;
  PairDirection direction = PairDirection::Horizontal;
  friend auto operator<=>(const AdjacencyRelation&, const AdjacencyRelation&) = default;
};

/// Cells sharing a grid edge: adjacent columns with overlapping row ranges
/// (horizontal) or adjacent rows with overlapping column ranges (vertical).
/// Sorted. Throws InvalidInput if two cells claim the same grid slot.
std::vector<AdjacencyRelation> adjacency_relations(std::span<const CellBox> cells);

/// One-to-one pred -> gt correspondence by descending bbox IoU, IoU >= threshold.
/// Entry i is the gt index of pred cell i or -1.
std::vector<int> match_cells(std::span<const CellBox> pred, std::span<const CellBox> gt, double iou_threshold);

/// Cells containing no content-box center.
std::vector<bool> empty_cells(std::span<const CellBox> cells, std::span<const Rect> content_boxes);

struct AdjacencyScore {
  int true_positives = 0;
  int pred_relations = 0;
  int gt_relations = 0;
  double precision = 1.0;
  double recall = 1.0;
  double f1 = 1.0;
};

/// P/R/F1 from counts, with 0/0 taken as 1.
AdjacencyScore score_from_counts(int tp, int pred, int gt);

/// `gt_empty`, when non-empty, drops every relation touching an empty gt cell
/// (and pred relations whose endpoint maps onto one).
AdjacencyScore adjacency_prf(std::span<const CellBox> pred, std::span<const CellBox> gt, double iou_threshold = 0.6,
                             const std::vector<bool>& gt_empty = {});

/// Rooted ordered tree with table / row / cell(row_span, col_span) labels.
class StructureTree {
 public:
  enum class Kind { Table, Row, Cell };
  struct Node {
    Kind kind = Kind::Table;
    int row_span = 1;
    int col_span = 1;
    std::vector<int> children;
    friend bool operator==(const Node&, const Node&) = default;
  };

  /// A bare table root.
  StructureTree();

  int add_child(int parent, Kind kind, int row_span = 1, int col_span = 1);
  const Node& node(int i) const { return nodes_[static_cast<std::size_t>(i)]; }
  int size() const noexcept { return static_cast<int>(nodes_.size()); }
  static constexpr int root() noexcept { return 0; }

  static bool same_label(const Node& a, const Node& b) noexcept {
    return a.kind == b.kind && (a.kind != Kind::Cell || (a.row_span == b.row_span && a.col_span == b.col_span));
  }

 private:
  std::vector<Node> nodes_;
};

/// One row node per grid row; each cell hangs off its starting row, ordered by
/// col_start. Throws InvalidInput on overlapping or malformed extents.
StructureTree cells_to_tree(std::span<const CellBox> cells);

/// Ordered tree edit distance with unit insert/delete/relabel costs.
int tree_edit_distance(const StructureTree& a, const StructureTree& b);

/// max(0, 1 - distance / max(|a|, |b|)).
double teds_struct(const StructureTree& a, const StructureTree& b);

}  // namespace tsr
