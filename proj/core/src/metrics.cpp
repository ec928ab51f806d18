#include "tsr/metrics.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <tuple>

#include "tsr/error.hpp"

namespace tsr {

namespace {

bool overlaps(int a0, int a1, int b0, int b1) { return a0 <= b1 && b0 <= a1; }

void check_disjoint(std::span<const CellBox> cells) {
  std::set<std::pair<int, int>> seen;
  for (const auto& c : cells) {
    if (c.row_start < 0 || c.col_start < 0 || c.row_start > c.row_end || c.col_start > c.col_end)
      throw InvalidInput("cell has a malformed grid extent");
    for (int r = c.row_start; r <= c.row_end; ++r)
      for (int q = c.col_start; q <= c.col_end; ++q)
        if (!seen.emplace(r, q).second) throw InvalidInput("cells overlap on the grid");
  }
}

}  // namespace

std::vector<AdjacencyRelation> adjacency_relations(std::span<const CellBox> cells) {
  check_disjoint(cells);
  std::vector<AdjacencyRelation> rel;
  const int n = static_cast<int>(cells.size());
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const auto& a = cells[static_cast<std::size_t>(i)];
      const auto& b = cells[static_cast<std::size_t>(j)];
      const bool side = a.col_end + 1 == b.col_start || b.col_end + 1 == a.col_start;
      const bool stacked = a.row_end + 1 == b.row_start || b.row_end + 1 == a.row_start;
      if (side && overlaps(a.row_start, a.row_end, b.row_start, b.row_end))
        rel.push_back({i, j, PairDirection::Horizontal});
      else if (stacked && overlaps(a.col_start, a.col_end, b.col_start, b.col_end))
        rel.push_back({i, j, PairDirection::Vertical});
    }
  std::sort(rel.begin(), rel.end());
  return rel;
}

std::vector<int> match_cells(std::span<const CellBox> pred, std::span<const CellBox> gt, double iou_threshold) {
  struct Candidate {
    double iou;
    int p;
    int g;
  };
  std::vector<Candidate> cands;
  for (int p = 0; p < static_cast<int>(pred.size()); ++p)
    for (int g = 0; g < static_cast<int>(gt.size()); ++g) {
      const double v = iou(pred[static_cast<std::size_t>(p)].bbox, gt[static_cast<std::size_t>(g)].bbox);
      if (v >= iou_threshold) cands.push_back({v, p, g});
    }
  std::sort(cands.begin(), cands.end(), [](const Candidate& x, const Candidate& y) {
    return std::tie(y.iou, x.p, x.g) < std::tie(x.iou, y.p, y.g);
  });
  std::vector<int> to_gt(pred.size(), -1);
  std::vector<char> taken(gt.size(), 0);
  for (const auto& c : cands) {
    if (to_gt[static_cast<std::size_t>(c.p)] != -1 || taken[static_cast<std::size_t>(c.g)]) continue;
    to_gt[static_cast<std::size_t>(c.p)] = c.g;
    taken[static_cast<std::size_t>(c.g)] = 1;
  }
  return to_gt;
}

std::vector<bool> empty_cells(std::span<const CellBox> cells, std::span<const Rect> content_boxes) {
  std::vector<bool> out;
  out.reserve(cells.size());
  for (const auto& c : cells)
    out.push_back(std::none_of(content_boxes.begin(), content_boxes.end(),
                               [&](const Rect& r) { return c.bbox.contains(r.center()); }));
  return out;
}

AdjacencyScore score_from_counts(int tp, int pred, int gt) {
  AdjacencyScore s;
  s.true_positives = tp;
  s.pred_relations = pred;
  s.gt_relations = gt;
  s.precision = pred == 0 ? 1.0 : static_cast<double>(tp) / pred;
  s.recall = gt == 0 ? 1.0 : static_cast<double>(tp) / gt;
  s.f1 = s.precision + s.recall > 0 ? 2 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  return s;
}

AdjacencyScore adjacency_prf(std::span<const CellBox> pred, std::span<const CellBox> gt, double iou_threshold,
                             const std::vector<bool>& gt_empty) {
  if (!gt_empty.empty() && gt_empty.size() != gt.size())
    throw InvalidInput("empty-cell mask does not match the ground-truth cells");
  auto is_empty = [&](int g) { return !gt_empty.empty() && g >= 0 && gt_empty[static_cast<std::size_t>(g)]; };

  const auto gt_rel = adjacency_relations(gt);
  const auto pred_rel = adjacency_relations(pred);
  const auto to_gt = match_cells(pred, gt, iou_threshold);

  std::set<AdjacencyRelation> gt_set;
  for (const auto& r : gt_rel)
    if (!is_empty(r.a) && !is_empty(r.b)) gt_set.insert(r);

  int pred_count = 0;
  int tp = 0;
  for (const auto& r : pred_rel) {
    const int ga = to_gt[static_cast<std::size_t>(r.a)];
    const int gb = to_gt[static_cast<std::size_t>(r.b)];
    if (is_empty(ga) || is_empty(gb)) continue;
    ++pred_count;
    if (ga < 0 || gb < 0) continue;
    const AdjacencyRelation mapped{std::min(ga, gb), std::max(ga, gb), r.direction};
    if (gt_set.contains(mapped)) ++tp;
  }
  return score_from_counts(tp, pred_count, static_cast<int>(gt_set.size()));
}

StructureTree::StructureTree() { nodes_.push_back(Node{Kind::Table, 1, 1, {}}); }

int StructureTree::add_child(int parent, Kind kind, int row_span, int col_span) {
  if (parent < 0 || parent >= size()) throw InvalidInput("tree parent out of range");
  if (row_span < 1 || col_span < 1) throw InvalidInput("tree spans must be >= 1");
  nodes_.push_back(Node{kind, row_span, col_span, {}});
  const int id = size() - 1;
  nodes_[static_cast<std::size_t>(parent)].children.push_back(id);
  return id;
}

StructureTree cells_to_tree(std::span<const CellBox> cells) {
  check_disjoint(cells);
  int rows = 0;
  for (const auto& c : cells) rows = std::max(rows, c.row_end + 1);
  std::vector<const CellBox*> sorted;
  for (const auto& c : cells) sorted.push_back(&c);
  std::sort(sorted.begin(), sorted.end(), [](const CellBox* a, const CellBox* b) {
    return std::tie(a->row_start, a->col_start) < std::tie(b->row_start, b->col_start);
  });
  StructureTree t;
  std::vector<int> row_nodes;
  for (int r = 0; r < rows; ++r) row_nodes.push_back(t.add_child(StructureTree::root(), StructureTree::Kind::Row));
  for (const CellBox* c : sorted)
    t.add_child(row_nodes[static_cast<std::size_t>(c->row_start)], StructureTree::Kind::Cell, c->row_span(),
                c->col_span());
  return t;
}

namespace {

// Postorder view used by the Zhang-Shasha recurrences (1-based indices).
struct Postorder {
  std::vector<const StructureTree::Node*> nodes{nullptr};
  std::vector<int> leftmost{0};
  std::vector<int> keyroots;

  explicit Postorder(const StructureTree& t) {
    visit(t, StructureTree::root());
    const int n = static_cast<int>(nodes.size()) - 1;
    std::map<int, int> highest;
    for (int i = 1; i <= n; ++i) highest[leftmost[static_cast<std::size_t>(i)]] = i;
    for (const auto& [l, i] : highest) keyroots.push_back(i);
    std::sort(keyroots.begin(), keyroots.end());
  }

  int visit(const StructureTree& t, int id) {
    int first_leaf = -1;
    for (int c : t.node(id).children) {
      const int l = visit(t, c);
      if (first_leaf == -1) first_leaf = l;
    }
    nodes.push_back(&t.node(id));
    const int me = static_cast<int>(nodes.size()) - 1;
    leftmost.push_back(first_leaf == -1 ? me : first_leaf);
    return leftmost.back();
  }
};

}  // namespace

int tree_edit_distance(const StructureTree& a, const StructureTree& b) {
  const Postorder pa(a);
  const Postorder pb(b);
  const int n = a.size();
  const int m = b.size();
  std::vector<std::vector<int>> td(static_cast<std::size_t>(n + 1), std::vector<int>(static_cast<std::size_t>(m + 1), 0));
  std::vector<std::vector<int>> fd(static_cast<std::size_t>(n + 2), std::vector<int>(static_cast<std::size_t>(m + 2), 0));
  auto l1 = [&](int i) { return pa.leftmost[static_cast<std::size_t>(i)]; };
  auto l2 = [&](int j) { return pb.leftmost[static_cast<std::size_t>(j)]; };

  for (int i : pa.keyroots)
    for (int j : pb.keyroots) {
      const int li = l1(i);
      const int lj = l2(j);
      auto F = [&](int x, int y) -> int& {
        return fd[static_cast<std::size_t>(x - li + 1)][static_cast<std::size_t>(y - lj + 1)];
      };
      F(li - 1, lj - 1) = 0;
      for (int x = li; x <= i; ++x) F(x, lj - 1) = F(x - 1, lj - 1) + 1;
      for (int y = lj; y <= j; ++y) F(li - 1, y) = F(li - 1, y - 1) + 1;
      for (int x = li; x <= i; ++x)
        for (int y = lj; y <= j; ++y) {
          const int del = F(x - 1, y) + 1;
          const int ins = F(x, y - 1) + 1;
          if (l1(x) == li && l2(y) == lj) {
            const int rel = StructureTree::same_label(*pa.nodes[static_cast<std::size_t>(x)],
                                                      *pb.nodes[static_cast<std::size_t>(y)])
                                ? 0
                                : 1;
            F(x, y) = std::min({del, ins, F(x - 1, y - 1) + rel});
            td[static_cast<std::size_t>(x)][static_cast<std::size_t>(y)] = F(x, y);
          } else {
            F(x, y) = std::min({del, ins, F(l1(x) - 1, l2(y) - 1) + td[static_cast<std::size_t>(x)][static_cast<std::size_t>(y)]});
          }
        }
    }
  return td[static_cast<std::size_t>(n)][static_cast<std::size_t>(m)];
}

double teds_struct(const StructureTree& a, const StructureTree& b) {
  const int denom = std::max(a.size(), b.size());
  // Unit-cost distances can exceed the larger tree size when the shapes are
  // incompatible, so the score is floored at 0.
  return std::max(0.0, 1.0 - static_cast<double>(tree_edit_distance(a, b)) / denom);
}

}  // namespace tsr
