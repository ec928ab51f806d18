#include "tsr/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "tsr/error.hpp"

namespace tsr {

namespace {

Separator border_line(Axis axis, ImageSize size, double at) {
  const auto pos = canonical_positions(fixed_extent(axis, size), 15);
  return straight_separator(axis, pos, at, at, at);
}

struct DisjointSet {
  explicit DisjointSet(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (b < a) std::swap(a, b);
    parent[b] = a;
    return true;
  }
  std::vector<std::size_t> parent;
};

}  // namespace

std::vector<Point> TableGrid::outline(int r0, int r1, int c0, int c1) const {
  std::vector<Point> poly;
  for (int j = c0; j <= c1 + 1; ++j) poly.push_back(corner(r0, j));
  for (int i = r0 + 1; i <= r1 + 1; ++i) poly.push_back(corner(i, c1 + 1));
  for (int j = c1; j >= c0; --j) poly.push_back(corner(r1 + 1, j));
  for (int i = r1; i > r0; --i) poly.push_back(corner(i, c0));
  return poly;
}

TableGrid build_grid(std::span<const Separator> row_seps, std::span<const Separator> col_seps, ImageSize size) {
  if (size.height < 2 || size.width < 2) throw InvalidInput("build_grid: image too small");
  TableGrid g;
  g.size_ = size;
  g.row_lines_.push_back(border_line(Axis::Row, size, 0.0));
  g.row_lines_.insert(g.row_lines_.end(), row_seps.begin(), row_seps.end());
  g.row_lines_.push_back(border_line(Axis::Row, size, size.height - 1.0));
  g.col_lines_.push_back(border_line(Axis::Column, size, 0.0));
  g.col_lines_.insert(g.col_lines_.end(), col_seps.begin(), col_seps.end());
  g.col_lines_.push_back(border_line(Axis::Column, size, size.width - 1.0));
  for (const auto& s : g.row_lines_)
    if (s.axis != Axis::Row) throw InvalidInput("build_grid: column separator among row separators");
  for (const auto& s : g.col_lines_)
    if (s.axis != Axis::Column) throw InvalidInput("build_grid: row separator among column separators");

  g.rows_ = static_cast<int>(g.row_lines_.size()) - 1;
  g.cols_ = static_cast<int>(g.col_lines_.size()) - 1;
  g.corners_.reserve(static_cast<std::size_t>((g.rows_ + 1) * (g.cols_ + 1)));
  for (const auto& r : g.row_lines_)
    for (const auto& c : g.col_lines_) {
      const Intersection x = intersect_polylines(r.center, c.center, size);
      g.fallbacks_ += x.fallback ? 1 : 0;
      g.corners_.push_back(x.point);
    }

  for (int i = 0; i <= g.rows_; ++i)
    for (int j = 0; j <= g.cols_; ++j) {
      if (i < g.rows_ && !(g.corner(i, j).y < g.corner(i + 1, j).y))
        throw GridInconsistency(i, j,
                                "row separators " + std::to_string(i) + " and " + std::to_string(i + 1) +
                                    " cross at column line " + std::to_string(j));
      if (j < g.cols_ && !(g.corner(i, j).x < g.corner(i, j + 1).x))
        throw GridInconsistency(i, j,
                                "column separators " + std::to_string(j) + " and " + std::to_string(j + 1) +
                                    " cross at row line " + std::to_string(i));
    }

  g.cells_.reserve(static_cast<std::size_t>(g.rows_ * g.cols_));
  for (int r = 0; r < g.rows_; ++r)
    for (int c = 0; c < g.cols_; ++c) {
      CellBox cell{r, r, c, c, g.outline(r, r, c, c), {}};
      update_bbox(cell);
      g.cells_.push_back(std::move(cell));
    }
  return g;
}

std::vector<CellPair> adjacent_pairs(int rows, int cols) {
  std::vector<CellPair> pairs;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c + 1 < cols; ++c) pairs.push_back({{r, c}, {r, c + 1}, PairDirection::Horizontal});
  for (int r = 0; r + 1 < rows; ++r)
    for (int c = 0; c < cols; ++c) pairs.push_back({{r, c}, {r + 1, c}, PairDirection::Vertical});
  return pairs;
}

std::vector<std::uint8_t> pair_labels(int rows, int cols, std::span<const CellBox> cells) {
  std::vector<int> owner(static_cast<std::size_t>(rows * cols), -1);
  for (std::size_t k = 0; k < cells.size(); ++k) {
    const auto& c = cells[k];
    if (c.row_start < 0 || c.col_start < 0 || c.row_end >= rows || c.col_end >= cols)
      throw InvalidInput("cell extent outside the grid");
    for (int r = c.row_start; r <= c.row_end; ++r)
      for (int q = c.col_start; q <= c.col_end; ++q) {
        int& o = owner[static_cast<std::size_t>(r * cols + q)];
        if (o != -1) throw InvalidInput("cells overlap on the grid");
        o = static_cast<int>(k);
      }
  }
  if (std::find(owner.begin(), owner.end(), -1) != owner.end()) throw InvalidInput("cells do not cover the grid");
  std::vector<std::uint8_t> labels;
  for (const auto& p : adjacent_pairs(rows, cols))
    labels.push_back(owner[static_cast<std::size_t>(p.a.row * cols + p.a.col)] ==
                             owner[static_cast<std::size_t>(p.b.row * cols + p.b.col)]
                         ? 1
                         : 0);
  return labels;
}

std::vector<CellBox> resolve_spans(const TableGrid& grid, std::span<const CellPair> merges) {
  const int rows = grid.rows();
  const int cols = grid.cols();
  auto id = [cols](int r, int c) { return static_cast<std::size_t>(r * cols + c); };
  DisjointSet ds(static_cast<std::size_t>(rows * cols));
  for (const auto& m : merges) {
    if (m.a.row < 0 || m.a.row >= rows || m.b.row < 0 || m.b.row >= rows || m.a.col < 0 || m.a.col >= cols ||
        m.b.col < 0 || m.b.col >= cols)
      throw InvalidInput("merge pair outside the grid");
    ds.unite(id(m.a.row, m.a.col), id(m.b.row, m.b.col));
  }

  struct Extent {
    int r0, r1, c0, c1;
  };
  std::vector<Extent> hull(static_cast<std::size_t>(rows * cols));
  bool changed = true;
  while (changed) {
    changed = false;
    for (auto& h : hull) h = {rows, -1, cols, -1};
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) {
        auto& h = hull[ds.find(id(r, c))];
        h = {std::min(h.r0, r), std::max(h.r1, r), std::min(h.c0, c), std::max(h.c1, c)};
      }
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) {
        const std::size_t root = ds.find(id(r, c));
        if (root != id(r, c)) continue;
        const Extent h = hull[root];
        for (int i = h.r0; i <= h.r1; ++i)
          for (int j = h.c0; j <= h.c1; ++j) changed |= ds.unite(root, id(i, j));
      }
  }

  std::vector<CellBox> out;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      if (ds.find(id(r, c)) != id(r, c)) continue;
      const Extent h = hull[id(r, c)];
      CellBox cell{h.r0, h.r1, h.c0, h.c1, grid.outline(h.r0, h.r1, h.c0, h.c1), {}};
      update_bbox(cell);
      out.push_back(std::move(cell));
    }
  std::sort(out.begin(), out.end(), [](const CellBox& a, const CellBox& b) {
    return a.row_start != b.row_start ? a.row_start < b.row_start : a.col_start < b.col_start;
  });
  return out;
}

SpatialFeature spatial_feature_18d(const CellBox& a, const CellBox& b, ImageSize size, PairDirection dir) {
  const double W = size.width;
  const double H = size.height;
  auto fixed = [](Rect r) {
    if (r.width() < 1) r.x1 = r.x0 + 1;
    if (r.height() < 1) r.y1 = r.y0 + 1;
    return r;
  };
  const Rect ra = fixed(a.bbox);
  const Rect rb = fixed(b.bbox);
  const double inter = intersection_area(ra, rb);
  const double uni = ra.area() + rb.area() - inter;
  const Point ca = ra.center();
  const Point cb = rb.center();
  return {ra.x0 / W,
          ra.y0 / H,
          ra.width() / W,
          ra.height() / H,
          rb.x0 / W,
          rb.y0 / H,
          rb.width() / W,
          rb.height() / H,
          (cb.x - ca.x) / W,
          (cb.y - ca.y) / H,
          std::log(rb.width() / ra.width()),
          std::log(rb.height() / ra.height()),
          inter / uni,
          inter / ra.area(),
          inter / rb.area(),
          uni / (W * H),
          dir == PairDirection::Horizontal ? 1.0 : 0.0,
          dir == PairDirection::Vertical ? 1.0 : 0.0};
}

SpatialFeature spatial_feature_18d(const CellBox& a, const CellBox& b, ImageSize size) {
  const bool rows_overlap = a.row_start <= b.row_end && b.row_start <= a.row_end;
  return spatial_feature_18d(a, b, size, rows_overlap ? PairDirection::Horizontal : PairDirection::Vertical);
}

}  // namespace tsr
