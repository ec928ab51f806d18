#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace tsr {

/// Orientation of a separator. A row separator runs left to right and is
/// parameterized by x; a column separator runs top to bottom and is
/// parameterized by y.
enum class Axis { Row, Column };

constexpr Axis other(Axis a) noexcept { return a == Axis::Row ? Axis::Column : Axis::Row; }
const char* to_string(Axis a) noexcept;

struct Point {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point&, const Point&) = default;
};

/// Axis-aligned rectangle, [x0, x1] x [y0, y1].
struct Rect {
  double x0 = 0.0;
  double y0 = 0.0;
  double x1 = 0.0;
  double y1 = 0.0;

  double width() const noexcept { return x1 - x0; }
  double height() const noexcept { return y1 - y0; }
  double area() const noexcept { return width() > 0 && height() > 0 ? width() * height() : 0.0; }
  Point center() const noexcept { return {(x0 + x1) / 2, (y0 + y1) / 2}; }
  bool contains(Point p) const noexcept { return p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1; }
  friend bool operator==(const Rect&, const Rect&) = default;
};

Rect bounding_rect(std::span<const Point> points);
double intersection_area(const Rect& a, const Rect& b) noexcept;
double iou(const Rect& a, const Rect& b) noexcept;

struct ImageSize {
  int height = 0;
  int width = 0;
  friend bool operator==(const ImageSize&, const ImageSize&) = default;
};

/// Extent along the axis a separator is parameterized by (width for rows).
constexpr int fixed_extent(Axis a, ImageSize s) noexcept { return a == Axis::Row ? s.width : s.height; }
/// Extent along the axis a separator's values live on (height for rows).
constexpr int free_extent(Axis a, ImageSize s) noexcept { return a == Axis::Row ? s.height : s.width; }

/// K sample positions floor(extent / (K + 1)) * i, i = 1..K.
std::vector<double> canonical_positions(int extent, int k);
/// The prior row/column on which reference points are detected: floor(extent / 4).
int reference_position(int extent) noexcept;

/// Piecewise-linear curve sampled at strictly increasing positions along the
/// fixed axis. For a row polyline positions are x and values are y.
struct Polyline {
  Axis axis = Axis::Row;
  std::vector<double> positions;
  std::vector<double> values;

  std::size_t size() const noexcept { return positions.size(); }
  bool empty() const noexcept { return positions.empty(); }
  /// Sample i as an image-space point.
  Point point(std::size_t i) const;
  /// Throws InvalidInput unless sizes agree and positions strictly increase.
  void validate() const;
};

/// Linear interpolation between samples; outside the sampled range the end
/// segment's slope is extended. Throws InvalidInput on an empty polyline.
double polyline_eval(const Polyline& p, double t);

/// Straight polyline at constant `value` sampled at `positions`.
Polyline constant_polyline(Axis axis, std::span<const double> positions, double value);

/// Re-sample `p` at new positions via polyline_eval.
Polyline resample(const Polyline& p, std::span<const double> positions);

struct Separator {
  Axis axis = Axis::Row;
  Polyline top;
  Polyline center;
  Polyline bottom;

  double center_at(double t) const { return polyline_eval(center, t); }
  double top_at(double t) const { return polyline_eval(top, t); }
  double bottom_at(double t) const { return polyline_eval(bottom, t); }
  double thickness_at(double t) const { return bottom_at(t) - top_at(t); }
  /// Throws InvalidInput unless all three polylines share positions and
  /// top <= center <= bottom at every sample.
  void validate() const;
};

/// Separator with constant top/center/bottom values.
Separator straight_separator(Axis axis, std::span<const double> positions, double top, double center,
                             double bottom);

/// A table cell in grid coordinates (inclusive ranges) with its image-space outline.
struct CellBox {
  int row_start = 0;
  int row_end = 0;
  int col_start = 0;
  int col_end = 0;
  std::vector<Point> polygon;
  Rect bbox;

  int row_span() const noexcept { return row_end - row_start + 1; }
  int col_span() const noexcept { return col_end - col_start + 1; }
  bool same_extent(const CellBox& o) const noexcept {
    return row_start == o.row_start && row_end == o.row_end && col_start == o.col_start &&
           col_end == o.col_end;
  }
};

/// Sets `bbox` from `polygon`.
void update_bbox(CellBox& cell);

struct TableAnnotation {
  ImageSize image_size;
  std::vector<CellBox> cells;
  std::vector<Separator> row_separators;
  std::vector<Separator> col_separators;
  std::vector<Rect> content_boxes;

  int grid_rows() const noexcept { return static_cast<int>(row_separators.size()) + 1; }
  int grid_cols() const noexcept { return static_cast<int>(col_separators.size()) + 1; }
  const std::vector<Separator>& separators(Axis a) const noexcept {
    return a == Axis::Row ? row_separators : col_separators;
  }
  std::vector<Separator>& separators(Axis a) noexcept { return a == Axis::Row ? row_separators : col_separators; }
};

/// Sort separators by center value at the axis' reference position.
void sort_separators(std::vector<Separator>& seps, ImageSize size);

struct Intersection {
  Point point;
  /// No crossing found; `point` is the midpoint of the closest approach.
  bool fallback = false;
};

/// Crossing of a row line and a column line, both extended one pixel past the
/// image borders. Among several crossings the one with the smallest x (then y)
/// wins.
Intersection intersect_polylines(const Polyline& row_line, const Polyline& col_line, ImageSize size);

namespace detail {
/// Crossing of two vertex chains; same tie-break and fallback as intersect_polylines.
Intersection intersect_chains(std::span<const Point> a, std::span<const Point> b);
/// Vertex chain of a polyline over [lo, hi] along its fixed axis.
std::vector<Point> extended_chain(const Polyline& p, double lo, double hi);
}  // namespace detail

}  // namespace tsr
