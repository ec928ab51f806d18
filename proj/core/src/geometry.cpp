#include "tsr/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "tsr/error.hpp"

namespace tsr {

const char* to_string(Axis a) noexcept { return a == Axis::Row ? "row" : "column"; }

Rect bounding_rect(std::span<const Point> points) {
  if (points.empty()) return {};
  Rect r{points[0].x, points[0].y, points[0].x, points[0].y};
  for (const Point& p : points.subspan(1)) {
    r.x0 = std::min(r.x0, p.x);
    r.y0 = std::min(r.y0, p.y);
    r.x1 = std::max(r.x1, p.x);
    r.y1 = std::max(r.y1, p.y);
  }
  return r;
}

double intersection_area(const Rect& a, const Rect& b) noexcept {
  const double w = std::min(a.x1, b.x1) - std::max(a.x0, b.x0);
  const double h = std::min(a.y1, b.y1) - std::max(a.y0, b.y0);
  return w > 0 && h > 0 ? w * h : 0.0;
}

double iou(const Rect& a, const Rect& b) noexcept {
  const double inter = intersection_area(a, b);
  const double uni = a.area() + b.area() - inter;
  return uni > 0 ? inter / uni : 0.0;
}

std::vector<double> canonical_positions(int extent, int k) {
  if (k <= 0) throw InvalidInput("canonical_positions: k must be positive");
  const double step = std::floor(static_cast<double>(extent) / (k + 1));
  std::vector<double> out(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) out[static_cast<std::size_t>(i)] = step * (i + 1);
  return out;
}

int reference_position(int extent) noexcept { return extent / 4; }

Point Polyline::point(std::size_t i) const {
  return axis == Axis::Row ? Point{positions[i], values[i]} : Point{values[i], positions[i]};
}

void Polyline::validate() const {
  if (positions.empty()) throw InvalidInput("polyline has no samples");
  if (positions.size() != values.size())
    throw InvalidInput("polyline positions/values length mismatch");
  for (std::size_t i = 1; i < positions.size(); ++i)
    if (!(positions[i] > positions[i - 1]))
      throw InvalidInput("polyline sample positions must be strictly increasing");
  for (double v : values)
    if (!std::isfinite(v)) throw InvalidInput("polyline value is not finite");
}

double polyline_eval(const Polyline& p, double t) {
  const auto& xs = p.positions;
  const auto& ys = p.values;
  if (xs.empty() || xs.size() != ys.size()) throw InvalidInput("polyline_eval: empty or malformed polyline");
  if (xs.size() == 1) return ys[0];
  std::size_t seg;
  if (t <= xs.front()) {
    seg = 0;
  } else if (t >= xs.back()) {
    seg = xs.size() - 2;
  } else {
    seg = static_cast<std::size_t>(std::upper_bound(xs.begin(), xs.end(), t) - xs.begin()) - 1;
  }
  const double x0 = xs[seg], x1 = xs[seg + 1];
  const double y0 = ys[seg], y1 = ys[seg + 1];
  if (t == x0) return y0;
  if (t == x1) return y1;
  return y0 + (y1 - y0) * (t - x0) / (x1 - x0);
}

Polyline constant_polyline(Axis axis, std::span<const double> positions, double value) {
  Polyline p;
  p.axis = axis;
  p.positions.assign(positions.begin(), positions.end());
  p.values.assign(positions.size(), value);
  return p;
}

Polyline resample(const Polyline& p, std::span<const double> positions) {
  Polyline out;
  out.axis = p.axis;
  out.positions.assign(positions.begin(), positions.end());
  out.values.reserve(positions.size());
  for (double t : positions) out.values.push_back(polyline_eval(p, t));
  return out;
}

void Separator::validate() const {
  top.validate();
  center.validate();
  bottom.validate();
  if (top.axis != axis || center.axis != axis || bottom.axis != axis)
    throw InvalidInput("separator polylines disagree on axis");
  if (top.positions != center.positions || center.positions != bottom.positions)
    throw InvalidInput("separator polylines must share sample positions");
  for (std::size_t i = 0; i < center.size(); ++i)
    if (top.values[i] > center.values[i] || center.values[i] > bottom.values[i])
      throw InvalidInput("separator violates top <= center <= bottom at sample " + std::to_string(i));
}

Separator straight_separator(Axis axis, std::span<const double> positions, double top, double center,
                             double bottom) {
  return Separator{axis, constant_polyline(axis, positions, top), constant_polyline(axis, positions, center),
                   constant_polyline(axis, positions, bottom)};
}

void update_bbox(CellBox& cell) { cell.bbox = bounding_rect(cell.polygon); }

void sort_separators(std::vector<Separator>& seps, ImageSize size) {
  if (seps.empty()) return;
  const double ref = reference_position(fixed_extent(seps.front().axis, size));
  std::stable_sort(seps.begin(), seps.end(),
                   [ref](const Separator& a, const Separator& b) { return a.center_at(ref) < b.center_at(ref); });
}

namespace detail {

std::vector<Point> extended_chain(const Polyline& p, double lo, double hi) {
  if (p.empty()) throw InvalidInput("degenerate polyline: no samples");
  std::vector<double> ts{lo};
  for (double t : p.positions)
    if (t > lo && t < hi) ts.push_back(t);
  ts.push_back(hi);
  std::vector<Point> chain;
  chain.reserve(ts.size());
  for (double t : ts) {
    const double v = polyline_eval(p, t);
    chain.push_back(p.axis == Axis::Row ? Point{t, v} : Point{v, t});
  }
  return chain;
}

namespace {

double cross(Point a, Point b) { return a.x * b.y - a.y * b.x; }
Point sub(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
double dot(Point a, Point b) { return a.x * b.x + a.y * b.y; }

bool earlier(Point a, Point b) { return a.x < b.x || (a.x == b.x && a.y < b.y); }

std::optional<Point> segment_crossing(Point p0, Point p1, Point q0, Point q1) {
  const Point r = sub(p1, p0);
  const Point s = sub(q1, q0);
  const double denom = cross(r, s);
  const Point qp = sub(q0, p0);
  const double scale = std::max({std::abs(r.x), std::abs(r.y), std::abs(s.x), std::abs(s.y), 1.0});
  const double eps = 1e-12;
  if (std::abs(denom) > eps * scale * scale) {
    const double t = cross(qp, s) / denom;
    const double u = cross(qp, r) / denom;
    if (t < -eps || t > 1 + eps || u < -eps || u > 1 + eps) return std::nullopt;
    return Point{p0.x + t * r.x, p0.y + t * r.y};
  }
  if (std::abs(cross(qp, r)) > eps * scale * scale) return std::nullopt;  // parallel, not collinear
  const double rr = dot(r, r);
  if (rr == 0) return std::nullopt;
  double t0 = dot(qp, r) / rr;
  double t1 = dot(sub(q1, p0), r) / rr;
  if (t0 > t1) std::swap(t0, t1);
  const double lo = std::max(0.0, t0);
  const double hi = std::min(1.0, t1);
  if (lo > hi) return std::nullopt;
  const Point a{p0.x + lo * r.x, p0.y + lo * r.y};
  const Point b{p0.x + hi * r.x, p0.y + hi * r.y};
  return earlier(a, b) ? a : b;
}

Point closest_on_segment(Point p, Point a, Point b) {
  const Point ab = sub(b, a);
  const double len2 = dot(ab, ab);
  double t = len2 > 0 ? dot(sub(p, a), ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return {a.x + t * ab.x, a.y + t * ab.y};
}

double dist2(Point a, Point b) { return dot(sub(a, b), sub(a, b)); }

}  // namespace

Intersection intersect_chains(std::span<const Point> a, std::span<const Point> b) {
  if (a.size() < 2 || b.size() < 2) throw InvalidInput("degenerate polyline: fewer than two chain vertices");
  std::optional<Point> best;
  for (std::size_t i = 0; i + 1 < a.size(); ++i)
    for (std::size_t j = 0; j + 1 < b.size(); ++j)
      if (auto p = segment_crossing(a[i], a[i + 1], b[j], b[j + 1]))
        if (!best || earlier(*p, *best)) best = p;
  if (best) return {*best, false};

  double best_d = std::numeric_limits<double>::infinity();
  Point mid;
  auto consider = [&](Point p, Point q) {
    const double d = dist2(p, q);
    if (d < best_d || (d == best_d && earlier(Point{(p.x + q.x) / 2, (p.y + q.y) / 2}, mid))) {
      best_d = d;
      mid = {(p.x + q.x) / 2, (p.y + q.y) / 2};
    }
  };
  for (std::size_t i = 0; i + 1 < a.size(); ++i)
    for (std::size_t j = 0; j + 1 < b.size(); ++j) {
      consider(a[i], closest_on_segment(a[i], b[j], b[j + 1]));
      consider(a[i + 1], closest_on_segment(a[i + 1], b[j], b[j + 1]));
      consider(closest_on_segment(b[j], a[i], a[i + 1]), b[j]);
      consider(closest_on_segment(b[j + 1], a[i], a[i + 1]), b[j + 1]);
    }
  return {mid, true};
}

}  // namespace detail

Intersection intersect_polylines(const Polyline& row_line, const Polyline& col_line, ImageSize size) {
  if (row_line.axis != Axis::Row || col_line.axis != Axis::Column)
    throw InvalidInput("intersect_polylines expects a row line and a column line");
  const auto a = detail::extended_chain(row_line, -1.0, static_cast<double>(size.width));
  const auto b = detail::extended_chain(col_line, -1.0, static_cast<double>(size.height));
  return detail::intersect_chains(a, b);
}

}  // namespace tsr
