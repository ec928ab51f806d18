#include "tsr/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <string>

#include "json.hpp"
#include "tsr/annotation_io.hpp"
#include "tsr/error.hpp"
#include "tsr/grid.hpp"
#include "tsr/separators.hpp"

namespace tsr {

namespace {

constexpr int kSamplesPerLine = 15;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

using Rng = std::mt19937_64;

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
bool chance(Rng& rng, double p) { return p > 0 && uniform(rng, 0.0, 1.0) < p; }

// Row (or column) layout along one image axis before warping.
struct AxisLayout {
  std::vector<double> lines;       // n + 1 grid lines, first 0 and last extent - 1
  std::vector<double> content_lo;  // per row, start of its content band
  std::vector<double> content_hi;
  std::vector<double> band_lo;  // per interior separator
  std::vector<double> band_hi;
};

AxisLayout make_layout(Rng& rng, int n, int extent) {
  std::vector<double> weights(static_cast<std::size_t>(n));
  for (auto& w : weights) w = uniform(rng, 0.7, 1.3);
  double total = 0;
  for (double w : weights) total += w;
  std::vector<double> bounds{0.0};
  for (double w : weights) bounds.push_back(bounds.back() + w / total * extent);
  bounds.back() = extent;

  AxisLayout l;
  for (int r = 0; r < n; ++r) {
    const double lo = bounds[static_cast<std::size_t>(r)];
    const double hi = bounds[static_cast<std::size_t>(r + 1)];
    const double pitch = hi - lo;
    l.content_lo.push_back(lo + pitch * uniform(rng, 0.05, 0.2));
    l.content_hi.push_back(hi - pitch * uniform(rng, 0.05, 0.2));
  }
  l.lines.push_back(0.0);
  for (int k = 1; k < n; ++k) {
    const auto uk = static_cast<std::size_t>(k);
    const double gap_lo = l.content_hi[uk - 1];
    const double gap_hi = l.content_lo[uk];
    const double pitch = std::min(bounds[uk] - bounds[uk - 1], bounds[uk + 1] - bounds[uk]);
    const double center = (gap_lo + gap_hi) / 2;
    const double thickness = std::clamp(gap_hi - gap_lo, 1.0, 0.25 * pitch);
    l.lines.push_back(center);
    l.band_lo.push_back(center - thickness / 2);
    l.band_hi.push_back(center + thickness / 2);
  }
  l.lines.push_back(extent - 1.0);
  return l;
}

// owner[r * cols + c] = index of the annotated cell covering (r, c).
std::vector<int> place_cells(Rng& rng, int rows, int cols, double span_prob,
                             std::vector<std::array<int, 4>>& extents) {
  std::vector<int> owner(static_cast<std::size_t>(rows * cols), -1);
  auto at = [&](int r, int c) -> int& { return owner[static_cast<std::size_t>(r * cols + c)]; };

  auto separators_visible = [&]() {
    for (int k = 1; k < rows; ++k) {
      bool seen = false;
      for (int c = 0; c < cols && !seen; ++c) seen = at(k - 1, c) != at(k, c) || at(k, c) == -1;
      if (!seen) return false;
    }
    for (int k = 1; k < cols; ++k) {
      bool seen = false;
      for (int r = 0; r < rows && !seen; ++r) seen = at(r, k - 1) != at(r, k) || at(r, k) == -1;
      if (!seen) return false;
    }
    return true;
  };

  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      if (at(r, c) != -1) continue;
      const int id = static_cast<int>(extents.size());
      bool placed = false;
      if (chance(rng, span_prob)) {
        std::vector<std::pair<int, int>> options;
        for (int rs = 1; rs <= std::min(3, rows - r); ++rs)
          for (int cs = 1; cs <= std::min(3, cols - c); ++cs) {
            if ((rs == 1 && cs == 1) || (rs == rows && cs == cols)) continue;
            bool free = true;
            for (int i = r; i < r + rs && free; ++i)
              for (int j = c; j < c + cs && free; ++j) free = at(i, j) == -1;
            if (free) options.emplace_back(rs, cs);
          }
        std::shuffle(options.begin(), options.end(), rng);
        for (const auto& [rs, cs] : options) {
          for (int i = r; i < r + rs; ++i)
            for (int j = c; j < c + cs; ++j) at(i, j) = id;
          if (separators_visible()) {
            extents.push_back({r, r + rs - 1, c, c + cs - 1});
            placed = true;
            break;
          }
          for (int i = r; i < r + rs; ++i)
            for (int j = c; j < c + cs; ++j) at(i, j) = -1;
        }
      }
      if (!placed) {
        at(r, c) = id;
        extents.push_back({r, r, c, c});
      }
    }
  return owner;
}

void draw_words(Rng& rng, Image& img, Rect region, double line_height, std::vector<Rect>& content) {
  const double width = region.width();
  if (width < 4 || line_height < 2) return;
  const double y0 = region.center().y - line_height / 2;
  const int words = uniform_int(rng, 1, 3);
  std::vector<double> widths;
  double used = 0;
  for (int i = 0; i < words; ++i) {
    const double w = width * uniform(rng, 0.12, 0.45);
    if (used + w > width) break;
    widths.push_back(w);
    used += w + width * 0.06;
  }
  if (widths.empty()) widths.push_back(width * 0.5);
  used = 0;
  for (double w : widths) used += w;
  used += width * 0.06 * static_cast<double>(widths.size() - 1);
  double x = chance(rng, 0.5) ? region.x0 : region.x0 + (width - used) / 2;
  const auto ink = static_cast<std::uint8_t>(uniform_int(rng, 0, 90));
  Rect box{x, y0, x, y0 + line_height};
  for (double w : widths) {
    // Glyph proxy: a run of dark bars with 1 px gaps.
    double gx = x;
    while (gx < x + w - 1) {
      const double cw = std::min(uniform(rng, 3.0, 6.0), x + w - gx);
      const double top = y0 + line_height * uniform(rng, 0.0, 0.25);
      fill_rect(img, {gx, top, gx + cw, y0 + line_height}, ink);
      gx += cw + 1;
    }
    x += w + width * 0.06;
  }
  box.x1 = x - width * 0.06;
  content.push_back(box);
}

std::array<int, 4> remap_extent(const std::array<int, 4>& e, int quadrant, int rows, int cols) {
  const auto [r0, r1, c0, c1] = e;
  switch (quadrant) {
    case 1:
      return {c0, c1, rows - 1 - r1, rows - 1 - r0};
    case 2:
      return {rows - 1 - r1, rows - 1 - r0, cols - 1 - c1, cols - 1 - c0};
    case 3:
      return {cols - 1 - c1, cols - 1 - c0, r0, r1};
    default:
      return e;
  }
}

int rotation_quadrant(double deg) {
  const long q = std::lround(deg / 90.0);
  return static_cast<int>(((q % 4) + 4) % 4);
}

Polyline warp_polyline(const Polyline& p, Axis new_axis, const WarpParams& w, ImageSize size) {
  const double ext = fixed_extent(p.axis, size);
  std::vector<double> ts;
  for (double t = -0.25 * ext; t <= 1.25 * ext; t += 1.0) ts.push_back(t);
  ts.insert(ts.end(), p.positions.begin(), p.positions.end());
  const auto target = canonical_positions(fixed_extent(new_axis, size), kSamplesPerLine);
  ts.insert(ts.end(), target.begin(), target.end());
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end()), ts.end());

  std::vector<Point> chain;
  chain.reserve(ts.size());
  for (double t : ts) {
    const double v = polyline_eval(p, t);
    chain.push_back(w.forward(p.axis == Axis::Row ? Point{t, v} : Point{v, t}, size));
  }
  auto fixed = [new_axis](Point q) { return new_axis == Axis::Row ? q.x : q.y; };
  auto value = [new_axis](Point q) { return new_axis == Axis::Row ? q.y : q.x; };

  Polyline out;
  out.axis = new_axis;
  out.positions = target;
  for (double t : target) {
    bool found = false;
    for (std::size_t i = 0; i + 1 < chain.size() && !found; ++i) {
      const double a = fixed(chain[i]);
      const double b = fixed(chain[i + 1]);
      if (t < std::min(a, b) || t > std::max(a, b)) continue;
      const double s = a == b ? 0.0 : (t - a) / (b - a);
      out.values.push_back(value(chain[i]) + s * (value(chain[i + 1]) - value(chain[i])));
      found = true;
    }
    if (!found) throw WarpRejected("warped separator does not cover the sample positions");
  }
  return out;
}

Image warp_pixels(const Image& src, const WarpParams& w) {
  Image out(src.height(), src.width(), src.channels(), 255);
  const ImageSize size = src.size();
  for (int y = 0; y < src.height(); ++y)
    for (int x = 0; x < src.width(); ++x) {
      const Point p = w.inverse({static_cast<double>(x), static_cast<double>(y)}, size);
      if (p.x < -0.5 || p.y < -0.5 || p.x > src.width() - 0.5 || p.y > src.height() - 0.5) continue;
      const double fx = std::clamp(p.x, 0.0, src.width() - 1.0);
      const double fy = std::clamp(p.y, 0.0, src.height() - 1.0);
      const int x0 = static_cast<int>(fx);
      const int y0 = static_cast<int>(fy);
      const int x1 = std::min(x0 + 1, src.width() - 1);
      const int y1 = std::min(y0 + 1, src.height() - 1);
      const double ax = fx - x0;
      const double ay = fy - y0;
      for (int c = 0; c < src.channels(); ++c) {
        const double v = (1 - ay) * ((1 - ax) * src.at(y0, x0, c) + ax * src.at(y0, x1, c)) +
                         ay * ((1 - ax) * src.at(y1, x0, c) + ax * src.at(y1, x1, c));
        out.at(y, x, c) = static_cast<std::uint8_t>(std::lround(v));
      }
    }
  return out;
}

Point clamp_to(Point p, ImageSize s) {
  return {std::clamp(p.x, 0.0, s.width - 1.0), std::clamp(p.y, 0.0, s.height - 1.0)};
}

}  // namespace

void WarpParams::validate() const {
  if (amp_x < 0 || amp_y < 0) throw InvalidInput("warp amplitudes must be non-negative");
  if (!(wavelength > 0)) throw InvalidInput("warp wavelength must be positive");
  if (std::max(amp_x, amp_y) * kTwoPi / wavelength > 0.5)
    throw InvalidInput("warp displacement too steep to invert");
  if (!std::isfinite(rotation_deg) || !std::isfinite(phase)) throw InvalidInput("warp parameters must be finite");
}

Point WarpParams::forward(Point p, ImageSize size) const {
  const double sx = p.x + amp_x * std::sin(kTwoPi * p.y / wavelength + phase);
  const double sy = p.y + amp_y * std::sin(kTwoPi * p.x / wavelength + phase);
  const double rad = rotation_deg * std::numbers::pi / 180.0;
  const double c = std::cos(rad), s = std::sin(rad);
  const double cx = (size.width - 1) / 2.0, cy = (size.height - 1) / 2.0;
  return {cx + c * (sx - cx) - s * (sy - cy), cy + s * (sx - cx) + c * (sy - cy)};
}

Point WarpParams::inverse(Point q, ImageSize size) const {
  const double rad = rotation_deg * std::numbers::pi / 180.0;
  const double c = std::cos(rad), s = std::sin(rad);
  const double cx = (size.width - 1) / 2.0, cy = (size.height - 1) / 2.0;
  const Point unrot{cx + c * (q.x - cx) + s * (q.y - cy), cy - s * (q.x - cx) + c * (q.y - cy)};
  Point p = unrot;
  for (int it = 0; it < 40; ++it)
    p = {unrot.x - amp_x * std::sin(kTwoPi * p.y / wavelength + phase),
         unrot.y - amp_y * std::sin(kTwoPi * p.x / wavelength + phase)};
  return p;
}

void TableSpec::validate() const {
  if (n_rows < 2 || n_rows > 10) throw InvalidInput("n_rows must be in [2, 10]");
  if (n_cols < 2 || n_cols > 8) throw InvalidInput("n_cols must be in [2, 8]");
  if (span_prob < 0 || span_prob > 1 || empty_prob < 0 || empty_prob > 1)
    throw InvalidInput("probabilities must be in [0, 1]");
  if (height < 32 || width < 32) throw InvalidInput("image must be at least 32x32");
  warp.validate();
}

WarpedTable apply_warp(const Image& image, const TableAnnotation& annotation, const WarpParams& w) {
  w.validate();
  const ImageSize size = image.size();
  const int quadrant = rotation_quadrant(w.rotation_deg);
  const bool swap = quadrant % 2 == 1;

  WarpedTable out;
  out.image = warp_pixels(image, w);
  out.annotation.image_size = size;

  for (Axis axis : {Axis::Row, Axis::Column}) {
    const Axis new_axis = swap ? other(axis) : axis;
    for (const auto& sep : annotation.separators(axis)) {
      Separator s{new_axis, warp_polyline(sep.top, new_axis, w, size), warp_polyline(sep.center, new_axis, w, size),
                  warp_polyline(sep.bottom, new_axis, w, size)};
      for (std::size_t i = 0; i < s.center.size(); ++i) {
        std::array<double, 3> v{s.top.values[i], s.center.values[i], s.bottom.values[i]};
        std::sort(v.begin(), v.end());
        s.top.values[i] = v[0];
        s.center.values[i] = v[1];
        s.bottom.values[i] = v[2];
      }
      const double extent = free_extent(new_axis, size);
      for (double v : s.center.values)
        if (v < 0 || v > extent - 1) throw WarpRejected("warp pushed a separator out of the image");
      out.annotation.separators(new_axis).push_back(std::move(s));
    }
  }
  sort_separators(out.annotation.row_separators, size);
  sort_separators(out.annotation.col_separators, size);

  const int rows = annotation.grid_rows();
  const int cols = annotation.grid_cols();
  for (const auto& cell : annotation.cells) {
    const auto e = remap_extent({cell.row_start, cell.row_end, cell.col_start, cell.col_end}, quadrant, rows, cols);
    CellBox c{e[0], e[1], e[2], e[3], {}, {}};
    for (const Point& p : cell.polygon) c.polygon.push_back(clamp_to(w.forward(p, size), size));
    update_bbox(c);
    out.annotation.cells.push_back(std::move(c));
  }
  std::sort(out.annotation.cells.begin(), out.annotation.cells.end(), [](const CellBox& a, const CellBox& b) {
    return a.row_start != b.row_start ? a.row_start < b.row_start : a.col_start < b.col_start;
  });
  for (const Rect& r : annotation.content_boxes) {
    const std::array<Point, 4> pts{w.forward({r.x0, r.y0}, size), w.forward({r.x1, r.y0}, size),
                                   w.forward({r.x1, r.y1}, size), w.forward({r.x0, r.y1}, size)};
    const Rect b = bounding_rect(pts);
    out.annotation.content_boxes.push_back({std::clamp(b.x0, 0.0, size.width - 1.0), std::clamp(b.y0, 0.0, size.height - 1.0),
                                            std::clamp(b.x1, 0.0, size.width - 1.0), std::clamp(b.y1, 0.0, size.height - 1.0)});
  }
  return out;
}

GeneratedTable generate_table(const TableSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  const ImageSize size{spec.height, spec.width};
  const AxisLayout rows = make_layout(rng, spec.n_rows, spec.height);
  const AxisLayout cols = make_layout(rng, spec.n_cols, spec.width);

  std::vector<std::array<int, 4>> extents;
  const auto owner = place_cells(rng, spec.n_rows, spec.n_cols, spec.span_prob, extents);
  auto own = [&](int r, int c) { return owner[static_cast<std::size_t>(r * spec.n_cols + c)]; };

  Image gray(spec.height, spec.width, 1, 255);
  TableAnnotation ann;
  ann.image_size = size;

  for (const auto& [r0, r1, c0, c1] : extents) {
    auto corner = [&](int i, int j) {
      return Point{cols.lines[static_cast<std::size_t>(j)], rows.lines[static_cast<std::size_t>(i)]};
    };
    CellBox cell{r0, r1, c0, c1, {}, {}};
    for (int j = c0; j <= c1 + 1; ++j) cell.polygon.push_back(corner(r0, j));
    for (int i = r0 + 1; i <= r1 + 1; ++i) cell.polygon.push_back(corner(i, c1 + 1));
    for (int j = c1; j >= c0; --j) cell.polygon.push_back(corner(r1 + 1, j));
    for (int i = r1; i > r0; --i) cell.polygon.push_back(corner(i, c0));
    update_bbox(cell);
    ann.cells.push_back(std::move(cell));

    if (chance(rng, spec.empty_prob)) continue;
    const Rect region{cols.content_lo[static_cast<std::size_t>(c0)], rows.content_lo[static_cast<std::size_t>(r0)],
                      cols.content_hi[static_cast<std::size_t>(c1)], rows.content_hi[static_cast<std::size_t>(r1)]};
    double line_height = rows.content_hi[static_cast<std::size_t>(r0)] - rows.content_lo[static_cast<std::size_t>(r0)];
    line_height *= uniform(rng, 0.6, 1.0);
    draw_words(rng, gray, region, line_height, ann.content_boxes);
  }

  const auto row_pos = canonical_positions(spec.width, kSamplesPerLine);
  const auto col_pos = canonical_positions(spec.height, kSamplesPerLine);
  for (std::size_t k = 0; k + 2 < rows.lines.size(); ++k)
    ann.row_separators.push_back(
        straight_separator(Axis::Row, row_pos, rows.band_lo[k], rows.lines[k + 1], rows.band_hi[k]));
  for (std::size_t k = 0; k + 2 < cols.lines.size(); ++k)
    ann.col_separators.push_back(
        straight_separator(Axis::Column, col_pos, cols.band_lo[k], cols.lines[k + 1], cols.band_hi[k]));

  if (spec.bordered) {
    const auto ink = static_cast<std::uint8_t>(uniform_int(rng, 0, 70));
    const int thick = uniform_int(rng, 1, 2);
    const Rgb color{ink, ink, ink};
    const double right = spec.width - 1.0, bottom = spec.height - 1.0;
    draw_polygon(gray, std::vector<Point>{{0, 0}, {right, 0}, {right, bottom}, {0, bottom}}, color, thick);
    for (int k = 1; k < spec.n_rows; ++k)
      for (int c = 0; c < spec.n_cols; ++c)
        if (own(k - 1, c) != own(k, c)) {
          const double y = rows.lines[static_cast<std::size_t>(k)];
          draw_line(gray, {cols.lines[static_cast<std::size_t>(c)], y}, {cols.lines[static_cast<std::size_t>(c + 1)], y},
                    color, thick);
        }
    for (int k = 1; k < spec.n_cols; ++k)
      for (int r = 0; r < spec.n_rows; ++r)
        if (own(r, k - 1) != own(r, k)) {
          const double x = cols.lines[static_cast<std::size_t>(k)];
          draw_line(gray, {x, rows.lines[static_cast<std::size_t>(r)]}, {x, rows.lines[static_cast<std::size_t>(r + 1)]},
                    color, thick);
        }
  }

  GeneratedTable out;
  if (!spec.warp.is_identity()) {
    WarpParams w = spec.warp;
    Rng retry(spec.seed ^ 0x9e3779b97f4a7c15ULL);
    for (int attempt = 0;; ++attempt) {
      try {
        auto warped = apply_warp(gray, ann, w);
        gray = std::move(warped.image);
        ann = std::move(warped.annotation);
        out.warp_retries = attempt;
        break;
      } catch (const WarpRejected&) {
        if (attempt >= 8) {
          out.warp_retries = attempt + 1;
          break;  // keep the table unwarped
        }
        w.amp_x *= 0.7;
        w.amp_y *= 0.7;
        w.rotation_deg *= 0.7;
        w.phase = uniform(retry, 0.0, kTwoPi);
      }
    }
  }
  out.image = gray_to_rgb(gray);
  out.annotation = std::move(ann);
  return out;
}

double heatmap_value(double i, double center, double thickness) {
  const double half = thickness / 2;
  if (i < center - half || i > center + half) return 0.0;
  const double sigma2 = thickness * thickness / (2.0 * std::log(10.0));
  return std::exp(-(i - center) * (i - center) / (2.0 * sigma2));
}

SplitTargets derive_targets(const TableAnnotation& annotation, ImageSize size, int k) {
  SplitTargets t;
  t.size = size;
  const auto H = static_cast<std::size_t>(size.height);
  const auto W = static_cast<std::size_t>(size.width);
  t.row_heatmap.assign(H, 0.0f);
  t.col_heatmap.assign(W, 0.0f);
  t.row_mask.assign(H * W, 0);
  t.col_mask.assign(H * W, 0);

  for (Axis axis : {Axis::Row, Axis::Column}) {
    auto& heat = axis == Axis::Row ? t.row_heatmap : t.col_heatmap;
    auto& mask = axis == Axis::Row ? t.row_mask : t.col_mask;
    auto& regression = axis == Axis::Row ? t.row_regression : t.col_regression;
    const int free_len = free_extent(axis, size);
    const int fixed_len = fixed_extent(axis, size);
    const double ref = reference_position(fixed_len);
    for (const auto& sep : annotation.separators(axis)) {
      const double center = sep.center_at(ref);
      double thickness = sep.thickness_at(ref);
      if (thickness < 1.0) {
        thickness = 1.0;
        ++t.thin_separators;
      }
      const int lo = std::max(0, static_cast<int>(std::ceil(center - thickness / 2)));
      const int hi = std::min(free_len - 1, static_cast<int>(std::floor(center + thickness / 2)));
      for (int i = lo; i <= hi; ++i) {
        auto& h = heat[static_cast<std::size_t>(i)];
        h = std::max(h, static_cast<float>(heatmap_value(i, center, thickness)));
      }
      const long peak = std::lround(center);
      if (peak >= 0 && peak < free_len) heat[static_cast<std::size_t>(peak)] = 1.0f;

      for (int f = 0; f < fixed_len; ++f) {
        double top = sep.top_at(f);
        double bottom = sep.bottom_at(f);
        if (bottom - top < 1.0) {
          const double c = sep.center_at(f);
          top = c - 0.5;
          bottom = c + 0.5;
        }
        const int a = std::max(0, static_cast<int>(std::ceil(top)));
        const int b = std::min(free_len - 1, static_cast<int>(std::floor(bottom)));
        for (int v = a; v <= b; ++v) {
          const std::size_t idx = axis == Axis::Row ? static_cast<std::size_t>(v) * W + static_cast<std::size_t>(f)
                                                    : static_cast<std::size_t>(f) * W + static_cast<std::size_t>(v);
          mask[idx] = 1;
        }
      }
      regression.push_back(regression_target(sep, size, k));
    }
  }
  t.merge_labels = pair_labels(annotation.grid_rows(), annotation.grid_cols(), annotation.cells);
  return t;
}

TableSpec random_spec(std::uint64_t seed, double curve_prob, double borderless_prob, ImageSize size) {
  Rng rng(seed * 0x2545F4914F6CDD1DULL + 17);
  TableSpec s;
  s.seed = seed;
  s.height = size.height;
  s.width = size.width;
  s.n_rows = uniform_int(rng, 2, 10);
  s.n_cols = uniform_int(rng, 2, 8);
  s.span_prob = chance(rng, 0.5) ? uniform(rng, 0.05, 0.3) : 0.0;
  s.empty_prob = uniform(rng, 0.0, 0.2);
  s.bordered = !chance(rng, borderless_prob);
  if (chance(rng, curve_prob)) {
    s.warp.wavelength = uniform(rng, 1.5, 3.0) * std::max(size.height, size.width);
    s.warp.amp_y = uniform(rng, 2.0, 0.025 * size.height + 2.0);
    s.warp.amp_x = uniform(rng, 0.0, 0.015 * size.width + 1.0);
    s.warp.phase = uniform(rng, 0.0, kTwoPi);
    s.warp.rotation_deg = uniform(rng, -1.5, 1.5);
  }
  return s;
}

DatasetWriter::DatasetWriter(std::filesystem::path out, ImageSize size, std::uint64_t seed)
    : out_(std::move(out)), size_(size), seed_(seed) {
  std::filesystem::create_directories(out_ / "images");
  std::filesystem::create_directories(out_ / "annotations");
}

DatasetEntry DatasetWriter::add(const GeneratedTable& table, const std::string& split) {
  char id[16];
  std::snprintf(id, sizeof id, "%06d", static_cast<int>(entries_.size()));
  write_png(table.image, out_ / "images" / (std::string(id) + ".png"));
  save_annotation(table.annotation, out_ / "annotations" / (std::string(id) + ".json"));
  entries_.push_back({id, split});
  return entries_.back();
}

void DatasetWriter::finish() {
  nlohmann::json manifest;
  manifest["seed"] = seed_;
  manifest["image_size"] = {size_.height, size_.width};
  manifest["samples"] = nlohmann::json::array();
  for (const auto& e : entries_) manifest["samples"].push_back({{"id", e.id}, {"split", e.split}});
  write_text(out_ / "manifest.json", manifest.dump(1));
}

std::vector<DatasetEntry> generate_dataset(const std::filesystem::path& out, const DatasetOptions& opt) {
  if (opt.count <= 0) throw InvalidInput("dataset count must be positive");
  DatasetWriter writer(out, opt.size, opt.seed);
  std::vector<DatasetEntry> entries;
  for (int i = 0; i < opt.count; ++i) {
    const std::string split = !opt.with_splits ? "train" : i % 10 == 8 ? "val" : i % 10 == 9 ? "test" : "train";
    const auto spec =
        random_spec(opt.seed * 1000003ULL + static_cast<std::uint64_t>(i), opt.curve_prob, opt.borderless_prob, opt.size);
    entries.push_back(writer.add(generate_table(spec), split));
  }
  writer.finish();
  return entries;
}

Dataset::Dataset(std::filesystem::path root) : root_(std::move(root)) {
  try {
    const auto j = nlohmann::json::parse(read_text(root_ / "manifest.json"));
    for (const auto& s : j.at("samples"))
      entries_.push_back({s.at("id").get<std::string>(), s.value("split", std::string("train"))});
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("malformed manifest: ") + e.what());
  }
}

std::vector<std::string> Dataset::ids(const std::string& split) const {
  std::vector<std::string> out;
  for (const auto& e : entries_)
    if (split.empty() || e.split == split) out.push_back(e.id);
  return out;
}

Image Dataset::image(const std::string& id) const { return read_png(root_ / "images" / (id + ".png")); }

TableAnnotation Dataset::annotation(const std::string& id) const {
  return load_annotation(root_ / "annotations" / (id + ".json"));
}

}  // namespace tsr
