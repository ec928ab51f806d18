#include "tsr/transform.hpp"

#include <algorithm>
#include <cmath>

#include "tsr/error.hpp"

namespace tsr {

namespace {

Polyline scale_polyline(const Polyline& p, double s_pos, double s_val) {
  Polyline out = p;
  for (auto& v : out.positions) v *= s_pos;
  for (auto& v : out.values) v *= s_val;
  return out;
}

int round_up_32(int v) { return (v + 31) / 32 * 32; }

ResizePlan make_plan(ImageSize original, int height, int width) {
  if (original.height <= 0 || original.width <= 0) throw InvalidInput("image has no pixels");
  if (height < 1 || width < 1) throw InvalidInput("resize target must be at least one pixel");
  return {original, {height, width}, {round_up_32(height), round_up_32(width)}};
}

}  // namespace

Separator scale_separator(const Separator& s, double sx, double sy) {
  const double sp = s.axis == Axis::Row ? sx : sy;
  const double sv = s.axis == Axis::Row ? sy : sx;
  Separator out = s;
  out.top = scale_polyline(s.top, sp, sv);
  out.center = scale_polyline(s.center, sp, sv);
  out.bottom = scale_polyline(s.bottom, sp, sv);
  return out;
}

CellBox scale_cell(const CellBox& c, double sx, double sy) {
  CellBox out = c;
  for (auto& p : out.polygon) p = {p.x * sx, p.y * sy};
  out.bbox = {c.bbox.x0 * sx, c.bbox.y0 * sy, c.bbox.x1 * sx, c.bbox.y1 * sy};
  return out;
}

TableAnnotation scale_annotation(const TableAnnotation& a, double sx, double sy, ImageSize size) {
  TableAnnotation out;
  out.image_size = size;
  for (const auto& c : a.cells) out.cells.push_back(scale_cell(c, sx, sy));
  for (const auto& s : a.row_separators) out.row_separators.push_back(scale_separator(s, sx, sy));
  for (const auto& s : a.col_separators) out.col_separators.push_back(scale_separator(s, sx, sy));
  for (const auto& r : a.content_boxes) out.content_boxes.push_back({r.x0 * sx, r.y0 * sy, r.x1 * sx, r.y1 * sy});
  return out;
}

Point ResizePlan::to_original(Point p) const noexcept {
  return {std::clamp(p.x / sx(), 0.0, static_cast<double>(original.width - 1)),
          std::clamp(p.y / sy(), 0.0, static_cast<double>(original.height - 1))};
}

ResizePlan ResizePlan::shorter_side(ImageSize original, int side) {
  const double s = static_cast<double>(side) / std::min(original.height, original.width);
  return make_plan(original, static_cast<int>(std::lround(original.height * s)),
                   static_cast<int>(std::lround(original.width * s)));
}

ResizePlan ResizePlan::longer_side(ImageSize original, int side) {
  const double s = static_cast<double>(side) / std::max(original.height, original.width);
  return make_plan(original, std::max(1, static_cast<int>(std::lround(original.height * s))),
                   std::max(1, static_cast<int>(std::lround(original.width * s))));
}

ResizePlan ResizePlan::square(ImageSize original, int side) { return make_plan(original, side, side); }

Image apply_plan(const Image& image, const ResizePlan& plan) {
  const Image resized = image.size() == plan.resized ? image
                                                      : resize_bilinear(image, plan.resized.height, plan.resized.width);
  return plan.padded == plan.resized ? resized : pad_replicate(resized, plan.padded.height, plan.padded.width);
}

}  // namespace tsr
