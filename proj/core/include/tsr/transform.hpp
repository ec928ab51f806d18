#pragma once

#include "tsr/geometry.hpp"
#include "tsr/image.hpp"

namespace tsr {

/// Scales positions and values by the factor of their own axis.
Separator scale_separator(const Separator& s, double sx, double sy);
CellBox scale_cell(const CellBox& c, double sx, double sy);
/// Scales every coordinate and sets the new image size.
TableAnnotation scale_annotation(const TableAnnotation& a, double sx, double sy, ImageSize size);

/// Resize-then-pad mapping between an original image and the network input.
struct ResizePlan {
  ImageSize original;
  ImageSize resized;
  ImageSize padded;  // resized rounded up to multiples of 32

  double sx() const noexcept { return static_cast<double>(resized.width) / original.width; }
  double sy() const noexcept { return static_cast<double>(resized.height) / original.height; }
  Point to_model(Point p) const noexcept { return {p.x * sx(), p.y * sy()}; }
  /// Inverse of to_model, clamped to the original image.
  Point to_original(Point p) const noexcept;

  /// Shorter side scaled to `side`, aspect kept.
  static ResizePlan shorter_side(ImageSize original, int side);
  /// Longer side scaled to `side`, aspect kept.
  static ResizePlan longer_side(ImageSize original, int side);
  /// Both sides scaled to `side`.
  static ResizePlan square(ImageSize original, int side);
};

/// Bilinear resize to plan.resized followed by replicate padding to plan.padded.
Image apply_plan(const Image& image, const ResizePlan& plan);

}  // namespace tsr
