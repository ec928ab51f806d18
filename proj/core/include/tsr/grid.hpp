#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "tsr/geometry.hpp"

namespace tsr {

struct GridIndex {
  int row = 0;
  int col = 0;
  friend bool operator==(const GridIndex&, const GridIndex&) = default;
};

enum class PairDirection { Horizontal, Vertical };

/// Two edge-adjacent base cells; `b` is right of (horizontal) or below (vertical) `a`.
struct CellPair {
  GridIndex a;
  GridIndex b;
  PairDirection direction = PairDirection::Horizontal;
  friend bool operator==(const CellPair&, const CellPair&) = default;
};

/// Base cells from intersecting row and column center lines, with straight
/// pseudo-separators on the image borders.
class TableGrid {
 public:
  TableGrid() = default;

  int rows() const noexcept { return rows_; }
  int cols() const noexcept { return cols_; }
  ImageSize image_size() const noexcept { return size_; }

  /// Corner (i, j), i in [0, rows], j in [0, cols].
  const Point& corner(int i, int j) const { return corners_[static_cast<std::size_t>(i * (cols_ + 1) + j)]; }
  const CellBox& cell(int r, int c) const { return cells_[static_cast<std::size_t>(r * cols_ + c)]; }
  std::span<const CellBox> cells() const noexcept { return cells_; }
  /// Number of corners that fell back to closest approach.
  int fallback_corners() const noexcept { return fallbacks_; }

  /// Outline of the rectangle of base cells [r0, r1] x [c0, c1], clockwise from
  /// the top-left corner, including every grid corner on the boundary.
  std::vector<Point> outline(int r0, int r1, int c0, int c1) const;

  const std::vector<Separator>& row_lines() const noexcept { return row_lines_; }
  const std::vector<Separator>& col_lines() const noexcept { return col_lines_; }

 private:
  friend TableGrid build_grid(std::span<const Separator>, std::span<const Separator>, ImageSize);

  int rows_ = 0;
  int cols_ = 0;
  int fallbacks_ = 0;
  ImageSize size_;
  std::vector<Separator> row_lines_;
  std::vector<Separator> col_lines_;
  std::vector<Point> corners_;
  std::vector<CellBox> cells_;
};

/// (R+1) x (C+1) grid for R row and C column separators (sorted by the caller).
/// Throws GridInconsistency if the corner grid is not strictly monotone.
TableGrid build_grid(std::span<const Separator> row_seps, std::span<const Separator> col_seps, ImageSize size);

/// All horizontal pairs in row-major order followed by all vertical pairs.
std::vector<CellPair> adjacent_pairs(int rows, int cols);

/// For each adjacent pair of the rows x cols grid: 1 iff both base cells belong
/// to the same cell of `cells`. Throws InvalidInput if `cells` do not cover
/// the grid exactly once.
std::vector<std::uint8_t> pair_labels(int rows, int cols, std::span<const CellBox> cells);

/// Merges base cells joined by `merges` into rectangular cells: connected
/// components, rectangular hull, and merging of overlapping hulls until
/// nothing changes. Output is sorted row-major.
std::vector<CellBox> resolve_spans(const TableGrid& grid, std::span<const CellPair> merges);

constexpr int kSpatialFeatureDim = 18;
using SpatialFeature = std::array<double, kSpatialFeatureDim>;

/// Layout: [0..3] a's normalized (x, y, w, h); [4..7] b's; [8..9] center
/// delta (b - a) / (W, H); [10..11] log(w_b / w_a), log(h_b / h_a); [12] IoU;
/// [13] inter / area_a; [14] inter / area_b; [15] union / image area;
/// [16..17] one-hot (horizontal, vertical). Extents below 1 px are raised to 1.
SpatialFeature spatial_feature_18d(const CellBox& a, const CellBox& b, ImageSize size, PairDirection dir);
/// Direction inferred from grid extents: horizontal iff the row ranges overlap.
SpatialFeature spatial_feature_18d(const CellBox& a, const CellBox& b, ImageSize size);

}  // namespace tsr
