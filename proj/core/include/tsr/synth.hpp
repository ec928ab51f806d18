#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tsr/geometry.hpp"
#include "tsr/image.hpp"

namespace tsr {

/// Rotation about the image center composed after a sinusoidal displacement
/// (x, y) -> (x + amp_x sin(2 pi y / wavelength + phase), y + amp_y sin(2 pi x / wavelength + phase)).
struct WarpParams {
  double rotation_deg = 0.0;
  double amp_y = 0.0;
  double amp_x = 0.0;
  double wavelength = 1000.0;
  double phase = 0.0;

  bool is_identity() const noexcept { return rotation_deg == 0.0 && amp_x == 0.0 && amp_y == 0.0; }
  /// Throws InvalidInput for negative amplitudes, non-positive wavelength, or a
  /// displacement steep enough to fold the image.
  void validate() const;
  Point forward(Point p, ImageSize size) const;
  /// Fixed-point inverse of forward().
  Point inverse(Point q, ImageSize size) const;
};

struct TableSpec {
  std::uint64_t seed = 0;
  int n_rows = 3;
  int n_cols = 3;
  double span_prob = 0.0;
  double empty_prob = 0.0;
  bool bordered = true;
  WarpParams warp;
  int height = 192;
  int width = 256;

  void validate() const;
};

struct GeneratedTable {
  Image image;  // 3-channel
  TableAnnotation annotation;
  /// Warps drawn before one was accepted; 0 for an unwarped table.
  int warp_retries = 0;
};

/// Deterministic in `spec`. Separators are interior only; the image borders
/// act as the table's outer boundary.
GeneratedTable generate_table(const TableSpec& spec);

struct WarpedTable {
  Image image;
  TableAnnotation annotation;
};

/// Warps pixels and geometry. Separators are re-sampled at the canonical
/// positions of their (possibly swapped) axis; cells are warped pointwise.
/// Throws WarpRejected if a separator leaves the image.
WarpedTable apply_warp(const Image& image, const TableAnnotation& annotation, const WarpParams& w);

/// Training targets of one table at `size` (which may include padding).
struct SplitTargets {
  ImageSize size;
  std::vector<float> row_heatmap;   // length H
  std::vector<float> col_heatmap;   // length W
  std::vector<std::uint8_t> row_mask;  // H x W, row-major
  std::vector<std::uint8_t> col_mask;  // H x W, row-major
  std::vector<std::vector<double>> row_regression;  // per separator, 3K values
  std::vector<std::vector<double>> col_regression;
  std::vector<std::uint8_t> merge_labels;  // per adjacent_pairs(grid_rows, grid_cols)
  /// Separators whose thickness at the prior line was raised to 1 px.
  int thin_separators = 0;
};

/// Truncated Gaussian reference heatmap value for a separator centered at
/// `center` with thickness `thickness`, at integer position `i`.
double heatmap_value(double i, double center, double thickness);

SplitTargets derive_targets(const TableAnnotation& annotation, ImageSize size, int k = 15);

/// Random table spec used for dataset generation.
TableSpec random_spec(std::uint64_t seed, double curve_prob, double borderless_prob, ImageSize size);

struct DatasetOptions {
  int count = 100;
  std::uint64_t seed = 0;
  double curve_prob = 0.3;
  double borderless_prob = 0.5;
  ImageSize size{192, 256};
  /// Every tenth sample: index % 10 == 8 goes to val, == 9 to test.
  bool with_splits = true;
};

struct DatasetEntry {
  std::string id;
  std::string split;
};

/// Writes images/{id}.png and annotations/{id}.json with sequential ids;
/// finish() writes manifest.json.
class DatasetWriter {
 public:
  DatasetWriter(std::filesystem::path out, ImageSize size, std::uint64_t seed);
  DatasetEntry add(const GeneratedTable& table, const std::string& split);
  void finish();

 private:
  std::filesystem::path out_;
  ImageSize size_;
  std::uint64_t seed_;
  std::vector<DatasetEntry> entries_;
};

/// Random tables through DatasetWriter.
std::vector<DatasetEntry> generate_dataset(const std::filesystem::path& out, const DatasetOptions& opt);

class Dataset {
 public:
  explicit Dataset(std::filesystem::path root);

  const std::vector<DatasetEntry>& entries() const noexcept { return entries_; }
  std::vector<std::string> ids(const std::string& split) const;
  Image image(const std::string& id) const;
  TableAnnotation annotation(const std::string& id) const;
  const std::filesystem::path& root() const noexcept { return root_; }

 private:
  std::filesystem::path root_;
  std::vector<DatasetEntry> entries_;
};

}  // namespace tsr
