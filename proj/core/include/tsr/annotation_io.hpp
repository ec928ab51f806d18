#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "tsr/geometry.hpp"

namespace tsr {

/// Recognized table as written by `infer`. Serializes to the annotation cell
/// schema plus per-cell row_span/col_span.
struct TableResult {
  ImageSize image_size;
  std::vector<CellBox> cells;
  std::vector<Separator> row_separators;
  std::vector<Separator> col_separators;
  /// "ok", or "grid_error" when the corner grid could not be built; the raw
  /// separators are kept either way.
  std::string status = "ok";
  std::string message;
};

std::string annotation_to_json(const TableAnnotation& a);
TableAnnotation annotation_from_json(std::string_view text);
void save_annotation(const TableAnnotation& a, const std::filesystem::path& path);
TableAnnotation load_annotation(const std::filesystem::path& path);

std::string result_to_json(const TableResult& r);
void save_result(const TableResult& r, const std::filesystem::path& path);

/// Cells of either an annotation or a result file (span keys are optional).
struct CellFile {
  ImageSize image_size;
  std::vector<CellBox> cells;
  std::vector<Rect> content_boxes;
};
CellFile load_cells(const std::filesystem::path& path);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, std::string_view text);

}  // namespace tsr
