#pragma once

#include "tsr/annotation_io.hpp"
#include "tsr/config.hpp"
#include "tsr/evaluate.hpp"
#include "tsr/image.hpp"
#include "tsr/nn/model.hpp"
#include "tsr/nn/options.hpp"
#include "tsr/synth.hpp"
#include "tsr/transform.hpp"

namespace tsr::nn {

struct InferOptions {
  /// Target length of the longer side, or of both sides when `square`.
  int side = 1024;
  bool square = false;
  /// false keeps the base grid cells (split module only).
  bool merge = true;
  DetectOptions detect;

  /// Reads infer.side, infer.resize_mode ("longer" or "both"), infer.merge
  /// and the detection keys.
  static InferOptions from_config(const Config& c);
  ResizePlan plan(ImageSize original) const;
};

/// Image -> TableResult with a trained model.
class Recognizer {
 public:
  Recognizer(TsrModel model, InferOptions opt);

  /// Throws InvalidInput for an empty image. A corner grid that cannot be
  /// built yields status "grid_error" with the separators and no cells.
  TableResult recognize(const Image& image);

  const InferOptions& options() const noexcept { return opt_; }

 private:
  TsrModel model_;
  InferOptions opt_;
};

/// Recognizes every id of `data` and scores it against its annotation. When
/// `pred_dir` is given the results are also written there as {id}.json.
EvalReport evaluate_model(Recognizer& recognizer, const Dataset& data, const std::vector<std::string>& ids,
                          const EvalOptions& opt = {}, const std::filesystem::path& pred_dir = {});

/// Cell outlines in red and separator center lines in blue over the image.
Image render_overlay(const Image& image, const TableResult& result);

}  // namespace tsr::nn
