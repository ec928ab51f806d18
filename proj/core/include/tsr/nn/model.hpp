#pragma once

#include <torch/torch.h>

#include <vector>

#include "tsr/grid.hpp"
#include "tsr/nn/axis_branch.hpp"
#include "tsr/nn/backbone.hpp"
#include "tsr/nn/cell_merge.hpp"
#include "tsr/nn/decoder.hpp"
#include "tsr/separators.hpp"

namespace tsr::nn {

/// Split-module output of one axis in image orientation.
struct AxisOutput {
  BranchOutput branch;
  /// Sigmoid of the reference logits as doubles, for peak detection.
  std::vector<double> ref_scores;
  /// Auxiliary segmentation logits (H, W).
  torch::Tensor aux_logits;
};

/// Full network: shared backbone, row and column split branches with their
/// decoders, and the cell merger.
class TsrModelImpl : public torch::nn::Module {
 public:
  explicit TsrModelImpl(const ModelOptions& opt);

  const ModelOptions& options() const noexcept { return opt_; }

  /// (1, 3, H, W) -> P2.
  torch::Tensor features(const torch::Tensor& image);
  /// Runs the split branch of `axis` on P2 for an image of `size`.
  AxisOutput split(const torch::Tensor& p2, Axis axis, ImageSize size);
  /// Decodes one query per entry of `indices` (positions on the prior line).
  DecoderOutput decode(const AxisOutput& out, Axis axis, ImageSize size, const std::vector<int64_t>& indices);
  /// Merge logits for the adjacent pairs of `grid`.
  torch::Tensor merge(const torch::Tensor& p2, const TableGrid& grid);

  AxisBranch& branch(Axis axis) { return axis == Axis::Row ? row_branch_ : col_branch_; }
  SeparatorDecoder& decoder(Axis axis) { return axis == Axis::Row ? row_decoder_ : col_decoder_; }

 private:
  ModelOptions opt_;
  Backbone backbone_{nullptr};
  AxisBranch row_branch_{nullptr}, col_branch_{nullptr};
  SeparatorDecoder row_decoder_{nullptr}, col_decoder_{nullptr};
  CellMerger merger_{nullptr};
};
TORCH_MODULE(TsrModel);

/// Converts decoder outputs to SeparatorPredictions (one per reference point).
std::vector<SeparatorPrediction> to_predictions(const DecoderOutput& out, const std::vector<RefPoint>& refs);

}  // namespace tsr::nn
