#pragma once

#include <torch/torch.h>

#include <vector>

#include "tsr/grid.hpp"
#include "tsr/nn/options.hpp"

namespace tsr::nn {

/// Aligned RoIAlign of image-space boxes on a (1, C, h, w) feature map of
/// the given stride: each of the out x out bins averages sampling x sampling
/// bilinear samples. Boxes narrower than one pixel are widened to one pixel.
/// Returns (N, C, out, out).
torch::Tensor roi_align(const torch::Tensor& features, const std::vector<Rect>& boxes, double stride, int out,
                        int sampling);

/// Row-max, column-max and 3x3 convolution branches over the cell grid,
/// concatenated and fused by a 1x1 convolution.
class GridBlockImpl : public torch::nn::Module {
 public:
  explicit GridBlockImpl(int dim);
  /// x: (1, D, N, M) -> (1, D, N, M).
  torch::Tensor forward(const torch::Tensor& x);

  /// The pooling branches alone, each broadcast back to (1, D, N, M).
  static torch::Tensor row_max(const torch::Tensor& x);
  static torch::Tensor col_max(const torch::Tensor& x);

 private:
  torch::nn::Conv2d conv_{nullptr}, fuse_{nullptr};
};
TORCH_MODULE(GridBlock);

/// Relation network over adjacent base cells of a TableGrid.
class CellMergerImpl : public torch::nn::Module {
 public:
  explicit CellMergerImpl(const ModelOptions& opt);

  /// RoIAlign on cell bounding boxes + 2-layer MLP: (N, M, D). The grid may
  /// cover less than P2 (padding sits right and below the image).
  torch::Tensor cell_features(const torch::Tensor& p2, const TableGrid& grid);
  /// (N, M, D) -> (N, M, D) after the enhancement blocks.
  torch::Tensor enhance(const torch::Tensor& cells);
  /// One logit per pair of adjacent_pairs(grid.rows(), grid.cols()).
  torch::Tensor pair_logits(const torch::Tensor& enhanced, const TableGrid& grid);
  torch::Tensor forward(const torch::Tensor& p2, const TableGrid& grid);

 private:
  int roi_size_;
  int roi_sampling_;
  torch::nn::Sequential cell_mlp_{nullptr};
  torch::nn::ModuleList blocks_{nullptr};
  torch::nn::Sequential relation_{nullptr};
};
TORCH_MODULE(CellMerger);

/// (P, 18) spatial features of the adjacent pairs of `grid`.
torch::Tensor pair_spatial_features(const TableGrid& grid, torch::TensorOptions opt = {});

}  // namespace tsr::nn
