#include "tsr/nn/cell_merge.hpp"

#include <algorithm>

#include "tsr/error.hpp"
#include "tsr/nn/backbone.hpp"

namespace tsr::nn {

namespace F = torch::nn::functional;

torch::Tensor roi_align(const torch::Tensor& features, const std::vector<Rect>& boxes, double stride, int out,
                        int sampling) {
  if (features.dim() != 4 || features.size(0) != 1) throw ShapeError("roi_align expects a (1, C, h, w) map");
  const auto n = static_cast<int64_t>(boxes.size());
  const int64_t c = features.size(1), h = features.size(2), w = features.size(3);
  if (n == 0) return torch::zeros({0, c, out, out}, features.options());
  const int64_t s = static_cast<int64_t>(out) * sampling;
  std::vector<double> grid(static_cast<std::size_t>(n * s * s * 2));
  std::size_t at = 0;
  for (const auto& b : boxes) {
    const double x0 = b.x0 / stride - 0.5, y0 = b.y0 / stride - 0.5;
    const double bw = std::max(b.width(), 1.0) / stride, bh = std::max(b.height(), 1.0) / stride;
    for (int64_t iy = 0; iy < s; ++iy) {
      const double fy = y0 + (static_cast<double>(iy) + 0.5) * bh / static_cast<double>(s);
      for (int64_t ix = 0; ix < s; ++ix) {
        const double fx = x0 + (static_cast<double>(ix) + 0.5) * bw / static_cast<double>(s);
        // grid_sample with align_corners = false maps -1 / 1 to the outer pixel edges.
        grid[at++] = (2.0 * fx + 1.0) / static_cast<double>(w) - 1.0;
        grid[at++] = (2.0 * fy + 1.0) / static_cast<double>(h) - 1.0;
      }
    }
  }
  const auto g = torch::tensor(grid, torch::kFloat64).to(features.dtype()).reshape({1, n * s, s, 2});
  const auto sampled = F::grid_sample(features, g,
                                      F::GridSampleFuncOptions()
                                          .mode(torch::kBilinear)
                                          .padding_mode(torch::kBorder)
                                          .align_corners(false));  // (1, C, n*s, s)
  return sampled.reshape({c, n, out, sampling, out, sampling}).mean({3, 5}).permute({1, 0, 2, 3});
}

GridBlockImpl::GridBlockImpl(int dim) {
  conv_ = register_module("conv", torch::nn::Conv2d(torch::nn::Conv2dOptions(dim, dim, 3).padding(1)));
  fuse_ = register_module("fuse", torch::nn::Conv2d(torch::nn::Conv2dOptions(3 * dim, dim, 1)));
}

torch::Tensor GridBlockImpl::row_max(const torch::Tensor& x) {
  return std::get<0>(x.max(3, true)).expand_as(x);
}

torch::Tensor GridBlockImpl::col_max(const torch::Tensor& x) {
  return std::get<0>(x.max(2, true)).expand_as(x);
}

torch::Tensor GridBlockImpl::forward(const torch::Tensor& x) {
  return torch::relu(fuse_(torch::cat({row_max(x), col_max(x), conv_(x)}, 1)));
}

CellMergerImpl::CellMergerImpl(const ModelOptions& opt) : roi_size_(opt.roi_size), roi_sampling_(opt.roi_sampling) {
  if (opt.spatial_layout != 1) throw InvalidInput("unsupported merge.spatial_layout " + std::to_string(opt.spatial_layout));
  const int d = opt.merge_dim;
  const int roi = opt.p2_channels * opt.roi_size * opt.roi_size;
  cell_mlp_ = register_module("cell_mlp", torch::nn::Sequential(torch::nn::Linear(roi, d), torch::nn::ReLU(),
                                                                 torch::nn::Linear(d, d), torch::nn::ReLU()));
  blocks_ = register_module("blocks", torch::nn::ModuleList());
  for (int i = 0; i < opt.merge_blocks; ++i) blocks_->push_back(GridBlock(d));
  relation_ = register_module(
      "relation", torch::nn::Sequential(torch::nn::Linear(2 * d + kSpatialFeatureDim, d), torch::nn::ReLU(),
                                        torch::nn::Linear(d, d), torch::nn::ReLU(), torch::nn::Linear(d, 1)));
}

torch::Tensor CellMergerImpl::cell_features(const torch::Tensor& p2, const TableGrid& grid) {
  std::vector<Rect> boxes;
  for (const auto& cell : grid.cells()) boxes.push_back(cell.bbox);
  const auto pooled = roi_align(p2, boxes, kP2Stride, roi_size_, roi_sampling_);
  return cell_mlp_->forward(pooled.flatten(1)).reshape({grid.rows(), grid.cols(), -1});
}

torch::Tensor CellMergerImpl::enhance(const torch::Tensor& cells) {
  auto x = cells.permute({2, 0, 1}).unsqueeze(0);
  for (const auto& block : *blocks_) x = block->as<GridBlock>()->forward(x);
  return x[0].permute({1, 2, 0});
}

torch::Tensor pair_spatial_features(const TableGrid& grid, torch::TensorOptions opt) {
  const auto pairs = adjacent_pairs(grid.rows(), grid.cols());
  std::vector<double> values;
  values.reserve(pairs.size() * kSpatialFeatureDim);
  for (const auto& p : pairs) {
    const auto f = spatial_feature_18d(grid.cell(p.a.row, p.a.col), grid.cell(p.b.row, p.b.col), grid.image_size(),
                                       p.direction);
    values.insert(values.end(), f.begin(), f.end());
  }
  const auto dtype = opt.has_dtype() ? opt.dtype() : caffe2::TypeMeta::Make<float>();
  return torch::tensor(values, torch::kFloat64)
      .reshape({static_cast<int64_t>(pairs.size()), kSpatialFeatureDim})
      .to(opt.dtype(dtype));
}

torch::Tensor CellMergerImpl::pair_logits(const torch::Tensor& enhanced, const TableGrid& grid) {
  const auto pairs = adjacent_pairs(grid.rows(), grid.cols());
  if (pairs.empty()) return torch::zeros({0}, enhanced.options());
  std::vector<int64_t> ia, ib;
  for (const auto& p : pairs) {
    ia.push_back(p.a.row * grid.cols() + p.a.col);
    ib.push_back(p.b.row * grid.cols() + p.b.col);
  }
  const auto flat = enhanced.reshape({grid.rows() * grid.cols(), -1});
  const auto x = torch::cat({flat.index_select(0, torch::tensor(ia)), flat.index_select(0, torch::tensor(ib)),
                             pair_spatial_features(grid, enhanced.options())},
                            1);
  return relation_->forward(x).squeeze(1);
}

torch::Tensor CellMergerImpl::forward(const torch::Tensor& p2, const TableGrid& grid) {
  return pair_logits(enhance(cell_features(p2, grid)), grid);
}

}  // namespace tsr::nn
