#include "tsr/nn/axis_branch.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "tsr/error.hpp"
#include "tsr/geometry.hpp"

namespace tsr::nn {

namespace F = torch::nn::functional;

torch::Tensor interp_matrix(int64_t out, int64_t in, torch::TensorOptions opt) {
  if (out <= 0 || in <= 0) throw ShapeError("interp_matrix: extents must be positive");
  std::vector<double> w(static_cast<std::size_t>(out * in), 0.0);
  const double scale = static_cast<double>(in) / static_cast<double>(out);
  for (int64_t i = 0; i < out; ++i) {
    const double src = std::max(0.0, (static_cast<double>(i) + 0.5) * scale - 0.5);
    const auto i0 = std::min(static_cast<int64_t>(src), in - 1);
    const int64_t i1 = std::min(i0 + 1, in - 1);
    const double frac = src - static_cast<double>(i0);
    w[static_cast<std::size_t>(i * in + i0)] += 1.0 - frac;
    w[static_cast<std::size_t>(i * in + i1)] += frac;
  }
  const auto dtype = opt.has_dtype() ? opt.dtype() : caffe2::TypeMeta::Make<float>();
  return torch::tensor(w, torch::kFloat64).reshape({out, in}).to(opt.dtype(dtype));
}

torch::Tensor sine_embedding(const torch::Tensor& u, int64_t dim) {
  if (dim % 2 != 0) throw ShapeError("sine_embedding: dim must be even");
  const auto opt = u.options();
  const auto j = torch::arange(dim / 2, opt);
  const auto freq = torch::pow(10000.0, -2.0 * j / static_cast<double>(dim));
  const auto angle = (u * 2.0 * std::numbers::pi).unsqueeze(1) * freq.unsqueeze(0);  // (n, dim/2)
  return torch::stack({torch::sin(angle), torch::cos(angle)}, 2).reshape({u.size(0), dim});
}

ScnnImpl::ScnnImpl(int channels, bool forward_direction, int kernel) : forward_direction_(forward_direction) {
  conv_ = register_module(
      "conv", torch::nn::Conv2d(torch::nn::Conv2dOptions(channels, channels, {kernel, 1}).padding({kernel / 2, 0})));
  const double std = std::sqrt(2.0 / (channels * kernel * 5.0));
  torch::NoGradGuard guard;
  conv_->weight.normal_(0.0, std);
  conv_->bias.zero_();
}

torch::Tensor ScnnImpl::forward(const torch::Tensor& x) {
  auto slices = x.split(1, 3);
  const auto n = static_cast<int64_t>(slices.size());
  if (forward_direction_) {
    for (int64_t j = 1; j < n; ++j) slices[j] = slices[j] + torch::relu(conv_(slices[j - 1]));
  } else {
    for (int64_t j = n - 2; j >= 0; --j) slices[j] = slices[j] + torch::relu(conv_(slices[j + 1]));
  }
  return torch::cat(slices, 3);
}

torch::Tensor PriorMemory::dense() const {
  const auto fl = low.size(0), k = low.size(1), c = low.size(2);
  return torch::matmul(row_interp, low.reshape({fl, k * c})).reshape({row_interp.size(0), k, c});
}

torch::Tensor PriorMemory::dense_pos() const {
  const auto f = pos_free.size(0), k = pos_fixed.size(0);
  return torch::cat({pos_free.unsqueeze(1).expand({f, k, pos_free.size(1)}),
                     pos_fixed.unsqueeze(0).expand({f, k, pos_fixed.size(1)})},
                    2);
}

std::vector<int64_t> prior_sample_positions(int64_t fixed_extent, int k) {
  std::vector<int64_t> out;
  for (double p : canonical_positions(static_cast<int>(fixed_extent), k)) out.push_back(static_cast<int64_t>(p));
  return out;
}

AxisBranchImpl::AxisBranchImpl(const ModelOptions& opt) : k_(opt.k_points) {
  const int c = opt.p2_channels;
  auto conv3 = [c] { return torch::nn::Conv2d(torch::nn::Conv2dOptions(c, c, 3).padding(1)); };
  stem_ = register_module("stem", conv3());
  down_ = torch::nn::Sequential();
  for (int i = 0; i < 3; ++i) {
    down_->push_back(torch::nn::MaxPool2d(torch::nn::MaxPool2dOptions({1, 2}).stride({1, 2})));
    down_->push_back(conv3());
    down_->push_back(torch::nn::ReLU());
  }
  register_module("down", down_);
  scnn_forward_ = register_module("scnn_forward", Scnn(c, true));
  scnn_backward_ = register_module("scnn_backward", Scnn(c, false));
  project_ = register_module("project", torch::nn::Conv2d(torch::nn::Conv2dOptions(c, opt.high_res_channels, 1)));
  ref_head_ = register_module("ref_head", torch::nn::Linear(opt.high_res_channels, 1));
  aux_head_ = register_module("aux_head", torch::nn::Conv2d(torch::nn::Conv2dOptions(c, 1, 1)));
  torch::NoGradGuard guard;
  const double prior_bias = -std::log((1 - 0.01) / 0.01);
  ref_head_->bias.fill_(prior_bias);
}

torch::Tensor AxisBranchImpl::enhance(const torch::Tensor& p2) {
  if (p2.dim() != 4) throw ShapeError("axis branch expects a (1, C, F, X) feature map");
  if (p2.size(3) < 8) throw ShapeError("feature map too narrow for three 1x2 poolings (need image extent >= 32)");
  return scnn_backward_(scnn_forward_(down_->forward(stem_(p2))));
}

torch::Tensor AxisBranchImpl::project_high_res(const torch::Tensor& e, int64_t free_extent, int64_t fixed_extent) {
  return F::interpolate(project_(e), F::InterpolateFuncOptions()
                                         .size(std::vector<int64_t>{free_extent, fixed_extent})
                                         .mode(torch::kBilinear)
                                         .align_corners(false));
}

BranchOutput AxisBranchImpl::forward(const torch::Tensor& p2, int64_t free_extent, int64_t fixed_extent) {
  const auto e = enhance(p2);
  const auto z = project_(e)[0];  // (C', F', X')
  const auto opt = z.options();

  BranchOutput out;
  out.prior_position = reference_position(static_cast<int>(fixed_extent));
  std::vector<int64_t> lines{out.prior_position};
  const auto samples = prior_sample_positions(fixed_extent, k_);
  lines.insert(lines.end(), samples.begin(), samples.end());
  if (lines.back() >= fixed_extent) throw ShapeError("sample line outside the image");

  const auto col_weights = interp_matrix(fixed_extent, z.size(2), opt)
                               .index_select(0, torch::tensor(lines, torch::kInt64));  // (K+1, X')
  const auto zc = torch::einsum("cfx,kx->fkc", {z, col_weights});                    // (F', K+1, C')
  const auto rows = interp_matrix(free_extent, z.size(1), opt);                        // (F, F')

  out.prior_column = torch::matmul(rows, zc.select(1, 0));  // (F, C')
  out.ref_logits = ref_head_(out.prior_column).squeeze(1);
  out.memory.low = zc.slice(1, 1);
  out.memory.row_interp = rows;
  const int64_t half = z.size(0) / 2;
  out.memory.pos_free = sine_embedding(torch::arange(free_extent, opt) / static_cast<double>(free_extent), half);
  out.memory.pos_fixed =
      sine_embedding(torch::tensor(samples, torch::kInt64).to(opt) / static_cast<double>(fixed_extent), half);
  out.aux_logits = F::interpolate(aux_head_(e), F::InterpolateFuncOptions()
                                                    .size(std::vector<int64_t>{free_extent, fixed_extent})
                                                    .mode(torch::kBilinear)
                                                    .align_corners(false))[0][0];
  return out;
}

torch::Tensor sample_prior_features(const torch::Tensor& e_high, int k) {
  const auto pos = prior_sample_positions(e_high.size(3), k);
  return e_high[0].index_select(2, torch::tensor(pos, torch::kInt64)).permute({1, 2, 0}).contiguous();
}

}  // namespace tsr::nn
