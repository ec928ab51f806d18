#pragma once

#include <torch/torch.h>

#include "tsr/image.hpp"
#include "tsr/nn/options.hpp"

namespace tsr::nn {

/// Input pixels per P2 cell.
inline constexpr double kP2Stride = 4.0;

/// Two 3x3 convolutions with GroupNorm and an identity (or 1x1 projected) skip.
class ResidualBlockImpl : public torch::nn::Module {
 public:
  ResidualBlockImpl(int in, int out, int stride, int groups);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  torch::nn::Conv2d conv1_{nullptr}, conv2_{nullptr}, skip_{nullptr};
  torch::nn::GroupNorm norm1_{nullptr}, norm2_{nullptr}, skip_norm_{nullptr};
};
TORCH_MODULE(ResidualBlock);

/// Small residual network with a top-down feature pyramid; returns P2 at
/// stride 4 with `p2_channels` channels. Input (N, 3, H, W) with H and W
/// multiples of 32.
class BackboneImpl : public torch::nn::Module {
 public:
  explicit BackboneImpl(const ModelOptions& opt);
  torch::Tensor forward(const torch::Tensor& image);

 private:
  torch::nn::Sequential stem_{nullptr};
  torch::nn::Sequential stage2_{nullptr}, stage3_{nullptr}, stage4_{nullptr};
  torch::nn::Conv2d lateral2_{nullptr}, lateral3_{nullptr}, lateral4_{nullptr};
  torch::nn::Conv2d smooth_{nullptr};
};
TORCH_MODULE(Backbone);

/// Converts an 8-bit interleaved image to a normalized (1, 3, H, W) float tensor.
torch::Tensor image_to_tensor(const Image& image);

}  // namespace tsr::nn
