#include "tsr/nn/backbone.hpp"

#include "tsr/error.hpp"

namespace tsr::nn {

namespace F = torch::nn::functional;

namespace {

torch::nn::Conv2d conv(int in, int out, int k, int stride = 1, bool bias = false) {
  return torch::nn::Conv2d(torch::nn::Conv2dOptions(in, out, k).stride(stride).padding(k / 2).bias(bias));
}

torch::nn::GroupNorm group_norm(int groups, int channels) {
  return torch::nn::GroupNorm(torch::nn::GroupNormOptions(groups, channels));
}

torch::nn::Sequential stage(int in, int out, int depth, int stride, int groups) {
  torch::nn::Sequential s;
  s->push_back(ResidualBlock(in, out, stride, groups));
  for (int i = 1; i < depth; ++i) s->push_back(ResidualBlock(out, out, 1, groups));
  return s;
}

}  // namespace

ResidualBlockImpl::ResidualBlockImpl(int in, int out, int stride, int groups) {
  conv1_ = register_module("conv1", conv(in, out, 3, stride));
  norm1_ = register_module("norm1", group_norm(groups, out));
  conv2_ = register_module("conv2", conv(out, out, 3));
  norm2_ = register_module("norm2", group_norm(groups, out));
  if (in != out || stride != 1) {
    skip_ = register_module("skip", conv(in, out, 1, stride));
    skip_norm_ = register_module("skip_norm", group_norm(groups, out));
  }
}

torch::Tensor ResidualBlockImpl::forward(const torch::Tensor& x) {
  auto y = torch::relu(norm1_(conv1_(x)));
  y = norm2_(conv2_(y));
  const auto identity = skip_ ? skip_norm_(skip_(x)) : x;
  return torch::relu(y + identity);
}

BackboneImpl::BackboneImpl(const ModelOptions& opt) {
  const int w = opt.backbone_width;
  const int g = opt.groups;
  stem_ = register_module("stem", torch::nn::Sequential(conv(3, w, 3, 2), group_norm(g, w), torch::nn::ReLU(),
                                                        conv(w, 2 * w, 3, 2), group_norm(g, 2 * w), torch::nn::ReLU()));
  stage2_ = register_module("stage2", stage(2 * w, 2 * w, opt.backbone_depth, 1, g));
  stage3_ = register_module("stage3", stage(2 * w, 3 * w, opt.backbone_depth, 2, g));
  stage4_ = register_module("stage4", stage(3 * w, 4 * w, opt.backbone_depth, 2, g));
  const int c = opt.p2_channels;
  lateral2_ = register_module("lateral2", conv(2 * w, c, 1, 1, true));
  lateral3_ = register_module("lateral3", conv(3 * w, c, 1, 1, true));
  lateral4_ = register_module("lateral4", conv(4 * w, c, 1, 1, true));
  smooth_ = register_module("smooth", conv(c, c, 3, 1, true));
}

torch::Tensor BackboneImpl::forward(const torch::Tensor& image) {
  if (image.dim() != 4 || image.size(1) != 3) throw ShapeError("backbone expects an (N, 3, H, W) tensor");
  if (image.size(2) % 32 != 0 || image.size(3) % 32 != 0)
    throw ShapeError("backbone input height and width must be multiples of 32; pad first");
  const auto c2 = stage2_->forward(stem_->forward(image));
  const auto c3 = stage3_->forward(c2);
  const auto c4 = stage4_->forward(c3);
  auto up = [](const torch::Tensor& t, const torch::Tensor& like) {
    return F::interpolate(t, F::InterpolateFuncOptions()
                                 .size(std::vector<int64_t>{like.size(2), like.size(3)})
                                 .mode(torch::kNearest));
  };
  const auto p4 = lateral4_(c4);
  const auto p3 = lateral3_(c3) + up(p4, c3);
  const auto p2 = lateral2_(c2) + up(p3, c2);
  return smooth_(p2);
}

torch::Tensor image_to_tensor(const Image& image) {
  if (image.channels() != 3) throw InvalidInput("expected a 3-channel image");
  auto t = torch::from_blob(const_cast<std::uint8_t*>(image.data().data()), {image.height(), image.width(), 3},
                            torch::kUInt8)
               .to(torch::kFloat32)
               .permute({2, 0, 1})
               .unsqueeze(0)
               .contiguous();
  return (t / 255.0 - 0.5) / 0.25;
}

}  // namespace tsr::nn
