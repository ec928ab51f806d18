#pragma once

#include <torch/torch.h>

#include "tsr/nn/axis_branch.hpp"
#include "tsr/nn/options.hpp"

namespace tsr::nn {

/// Scaled dot-product attention with `heads` heads over (tokens, dim) inputs.
class AttentionImpl : public torch::nn::Module {
 public:
  AttentionImpl(int dim, int heads, double dropout);

  /// query (Q, D), key (T, D), value (T, D) -> (Q, D).
  torch::Tensor forward(const torch::Tensor& query, const torch::Tensor& key, const torch::Tensor& value);
  /// Cross-attention to C_axis + positional embeddings without materializing
  /// the dense key/value inputs: projections run on the low-resolution rows
  /// and are interpolated afterwards, which is exact because both steps are linear.
  torch::Tensor forward_memory(const torch::Tensor& query, const PriorMemory& memory);

 private:
  torch::Tensor attend(const torch::Tensor& q, const torch::Tensor& k, const torch::Tensor& v);

  int heads_;
  torch::nn::Linear q_{nullptr}, k_{nullptr}, v_{nullptr}, out_{nullptr};
  torch::nn::Dropout dropout_{nullptr};
};
TORCH_MODULE(Attention);

/// Post-norm decoder layer: self-attention, cross-attention to C_axis, FFN.
class DecoderLayerImpl : public torch::nn::Module {
 public:
  DecoderLayerImpl(int dim, int heads, int ffn_dim, double dropout);
  torch::Tensor forward(const torch::Tensor& tgt, const torch::Tensor& query_pos, const PriorMemory& memory,
                        bool factored = true);

 private:
  Attention self_attn_{nullptr}, cross_attn_{nullptr};
  torch::nn::Linear ffn1_{nullptr}, ffn2_{nullptr};
  torch::nn::LayerNorm norm1_{nullptr}, norm2_{nullptr}, norm3_{nullptr};
  torch::nn::Dropout drop_{nullptr};
};
TORCH_MODULE(DecoderLayer);

struct DecoderOutput {
  torch::Tensor class_logits;  // (Q)
  torch::Tensor coords;        // (Q, 3K) in [0, 1], top | center | bottom
};

/// Transformer decoder over reference-point queries plus the class and
/// regression heads.
class SeparatorDecoderImpl : public torch::nn::Module {
 public:
  explicit SeparatorDecoderImpl(const ModelOptions& opt);

  /// query_features, query_pos: (Q, C'). With Q = 0 returns empty outputs
  /// without running the decoder. `factored = false` materializes C_axis.
  DecoderOutput forward(const torch::Tensor& query_features, const torch::Tensor& query_pos,
                        const PriorMemory& memory, bool factored = true);

 private:
  int k_;
  torch::nn::ModuleList layers_{nullptr};
  torch::nn::Sequential class_head_{nullptr}, reg_head_{nullptr};
};
TORCH_MODULE(SeparatorDecoder);

/// Queries for reference points at `indices` on the prior line: features
/// gathered from `prior_column` and positional embeddings of
/// (index / F, prior_position / X).
std::pair<torch::Tensor, torch::Tensor> make_queries(const BranchOutput& branch, const std::vector<int64_t>& indices,
                                                     int64_t fixed_extent);

}  // namespace tsr::nn
