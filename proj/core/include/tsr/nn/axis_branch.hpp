#pragma once

#include <torch/torch.h>

#include "tsr/nn/options.hpp"

namespace tsr::nn {

// Tensors in this header use branch orientation: the row branch sees P2 as
// is, the column branch sees P2 transposed, so "free" is the axis separator
// values live on (image height for rows) and "fixed" is the axis separators
// are parameterized by.

/// Bilinear weights (align_corners = false) mapping `in` samples to `out`
/// samples: row i holds the weights of output position i. Shape (out, in).
torch::Tensor interp_matrix(int64_t out, int64_t in, torch::TensorOptions opt = {});

/// DETR-style sine embedding of normalized coordinates u in [0, 1]:
/// (n) -> (n, dim), interleaving sin and cos at geometric frequencies.
torch::Tensor sine_embedding(const torch::Tensor& u, int64_t dim);

/// Slice-by-slice propagation along the fixed axis: slice j += ReLU(conv(slice j-1)),
/// with a kernel spanning `kernel` positions of the free axis.
class ScnnImpl : public torch::nn::Module {
 public:
  ScnnImpl(int channels, bool forward_direction, int kernel = 9);
  torch::Tensor forward(const torch::Tensor& x);
  torch::nn::Conv2d& conv() { return conv_; }

 private:
  torch::nn::Conv2d conv_{nullptr};
  bool forward_direction_;
};
TORCH_MODULE(Scnn);

/// Factored form of the sampled high-resolution features C_axis. Row f of
/// the dense map is `row_interp[f] @ low`, i.e. the bilinear up-sampling of
/// the K sampled columns along the free axis.
struct PriorMemory {
  torch::Tensor low;         // (F', K, C')
  torch::Tensor row_interp;  // (F, F')
  torch::Tensor pos_free;    // (F, C'/2) embedding of f / F
  torch::Tensor pos_fixed;   // (K, C'/2) embedding of x_k / X

  int64_t free_extent() const { return row_interp.size(0); }
  int64_t k() const { return low.size(1); }
  /// (F, K, C') features, i.e. C_axis.
  torch::Tensor dense() const;
  /// (F, K, C') positional embeddings of the dense tokens.
  torch::Tensor dense_pos() const;
};

struct BranchOutput {
  torch::Tensor ref_logits;    // (F) reference logits on the prior line
  torch::Tensor aux_logits;    // (F, X) segmentation logits
  torch::Tensor prior_column;  // (F, C') E' on the prior line
  PriorMemory memory;
  int64_t prior_position = 0;  // floor(X / 4)
};

/// Per-axis context enhancement, high-resolution projection, reference
/// point head and auxiliary segmentation head.
class AxisBranchImpl : public torch::nn::Module {
 public:
  explicit AxisBranchImpl(const ModelOptions& opt);

  /// p2: (1, C, F/4, X/4). Returns E_axis of shape (1, C, F/4, X/32).
  torch::Tensor enhance(const torch::Tensor& p2);
  /// Full E'_axis (1, C', F, X); only used for inspection and tests.
  torch::Tensor project_high_res(const torch::Tensor& e, int64_t free_extent, int64_t fixed_extent);
  /// Evaluates E' only where it is consumed: the prior line and the K sample lines.
  BranchOutput forward(const torch::Tensor& p2, int64_t free_extent, int64_t fixed_extent);

  Scnn& scnn(int i) { return i == 0 ? scnn_forward_ : scnn_backward_; }
  torch::nn::Linear& ref_head() { return ref_head_; }

 private:
  int k_;
  torch::nn::Conv2d stem_{nullptr};
  torch::nn::Sequential down_{nullptr};
  Scnn scnn_forward_{nullptr}, scnn_backward_{nullptr};
  torch::nn::Conv2d project_{nullptr};
  torch::nn::Linear ref_head_{nullptr};
  torch::nn::Conv2d aux_head_{nullptr};
};
TORCH_MODULE(AxisBranch);

/// C_axis from a dense E' (1, C', F, X): columns floor(X / (K + 1)) * i,
/// i = 1..K. Returns (F, K, C').
torch::Tensor sample_prior_features(const torch::Tensor& e_high, int k);

/// Prior-line sample positions for a fixed extent (K entries).
std::vector<int64_t> prior_sample_positions(int64_t fixed_extent, int k);

}  // namespace tsr::nn
