#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <vector>

#include "tsr/config.hpp"
#include "tsr/matching.hpp"

namespace tsr::nn {

struct LossOptions {
  double lambda = 0.2;
  double focal_alpha = 2.0;
  double focal_beta = 4.0;
  int pixels_per_class = 1024;
  int ohem_pairs = 64;
  double eps = 1e-7;

  static LossOptions from_config(const Config& c);
  void write(Config& c) const;
};

/// Heatmap focal loss over the prior line. `prob` and `target` have equal
/// shape; pixels with target exactly 1 are positives. Summed and divided by
/// n_sep; returns 0 when n_sep == 0.
torch::Tensor ref_point_loss(const torch::Tensor& prob, const torch::Tensor& target, int64_t n_sep,
                             const LossOptions& opt = {});

/// Set-prediction loss of one axis: focal classification (alpha = focal_alpha)
/// summed over all queries plus, per matched query, the mean L1 distance
/// between `coords` (Q, 3K) and its target row in `targets` (G, 3K).
torch::Tensor line_loss(const torch::Tensor& class_prob, const torch::Tensor& coords, const torch::Tensor& targets,
                        const Assignment& assignment, const LossOptions& opt = {});

/// Flat indices of up to n_pos positive and n_neg negative mask pixels drawn
/// without replacement; every pixel of a class is taken when it has fewer.
std::vector<int64_t> sample_pixels(const std::vector<std::uint8_t>& mask, int n_pos, int n_neg, std::uint64_t seed);

/// Mean BCE over sample_pixels(mask_gt, n, n, seed); `prob` is indexed flat.
torch::Tensor aux_seg_loss(const torch::Tensor& prob, const std::vector<std::uint8_t>& mask_gt, std::uint64_t seed,
                           const LossOptions& opt = {});

/// Mean BCE over the ohem_pairs highest-loss positives and negatives; 0 for
/// an empty pair list.
torch::Tensor merge_loss_ohem(const torch::Tensor& prob, const torch::Tensor& labels, const LossOptions& opt = {});

/// Per-component losses; inactive components are undefined tensors.
struct LossBundle {
  torch::Tensor ref_row, ref_col, aux_row, aux_col, line_row, line_col, merge;

  /// lambda (ref_row + ref_col) + the remaining components. Throws
  /// TrainingAborted if any active component is not finite.
  torch::Tensor total(double lambda) const;
};

}  // namespace tsr::nn
