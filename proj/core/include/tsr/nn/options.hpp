#pragma once

#include <string>

#include "tsr/config.hpp"

namespace tsr::nn {

/// Everything needed to rebuild the network's shape. Stored in checkpoints.
struct ModelOptions {
  int backbone_depth = 1;  // residual blocks per stage
  int backbone_width = 32;
  int p2_channels = 64;
  int high_res_channels = 256;
  int k_points = 15;
  int decoder_layers = 3;
  int heads = 16;
  int ffn_dim = 1024;
  double dropout = 0.0;
  int merge_dim = 512;
  int merge_blocks = 3;
  int roi_size = 7;
  int roi_sampling = 2;
  int spatial_layout = 1;
  int groups = 8;  // GroupNorm groups

  static ModelOptions from_config(const Config& c);
  void write(Config& c) const;
  /// Throws InvalidInput on inconsistent sizes.
  void validate() const;
};

/// Inference-time detection settings.
struct DetectOptions {
  int topk = 100;
  double ref_thresh = 0.05;
  int nms_window = 7;
  double infer_thresh = 0.5;
  double merge_thresh = 0.5;

  static DetectOptions from_config(const Config& c);
  void write(Config& c) const;
};

}  // namespace tsr::nn
