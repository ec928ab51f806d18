#pragma once

#include <span>
#include <vector>

#include "tsr/geometry.hpp"

namespace tsr {

/// A detected reference point on the prior line (index along the free axis).
struct RefPoint {
  int index = 0;
  double score = 0.0;
  friend bool operator==(const RefPoint&, const RefPoint&) = default;
};

struct PeakOptions {
  int window = 7;
  int topk = 100;
  double threshold = 0.05;
};

/// Max-pool NMS (keep i iff it equals the maximum of its window), top-k by
/// score, then score >= threshold. Result is sorted by index.
std::vector<RefPoint> detect_peaks(std::span<const double> scores, const PeakOptions& opt = {});

/// Decoder output for one query: a class logit plus 3K normalized coordinates
/// laid out as top[0..K), center[K..2K), bottom[2K..3K).
struct SeparatorPrediction {
  double class_logit = 0.0;
  std::vector<double> coords;
  RefPoint origin;

  double score() const noexcept;
};

/// Thresholds on sigmoid(class_logit), de-normalizes, orders each top/center/
/// bottom triple, drops any separator whose band overlaps a higher-scoring one
/// at half or more of the sample positions, and sorts by center.
std::vector<Separator> predictions_to_separators(std::span<const SeparatorPrediction> preds, Axis axis,
                                                 ImageSize size, double score_thresh = 0.5);

/// Normalized 3K regression target of a separator (same layout as
/// SeparatorPrediction::coords), clamped to [0, 1].
std::vector<double> regression_target(const Separator& sep, ImageSize size, int k);

}  // namespace tsr
