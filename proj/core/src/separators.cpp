#include "tsr/separators.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "tsr/error.hpp"

namespace tsr {

std::vector<RefPoint> detect_peaks(std::span<const double> scores, const PeakOptions& opt) {
  const int n = static_cast<int>(scores.size());
  const int half = opt.window / 2;
  std::vector<RefPoint> peaks;
  for (int i = 0; i < n; ++i) {
    const int lo = std::max(0, i - half);
    const int hi = std::min(n - 1, i + half);
    const double m = *std::max_element(scores.begin() + lo, scores.begin() + hi + 1);
    if (scores[static_cast<std::size_t>(i)] == m) peaks.push_back({i, m});
  }
  std::stable_sort(peaks.begin(), peaks.end(), [](const RefPoint& a, const RefPoint& b) { return a.score > b.score; });
  if (static_cast<int>(peaks.size()) > opt.topk) peaks.resize(static_cast<std::size_t>(std::max(0, opt.topk)));
  std::erase_if(peaks, [&](const RefPoint& p) { return p.score < opt.threshold; });
  std::sort(peaks.begin(), peaks.end(), [](const RefPoint& a, const RefPoint& b) { return a.index < b.index; });
  return peaks;
}

double SeparatorPrediction::score() const noexcept { return 1.0 / (1.0 + std::exp(-class_logit)); }

std::vector<Separator> predictions_to_separators(std::span<const SeparatorPrediction> preds, Axis axis,
                                                 ImageSize size, double score_thresh) {
  struct Scored {
    Separator sep;
    double score;
  };
  std::vector<Scored> kept;
  const double scale = free_extent(axis, size);
  for (const auto& p : preds) {
    if (p.score() < score_thresh) continue;
    if (p.coords.empty() || p.coords.size() % 3 != 0)
      throw InvalidInput("separator prediction must carry 3K coordinates");
    const int k = static_cast<int>(p.coords.size() / 3);
    const auto pos = canonical_positions(fixed_extent(axis, size), k);
    Separator s{axis, {axis, pos, {}}, {axis, pos, {}}, {axis, pos, {}}};
    for (int i = 0; i < k; ++i) {
      std::array<double, 3> v{p.coords[static_cast<std::size_t>(i)] * scale,
                              p.coords[static_cast<std::size_t>(k + i)] * scale,
                              p.coords[static_cast<std::size_t>(2 * k + i)] * scale};
      std::sort(v.begin(), v.end());
      s.top.values.push_back(v[0]);
      s.center.values.push_back(v[1]);
      s.bottom.values.push_back(v[2]);
    }
    kept.push_back({std::move(s), p.score()});
  }
  std::stable_sort(kept.begin(), kept.end(), [](const Scored& a, const Scored& b) { return a.score > b.score; });

  auto overlapping = [](const Separator& a, const Separator& b) {
    const std::size_t n = a.center.size();
    if (n != b.center.size()) return false;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < n; ++i)
      if (a.top.values[i] <= b.bottom.values[i] && b.top.values[i] <= a.bottom.values[i]) ++hits;
    return 2 * hits >= n;
  };
  std::vector<Separator> out;
  for (auto& cand : kept)
    if (std::none_of(out.begin(), out.end(), [&](const Separator& s) { return overlapping(s, cand.sep); }))
      out.push_back(std::move(cand.sep));
  sort_separators(out, size);
  return out;
}

std::vector<double> regression_target(const Separator& sep, ImageSize size, int k) {
  const auto pos = canonical_positions(fixed_extent(sep.axis, size), k);
  const double scale = free_extent(sep.axis, size);
  std::vector<double> out(static_cast<std::size_t>(3 * k));
  for (int i = 0; i < k; ++i) {
    const double t = pos[static_cast<std::size_t>(i)];
    out[static_cast<std::size_t>(i)] = std::clamp(sep.top_at(t) / scale, 0.0, 1.0);
    out[static_cast<std::size_t>(k + i)] = std::clamp(sep.center_at(t) / scale, 0.0, 1.0);
    out[static_cast<std::size_t>(2 * k + i)] = std::clamp(sep.bottom_at(t) / scale, 0.0, 1.0);
  }
  return out;
}

}  // namespace tsr
