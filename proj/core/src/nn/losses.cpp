#include "tsr/nn/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "tsr/error.hpp"

namespace tsr::nn {

LossOptions LossOptions::from_config(const Config& c) {
  LossOptions o;
  o.lambda = c.get_double("loss.lambda", o.lambda);
  o.focal_alpha = c.get_double("loss.focal_alpha", o.focal_alpha);
  o.focal_beta = c.get_double("loss.focal_beta", o.focal_beta);
  o.pixels_per_class = static_cast<int>(c.get_int("loss.pixels_per_class", o.pixels_per_class));
  o.ohem_pairs = static_cast<int>(c.get_int("loss.ohem_pairs", o.ohem_pairs));
  if (o.pixels_per_class < 1 || o.ohem_pairs < 1) throw InvalidInput("loss sample counts must be positive");
  return o;
}

void LossOptions::write(Config& c) const {
  c.set_double("loss.lambda", lambda);
  c.set_double("loss.focal_alpha", focal_alpha);
  c.set_double("loss.focal_beta", focal_beta);
  c.set_int("loss.pixels_per_class", pixels_per_class);
  c.set_int("loss.ohem_pairs", ohem_pairs);
}

namespace {

torch::Tensor bce(const torch::Tensor& prob, const torch::Tensor& target, double eps) {
  const auto p = prob.clamp(eps, 1.0 - eps);
  return -(target * torch::log(p) + (1.0 - target) * torch::log(1.0 - p));
}

}  // namespace

torch::Tensor ref_point_loss(const torch::Tensor& prob, const torch::Tensor& target, int64_t n_sep,
                             const LossOptions& opt) {
  if (n_sep == 0) return torch::zeros({}, prob.options());
  const auto p = prob.clamp(opt.eps, 1.0 - opt.eps);
  const auto pos = target.eq(1.0);
  const auto pos_term = torch::pow(1.0 - p, opt.focal_alpha) * torch::log(p);
  const auto neg_term = torch::pow(1.0 - target, opt.focal_beta) * torch::pow(p, opt.focal_alpha) * torch::log(1.0 - p);
  return -torch::where(pos, pos_term, neg_term).sum() / static_cast<double>(n_sep);
}

torch::Tensor line_loss(const torch::Tensor& class_prob, const torch::Tensor& coords, const torch::Tensor& targets,
                        const Assignment& assignment, const LossOptions& opt) {
  const int64_t q = class_prob.size(0);
  if (q == 0) return torch::zeros({}, class_prob.options());
  std::vector<double> positive(static_cast<std::size_t>(q), 0.0);
  for (const auto& [qi, gi] : assignment.pairs) positive[static_cast<std::size_t>(qi)] = 1.0;
  const auto pos = torch::tensor(positive, torch::kFloat64).to(class_prob.dtype());
  const auto p = class_prob.clamp(opt.eps, 1.0 - opt.eps);
  const auto cls = -(pos * torch::pow(1.0 - p, opt.focal_alpha) * torch::log(p) +
                     (1.0 - pos) * torch::pow(p, opt.focal_alpha) * torch::log(1.0 - p));
  auto loss = cls.sum();
  if (!assignment.pairs.empty()) {
    std::vector<int64_t> qi, gi;
    for (const auto& [a, b] : assignment.pairs) {
      qi.push_back(a);
      gi.push_back(b);
    }
    const auto pred = coords.index_select(0, torch::tensor(qi));
    const auto gt = targets.index_select(0, torch::tensor(gi));
    loss = loss + (pred - gt).abs().mean(1).sum();
  }
  return loss;
}

std::vector<int64_t> sample_pixels(const std::vector<std::uint8_t>& mask, int n_pos, int n_neg, std::uint64_t seed) {
  std::vector<int64_t> pos, neg;
  for (std::size_t i = 0; i < mask.size(); ++i) (mask[i] ? pos : neg).push_back(static_cast<int64_t>(i));
  std::mt19937_64 rng(seed);
  std::vector<int64_t> out;
  auto take = [&](std::vector<int64_t>& from, int n) {
    const auto count = std::min<std::size_t>(from.size(), static_cast<std::size_t>(n));
    // Partial Fisher-Yates: the first `count` entries become a uniform sample.
    for (std::size_t i = 0; i < count; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, from.size() - 1);
      std::swap(from[i], from[pick(rng)]);
    }
    out.insert(out.end(), from.begin(), from.begin() + static_cast<std::ptrdiff_t>(count));
  };
  take(pos, n_pos);
  take(neg, n_neg);
  std::sort(out.begin(), out.end());
  return out;
}

torch::Tensor aux_seg_loss(const torch::Tensor& prob, const std::vector<std::uint8_t>& mask_gt, std::uint64_t seed,
                           const LossOptions& opt) {
  if (static_cast<std::size_t>(prob.numel()) != mask_gt.size()) throw ShapeError("aux_seg_loss: mask size mismatch");
  const auto idx = sample_pixels(mask_gt, opt.pixels_per_class, opt.pixels_per_class, seed);
  if (idx.empty()) return torch::zeros({}, prob.options());
  std::vector<double> labels;
  labels.reserve(idx.size());
  for (auto i : idx) labels.push_back(mask_gt[static_cast<std::size_t>(i)] ? 1.0 : 0.0);
  const auto p = prob.reshape({-1}).index_select(0, torch::tensor(idx));
  return bce(p, torch::tensor(labels, torch::kFloat64).to(prob.dtype()), opt.eps).mean();
}

torch::Tensor merge_loss_ohem(const torch::Tensor& prob, const torch::Tensor& labels, const LossOptions& opt) {
  if (prob.numel() == 0) return torch::zeros({}, prob.options());
  const auto y = labels.to(prob.dtype());
  const auto losses = bce(prob, y, opt.eps);
  auto hardest = [&](const torch::Tensor& sel) {
    const auto idx = sel.nonzero().squeeze(1);
    const auto l = losses.index_select(0, idx);
    const auto n = std::min<int64_t>(l.size(0), opt.ohem_pairs);
    return std::get<0>(torch::topk(l, n));
  };
  const auto picked = torch::cat({hardest(y.gt(0.5)), hardest(y.le(0.5))});
  return picked.mean();
}

torch::Tensor LossBundle::total(double lambda) const {
  torch::Tensor sum;
  auto add = [&](const torch::Tensor& t, double w, const char* name) {
    if (!t.defined()) return;
    if (!torch::isfinite(t).all().item<bool>()) throw TrainingAborted(std::string("non-finite loss component ") + name);
    sum = sum.defined() ? sum + w * t : w * t;
  };
  add(ref_row, lambda, "ref_row");
  add(ref_col, lambda, "ref_col");
  add(aux_row, 1.0, "aux_row");
  add(aux_col, 1.0, "aux_col");
  add(line_row, 1.0, "line_row");
  add(line_col, 1.0, "line_col");
  add(merge, 1.0, "merge");
  return sum.defined() ? sum : torch::zeros({});
}

}  // namespace tsr::nn
