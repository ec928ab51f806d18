#include "tsr/nn/model.hpp"

namespace tsr::nn {

TsrModelImpl::TsrModelImpl(const ModelOptions& opt) : opt_(opt) {
  opt_.validate();
  backbone_ = register_module("backbone", Backbone(opt_));
  row_branch_ = register_module("row_branch", AxisBranch(opt_));
  col_branch_ = register_module("col_branch", AxisBranch(opt_));
  row_decoder_ = register_module("row_decoder", SeparatorDecoder(opt_));
  col_decoder_ = register_module("col_decoder", SeparatorDecoder(opt_));
  merger_ = register_module("merger", CellMerger(opt_));
}

torch::Tensor TsrModelImpl::features(const torch::Tensor& image) { return backbone_(image); }

AxisOutput TsrModelImpl::split(const torch::Tensor& p2, Axis axis, ImageSize size) {
  AxisOutput out;
  const bool row = axis == Axis::Row;
  const auto oriented = row ? p2 : p2.transpose(2, 3);
  out.branch = branch(axis)->forward(oriented, free_extent(axis, size), fixed_extent(axis, size));
  out.aux_logits = row ? out.branch.aux_logits : out.branch.aux_logits.t();
  const auto scores = torch::sigmoid(out.branch.ref_logits.detach()).to(torch::kFloat64).contiguous();
  out.ref_scores.assign(scores.data_ptr<double>(), scores.data_ptr<double>() + scores.numel());
  return out;
}

DecoderOutput TsrModelImpl::decode(const AxisOutput& out, Axis axis, ImageSize size,
                                   const std::vector<int64_t>& indices) {
  if (indices.empty()) {
    const auto o = out.branch.prior_column.options();
    return {torch::zeros({0}, o), torch::zeros({0, 3 * opt_.k_points}, o)};
  }
  const auto [query, pos] = make_queries(out.branch, indices, fixed_extent(axis, size));
  return decoder(axis)->forward(query, pos, out.branch.memory);
}

torch::Tensor TsrModelImpl::merge(const torch::Tensor& p2, const TableGrid& grid) { return merger_(p2, grid); }

std::vector<SeparatorPrediction> to_predictions(const DecoderOutput& out, const std::vector<RefPoint>& refs) {
  const auto logits = out.class_logits.detach().to(torch::kFloat64).contiguous();
  const auto coords = out.coords.detach().to(torch::kFloat64).contiguous();
  const int64_t n = coords.size(1);
  std::vector<SeparatorPrediction> preds;
  for (std::size_t i = 0; i < refs.size(); ++i) {
    SeparatorPrediction p;
    p.class_logit = logits[static_cast<int64_t>(i)].item<double>();
    const double* row = coords.data_ptr<double>() + static_cast<int64_t>(i) * n;
    p.coords.assign(row, row + n);
    p.origin = refs[i];
    preds.push_back(std::move(p));
  }
  return preds;
}

}  // namespace tsr::nn
