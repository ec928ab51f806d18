#include "tsr/nn/decoder.hpp"

#include <cmath>

#include "tsr/error.hpp"

namespace tsr::nn {

AttentionImpl::AttentionImpl(int dim, int heads, double dropout) : heads_(heads) {
  if (dim % heads != 0) throw InvalidInput("attention dim must be divisible by heads");
  q_ = register_module("q", torch::nn::Linear(dim, dim));
  k_ = register_module("k", torch::nn::Linear(dim, dim));
  v_ = register_module("v", torch::nn::Linear(dim, dim));
  out_ = register_module("out", torch::nn::Linear(dim, dim));
  dropout_ = register_module("dropout", torch::nn::Dropout(dropout));
}

torch::Tensor AttentionImpl::attend(const torch::Tensor& q, const torch::Tensor& k, const torch::Tensor& v) {
  const int64_t d = q.size(1) / heads_;
  auto split = [&](const torch::Tensor& t) { return t.reshape({t.size(0), heads_, d}).transpose(0, 1); };
  const auto qh = split(q), kh = split(k), vh = split(v);  // (h, n, d)
  auto w = torch::softmax(torch::matmul(qh, kh.transpose(1, 2)) / std::sqrt(static_cast<double>(d)), -1);
  w = dropout_(w);
  const auto o = torch::matmul(w, vh).transpose(0, 1).reshape({q.size(0), q.size(1)});
  return out_(o);
}

torch::Tensor AttentionImpl::forward(const torch::Tensor& query, const torch::Tensor& key, const torch::Tensor& value) {
  return attend(q_(query), k_(key), v_(value));
}

torch::Tensor AttentionImpl::forward_memory(const torch::Tensor& query, const PriorMemory& m) {
  const int64_t fl = m.low.size(0), k = m.low.size(1), c = m.low.size(2);
  const int64_t f = m.row_interp.size(0);
  const int64_t half = m.pos_free.size(1);
  auto up = [&](const torch::Tensor& low_proj) {  // (F', K, C') -> (F * K, C')
    return torch::matmul(m.row_interp, low_proj.reshape({fl, k * c})).reshape({f * k, c});
  };
  const auto& wk = k_->weight;
  const auto low_k = torch::matmul(m.low, wk.t());
  const auto pos_f = torch::matmul(m.pos_free, wk.slice(1, 0, half).t());     // (F, C')
  const auto pos_x = torch::matmul(m.pos_fixed, wk.slice(1, half).t());       // (K, C')
  const auto key = (up(low_k).reshape({f, k, c}) + pos_f.unsqueeze(1) + pos_x.unsqueeze(0)).reshape({f * k, c}) + k_->bias;
  const auto value = up(torch::matmul(m.low, v_->weight.t())) + v_->bias;
  return attend(q_(query), key, value);
}

DecoderLayerImpl::DecoderLayerImpl(int dim, int heads, int ffn_dim, double dropout) {
  self_attn_ = register_module("self_attn", Attention(dim, heads, dropout));
  cross_attn_ = register_module("cross_attn", Attention(dim, heads, dropout));
  ffn1_ = register_module("ffn1", torch::nn::Linear(dim, ffn_dim));
  ffn2_ = register_module("ffn2", torch::nn::Linear(ffn_dim, dim));
  norm1_ = register_module("norm1", torch::nn::LayerNorm(torch::nn::LayerNormOptions({dim})));
  norm2_ = register_module("norm2", torch::nn::LayerNorm(torch::nn::LayerNormOptions({dim})));
  norm3_ = register_module("norm3", torch::nn::LayerNorm(torch::nn::LayerNormOptions({dim})));
  drop_ = register_module("drop", torch::nn::Dropout(dropout));
}

torch::Tensor DecoderLayerImpl::forward(const torch::Tensor& tgt, const torch::Tensor& query_pos,
                                        const PriorMemory& memory, bool factored) {
  const auto q = tgt + query_pos;
  auto x = norm1_(tgt + drop_(self_attn_(q, q, tgt)));
  torch::Tensor cross;
  if (factored) {
    cross = cross_attn_->forward_memory(x + query_pos, memory);
  } else {
    const auto mem = memory.dense();
    const auto c = mem.size(2);
    const auto flat = mem.reshape({-1, c});
    cross = cross_attn_(x + query_pos, flat + memory.dense_pos().reshape({-1, c}), flat);
  }
  x = norm2_(x + drop_(cross));
  return norm3_(x + drop_(ffn2_(drop_(torch::relu(ffn1_(x))))));
}

SeparatorDecoderImpl::SeparatorDecoderImpl(const ModelOptions& opt) : k_(opt.k_points) {
  const int d = opt.high_res_channels;
  layers_ = register_module("layers", torch::nn::ModuleList());
  for (int i = 0; i < opt.decoder_layers; ++i) layers_->push_back(DecoderLayer(d, opt.heads, opt.ffn_dim, opt.dropout));
  class_head_ = register_module(
      "class_head", torch::nn::Sequential(torch::nn::Linear(d, d), torch::nn::ReLU(), torch::nn::Linear(d, 1)));
  reg_head_ = register_module(
      "reg_head", torch::nn::Sequential(torch::nn::Linear(d, d), torch::nn::ReLU(), torch::nn::Linear(d, 3 * opt.k_points)));
  torch::NoGradGuard guard;
  class_head_->ptr<torch::nn::LinearImpl>(2)->bias.fill_(-std::log((1 - 0.01) / 0.01));
}

DecoderOutput SeparatorDecoderImpl::forward(const torch::Tensor& query_features, const torch::Tensor& query_pos,
                                            const PriorMemory& memory, bool factored) {
  const auto opt = memory.low.options();
  if (query_features.size(0) == 0) return {torch::zeros({0}, opt), torch::zeros({0, 3 * k_}, opt)};
  auto x = query_features;
  for (const auto& layer : *layers_) x = layer->as<DecoderLayer>()->forward(x, query_pos, memory, factored);
  return {class_head_->forward(x).squeeze(1), torch::sigmoid(reg_head_->forward(x))};
}

std::pair<torch::Tensor, torch::Tensor> make_queries(const BranchOutput& branch, const std::vector<int64_t>& indices,
                                                     int64_t fixed_extent) {
  const auto opt = branch.prior_column.options();
  const int64_t f = branch.prior_column.size(0);
  const int64_t half = branch.prior_column.size(1) / 2;
  const auto idx = torch::tensor(indices, torch::kInt64);
  const auto features = branch.prior_column.index_select(0, idx);
  const auto n = static_cast<int64_t>(indices.size());
  const auto pos_free = sine_embedding(idx.to(opt) / static_cast<double>(f), half);
  const auto pos_fixed = sine_embedding(
      torch::full({n}, static_cast<double>(branch.prior_position) / static_cast<double>(fixed_extent), opt), half);
  return {features, torch::cat({pos_free, pos_fixed}, 1)};
}

}  // namespace tsr::nn
