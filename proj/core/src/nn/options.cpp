#include "tsr/nn/options.hpp"

#include "tsr/error.hpp"

namespace tsr::nn {

namespace {

int as_int(const Config& c, const std::string& key, int fallback) { return static_cast<int>(c.get_int(key, fallback)); }

}  // namespace

ModelOptions ModelOptions::from_config(const Config& c) {
  ModelOptions o;
  o.backbone_depth = as_int(c, "backbone.depth", o.backbone_depth);
  o.backbone_width = as_int(c, "backbone.width", o.backbone_width);
  o.p2_channels = as_int(c, "backbone.p2_channels", o.p2_channels);
  o.groups = as_int(c, "backbone.groups", o.groups);
  o.high_res_channels = as_int(c, "split.high_res_channels", o.high_res_channels);
  o.k_points = as_int(c, "sepretr.k_points", o.k_points);
  o.decoder_layers = as_int(c, "sepretr.decoder_layers", o.decoder_layers);
  o.heads = as_int(c, "sepretr.heads", o.heads);
  o.ffn_dim = as_int(c, "sepretr.ffn_dim", o.ffn_dim);
  o.dropout = c.get_double("sepretr.dropout", o.dropout);
  o.merge_dim = as_int(c, "merge.dim", o.merge_dim);
  o.merge_blocks = as_int(c, "merge.blocks", o.merge_blocks);
  o.roi_size = as_int(c, "merge.roi_size", o.roi_size);
  o.roi_sampling = as_int(c, "merge.roi_sampling", o.roi_sampling);
  o.spatial_layout = as_int(c, "merge.spatial_layout", o.spatial_layout);
  o.validate();
  return o;
}

void ModelOptions::write(Config& c) const {
  c.set_int("backbone.depth", backbone_depth);
  c.set_int("backbone.width", backbone_width);
  c.set_int("backbone.p2_channels", p2_channels);
  c.set_int("backbone.groups", groups);
  c.set_int("split.high_res_channels", high_res_channels);
  c.set_int("sepretr.k_points", k_points);
  c.set_int("sepretr.decoder_layers", decoder_layers);
  c.set_int("sepretr.heads", heads);
  c.set_int("sepretr.ffn_dim", ffn_dim);
  c.set_double("sepretr.dropout", dropout);
  c.set_int("merge.dim", merge_dim);
  c.set_int("merge.blocks", merge_blocks);
  c.set_int("merge.roi_size", roi_size);
  c.set_int("merge.roi_sampling", roi_sampling);
  c.set_int("merge.spatial_layout", spatial_layout);
}

void ModelOptions::validate() const {
  if (backbone_depth < 1 || backbone_width < 1) throw InvalidInput("backbone depth and width must be positive");
  if (p2_channels < 1 || p2_channels % groups != 0) throw InvalidInput("backbone.p2_channels must be a multiple of groups");
  if (backbone_width % groups != 0) throw InvalidInput("backbone.width must be a multiple of groups");
  if (high_res_channels < 4 || high_res_channels % 4 != 0)
    throw InvalidInput("split.high_res_channels must be a positive multiple of 4");
  if (high_res_channels % heads != 0) throw InvalidInput("split.high_res_channels must be divisible by sepretr.heads");
  if (k_points < 2) throw InvalidInput("sepretr.k_points must be at least 2");
  if (decoder_layers < 1 || ffn_dim < 1) throw InvalidInput("decoder sizes must be positive");
  if (dropout < 0 || dropout >= 1) throw InvalidInput("sepretr.dropout must be in [0, 1)");
  if (merge_dim < 1 || merge_blocks < 0 || roi_size < 1 || roi_sampling < 1)
    throw InvalidInput("merge sizes must be positive");
  if (spatial_layout != 1) throw InvalidInput("unknown merge.spatial_layout " + std::to_string(spatial_layout));
}

DetectOptions DetectOptions::from_config(const Config& c) {
  DetectOptions o;
  o.topk = static_cast<int>(c.get_int("sepretr.topk", o.topk));
  o.ref_thresh = c.get_double("sepretr.ref_thresh", o.ref_thresh);
  o.nms_window = static_cast<int>(c.get_int("sepretr.nms_window", o.nms_window));
  o.infer_thresh = c.get_double("sepretr.infer_thresh", o.infer_thresh);
  o.merge_thresh = c.get_double("merge.thresh", o.merge_thresh);
  if (o.topk < 0 || o.nms_window < 1 || o.nms_window % 2 == 0)
    throw InvalidInput("sepretr.topk must be >= 0 and sepretr.nms_window odd");
  return o;
}

void DetectOptions::write(Config& c) const {
  c.set_int("sepretr.topk", topk);
  c.set_double("sepretr.ref_thresh", ref_thresh);
  c.set_int("sepretr.nms_window", nms_window);
  c.set_double("sepretr.infer_thresh", infer_thresh);
  c.set_double("merge.thresh", merge_thresh);
}

}  // namespace tsr::nn
