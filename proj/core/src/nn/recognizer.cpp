#include "tsr/nn/recognizer.hpp"

#include "tsr/error.hpp"
#include "tsr/grid.hpp"
#include "tsr/separators.hpp"

namespace tsr::nn {

namespace {

// Keeps separators whose center on the prior line lies strictly inside the
// resized image, away from the border pseudo-separators.
std::vector<Separator> inside(std::vector<Separator> seps, Axis axis, ImageSize resized) {
  const double ref = reference_position(fixed_extent(axis, resized));
  const double hi = free_extent(axis, resized) - 2.0;
  std::erase_if(seps, [&](const Separator& s) {
    const double c = s.center_at(ref);
    return c < 1.0 || c > hi;
  });
  return seps;
}

}  // namespace

InferOptions InferOptions::from_config(const Config& c) {
  InferOptions o;
  o.side = static_cast<int>(c.get_int("infer.side", o.side));
  const auto mode = c.get_string("infer.resize_mode", "longer");
  if (mode != "longer" && mode != "both") throw InvalidInput("infer.resize_mode must be \"longer\" or \"both\"");
  o.square = mode == "both";
  o.merge = c.get_bool("infer.merge", o.merge);
  o.detect = DetectOptions::from_config(c);
  if (o.side < 32) throw InvalidInput("infer.side must be at least 32");
  return o;
}

ResizePlan InferOptions::plan(ImageSize original) const {
  return square ? ResizePlan::square(original, side) : ResizePlan::longer_side(original, side);
}

Recognizer::Recognizer(TsrModel model, InferOptions opt) : model_(std::move(model)), opt_(opt) { model_->eval(); }

TableResult Recognizer::recognize(const Image& image) {
  if (image.empty()) throw InvalidInput("empty image");
  torch::NoGradGuard guard;
  const auto plan = opt_.plan(image.size());
  const auto p2 = model_->features(image_to_tensor(apply_plan(image, plan)));
  const PeakOptions peaks{opt_.detect.nms_window, opt_.detect.topk, opt_.detect.ref_thresh};

  std::vector<Separator> seps[2];
  for (Axis axis : {Axis::Row, Axis::Column}) {
    const auto out = model_->split(p2, axis, plan.padded);
    const auto refs = detect_peaks(out.ref_scores, peaks);
    std::vector<int64_t> indices;
    for (const auto& r : refs) indices.push_back(r.index);
    const auto preds = to_predictions(model_->decode(out, axis, plan.padded, indices), refs);
    seps[axis == Axis::Row ? 0 : 1] =
        inside(predictions_to_separators(preds, axis, plan.padded, opt_.detect.infer_thresh), axis, plan.resized);
  }

  TableResult result;
  result.image_size = image.size();
  const double ix = 1.0 / plan.sx(), iy = 1.0 / plan.sy();
  for (const auto& s : seps[0]) result.row_separators.push_back(scale_separator(s, ix, iy));
  for (const auto& s : seps[1]) result.col_separators.push_back(scale_separator(s, ix, iy));

  TableGrid grid;
  try {
    grid = build_grid(seps[0], seps[1], plan.resized);
  } catch (const GridInconsistency& e) {
    result.status = "grid_error";
    result.message = e.what();
    return result;
  }
  std::vector<CellPair> merges;
  if (opt_.merge) {
    const auto probs = torch::sigmoid(model_->merge(p2, grid)).contiguous();
    const auto pairs = adjacent_pairs(grid.rows(), grid.cols());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      if (probs[static_cast<int64_t>(i)].item<float>() >= opt_.detect.merge_thresh) merges.push_back(pairs[i]);
    }
  }
  for (auto cell : resolve_spans(grid, merges)) {
    for (auto& p : cell.polygon) p = plan.to_original(p);
    update_bbox(cell);
    result.cells.push_back(std::move(cell));
  }
  return result;
}

EvalReport evaluate_model(Recognizer& recognizer, const Dataset& data, const std::vector<std::string>& ids,
                          const EvalOptions& opt, const std::filesystem::path& pred_dir) {
  if (!pred_dir.empty()) std::filesystem::create_directories(pred_dir);
  std::vector<SampleScore> scores;
  for (const auto& id : ids) {
    const auto result = recognizer.recognize(data.image(id));
    if (!pred_dir.empty()) save_result(result, pred_dir / (id + ".json"));
    const auto gt = data.annotation(id);
    scores.push_back(evaluate_sample(id, CellFile{result.image_size, result.cells, {}},
                                     CellFile{gt.image_size, gt.cells, gt.content_boxes}, opt));
  }
  return aggregate(std::move(scores), opt);
}

Image render_overlay(const Image& image, const TableResult& result) {
  Image out = image.channels() == 3 ? image : gray_to_rgb(image);
  for (const auto* seps : {&result.row_separators, &result.col_separators}) {
    for (const auto& s : *seps) {
      for (std::size_t i = 1; i < s.center.size(); ++i) draw_line(out, s.center.point(i - 1), s.center.point(i), {0, 90, 255}, 1);
    }
  }
  for (const auto& c : result.cells) draw_polygon(out, c.polygon, {220, 30, 30}, 1);
  return out;
}

}  // namespace tsr::nn
