#include "tsr/evaluate.hpp"

#include <algorithm>
#include <cstdio>
#include <map>

#include "json.hpp"

#include "tsr/error.hpp"

namespace tsr {

namespace fs = std::filesystem;

namespace {

std::map<std::string, fs::path> json_files(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw InvalidInput("not a directory: " + dir.string());
  const fs::path sub = dir / "annotations";
  const fs::path root = fs::is_directory(sub) ? sub : dir;
  std::map<std::string, fs::path> out;
  for (const auto& e : fs::directory_iterator(root)) {
    if (!e.is_regular_file() || e.path().extension() != ".json") continue;
    if (e.path().filename() == "manifest.json" || e.path().filename() == "report.json") continue;
    out.emplace(e.path().stem().string(), e.path());
  }
  return out;
}

std::string join_ids(const std::vector<std::string>& ids) {
  std::string s;
  for (std::size_t i = 0; i < ids.size(); ++i) s += (i ? ", " : "") + ids[i];
  return s;
}

nlohmann::json score_json(const AdjacencyScore& s) {
  return {{"precision", s.precision}, {"recall", s.recall},          {"f1", s.f1},
          {"true_positives", s.true_positives}, {"pred_relations", s.pred_relations},
          {"gt_relations", s.gt_relations}};
}

}  // namespace

SampleScore evaluate_sample(const std::string& id, const CellFile& pred, const CellFile& gt, const EvalOptions& opt) {
  SampleScore s;
  s.id = id;
  std::vector<bool> empty;
  if (opt.ignore_empty && !gt.content_boxes.empty()) empty = empty_cells(gt.cells, gt.content_boxes);
  s.adjacency = adjacency_prf(pred.cells, gt.cells, opt.iou_threshold, empty);
  s.teds_struct = teds_struct(cells_to_tree(pred.cells), cells_to_tree(gt.cells));
  return s;
}

EvalReport aggregate(std::vector<SampleScore> samples, const EvalOptions& opt) {
  EvalReport r;
  r.options = opt;
  int tp = 0, pred = 0, gt = 0;
  double teds = 0.0;
  for (const auto& s : samples) {
    tp += s.adjacency.true_positives;
    pred += s.adjacency.pred_relations;
    gt += s.adjacency.gt_relations;
    teds += s.teds_struct;
  }
  r.aggregate = score_from_counts(tp, pred, gt);
  r.mean_teds_struct = samples.empty() ? 1.0 : teds / static_cast<double>(samples.size());
  r.samples = std::move(samples);
  return r;
}

EvalReport evaluate_directories(const fs::path& pred_dir, const fs::path& gt_dir, const EvalOptions& opt) {
  const auto preds = json_files(pred_dir);
  const auto gts = json_files(gt_dir);
  if (preds.empty()) throw InvalidInput("no prediction files in " + pred_dir.string());
  if (gts.empty()) throw InvalidInput("no ground-truth files in " + gt_dir.string());

  std::vector<std::string> missing_pred, missing_gt;
  for (const auto& [id, p] : gts)
    if (!preds.contains(id)) missing_pred.push_back(id);
  for (const auto& [id, p] : preds)
    if (!gts.contains(id)) missing_gt.push_back(id);
  if (!missing_pred.empty() || !missing_gt.empty()) {
    std::string msg = "prediction and ground-truth ids differ";
    if (!missing_pred.empty()) msg += "; missing predictions: " + join_ids(missing_pred);
    if (!missing_gt.empty()) msg += "; missing ground truth: " + join_ids(missing_gt);
    throw InvalidInput(msg);
  }

  std::vector<SampleScore> samples;
  for (const auto& [id, gt_path] : gts)
    samples.push_back(evaluate_sample(id, load_cells(preds.at(id)), load_cells(gt_path), opt));
  return aggregate(std::move(samples), opt);
}

std::string EvalReport::to_json() const {
  nlohmann::json j;
  j["iou_threshold"] = options.iou_threshold;
  j["ignore_empty"] = options.ignore_empty;
  j["aggregate"] = score_json(aggregate);
  j["aggregate"]["teds_struct"] = mean_teds_struct;
  j["aggregate"]["samples"] = samples.size();
  auto& per = j["samples"] = nlohmann::json::array();
  for (const auto& s : samples) {
    auto e = score_json(s.adjacency);
    e["id"] = s.id;
    e["teds_struct"] = s.teds_struct;
    per.push_back(std::move(e));
  }
  return j.dump(2);
}

std::string EvalReport::to_table() const {
  std::size_t w = 9;
  for (const auto& s : samples) w = std::max(w, s.id.size());
  std::string out;
  char line[256];
  auto row = [&](const std::string& id, const AdjacencyScore& a, double teds) {
    std::snprintf(line, sizeof line, "%-*s %9.4f %9.4f %9.4f %11.4f\n", static_cast<int>(w), id.c_str(), a.precision,
                  a.recall, a.f1, teds);
    out += line;
  };
  std::snprintf(line, sizeof line, "%-*s %9s %9s %9s %11s\n", static_cast<int>(w), "id", "precision", "recall", "f1",
                "teds_struct");
  out += line;
  for (const auto& s : samples) row(s.id, s.adjacency, s.teds_struct);
  out += std::string(w + 42, '-') + "\n";
  row("aggregate", aggregate, mean_teds_struct);
  std::snprintf(line, sizeof line, "iou threshold %.2f%s\n", options.iou_threshold,
                options.ignore_empty ? ", empty cells ignored" : "");
  out += line;
  return out;
}

}  // namespace tsr
