#include "tsr/nn/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

#include "json.hpp"
#include "tsr/error.hpp"
#include "tsr/separators.hpp"
#include "tsr/transform.hpp"

namespace tsr::nn {

namespace {

std::vector<int> to_ints(const std::vector<long long>& v) { return {v.begin(), v.end()}; }

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t x = a * 0x9E3779B97F4A7C15ULL + b + 0x632BE59BD9B4E019ULL;
  x ^= x >> 31;
  x *= 0xBF58476D1CE4E5B9ULL;
  return x ^ (x >> 29);
}

torch::Tensor regression_tensor(const std::vector<std::vector<double>>& rows, int k) {
  std::vector<double> flat;
  for (const auto& r : rows) flat.insert(flat.end(), r.begin(), r.end());
  return torch::tensor(flat, torch::kFloat64).reshape({static_cast<int64_t>(rows.size()), 3 * k}).to(torch::kFloat32);
}

nlohmann::json history_to_json(const std::vector<EpochRecord>& history) {
  auto out = nlohmann::json::array();
  for (const auto& r : history) {
    out.push_back({{"stage", r.stage},
                   {"epoch", r.epoch},
                   {"steps", r.steps},
                   {"lr_last", r.lr_last},
                   {"components", r.components},
                   {"active", r.active},
                   {"total", r.total},
                   {"seconds", r.seconds}});
  }
  return out;
}

std::vector<EpochRecord> history_from_json(const nlohmann::json& j) {
  std::vector<EpochRecord> out;
  for (const auto& e : j) {
    EpochRecord r;
    r.stage = e.at("stage");
    r.epoch = e.at("epoch");
    r.steps = e.at("steps");
    r.lr_last = e.at("lr_last");
    r.components = e.at("components").get<std::array<double, kComponents>>();
    r.active = e.at("active").get<std::array<bool, kComponents>>();
    r.total = e.at("total");
    r.seconds = e.at("seconds");
    out.push_back(r);
  }
  return out;
}

}  // namespace

TrainConfig TrainConfig::from_config(const Config& c) {
  TrainConfig t;
  t.data_dir = c.get_string("data.dir", "");
  t.out_dir = c.get_string("train.out_dir", t.out_dir.string());
  t.split = c.get_string("train.split", t.split);
  t.max_samples = static_cast<int>(c.get_int("train.max_samples", t.max_samples));
  t.stage_epochs = static_cast<int>(c.get_int("train.stage_epochs", t.stage_epochs));
  t.stages = static_cast<int>(c.get_int("train.stages", t.stages));
  t.batch_size = static_cast<int>(c.get_int("train.batch_size", t.batch_size));
  t.epoch_repeats = static_cast<int>(c.get_int("train.epoch_repeats", t.epoch_repeats));
  t.lr = c.get_double("train.lr", t.lr);
  t.beta1 = c.get_double("train.beta1", t.beta1);
  t.beta2 = c.get_double("train.beta2", t.beta2);
  t.adam_eps = c.get_double("train.adam_eps", t.adam_eps);
  t.weight_decay = c.get_double("train.weight_decay", t.weight_decay);
  t.poly_power = c.get_double("train.poly_power", t.poly_power);
  t.poly_reset_per_stage = c.get_bool("train.poly_reset_per_stage", t.poly_reset_per_stage);
  t.rescale_shorter = to_ints(c.get_int_list("train.rescale_shorter", {t.rescale_shorter.begin(), t.rescale_shorter.end()}));
  t.seed = static_cast<std::uint64_t>(c.get_int("train.seed", 0));
  const auto match = c.get_string("train.match", "prior");
  if (match == "prior") {
    t.match = MatchStrategy::PriorEnhanced;
  } else if (match == "unconstrained") {
    t.match = MatchStrategy::Unconstrained;
  } else {
    throw InvalidInput("train.match must be \"prior\" or \"unconstrained\"");
  }
  t.model = ModelOptions::from_config(c);
  t.loss = LossOptions::from_config(c);
  t.detect = DetectOptions::from_config(c);
  t.source = c;
  t.validate();
  return t;
}

Config TrainConfig::to_config() const {
  Config c = source;
  c.set("data.dir", "\"" + data_dir.string() + "\"");
  c.set("train.out_dir", "\"" + out_dir.string() + "\"");
  c.set("train.split", "\"" + split + "\"");
  c.set_int("train.max_samples", max_samples);
  c.set_int("train.stage_epochs", stage_epochs);
  c.set_int("train.stages", stages);
  c.set_int("train.batch_size", batch_size);
  c.set_int("train.epoch_repeats", epoch_repeats);
  c.set_double("train.lr", lr);
  c.set_double("train.beta1", beta1);
  c.set_double("train.beta2", beta2);
  c.set_double("train.adam_eps", adam_eps);
  c.set_double("train.weight_decay", weight_decay);
  c.set_double("train.poly_power", poly_power);
  c.set_bool("train.poly_reset_per_stage", poly_reset_per_stage);
  std::string sizes = "[";
  for (std::size_t i = 0; i < rescale_shorter.size(); ++i) sizes += (i ? ", " : "") + std::to_string(rescale_shorter[i]);
  c.set("train.rescale_shorter", sizes + "]");
  c.set_int("train.seed", static_cast<long long>(seed));
  c.set("train.match", match == MatchStrategy::PriorEnhanced ? "\"prior\"" : "\"unconstrained\"");
  model.write(c);
  loss.write(c);
  detect.write(c);
  return c;
}

void TrainConfig::validate() const {
  if (stage_epochs < 1) throw InvalidInput("train.stage_epochs must be at least 1");
  if (stages < 1 || stages > 3) throw InvalidInput("train.stages must be 1, 2 or 3");
  if (batch_size < 1) throw InvalidInput("train.batch_size must be at least 1");
  if (epoch_repeats < 1) throw InvalidInput("train.epoch_repeats must be at least 1");
  if (max_samples < 0) throw InvalidInput("train.max_samples must be non-negative");
  if (!(lr > 0.0)) throw InvalidInput("train.lr must be positive");
  if (rescale_shorter.empty()) throw InvalidInput("train.rescale_shorter must not be empty");
  for (int s : rescale_shorter) {
    if (s < 32 || s % 32 != 0) throw InvalidInput("train.rescale_shorter sizes must be positive multiples of 32");
  }
  model.validate();
}

int stage_of_epoch(int epoch, int stage_epochs) { return std::min(3, (epoch - 1) / stage_epochs + 1); }

double poly_lr(double base, long long step, long long total, double power) {
  if (total <= 0 || step >= total) return 0.0;
  return base * std::pow(1.0 - static_cast<double>(step) / static_cast<double>(total), power);
}

const char* component_name(int c) noexcept {
  static constexpr const char* names[] = {"ref_row", "ref_col", "aux_row", "aux_col", "line_row", "line_col", "merge"};
  return c >= 0 && c < kComponents ? names[c] : "?";
}

void save_checkpoint(const std::filesystem::path& path, TsrModel& model, const CheckpointMeta& meta) {
  torch::serialize::OutputArchive archive;
  model->save(archive);
  const nlohmann::json j{{"config", meta.config.to_text()},
                         {"stage", meta.stage},
                         {"epoch", meta.epoch},
                         {"history", history_to_json(meta.history)}};
  archive.write("tsr_meta", c10::IValue(j.dump()));
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  archive.save_to(tmp.string());
  std::filesystem::rename(tmp, path);
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path)) throw InvalidInput("checkpoint not found: " + path.string());
  torch::serialize::InputArchive archive;
  c10::IValue meta_value;
  try {
    archive.load_from(path.string());
    if (!archive.try_read("tsr_meta", meta_value)) throw InvalidInput("not a checkpoint: " + path.string());
  } catch (const c10::Error&) {
    throw InvalidInput("not a checkpoint: " + path.string());
  }
  const auto j = nlohmann::json::parse(meta_value.toStringRef());
  LoadedCheckpoint out;
  out.meta.config = Config::parse(j.at("config").get<std::string>());
  out.meta.stage = j.at("stage");
  out.meta.epoch = j.at("epoch");
  out.meta.history = history_from_json(j.at("history"));
  out.model = TsrModel(ModelOptions::from_config(out.meta.config));
  out.model->load(archive);
  return out;
}

TrainSample prepare_sample(const Image& image, const TableAnnotation& annotation, int shorter_side, int k) {
  const auto plan = ResizePlan::shorter_side(image.size(), shorter_side);
  TrainSample s;
  s.image = apply_plan(image, plan);
  s.resized = plan.resized;
  s.annotation = scale_annotation(annotation, plan.sx(), plan.sy(), plan.resized);
  s.targets = derive_targets(s.annotation, plan.padded, k);
  return s;
}

LossBundle image_losses(TsrModel& model, const TrainSample& sample, int stage, const TrainConfig& cfg,
                        std::uint64_t seed) {
  const ImageSize size = sample.targets.size;
  const auto p2 = model->features(image_to_tensor(sample.image));
  const auto& t = sample.targets;
  const int k = cfg.model.k_points;
  LossBundle b;
  for (Axis axis : {Axis::Row, Axis::Column}) {
    const bool row = axis == Axis::Row;
    const auto out = model->split(p2, axis, size);
    const auto& heat = row ? t.row_heatmap : t.col_heatmap;
    const auto& gts = sample.annotation.separators(axis);
    const auto heat_t = torch::tensor(heat, torch::kFloat32);
    (row ? b.ref_row : b.ref_col) =
        ref_point_loss(torch::sigmoid(out.branch.ref_logits), heat_t, static_cast<int64_t>(gts.size()), cfg.loss);
    (row ? b.aux_row : b.aux_col) =
        aux_seg_loss(torch::sigmoid(out.aux_logits), row ? t.row_mask : t.col_mask, mix(seed, row ? 1 : 2), cfg.loss);
    if (stage < 2) continue;

    const auto refs =
        detect_peaks(out.ref_scores, PeakOptions{cfg.detect.nms_window, cfg.detect.topk, cfg.detect.ref_thresh});
    std::vector<int64_t> indices;
    std::vector<double> positions;
    for (const auto& r : refs) {
      indices.push_back(r.index);
      positions.push_back(r.index);
    }
    const auto decoded = model->decode(out, axis, size, indices);
    const auto assignment =
        match_references(positions, gts, static_cast<double>(out.branch.prior_position), cfg.match);
    (row ? b.line_row : b.line_col) =
        line_loss(torch::sigmoid(decoded.class_logits), decoded.coords,
                  regression_tensor(row ? t.row_regression : t.col_regression, k), assignment, cfg.loss);
  }
  if (stage >= 3) {
    const auto grid = build_grid(sample.annotation.row_separators, sample.annotation.col_separators, sample.resized);
    const auto logits = model->merge(p2, grid);
    std::vector<float> labels(t.merge_labels.begin(), t.merge_labels.end());
    b.merge = merge_loss_ohem(torch::sigmoid(logits), torch::tensor(labels, torch::kFloat32), cfg.loss);
  }
  return b;
}

TrainResult train_staged(const TrainConfig& cfg, const std::function<void(const EpochRecord&)>& on_epoch) {
  cfg.validate();
  const Dataset data(cfg.data_dir);
  std::vector<std::string> ids;
  if (cfg.split == "all") {
    for (const auto& e : data.entries()) ids.push_back(e.id);
  } else {
    ids = data.ids(cfg.split);
  }
  if (cfg.max_samples > 0 && ids.size() > static_cast<std::size_t>(cfg.max_samples)) ids.resize(static_cast<std::size_t>(cfg.max_samples));
  if (ids.empty()) throw InvalidInput("no training samples in split '" + cfg.split + "'");

  std::vector<Image> images;
  std::vector<TableAnnotation> annotations;
  for (const auto& id : ids) {
    images.push_back(data.image(id));
    annotations.push_back(data.annotation(id));
  }

  torch::manual_seed(cfg.seed);
  TrainResult result;
  result.model = TsrModel(cfg.model);
  auto& model = result.model;
  model->train();
  torch::optim::AdamW optimizer(model->parameters(), torch::optim::AdamWOptions(cfg.lr)
                                                         .betas({cfg.beta1, cfg.beta2})
                                                         .eps(cfg.adam_eps)
                                                         .weight_decay(cfg.weight_decay));

  const auto per_epoch_images = static_cast<long long>(ids.size()) * cfg.epoch_repeats;
  const long long steps_per_epoch = (per_epoch_images + cfg.batch_size - 1) / cfg.batch_size;
  const int epochs = cfg.stage_epochs * cfg.stages;
  const long long schedule_steps = steps_per_epoch * (cfg.poly_reset_per_stage ? cfg.stage_epochs : epochs);
  long long step = 0;
  CheckpointMeta meta;
  meta.config = cfg.to_config();

  for (int epoch = 1; epoch <= epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    const int stage = stage_of_epoch(epoch, cfg.stage_epochs);
    if (cfg.poly_reset_per_stage && epoch > 1 && stage != stage_of_epoch(epoch - 1, cfg.stage_epochs)) step = 0;

    std::mt19937_64 rng(mix(cfg.seed, static_cast<std::uint64_t>(epoch)));
    std::vector<std::size_t> order;
    for (int r = 0; r < cfg.epoch_repeats; ++r) {
      std::vector<std::size_t> pass(ids.size());
      std::iota(pass.begin(), pass.end(), 0);
      std::shuffle(pass.begin(), pass.end(), rng);
      order.insert(order.end(), pass.begin(), pass.end());
    }
    std::uniform_int_distribution<std::size_t> pick_size(0, cfg.rescale_shorter.size() - 1);

    EpochRecord rec;
    rec.stage = stage;
    rec.epoch = epoch;
    for (std::size_t first = 0; first < order.size(); first += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t last = std::min(order.size(), first + static_cast<std::size_t>(cfg.batch_size));
      const double lr = poly_lr(cfg.lr, step, schedule_steps, cfg.poly_power);
      for (auto& group : optimizer.param_groups()) static_cast<torch::optim::AdamWOptions&>(group.options()).lr(lr);
      optimizer.zero_grad();
      for (std::size_t i = first; i < last; ++i) {
        const std::size_t idx = order[i];
        const int side = cfg.rescale_shorter[pick_size(rng)];
        const auto sample = prepare_sample(images[idx], annotations[idx], side, cfg.model.k_points);
        const auto bundle = image_losses(model, sample, stage, cfg, mix(rng(), idx));
        const auto total = bundle.total(cfg.loss.lambda);
        (total / static_cast<double>(last - first)).backward();
        const torch::Tensor parts[kComponents] = {bundle.ref_row,  bundle.ref_col,  bundle.aux_row, bundle.aux_col,
                                                  bundle.line_row, bundle.line_col, bundle.merge};
        for (int c = 0; c < kComponents; ++c) {
          if (!parts[c].defined()) continue;
          rec.active[static_cast<std::size_t>(c)] = true;
          rec.components[static_cast<std::size_t>(c)] += parts[c].item<double>();
        }
        rec.total += total.item<double>();
      }
      optimizer.step();
      rec.lr_last = lr;
      ++rec.steps;
      ++step;
    }
    for (auto& v : rec.components) v /= static_cast<double>(order.size());
    rec.total /= static_cast<double>(order.size());
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);

    meta.stage = stage;
    meta.epoch = epoch;
    meta.history = result.history;
    result.checkpoint = cfg.out_dir / "last.pt";
    save_checkpoint(result.checkpoint, model, meta);
    if (epoch % cfg.stage_epochs == 0) {
      std::filesystem::copy_file(result.checkpoint, cfg.out_dir / ("stage" + std::to_string(stage) + ".pt"),
                                 std::filesystem::copy_options::overwrite_existing);
    }
  }
  return result;
}

}  // namespace tsr::nn
