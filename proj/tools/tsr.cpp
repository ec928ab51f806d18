// Command-line front end: generate-data, train, infer, eval.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tsr/annotation_io.hpp"
#include "tsr/config.hpp"
#include "tsr/error.hpp"
#include "tsr/evaluate.hpp"
#include "tsr/nn/recognizer.hpp"
#include "tsr/nn/train.hpp"
#include "tsr/synth.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitInternal = 2;

struct GenerateArgs {
  int count = 100;
  std::string out;
  std::uint64_t seed = 0;
  double curve_prob = 0.3;
  double borderless_prob = 0.5;
  int height = 192;
  int width = 256;
  bool no_splits = false;
};

struct TrainArgs {
  std::string config;
  std::vector<std::string> overrides;
};

void apply_overrides(tsr::Config& config, const std::vector<std::string>& overrides) {
  for (const auto& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw tsr::InvalidInput("--set expects key=value, got '" + kv + "'");
    config.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
}

struct InferArgs {
  std::string image;
  std::string ckpt;
  std::string out;
  std::string overlay;
  std::string resize_mode;
  int side = 0;
  std::vector<std::string> overrides;
};

struct EvalArgs {
  std::string pred;
  std::string gt;
  double iou = 0.6;
  bool ignore_empty = false;
  std::string out;
};

int run_generate(const GenerateArgs& a) {
  tsr::DatasetOptions opt;
  opt.count = a.count;
  opt.seed = a.seed;
  opt.curve_prob = a.curve_prob;
  opt.borderless_prob = a.borderless_prob;
  opt.size = {a.height, a.width};
  opt.with_splits = !a.no_splits;
  const auto entries = tsr::generate_dataset(a.out, opt);
  std::printf("wrote %zu tables to %s\n", entries.size(), a.out.c_str());
  return kExitOk;
}

int run_train(const TrainArgs& a) {
  auto config = tsr::Config::load(a.config);
  apply_overrides(config, a.overrides);
  const auto cfg = tsr::nn::TrainConfig::from_config(config);
  const auto result = tsr::nn::train_staged(cfg, [](const tsr::nn::EpochRecord& r) {
    std::printf("stage %d epoch %3d  total %.4f ", r.stage, r.epoch, r.total);
    for (int c = 0; c < tsr::nn::kComponents; ++c) {
      if (r.active[static_cast<std::size_t>(c)]) std::printf(" %s %.4f", tsr::nn::component_name(c), r.components[static_cast<std::size_t>(c)]);
    }
    std::printf("  lr %.2e  %.1fs\n", r.lr_last, r.seconds);
    std::fflush(stdout);
  });
  std::printf("checkpoint: %s\n", result.checkpoint.c_str());
  return kExitOk;
}

int run_infer(const InferArgs& a) {
  auto loaded = tsr::nn::load_checkpoint(a.ckpt);
  auto config = loaded.meta.config;
  if (!a.resize_mode.empty()) config.set("infer.resize_mode", "\"" + a.resize_mode + "\"");
  if (a.side > 0) config.set_int("infer.side", a.side);
  apply_overrides(config, a.overrides);
  tsr::nn::Recognizer recognizer(loaded.model, tsr::nn::InferOptions::from_config(config));
  const auto image = tsr::read_png(a.image);
  const auto result = recognizer.recognize(image);
  tsr::save_result(result, a.out);
  if (!a.overlay.empty()) tsr::write_png(tsr::nn::render_overlay(image, result), a.overlay);
  std::printf("%s: %zu cells, %zu row and %zu column separators (%s)\n", a.image.c_str(), result.cells.size(),
              result.row_separators.size(), result.col_separators.size(), result.status.c_str());
  return kExitOk;
}

int run_eval(const EvalArgs& a) {
  tsr::EvalOptions opt;
  opt.iou_threshold = a.iou;
  opt.ignore_empty = a.ignore_empty;
  const auto report = tsr::evaluate_directories(a.pred, a.gt, opt);
  std::cout << report.to_table();
  if (!a.out.empty()) tsr::write_text(a.out, report.to_json());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Table structure recognition: split-and-merge with separator regression"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate-data", "Write a synthetic table dataset");
  g->add_option("--count", gen.count, "Number of tables")->check(CLI::PositiveNumber);
  g->add_option("--out", gen.out, "Output directory")->required();
  g->add_option("--seed", gen.seed, "Base seed");
  g->add_option("--curve-prob", gen.curve_prob, "Probability of a curved or rotated table")->check(CLI::Range(0.0, 1.0));
  g->add_option("--borderless-prob", gen.borderless_prob, "Probability of a table without ruling lines")
      ->check(CLI::Range(0.0, 1.0));
  g->add_option("--height", gen.height, "Image height");
  g->add_option("--width", gen.width, "Image width");
  g->add_flag("--no-splits", gen.no_splits, "Put every table in the train split");

  TrainArgs train;
  auto* t = app.add_subcommand("train", "Staged training from a config file");
  t->add_option("--config", train.config, "Config file (key = value, [sections])")->required()->check(CLI::ExistingFile);
  t->add_option("--set", train.overrides, "Override a config key: key=value");

  InferArgs infer;
  auto* i = app.add_subcommand("infer", "Recognize one table image");
  i->add_option("--image", infer.image, "Input PNG")->required();
  i->add_option("--ckpt", infer.ckpt, "Checkpoint")->required();
  i->add_option("--out", infer.out, "Result JSON")->required();
  i->add_option("--overlay", infer.overlay, "Optional overlay PNG");
  i->add_option("--resize-mode", infer.resize_mode, "longer: scale the longer side; both: scale both sides")
      ->check(CLI::IsMember({"longer", "both"}));
  i->add_option("--side", infer.side, "Target side length (overrides the checkpoint config)");
  i->add_option("--set", infer.overrides, "Override an inference key of the checkpoint config: key=value");

  EvalArgs eval;
  auto* e = app.add_subcommand("eval", "Score predictions against ground truth");
  e->add_option("--pred", eval.pred, "Prediction directory")->required();
  e->add_option("--gt", eval.gt, "Ground-truth directory")->required();
  e->add_option("--iou", eval.iou, "Cell IoU threshold")->check(CLI::Range(0.0, 1.0));
  e->add_flag("--ignore-empty", eval.ignore_empty, "Drop relations that touch empty cells");
  e->add_option("--out", eval.out, "Report JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*g) return run_generate(gen);
    if (*t) return run_train(train);
    if (*i) return run_infer(infer);
    if (*e) return run_eval(eval);
  } catch (const tsr::InvalidInput& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return kExitInput;
  } catch (const tsr::ShapeError& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return kExitInput;
  } catch (const tsr::TrainingAborted& err) {
    std::fprintf(stderr, "training aborted: %s\n", err.what());
    return kExitInternal;
  } catch (const std::exception& err) {
    std::fprintf(stderr, "internal error: %s\n", err.what());
    return kExitInternal;
  }
  return kExitInternal;
}
