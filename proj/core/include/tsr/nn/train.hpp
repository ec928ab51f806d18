#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "tsr/config.hpp"
#include "tsr/matching.hpp"
#include "tsr/nn/losses.hpp"
#include "tsr/nn/model.hpp"
#include "tsr/nn/options.hpp"
#include "tsr/synth.hpp"

namespace tsr::nn {

struct TrainConfig {
  std::filesystem::path data_dir;
  std::filesystem::path out_dir = "runs/train";
  /// "train", "val", "test" or "all".
  std::string split = "train";
  /// Use only the first n ids of the split; 0 keeps all.
  int max_samples = 0;
  int stage_epochs = 20;
  /// Train stages 1..stages (3 = the full model).
  int stages = 3;
  int batch_size = 16;
  /// Passes over the data per epoch.
  int epoch_repeats = 1;
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double weight_decay = 5e-4;
  double poly_power = 0.9;
  bool poly_reset_per_stage = false;
  std::vector<int> rescale_shorter{416, 512, 608, 704, 800};
  std::uint64_t seed = 0;
  MatchStrategy match = MatchStrategy::PriorEnhanced;
  ModelOptions model;
  LossOptions loss;
  DetectOptions detect;
  /// Keys of the parsed file that are not training keys (e.g. infer.*);
  /// carried into checkpoints.
  Config source;

  static TrainConfig from_config(const Config& c);
  /// Full snapshot; from_config(to_config()) reproduces this object.
  Config to_config() const;
  void validate() const;
};

/// Stage (1..3) of 1-based `epoch` with `stage_epochs` epochs per stage.
int stage_of_epoch(int epoch, int stage_epochs);
/// base * (1 - step / total)^power, 0 once step >= total.
double poly_lr(double base, long long step, long long total, double power);

/// Losses of one component, in LossBundle order.
enum LossComponent { kRefRow, kRefCol, kAuxRow, kAuxCol, kLineRow, kLineCol, kMerge, kComponents };
const char* component_name(int c) noexcept;

struct EpochRecord {
  int stage = 0;
  int epoch = 0;
  long long steps = 0;
  double lr_last = 0.0;
  /// Mean over the epoch's images of each component (0 when inactive).
  std::array<double, kComponents> components{};
  std::array<bool, kComponents> active{};
  double total = 0.0;
  double seconds = 0.0;
};

struct CheckpointMeta {
  Config config;
  int stage = 0;
  int epoch = 0;
  std::vector<EpochRecord> history;
};

/// Parameters plus metadata in one torch archive, written atomically.
void save_checkpoint(const std::filesystem::path& path, TsrModel& model, const CheckpointMeta& meta);

struct LoadedCheckpoint {
  TsrModel model{nullptr};
  CheckpointMeta meta;
};
/// Rebuilds the model from the stored config. Throws InvalidInput if the file
/// is missing or is not a checkpoint.
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

/// One preprocessed training image: rescaled, padded, with targets on the
/// padded size.
struct TrainSample {
  Image image;
  ImageSize resized;
  TableAnnotation annotation;  // in resized coordinates
  SplitTargets targets;
};
TrainSample prepare_sample(const Image& image, const TableAnnotation& annotation, int shorter_side, int k);

/// Loss components of one image for `stage`; components of later stages are
/// left undefined. `seed` drives pixel sampling.
LossBundle image_losses(TsrModel& model, const TrainSample& sample, int stage, const TrainConfig& cfg,
                        std::uint64_t seed);

struct TrainResult {
  std::vector<EpochRecord> history;
  std::filesystem::path checkpoint;
  TsrModel model{nullptr};
};

/// Staged training. Writes `last.pt` after every epoch and `stage{s}.pt` at
/// the end of each stage under cfg.out_dir. A non-finite loss throws
/// TrainingAborted and leaves the last good checkpoint in place.
TrainResult train_staged(const TrainConfig& cfg, const std::function<void(const EpochRecord&)>& on_epoch = {});

}  // namespace tsr::nn
