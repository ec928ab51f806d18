#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "tsr/annotation_io.hpp"
#include "tsr/metrics.hpp"

namespace tsr {

struct EvalOptions {
  double iou_threshold = 0.6;
  /// Drop relations touching gt cells that hold no content box.
  bool ignore_empty = false;
};

struct SampleScore {
  std::string id;
  AdjacencyScore adjacency;
  double teds_struct = 1.0;
};

struct EvalReport {
  EvalOptions options;
  std::vector<SampleScore> samples;
  /// Micro average: counts are summed over samples before dividing.
  AdjacencyScore aggregate;
  double mean_teds_struct = 1.0;

  std::string to_json() const;
  /// Fixed-width table, one line per sample plus the aggregate.
  std::string to_table() const;
};

SampleScore evaluate_sample(const std::string& id, const CellFile& pred, const CellFile& gt, const EvalOptions& opt);

/// Pairs `{id}.json` files of the two directories (a directory holding an
/// `annotations/` subdirectory is searched there). Throws InvalidInput if
/// either side is empty or the id sets differ; the message lists missing ids.
EvalReport evaluate_directories(const std::filesystem::path& pred_dir, const std::filesystem::path& gt_dir,
                                const EvalOptions& opt = {});

/// Aggregates per-sample scores already computed.
EvalReport aggregate(std::vector<SampleScore> samples, const EvalOptions& opt);

}  // namespace tsr
