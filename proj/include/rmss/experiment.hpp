#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rmss/eval.hpp"
#include "rmss/train.hpp"

namespace rmss::eval {

struct ExperimentConfig {
  std::vector<double> fractions{0.01, 0.1, 1.0};
  std::vector<std::uint64_t> seeds{1, 2, 3};
  bool include_scratch = true;
  /// Pretrained variants to run; empty disables pretraining entirely.
  std::vector<train::Ablation> variants{train::Ablation::Full};
  bool include_dpr_baseline = true;
  train::PretrainConfig pretrain;
  train::FinetuneConfig finetune;
  int max_threads = 4;
};

struct ReportRow {
  std::string variant;  // "scratch", "pretrained_full", ...
  double fraction = 1.0;
  std::uint64_t seed = 0;
  Iou test_iou;
};

struct Report {
  std::vector<ReportRow> rows;

  /// Median moving IoU over seeds for one (variant, fraction) cell.
  double median_moving(const std::string& variant, double fraction) const;
};

/// Pretrains once per variant on the training split, fine-tunes every
/// (variant, fraction, seed) cell plus scratch cells, evaluates on the test
/// split, and appends one velocity-profile baseline row per request.
/// Independent cells run in parallel; results are deterministic.
Report run_experiment(const synth::SequenceDataset& dataset,
                      const ExperimentConfig& config);

std::string report_to_csv(const Report& report);
Report report_from_csv(const std::string& csv);

/// Aligned text table with per-cell medians.
std::string report_to_table(const Report& report);

/// Line chart of median moving IoU vs label fraction (log x axis).
std::string report_to_svg(const Report& report);

}  // namespace rmss::eval
