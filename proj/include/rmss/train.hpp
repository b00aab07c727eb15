#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rmss/cluster.hpp"
#include "rmss/dpr.hpp"
#include "rmss/eval.hpp"
#include "rmss/nn.hpp"
#include "rmss/pseudo.hpp"
#include "rmss/synth.hpp"

namespace rmss::train {

enum class Ablation { Full, NoDpr, NoClustering };

std::string to_string(Ablation a);
Ablation ablation_from_string(const std::string& s);  // throws ArgError

struct PretrainConfig {
  int epochs = 100;
  int batch_size = 128;
  double base_lr = 1e-3;
  nn::SgdwParams optimizer{0.9, 0.01};
  std::vector<int> milestones{60, 80};
  double lr_factor = 0.1;
  cluster::ClusterParams cluster_params;
  dpr::RansacParams ransac_params;
  double ema_alpha = 0.01;
  Ablation ablation = Ablation::Full;
  synth::PairMode pair_mode = synth::PairMode::Consecutive;  // cross-sequence
                                                             // is experimental
  nn::EncoderConfig encoder;
  std::uint64_t seed = 1;

  void validate() const;
};

struct EpochStats {
  int epoch = 0;
  double mean_loss = 0.0;
  double lr = 0.0;
  int processed = 0;
  int skipped = 0;
};

struct PretrainResult {
  nn::ModelState model;
  std::vector<EpochStats> history;
};

/// Self-supervised pretraining over sample pairs: cluster the student input,
/// transfer labels to the teacher, refine both with the velocity-profile
/// mask, match, and minimize the centroid contrast. Pairs whose pipeline
/// fails (no clusters, no matches, degenerate fit) are skipped and counted.
/// Throws TrainAbort when an entire epoch is skipped.
PretrainResult pretrain(const synth::SequenceDataset& dataset,
                        const PretrainConfig& config);

struct FinetuneConfig {
  double label_fraction = 1.0;
  int epochs = 100;
  int batch_size = 128;  // dropped to 8 when fewer than 64 labeled samples
  double base_lr = 1e-3;
  nn::AdamwParams optimizer{};
  std::vector<int> milestones{60, 80};
  double lr_factor = 0.1;
  nn::TverskyParams tversky{};
  bool augment = true;
  bool freeze_backbone = false;
  nn::EncoderConfig encoder;
  std::uint64_t seed = 1;
  std::uint64_t split_seed = 7;

  void validate() const;
};

struct FinetuneEpochStats {
  int epoch = 0;
  double mean_loss = 0.0;
  double lr = 0.0;
  eval::Iou val;
};

struct FinetuneResult {
  nn::ModelState model;  // parameters of the best-validation epoch
  std::vector<FinetuneEpochStats> history;
  int best_epoch = -1;
  eval::Iou best_val;
  std::size_t n_labeled = 0;
};

/// Supervised fine-tuning with the focal Tversky loss on the labeled
/// fraction of the training split. `init` may be null (training from
/// scratch). Returns the model of the best validation epoch by mean IoU.
FinetuneResult finetune(const nn::ModelState* init,
                        const synth::SequenceDataset& train_split,
                        const synth::SequenceDataset& val_split,
                        const FinetuneConfig& config);

/// Per-point argmax prediction with the student encoder plus head.
MotionMask predict(const nn::ModelState& model, const RadarScan& scan);

/// Pooled IoU of model predictions over a dataset (scans with labels only).
eval::Iou evaluate_model(const nn::ModelState& model,
                         const synth::SequenceDataset& ds);

}  // namespace rmss::train
