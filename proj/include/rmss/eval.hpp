#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "rmss/synth.hpp"
#include "rmss/types.hpp"

namespace rmss::eval {

struct Iou {
  double moving = 0.0;
  double stationary = 0.0;
  double mean = 0.0;
};

/// Per-class counts with the named class as positive. Pred and gt play
/// distinct roles: swapping the arguments swaps FP and FN.
struct IouCounts {
  long long tp_moving = 0, fp_moving = 0, fn_moving = 0;
  long long tp_static = 0, fp_static = 0, fn_static = 0;
};

IouCounts iou_counts(const MotionMask& pred, const MotionMask& gt);

/// TP/(TP+FP+FN) per class; a class absent from both pred and gt scores 1.
Iou iou_from_counts(const IouCounts& c);

Iou iou(const MotionMask& pred, const MotionMask& gt);

/// Pooled-count accumulation across scans (not a per-scan average).
class IouAccumulator {
 public:
  void add(const MotionMask& pred, const MotionMask& gt);
  const IouCounts& counts() const { return counts_; }
  Iou result() const { return iou_from_counts(counts_); }

 private:
  IouCounts counts_;
};

/// Seeded sample of ceil(fraction * m) indices out of [0, m), plus the
/// remainder. Nested by construction: a smaller fraction with the same seed
/// yields a subset of a larger one.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>>
label_fraction_split(std::size_t m, double fraction, std::uint64_t seed);

struct ScanRef {
  int seq = 0;
  int frame = 0;
};

std::vector<ScanRef> all_scans(const synth::SequenceDataset& ds);

/// Scan-level split of a dataset's training portion.
std::pair<std::vector<ScanRef>, std::vector<ScanRef>> label_fraction_split(
    const synth::SequenceDataset& ds, double fraction, std::uint64_t seed);

struct DatasetSplits {
  synth::SequenceDataset train;
  synth::SequenceDataset val;
  synth::SequenceDataset test;
};

/// Deterministic 70/15/15 split by whole sequences. Datasets with fewer than
/// three sequences reuse the full dataset for every split.
DatasetSplits split_dataset(const synth::SequenceDataset& ds);

double median(std::vector<double> values);

}  // namespace rmss::eval
