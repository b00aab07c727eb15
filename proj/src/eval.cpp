#include "rmss/eval.hpp"

#include <algorithm>
#include <cmath>

#include "rmss/rng.hpp"

namespace rmss::eval {

IouCounts iou_counts(const MotionMask& pred, const MotionMask& gt) {
  if (pred.size() != gt.size()) throw DataError("iou: mask length mismatch");
  IouCounts c;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool pm = pred.flags[i] == Motion::Moving;
    const bool gm = gt.flags[i] == Motion::Moving;
    if (pm && gm) ++c.tp_moving;
    if (pm && !gm) ++c.fp_moving;
    if (!pm && gm) ++c.fn_moving;
    if (!pm && !gm) ++c.tp_static;
    if (!pm && gm) ++c.fp_static;
    if (pm && !gm) ++c.fn_static;
  }
  return c;
}

Iou iou_from_counts(const IouCounts& c) {
  auto one = [](long long tp, long long fp, long long fn) {
    const long long denom = tp + fp + fn;
    // An absent class predicted absent is perfect.
    return denom == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(denom);
  };
  Iou r;
  r.moving = one(c.tp_moving, c.fp_moving, c.fn_moving);
  r.stationary = one(c.tp_static, c.fp_static, c.fn_static);
  r.mean = 0.5 * (r.moving + r.stationary);
  return r;
}

Iou iou(const MotionMask& pred, const MotionMask& gt) {
  return iou_from_counts(iou_counts(pred, gt));
}

void IouAccumulator::add(const MotionMask& pred, const MotionMask& gt) {
  const IouCounts c = iou_counts(pred, gt);
  counts_.tp_moving += c.tp_moving;
  counts_.fp_moving += c.fp_moving;
  counts_.fn_moving += c.fn_moving;
  counts_.tp_static += c.tp_static;
  counts_.fp_static += c.fp_static;
  counts_.fn_static += c.fn_static;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>>
label_fraction_split(std::size_t m, double fraction, std::uint64_t seed) {
  if (fraction <= 0.0 || fraction > 1.0) {
    throw ArgError("label fraction must be in (0, 1]");
  }
  std::vector<std::size_t> order(m);
  for (std::size_t i = 0; i < m; ++i) order[i] = i;
  Rng rng(derive_seed(seed, 0x5B11));
  for (std::size_t i = m; i > 1; --i) {
    std::swap(order[i - 1], order[rng.below(i)]);
  }
  const auto take = static_cast<std::size_t>(
      std::min<double>(static_cast<double>(m),
                       std::ceil(fraction * static_cast<double>(m))));
  std::vector<std::size_t> labeled(order.begin(), order.begin() + take);
  std::vector<std::size_t> remainder(order.begin() + take, order.end());
  return {std::move(labeled), std::move(remainder)};
}

std::vector<ScanRef> all_scans(const synth::SequenceDataset& ds) {
  std::vector<ScanRef> refs;
  for (int s = 0; s < static_cast<int>(ds.sequences.size()); ++s) {
    for (int f = 0; f < static_cast<int>(ds.sequences[s].scans.size()); ++f) {
      refs.push_back({s, f});
    }
  }
  return refs;
}

std::pair<std::vector<ScanRef>, std::vector<ScanRef>> label_fraction_split(
    const synth::SequenceDataset& ds, double fraction, std::uint64_t seed) {
  const std::vector<ScanRef> refs = all_scans(ds);
  auto [labeled_idx, rest_idx] = label_fraction_split(refs.size(), fraction, seed);
  std::vector<ScanRef> labeled, rest;
  labeled.reserve(labeled_idx.size());
  rest.reserve(rest_idx.size());
  for (std::size_t i : labeled_idx) labeled.push_back(refs[i]);
  for (std::size_t i : rest_idx) rest.push_back(refs[i]);
  return {std::move(labeled), std::move(rest)};
}

DatasetSplits split_dataset(const synth::SequenceDataset& ds) {
  DatasetSplits out;
  out.train.config = out.val.config = out.test.config = ds.config;
  const std::size_t n = ds.sequences.size();
  if (n < 3) {
    out.train = out.val = out.test = ds;
    return out;
  }
  const std::size_t n_val = std::max<std::size_t>(1, n * 15 / 100);
  const std::size_t n_test = std::max<std::size_t>(1, n * 15 / 100);
  const std::size_t n_train = n - n_val - n_test;  // n >= 3 keeps this >= 1
  for (std::size_t i = 0; i < n; ++i) {
    if (i < n_train) {
      out.train.sequences.push_back(ds.sequences[i]);
    } else if (i < n_train + n_val) {
      out.val.sequences.push_back(ds.sequences[i]);
    } else {
      out.test.sequences.push_back(ds.sequences[i]);
    }
  }
  return out;
}

double median(std::vector<double> values) {
  if (values.empty()) throw ArgError("median of empty list");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2]
                    : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace rmss::eval
