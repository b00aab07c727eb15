#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "rmss/types.hpp"

namespace rmss::synth {

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

struct IntRange {
  int lo = 0;
  int hi = 0;
};

/// Scene generator configuration. Defaults define the "default dataset" used
/// by the regression and quality gates.
struct SceneConfig {
  int n_sequences = 10;
  int frames_per_sequence = 50;
  IntRange points_static_range{100, 200};  // visible static points per scan
  IntRange n_moving_objects_range{1, 4};
  IntRange points_per_object_range{3, 10};
  Range object_speed_range{1.5, 8.0};  // m/s
  Range ego_speed_range{2.0, 8.0};     // m/s
  double doppler_noise_sigma = 0.05;   // m/s
  double position_noise_sigma = 0.02;  // m
  double ghost_point_rate = 0.005;     // fraction of points that are clutter
  double fov_azimuth = 1.0;            // half-angle, radians
  Range range_limits{5.0, 60.0};       // m
  Range rcs_range{-10.0, 20.0};        // dBsm
  double moving_threshold = 0.5;       // tau_m, m/s
  std::uint64_t seed = 1;

  void validate() const;  // throws ArgError
};

/// Per-scan bookkeeping kept in memory for tests and the manifest summary.
/// Object spans index into the scan's point list.
struct ScanMeta {
  struct ObjectSpan {
    int first = 0;
    int count = 0;
    double vx = 0.0;
    double vy = 0.0;
  };
  int n_static = 0;
  int n_ghost = 0;
  std::vector<ObjectSpan> objects;
};

struct Sequence {
  std::string seq_id;
  std::vector<RadarScan> scans;
  std::vector<ScanMeta> meta;  // parallel to scans
};

struct SequenceDataset {
  std::vector<Sequence> sequences;
  SceneConfig config;  // echo of the generating config

  std::size_t total_scans() const;
};

/// Movers are re-aimed until at least one of their points keeps a radial
/// speed above this floor in every visible frame (twice the default velocity
/// profile threshold of 0.5 m/s). Purely tangential motion is invisible to
/// Doppler-based labeling; the generator keeps it out of the ground truth.
inline constexpr double kMinRadialSpeed = 1.0;

/// Frame spacing of the simulated sensor.
inline constexpr double kFrameDt = 0.1;

/// Deterministic generation; identical (config, seed) gives bit-identical
/// datasets. Scans come out Doppler-compensated.
SequenceDataset generate(const SceneConfig& config);

enum class PairMode { Consecutive, CrossSequence };

struct PairRef {
  int seq_a = 0;
  int frame_a = 0;
  int seq_b = 0;
  int frame_b = 0;
};

/// Consecutive mode: all (t, t+1) pairs of each sequence in a seeded
/// permutation. CrossSequence mode: the same number of pairs drawn from two
/// distinct sequences. Throws PipelineError("no valid pairs")-style errors
/// per the mode preconditions.
std::vector<PairRef> pair_sampler(const SequenceDataset& dataset, PairMode mode,
                                  std::uint64_t seed);

}  // namespace rmss::synth
