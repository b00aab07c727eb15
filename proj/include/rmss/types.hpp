#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace rmss {

// ---------------------------------------------------------------------------
// Error hierarchy. The CLI maps these to exit codes; the training loop treats
// PipelineError subclasses as skippable per-pair failures.
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Invalid or inconsistent input data (exit code 3).
struct DataError : Error {
  using Error::Error;
};

/// Bad command-line arguments or configuration (exit code 2).
struct ArgError : Error {
  using Error::Error;
};

/// Training could not proceed at all (exit code 4).
struct TrainAbort : Error {
  using Error::Error;
};

/// Recoverable failure of one sample-pair pipeline stage.
struct PipelineError : Error {
  using Error::Error;
};

struct InsufficientPoints : PipelineError {
  InsufficientPoints() : PipelineError("insufficient points") {}
};

struct DegenerateGeometry : PipelineError {
  DegenerateGeometry() : PipelineError("degenerate geometry") {}
};

struct NoClusters : PipelineError {
  NoClusters() : PipelineError("no clusters to transfer") {}
};

struct NoMatches : PipelineError {
  NoMatches() : PipelineError("no matched clusters") {}
};

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

enum class Motion : std::uint8_t { Static = 0, Moving = 1 };

/// One radar return. Sensor frame: x forward, y left, z up, meters.
/// Doppler sign convention: positive = receding from the sensor.
struct RadarPoint {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double v_raw = 0.0;   // measured radial Doppler velocity, m/s
  double v_comp = 0.0;  // ego-motion compensated Doppler velocity, m/s
  double rcs = 0.0;     // radar cross section, dBsm
  std::optional<Motion> gt_label;
};

/// One frame of N points plus the planar ego velocity in the sensor frame.
struct RadarScan {
  std::vector<RadarPoint> points;
  double ego_vx = 0.0;
  double ego_vy = 0.0;
  std::string seq_id;
  int frame_idx = 0;

  std::size_t size() const { return points.size(); }
};

/// Per-point binary moving/static decision, length N.
struct MotionMask {
  std::vector<Motion> flags;

  std::size_t size() const { return flags.size(); }
};

/// Per-point integer cluster ids, -1 = noise. `refined` asserts that every
/// cluster is motion-pure with respect to the mask used for refinement.
struct ClusterLabels {
  std::vector<int> labels;
  bool refined = false;

  std::size_t size() const { return labels.size(); }
};

/// Row-major N x 48 per-point embedding matrix.
class RepresentationMatrix {
 public:
  static constexpr std::size_t kDim = 48;

  RepresentationMatrix() = default;
  explicit RepresentationMatrix(std::size_t n) : n_(n), data_(n * kDim, 0.0) {}

  std::size_t rows() const { return n_; }
  double* row(std::size_t i) { return data_.data() + i * kDim; }
  const double* row(std::size_t i) const { return data_.data() + i * kDim; }
  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

 private:
  std::size_t n_ = 0;
  std::vector<double> data_;
};

}  // namespace rmss
