#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rmss/types.hpp"

namespace rmss::nn {

// ---------------------------------------------------------------------------
// Parameter layout: named layers packed into one flat 64-bit vector.
// ---------------------------------------------------------------------------

struct LayerSpec {
  std::string name;
  std::vector<std::size_t> dims;
  std::size_t offset = 0;
  std::size_t count = 0;
};

class ParamLayout {
 public:
  void add(std::string name, std::vector<std::size_t> dims);
  std::size_t total() const { return total_; }
  const std::vector<LayerSpec>& layers() const { return layers_; }
  const LayerSpec& layer(std::string_view name) const;

  std::span<double> view(std::span<double> params, std::string_view name) const;
  std::span<const double> view(std::span<const double> params,
                               std::string_view name) const;

 private:
  std::vector<LayerSpec> layers_;
  std::size_t total_ = 0;
};

// ---------------------------------------------------------------------------
// Point encoder: shared per-point MLP, k-NN mean pooling for local context,
// and a final projection to the 48-dim representation space.
// ---------------------------------------------------------------------------

struct EncoderConfig {
  int k_neighbors = 8;
  int hidden1 = 64;
  int hidden2 = 64;
  static constexpr int kInputDim = 5;   // x, y, z, v_comp, rcs
  static constexpr int kOutputDim = static_cast<int>(RepresentationMatrix::kDim);
  int head_hidden = 32;
  static constexpr int kClasses = 2;
  std::uint64_t init_seed = 0;
};

/// Fixed input scaling applied before the first layer; keeps meter-scale
/// coordinates inside the active region of tanh.
inline constexpr double kInputScale[5] = {1.0 / 30.0, 1.0 / 30.0, 1.0 / 30.0,
                                          1.0 / 5.0, 1.0 / 10.0};

ParamLayout encoder_layout(const EncoderConfig& cfg);
ParamLayout head_layout(const EncoderConfig& cfg);

/// Xavier-uniform weights, zero biases; seeded per layer.
std::vector<double> init_params(const ParamLayout& layout, std::uint64_t seed);

struct EncoderActivations {
  std::vector<double> input;    // N x 5 (scaled)
  std::vector<double> h1;       // N x hidden1, post-tanh
  std::vector<double> h2;       // N x hidden2, post-tanh
  std::vector<double> pooled;   // N x hidden2, k-NN mean of h2
  std::vector<int> neighbors;   // N x k_eff
  int k_eff = 0;
  std::size_t n = 0;
};

/// Per-point forward pass. Throws DataError on parameter shape mismatch.
/// N = 0 yields an empty matrix; with a single point the pooled context is
/// the point's own feature.
RepresentationMatrix encoder_forward(const RadarScan& scan,
                                     std::span<const double> params,
                                     const EncoderConfig& cfg,
                                     EncoderActivations* acts = nullptr);

/// Accumulates parameter gradients for dL/dreps (row-major N x 48) into
/// grad (same layout as params).
void encoder_backward(const EncoderActivations& acts,
                      const std::vector<double>& dreps,
                      std::span<const double> params, const EncoderConfig& cfg,
                      std::span<double> grad);

struct HeadActivations {
  std::vector<double> hidden;  // N x head_hidden, post-tanh
  std::size_t n = 0;
};

/// MLP head mapping representations to per-point class logits (N x 2).
std::vector<double> head_forward(const RepresentationMatrix& reps,
                                 std::span<const double> params,
                                 const EncoderConfig& cfg,
                                 HeadActivations* acts = nullptr);

/// Accumulates head parameter gradients; optionally returns dL/dreps.
void head_backward(const RepresentationMatrix& reps, const HeadActivations& acts,
                   const std::vector<double>& dlogits,
                   std::span<const double> params, const EncoderConfig& cfg,
                   std::span<double> grad, std::vector<double>* dreps_out);

/// Numerically stable row-wise softmax over N x 2 logits; rows sum to 1.
std::vector<double> softmax_probs(const std::vector<double>& logits);

// ---------------------------------------------------------------------------
// Losses
// ---------------------------------------------------------------------------

struct TverskyParams {
  double alpha = 0.7;    // false-negative weight
  double beta = 0.3;     // false-positive weight
  double gamma = 0.75;   // focusing exponent
  double epsilon = 1e-7; // denominator guard
};

struct TverskyResult {
  double loss = 0.0;
  std::vector<double> grad_logits;  // N x 2
};

/// Focal Tversky loss over soft per-class counts, summed over both classes.
/// `probs` are softmax outputs; the gradient is reported with respect to the
/// logits that produced them. Throws DataError when gt is empty or lengths
/// mismatch.
TverskyResult focal_tversky_loss(const std::vector<double>& probs,
                                 const MotionMask& gt,
                                 const TverskyParams& params = {});

/// Extracts ground-truth flags; throws DataError if any point lacks a label.
MotionMask gt_mask(const RadarScan& scan);

// ---------------------------------------------------------------------------
// Optimizers, schedule, EMA
// ---------------------------------------------------------------------------

struct SgdwParams {
  double momentum = 0.9;
  double weight_decay = 0.01;
};

struct SgdwState {
  std::vector<double> momentum;
};

/// m <- mu*m + g;  p <- p - lr*m - lr*lambda*p  (decoupled decay).
void sgdw_step(std::span<double> params, std::span<const double> grads,
               SgdwState& state, double lr, const SgdwParams& opt);

struct AdamwParams {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.01;
};

struct AdamwState {
  std::vector<double> m;
  std::vector<double> v;
  long step = 0;
};

/// Decoupled AdamW: p <- p - lr*m_hat/(sqrt(v_hat)+eps) - lr*lambda*p.
void adamw_step(std::span<double> params, std::span<const double> grads,
                AdamwState& state, double lr, const AdamwParams& opt);

/// base_lr scaled by factor once per milestone at or before `epoch`.
double multistep_lr(int epoch, double base_lr = 1e-3,
                    const std::vector<int>& milestones = {60, 80},
                    double factor = 0.1);

/// teacher <- (1-alpha)*teacher + alpha*student, elementwise.
void ema_update(std::span<double> teacher, std::span<const double> student,
                double alpha);

// ---------------------------------------------------------------------------
// Model state: student and teacher encoders plus the segmentation head.
// ---------------------------------------------------------------------------

struct ModelState {
  EncoderConfig config;
  ParamLayout enc_layout;
  ParamLayout head_layout;
  std::vector<double> student;
  std::vector<double> teacher;
  std::vector<double> head;
  std::vector<double> grad_student;
  std::vector<double> grad_head;
  SgdwState sgdw_student;
  AdamwState adamw_student;
  AdamwState adamw_head;
  double ema_alpha = 0.01;
  std::uint64_t rng_seed = 0;

  static ModelState init(const EncoderConfig& cfg, std::uint64_t seed,
                         double ema_alpha);
  void zero_grads();
  void check_finite() const;  // throws DataError
};

// ---------------------------------------------------------------------------
// Augmentations: coordinate-only transforms; Doppler, RCS and labels are
// left untouched.
// ---------------------------------------------------------------------------

enum AugmentOps : unsigned {
  kAugRotateZ = 1u << 0,
  kAugShift = 1u << 1,
  kAugScale = 1u << 2,
  kAugFlipY = 1u << 3,
  kAugAll = kAugRotateZ | kAugShift | kAugScale | kAugFlipY,
};

RadarScan apply_rotate_z(RadarScan scan, double angle);
RadarScan apply_shift(RadarScan scan, double dx, double dy, double dz);
RadarScan apply_scale(RadarScan scan, double factor);
RadarScan apply_flip_y(RadarScan scan);

/// Applies the enabled ops with seeded parameters (rotation uniform in
/// [0, 2pi), shift within +-1 m in xy and +-0.1 m in z, scale in
/// [0.95, 1.05], flip with probability 1/2). ops = 0 returns the scan
/// unchanged.
RadarScan augment(const RadarScan& scan, std::uint64_t seed,
                  unsigned ops = kAugAll);

}  // namespace rmss::nn
