#include "rmss/nn.hpp"

#include <algorithm>
#include <cmath>

#include "rmss/rng.hpp"

namespace rmss::nn {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// Four-accumulator dot product; fixed association order keeps results
// deterministic while letting the compiler vectorize the reduction.
double dot(const double* a, const double* b, std::size_t n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t c = 0;
  for (; c + 4 <= n; c += 4) {
    s0 += a[c] * b[c];
    s1 += a[c + 1] * b[c + 1];
    s2 += a[c + 2] * b[c + 2];
    s3 += a[c + 3] * b[c + 3];
  }
  for (; c < n; ++c) s0 += a[c] * b[c];
  return (s0 + s1) + (s2 + s3);
}

// y = tanh(W x + b) for one vector; W is rows x cols row-major.
void linear_tanh(std::span<const double> w, std::span<const double> b,
                 const double* x, std::size_t rows, std::size_t cols, double* y) {
  for (std::size_t r = 0; r < rows; ++r) {
    y[r] = std::tanh(b[r] + dot(w.data() + r * cols, x, cols));
  }
}

void linear(std::span<const double> w, std::span<const double> b, const double* x,
            std::size_t rows, std::size_t cols, double* y) {
  for (std::size_t r = 0; r < rows; ++r) {
    y[r] = b[r] + dot(w.data() + r * cols, x, cols);
  }
}

// Backward of y = W x + b given dy: accumulates dW, db and adds W^T dy to dx.
// Pass an empty w when dx is null.
void linear_backward(std::span<const double> w, const double* x, const double* dy,
                     std::size_t rows, std::size_t cols, std::span<double> dw,
                     std::span<double> db, double* dx) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double g = dy[r];
    db[r] += g;
    double* dwr = dw.data() + r * cols;
    for (std::size_t c = 0; c < cols; ++c) dwr[c] += g * x[c];
    if (dx) {
      const double* wr = w.data() + r * cols;
      for (std::size_t c = 0; c < cols; ++c) dx[c] += g * wr[c];
    }
  }
}

}  // namespace

// --------------------------------------------------------------------------
// ParamLayout
// --------------------------------------------------------------------------

void ParamLayout::add(std::string name, std::vector<std::size_t> dims) {
  LayerSpec spec;
  spec.name = std::move(name);
  spec.dims = std::move(dims);
  spec.count = 1;
  for (std::size_t d : spec.dims) spec.count *= d;
  spec.offset = total_;
  total_ += spec.count;
  layers_.push_back(std::move(spec));
}

const LayerSpec& ParamLayout::layer(std::string_view name) const {
  for (const LayerSpec& l : layers_) {
    if (l.name == name) return l;
  }
  throw DataError("unknown layer: " + std::string(name));
}

std::span<double> ParamLayout::view(std::span<double> params,
                                    std::string_view name) const {
  const LayerSpec& l = layer(name);
  if (params.size() != total_) throw DataError("parameter vector size mismatch");
  return params.subspan(l.offset, l.count);
}

std::span<const double> ParamLayout::view(std::span<const double> params,
                                          std::string_view name) const {
  const LayerSpec& l = layer(name);
  if (params.size() != total_) throw DataError("parameter vector size mismatch");
  return params.subspan(l.offset, l.count);
}

// --------------------------------------------------------------------------
// Layouts and init
// --------------------------------------------------------------------------

ParamLayout encoder_layout(const EncoderConfig& cfg) {
  const auto h1 = static_cast<std::size_t>(cfg.hidden1);
  const auto h2 = static_cast<std::size_t>(cfg.hidden2);
  const auto in = static_cast<std::size_t>(EncoderConfig::kInputDim);
  const auto out = static_cast<std::size_t>(EncoderConfig::kOutputDim);
  ParamLayout l;
  l.add("fc1.weight", {h1, in});
  l.add("fc1.bias", {h1});
  l.add("fc2.weight", {h2, h1});
  l.add("fc2.bias", {h2});
  l.add("proj.weight", {out, 2 * h2});  // [own feature ; pooled context]
  l.add("proj.bias", {out});
  return l;
}

ParamLayout head_layout(const EncoderConfig& cfg) {
  const auto hh = static_cast<std::size_t>(cfg.head_hidden);
  const auto in = static_cast<std::size_t>(EncoderConfig::kOutputDim);
  const auto cls = static_cast<std::size_t>(EncoderConfig::kClasses);
  ParamLayout l;
  l.add("head1.weight", {hh, in});
  l.add("head1.bias", {hh});
  l.add("head2.weight", {cls, hh});
  l.add("head2.bias", {cls});
  return l;
}

std::vector<double> init_params(const ParamLayout& layout, std::uint64_t seed) {
  std::vector<double> params(layout.total(), 0.0);
  std::uint64_t stream = 0;
  for (const LayerSpec& l : layout.layers()) {
    Rng rng(derive_seed(seed, stream++));
    if (l.dims.size() == 2) {
      const double fan_in = static_cast<double>(l.dims[1]);
      const double fan_out = static_cast<double>(l.dims[0]);
      const double limit = std::sqrt(6.0 / (fan_in + fan_out));
      for (std::size_t i = 0; i < l.count; ++i) {
        params[l.offset + i] = rng.uniform(-limit, limit);
      }
    }
    // biases stay zero
  }
  return params;
}

// --------------------------------------------------------------------------
// Encoder
// --------------------------------------------------------------------------

RepresentationMatrix encoder_forward(const RadarScan& scan,
                                     std::span<const double> params,
                                     const EncoderConfig& cfg,
                                     EncoderActivations* acts) {
  const ParamLayout layout = encoder_layout(cfg);
  if (params.size() != layout.total()) throw DataError("encoder parameter size mismatch");
  const std::size_t n = scan.size();
  const auto h1n = static_cast<std::size_t>(cfg.hidden1);
  const auto h2n = static_cast<std::size_t>(cfg.hidden2);
  constexpr std::size_t in_dim = EncoderConfig::kInputDim;
  constexpr std::size_t out_dim = EncoderConfig::kOutputDim;

  RepresentationMatrix reps(n);
  EncoderActivations local;
  EncoderActivations& a = acts ? *acts : local;
  a.n = n;
  a.input.assign(n * in_dim, 0.0);
  a.h1.assign(n * h1n, 0.0);
  a.h2.assign(n * h2n, 0.0);
  a.pooled.assign(n * h2n, 0.0);
  a.neighbors.clear();
  a.k_eff = std::min<int>(cfg.k_neighbors, static_cast<int>(n) - 1);
  if (a.k_eff < 0) a.k_eff = 0;
  if (n == 0) return reps;

  const auto w1 = layout.view(params, "fc1.weight");
  const auto b1 = layout.view(params, "fc1.bias");
  const auto w2 = layout.view(params, "fc2.weight");
  const auto b2 = layout.view(params, "fc2.bias");
  const auto w3 = layout.view(params, "proj.weight");
  const auto b3 = layout.view(params, "proj.bias");

  for (std::size_t i = 0; i < n; ++i) {
    const RadarPoint& p = scan.points[i];
    double* x = a.input.data() + i * in_dim;
    x[0] = p.x * kInputScale[0];
    x[1] = p.y * kInputScale[1];
    x[2] = p.z * kInputScale[2];
    x[3] = p.v_comp * kInputScale[3];
    x[4] = p.rcs * kInputScale[4];
    linear_tanh(w1, b1, x, h1n, in_dim, a.h1.data() + i * h1n);
    linear_tanh(w2, b2, a.h1.data() + i * h1n, h2n, h1n, a.h2.data() + i * h2n);
  }

  // k nearest spatial neighbors (excluding self); with a single point the
  // pooled context is the point's own feature.
  const int k = a.k_eff;
  a.neighbors.assign(n * static_cast<std::size_t>(std::max(k, 0)), 0);
  std::vector<std::pair<double, int>> order;
  for (std::size_t i = 0; i < n; ++i) {
    double* pool = a.pooled.data() + i * h2n;
    if (k == 0) {
      std::copy_n(a.h2.data() + i * h2n, h2n, pool);
      continue;
    }
    order.clear();
    const RadarPoint& pi = scan.points[i];
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const RadarPoint& pj = scan.points[j];
      const double dx = pi.x - pj.x, dy = pi.y - pj.y, dz = pi.z - pj.z;
      order.push_back({dx * dx + dy * dy + dz * dz, static_cast<int>(j)});
    }
    std::partial_sort(order.begin(), order.begin() + k, order.end());
    for (int t = 0; t < k; ++t) {
      const int j = order[t].second;
      a.neighbors[i * k + t] = j;
      const double* hj = a.h2.data() + static_cast<std::size_t>(j) * h2n;
      for (std::size_t c = 0; c < h2n; ++c) pool[c] += hj[c];
    }
    for (std::size_t c = 0; c < h2n; ++c) pool[c] /= static_cast<double>(k);
  }

  std::vector<double> concat(2 * h2n);
  for (std::size_t i = 0; i < n; ++i) {
    std::copy_n(a.h2.data() + i * h2n, h2n, concat.data());
    std::copy_n(a.pooled.data() + i * h2n, h2n, concat.data() + h2n);
    linear(w3, b3, concat.data(), out_dim, 2 * h2n, reps.row(i));
  }
  return reps;
}

void encoder_backward(const EncoderActivations& acts,
                      const std::vector<double>& dreps,
                      std::span<const double> params, const EncoderConfig& cfg,
                      std::span<double> grad) {
  const ParamLayout layout = encoder_layout(cfg);
  if (params.size() != layout.total() || grad.size() != layout.total()) {
    throw DataError("encoder gradient size mismatch");
  }
  const std::size_t n = acts.n;
  const auto h1n = static_cast<std::size_t>(cfg.hidden1);
  const auto h2n = static_cast<std::size_t>(cfg.hidden2);
  constexpr std::size_t in_dim = EncoderConfig::kInputDim;
  constexpr std::size_t out_dim = EncoderConfig::kOutputDim;
  if (dreps.size() != n * out_dim) throw DataError("dreps size mismatch");
  if (n == 0) return;

  const auto w2 = layout.view(params, "fc2.weight");
  const auto w3 = layout.view(params, "proj.weight");
  auto dw1 = layout.view(grad, "fc1.weight");
  auto db1 = layout.view(grad, "fc1.bias");
  auto dw2 = layout.view(grad, "fc2.weight");
  auto db2 = layout.view(grad, "fc2.bias");
  auto dw3 = layout.view(grad, "proj.weight");
  auto db3 = layout.view(grad, "proj.bias");

  const int k = acts.k_eff;
  std::vector<double> dh2(n * h2n, 0.0);
  std::vector<double> concat(2 * h2n);
  std::vector<double> dconcat(2 * h2n);

  for (std::size_t i = 0; i < n; ++i) {
    std::copy_n(acts.h2.data() + i * h2n, h2n, concat.data());
    std::copy_n(acts.pooled.data() + i * h2n, h2n, concat.data() + h2n);
    std::fill(dconcat.begin(), dconcat.end(), 0.0);
    linear_backward(w3, concat.data(), dreps.data() + i * out_dim, out_dim,
                    2 * h2n, dw3, db3, dconcat.data());
    // own-feature path
    for (std::size_t c = 0; c < h2n; ++c) dh2[i * h2n + c] += dconcat[c];
    // pooled-context path: scatter to the neighbors (or self when k == 0)
    if (k == 0) {
      for (std::size_t c = 0; c < h2n; ++c) dh2[i * h2n + c] += dconcat[h2n + c];
    } else {
      const double inv_k = 1.0 / static_cast<double>(k);
      for (int t = 0; t < k; ++t) {
        const auto j = static_cast<std::size_t>(acts.neighbors[i * k + t]);
        for (std::size_t c = 0; c < h2n; ++c) {
          dh2[j * h2n + c] += dconcat[h2n + c] * inv_k;
        }
      }
    }
  }

  std::vector<double> dz(std::max(h1n, h2n));
  std::vector<double> dh1(h1n);
  for (std::size_t i = 0; i < n; ++i) {
    const double* h2i = acts.h2.data() + i * h2n;
    for (std::size_t c = 0; c < h2n; ++c) {
      dz[c] = dh2[i * h2n + c] * (1.0 - h2i[c] * h2i[c]);
    }
    std::fill(dh1.begin(), dh1.end(), 0.0);
    linear_backward(w2, acts.h1.data() + i * h1n, dz.data(), h2n, h1n, dw2, db2,
                    dh1.data());
    const double* h1i = acts.h1.data() + i * h1n;
    for (std::size_t c = 0; c < h1n; ++c) {
      dz[c] = dh1[c] * (1.0 - h1i[c] * h1i[c]);
    }
    linear_backward({}, acts.input.data() + i * in_dim, dz.data(), h1n, in_dim,
                    dw1, db1, nullptr);
  }
}

// --------------------------------------------------------------------------
// Head
// --------------------------------------------------------------------------

std::vector<double> head_forward(const RepresentationMatrix& reps,
                                 std::span<const double> params,
                                 const EncoderConfig& cfg, HeadActivations* acts) {
  const ParamLayout layout = head_layout(cfg);
  if (params.size() != layout.total()) throw DataError("head parameter size mismatch");
  const std::size_t n = reps.rows();
  const auto hh = static_cast<std::size_t>(cfg.head_hidden);
  constexpr std::size_t in_dim = EncoderConfig::kOutputDim;
  constexpr std::size_t cls = EncoderConfig::kClasses;

  HeadActivations local;
  HeadActivations& a = acts ? *acts : local;
  a.n = n;
  a.hidden.assign(n * hh, 0.0);
  std::vector<double> logits(n * cls, 0.0);

  const auto w1 = layout.view(params, "head1.weight");
  const auto b1 = layout.view(params, "head1.bias");
  const auto w2 = layout.view(params, "head2.weight");
  const auto b2 = layout.view(params, "head2.bias");

  for (std::size_t i = 0; i < n; ++i) {
    linear_tanh(w1, b1, reps.row(i), hh, in_dim, a.hidden.data() + i * hh);
    linear(w2, b2, a.hidden.data() + i * hh, cls, hh, logits.data() + i * cls);
  }
  return logits;
}

void head_backward(const RepresentationMatrix& reps, const HeadActivations& acts,
                   const std::vector<double>& dlogits,
                   std::span<const double> params, const EncoderConfig& cfg,
                   std::span<double> grad, std::vector<double>* dreps_out) {
  const ParamLayout layout = head_layout(cfg);
  if (params.size() != layout.total() || grad.size() != layout.total()) {
    throw DataError("head gradient size mismatch");
  }
  const std::size_t n = acts.n;
  const auto hh = static_cast<std::size_t>(cfg.head_hidden);
  constexpr std::size_t in_dim = EncoderConfig::kOutputDim;
  constexpr std::size_t cls = EncoderConfig::kClasses;
  if (dlogits.size() != n * cls) throw DataError("dlogits size mismatch");

  const auto w1 = layout.view(params, "head1.weight");
  const auto w2 = layout.view(params, "head2.weight");
  auto dw1 = layout.view(grad, "head1.weight");
  auto db1 = layout.view(grad, "head1.bias");
  auto dw2 = layout.view(grad, "head2.weight");
  auto db2 = layout.view(grad, "head2.bias");

  if (dreps_out) dreps_out->assign(n * in_dim, 0.0);
  std::vector<double> dhidden(hh);
  std::vector<double> dz(hh);
  for (std::size_t i = 0; i < n; ++i) {
    std::fill(dhidden.begin(), dhidden.end(), 0.0);
    linear_backward(w2, acts.hidden.data() + i * hh, dlogits.data() + i * cls,
                    cls, hh, dw2, db2, dhidden.data());
    const double* hi = acts.hidden.data() + i * hh;
    for (std::size_t c = 0; c < hh; ++c) dz[c] = dhidden[c] * (1.0 - hi[c] * hi[c]);
    linear_backward(w1, reps.row(i), dz.data(), hh, in_dim, dw1, db1,
                    dreps_out ? dreps_out->data() + i * in_dim : nullptr);
  }
}

std::vector<double> softmax_probs(const std::vector<double>& logits) {
  if (logits.size() % 2 != 0) throw DataError("logits must be N x 2");
  std::vector<double> probs(logits.size());
  for (std::size_t i = 0; i < logits.size(); i += 2) {
    const double mx = std::max(logits[i], logits[i + 1]);
    const double e0 = std::exp(logits[i] - mx);
    const double e1 = std::exp(logits[i + 1] - mx);
    const double z = e0 + e1;
    probs[i] = e0 / z;
    probs[i + 1] = e1 / z;
  }
  return probs;
}

// --------------------------------------------------------------------------
// Focal Tversky loss
// --------------------------------------------------------------------------

MotionMask gt_mask(const RadarScan& scan) {
  MotionMask mask;
  mask.flags.reserve(scan.size());
  for (std::size_t i = 0; i < scan.size(); ++i) {
    if (!scan.points[i].gt_label.has_value()) {
      throw DataError("point " + std::to_string(i) + " lacks a ground-truth label");
    }
    mask.flags.push_back(*scan.points[i].gt_label);
  }
  return mask;
}

TverskyResult focal_tversky_loss(const std::vector<double>& probs,
                                 const MotionMask& gt, const TverskyParams& prm) {
  const std::size_t n = gt.size();
  if (n == 0) throw DataError("focal tversky loss needs labeled points");
  if (probs.size() != n * 2) throw DataError("probs size mismatch");

  TverskyResult res;
  res.grad_logits.assign(n * 2, 0.0);
  std::vector<double> dprobs(n * 2, 0.0);

  for (int cls = 0; cls < 2; ++cls) {
    double tp = 0.0, fn = 0.0, fp = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double p = probs[i * 2 + cls];
      const bool is_cls = static_cast<int>(gt.flags[i]) == cls;
      if (is_cls) {
        tp += p;
        fn += 1.0 - p;
      } else {
        fp += p;
      }
    }
    const double denom = tp + prm.alpha * fn + prm.beta * fp + prm.epsilon;
    const double ti = tp / denom;
    const double base = std::max(1.0 - ti, 0.0);
    res.loss += std::pow(base, prm.gamma);

    // d/dTI (1-TI)^gamma, guarded at TI -> 1 where gamma < 1 diverges.
    const double dloss_dti =
        -prm.gamma * std::pow(std::max(base, 1e-12), prm.gamma - 1.0);
    const double inv_d2 = 1.0 / (denom * denom);
    for (std::size_t i = 0; i < n; ++i) {
      const bool is_cls = static_cast<int>(gt.flags[i]) == cls;
      // dTI/dp from the soft counts: members raise TP and lower FN,
      // non-members raise FP.
      const double dti_dp = is_cls
                                ? (denom - tp + prm.alpha * tp) * inv_d2
                                : -prm.beta * tp * inv_d2;
      dprobs[i * 2 + cls] += dloss_dti * dti_dp;
    }
  }

  // Chain through softmax: dz_k = p_k * (dp_k - sum_c dp_c * p_c).
  for (std::size_t i = 0; i < n; ++i) {
    const double p0 = probs[i * 2];
    const double p1 = probs[i * 2 + 1];
    const double dot = dprobs[i * 2] * p0 + dprobs[i * 2 + 1] * p1;
    res.grad_logits[i * 2] = p0 * (dprobs[i * 2] - dot);
    res.grad_logits[i * 2 + 1] = p1 * (dprobs[i * 2 + 1] - dot);
  }
  return res;
}

// --------------------------------------------------------------------------
// Optimizers, schedule, EMA
// --------------------------------------------------------------------------

void sgdw_step(std::span<double> params, std::span<const double> grads,
               SgdwState& state, double lr, const SgdwParams& opt) {
  if (params.size() != grads.size()) throw DataError("sgdw size mismatch");
  if (state.momentum.size() != params.size()) {
    state.momentum.assign(params.size(), 0.0);
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.momentum[i] = opt.momentum * state.momentum[i] + grads[i];
    params[i] -= lr * state.momentum[i] + lr * opt.weight_decay * params[i];
  }
}

void adamw_step(std::span<double> params, std::span<const double> grads,
                AdamwState& state, double lr, const AdamwParams& opt) {
  if (params.size() != grads.size()) throw DataError("adamw size mismatch");
  if (state.m.size() != params.size()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
    state.step = 0;
  }
  ++state.step;
  const double bc1 = 1.0 - std::pow(opt.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(opt.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = opt.beta1 * state.m[i] + (1.0 - opt.beta1) * grads[i];
    state.v[i] = opt.beta2 * state.v[i] + (1.0 - opt.beta2) * grads[i] * grads[i];
    const double m_hat = state.m[i] / bc1;
    const double v_hat = state.v[i] / bc2;
    params[i] -= lr * m_hat / (std::sqrt(v_hat) + opt.epsilon) +
                 lr * opt.weight_decay * params[i];
  }
}

double multistep_lr(int epoch, double base_lr, const std::vector<int>& milestones,
                    double factor) {
  double lr = base_lr;
  for (int m : milestones) {
    if (epoch >= m) lr *= factor;
  }
  return lr;
}

void ema_update(std::span<double> teacher, std::span<const double> student,
                double alpha) {
  if (teacher.size() != student.size()) throw DataError("ema size mismatch");
  for (std::size_t i = 0; i < teacher.size(); ++i) {
    teacher[i] = (1.0 - alpha) * teacher[i] + alpha * student[i];
  }
}

// --------------------------------------------------------------------------
// ModelState
// --------------------------------------------------------------------------

ModelState ModelState::init(const EncoderConfig& cfg, std::uint64_t seed,
                            double ema_alpha) {
  ModelState st;
  st.config = cfg;
  st.enc_layout = encoder_layout(cfg);
  st.head_layout = rmss::nn::head_layout(cfg);
  st.student = init_params(st.enc_layout, derive_seed(seed, 0xE11C));
  st.teacher = st.student;  // teacher starts as a copy of the student
  st.head = init_params(st.head_layout, derive_seed(seed, 0x4EAD));
  st.grad_student.assign(st.student.size(), 0.0);
  st.grad_head.assign(st.head.size(), 0.0);
  st.ema_alpha = ema_alpha;
  st.rng_seed = seed;
  return st;
}

void ModelState::zero_grads() {
  std::fill(grad_student.begin(), grad_student.end(), 0.0);
  std::fill(grad_head.begin(), grad_head.end(), 0.0);
}

void ModelState::check_finite() const {
  auto check = [](const std::vector<double>& v, const char* what) {
    for (double x : v) {
      if (!std::isfinite(x)) throw DataError(std::string(what) + " became non-finite");
    }
  };
  check(student, "student parameters");
  check(teacher, "teacher parameters");
  check(head, "head parameters");
}

// --------------------------------------------------------------------------
// Augmentations
// --------------------------------------------------------------------------

RadarScan apply_rotate_z(RadarScan scan, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  for (RadarPoint& p : scan.points) {
    const double x = p.x, y = p.y;
    p.x = c * x - s * y;
    p.y = s * x + c * y;
  }
  return scan;
}

RadarScan apply_shift(RadarScan scan, double dx, double dy, double dz) {
  for (RadarPoint& p : scan.points) {
    p.x += dx;
    p.y += dy;
    p.z += dz;
  }
  return scan;
}

RadarScan apply_scale(RadarScan scan, double factor) {
  for (RadarPoint& p : scan.points) {
    p.x *= factor;
    p.y *= factor;
    p.z *= factor;
  }
  return scan;
}

RadarScan apply_flip_y(RadarScan scan) {
  for (RadarPoint& p : scan.points) p.y = -p.y;
  return scan;
}

RadarScan augment(const RadarScan& scan, std::uint64_t seed, unsigned ops) {
  RadarScan out = scan;
  Rng rng(derive_seed(seed, 0xa06));
  if (ops & kAugRotateZ) out = apply_rotate_z(std::move(out), rng.uniform(0.0, kTwoPi));
  if (ops & kAugFlipY) {
    const bool flip = rng.bernoulli(0.5);
    if (flip) out = apply_flip_y(std::move(out));
  }
  if (ops & kAugScale) out = apply_scale(std::move(out), rng.uniform(0.95, 1.05));
  if (ops & kAugShift) {
    const double dx = rng.uniform(-1.0, 1.0);
    const double dy = rng.uniform(-1.0, 1.0);
    const double dz = rng.uniform(-0.1, 0.1);
    out = apply_shift(std::move(out), dx, dy, dz);
  }
  return out;
}

}  // namespace rmss::nn
