#include <cmath>
#include <numeric>

#include <doctest.h>

#include "rmss/nn.hpp"
#include "rmss/rng.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace rmss;

namespace {

std::vector<std::size_t> random_coords(std::uint64_t seed, std::size_t total,
                                       int count) {
  Rng rng(derive_seed(seed, 0xCC));
  std::vector<std::size_t> coords;
  for (int i = 0; i < count; ++i) coords.push_back(rng.below(total));
  return coords;
}

}  // namespace

TEST_SUITE("nn") {

TEST_CASE("parameter layout is contiguous and named") {
  const nn::EncoderConfig cfg;
  const nn::ParamLayout layout = nn::encoder_layout(cfg);
  std::size_t expect = 64 * 5 + 64 + 64 * 64 + 64 + 48 * 128 + 48;
  CHECK(layout.total() == expect);
  CHECK(layout.layer("fc1.weight").dims == std::vector<std::size_t>{64, 5});
  CHECK_THROWS_AS(layout.layer("nope"), DataError);
}

TEST_CASE("single point pools its own feature") {
  const nn::EncoderConfig cfg;
  const std::vector<double> params = nn::init_params(nn::encoder_layout(cfg), 3);
  RadarScan scan;
  scan.points.push_back(RadarPoint{5, 1, 0.2, 0, 0.3, 4.0});
  nn::EncoderActivations acts;
  const RepresentationMatrix reps = nn::encoder_forward(scan, params, cfg, &acts);
  REQUIRE(reps.rows() == 1);
  CHECK(acts.k_eff == 0);
  for (std::size_t c = 0; c < static_cast<std::size_t>(cfg.hidden2); ++c) {
    CHECK(acts.pooled[c] == acts.h2[c]);
  }
}

TEST_CASE("empty scan gives an empty matrix") {
  const nn::EncoderConfig cfg;
  const std::vector<double> params = nn::init_params(nn::encoder_layout(cfg), 3);
  CHECK(nn::encoder_forward(RadarScan{}, params, cfg).rows() == 0);
}

TEST_CASE("permuting points permutes representations identically") {
  const nn::EncoderConfig cfg;
  const std::vector<double> params = nn::init_params(nn::encoder_layout(cfg), 5);
  const RadarScan scan = testing::random_blob_scan(21);
  const RepresentationMatrix base = nn::encoder_forward(scan, params, cfg);

  Rng rng(9);
  std::vector<std::size_t> perm(scan.size());
  std::iota(perm.begin(), perm.end(), 0);
  for (std::size_t i = perm.size(); i > 1; --i) {
    std::swap(perm[i - 1], perm[rng.below(i)]);
  }
  RadarScan shuffled = scan;
  for (std::size_t i = 0; i < perm.size(); ++i) {
    shuffled.points[i] = scan.points[perm[i]];
  }
  const RepresentationMatrix after = nn::encoder_forward(shuffled, params, cfg);
  for (std::size_t i = 0; i < perm.size(); ++i) {
    for (std::size_t k = 0; k < RepresentationMatrix::kDim; ++k) {
      CHECK(after.row(i)[k] == doctest::Approx(base.row(perm[i])[k]).epsilon(1e-12));
    }
  }
}

TEST_CASE("encoder parameter gradient matches finite differences") {
  const nn::EncoderConfig cfg;
  const nn::ParamLayout layout = nn::encoder_layout(cfg);
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const RadarScan scan = testing::random_blob_scan(seed, 3, 5);
    std::vector<double> params = nn::init_params(layout, seed + 1);
    // scalar objective: weighted sum of all representation entries
    const RepresentationMatrix probe = nn::encoder_forward(scan, params, cfg);
    std::vector<double> weights(probe.data().size());
    Rng rng(seed);
    for (double& w : weights) w = rng.uniform(-1.0, 1.0);

    auto value = [&](const std::vector<double>& p) {
      const RepresentationMatrix reps = nn::encoder_forward(scan, p, cfg);
      double s = 0.0;
      for (std::size_t i = 0; i < reps.data().size(); ++i) {
        s += weights[i] * reps.data()[i];
      }
      return s;
    };

    nn::EncoderActivations acts;
    nn::encoder_forward(scan, params, cfg, &acts);
    std::vector<double> grad(layout.total(), 0.0);
    nn::encoder_backward(acts, weights, params, cfg, grad);

    const auto coords = random_coords(seed, layout.total(), 50);
    const auto check = testing::check_gradient(value, params, grad, coords);
    CHECK(check.max_rel_err < 1e-4);
  }
}

TEST_CASE("head gradient matches finite differences") {
  const nn::EncoderConfig cfg;
  const nn::ParamLayout layout = nn::head_layout(cfg);
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const RepresentationMatrix reps = testing::random_reps(seed, 12);
    std::vector<double> params = nn::init_params(layout, seed + 2);
    std::vector<double> weights(12 * 2);
    Rng rng(seed);
    for (double& w : weights) w = rng.uniform(-1.0, 1.0);

    auto value = [&](const std::vector<double>& p) {
      const std::vector<double> logits = nn::head_forward(reps, p, cfg);
      double s = 0.0;
      for (std::size_t i = 0; i < logits.size(); ++i) s += weights[i] * logits[i];
      return s;
    };

    nn::HeadActivations acts;
    nn::head_forward(reps, params, cfg, &acts);
    std::vector<double> grad(layout.total(), 0.0);
    nn::head_backward(reps, acts, weights, params, cfg, grad, nullptr);

    const auto coords = random_coords(seed, layout.total(), 50);
    const auto check = testing::check_gradient(value, params, grad, coords);
    CHECK(check.max_rel_err < 1e-4);
  }
}

TEST_CASE("softmax basics") {
  const std::vector<double> zeros{0, 0};
  const std::vector<double> p = nn::softmax_probs(zeros);
  CHECK(p[0] == doctest::Approx(0.5));
  CHECK(p[1] == doctest::Approx(0.5));

  const std::vector<double> shifted{3.0 + 7.0, -1.0 + 7.0};
  const std::vector<double> base{3.0, -1.0};
  const auto a = nn::softmax_probs(shifted);
  const auto b = nn::softmax_probs(base);
  CHECK(a[0] == doctest::Approx(b[0]).epsilon(1e-12));

  Rng rng(4);
  std::vector<double> logits(20);
  for (double& l : logits) l = rng.uniform(-5.0, 5.0);
  const auto probs = nn::softmax_probs(logits);
  for (std::size_t i = 0; i < logits.size(); i += 2) {
    const double e0 = std::exp(logits[i]);
    const double e1 = std::exp(logits[i + 1]);
    CHECK(probs[i] == doctest::Approx(e0 / (e0 + e1)).epsilon(1e-12));
    CHECK(probs[i] + probs[i + 1] == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("perfect one-hot prediction has near-zero focal tversky loss") {
  MotionMask gt;
  gt.flags = {Motion::Moving, Motion::Static, Motion::Moving};
  const std::vector<double> probs{0, 1, 1, 0, 0, 1};
  const auto res = nn::focal_tversky_loss(probs, gt);
  // the epsilon guard leaves a residual of sum_c (eps/TP_c)^gamma
  CHECK(res.loss < 1e-4);
  CHECK(res.loss >= 0.0);
}

TEST_CASE("absent class contributes one full unit via the epsilon convention") {
  MotionMask gt;
  gt.flags.assign(50, Motion::Static);
  std::vector<double> probs(100, 0.0);
  for (int i = 0; i < 50; ++i) probs[i * 2] = 1.0;  // confident static
  const auto res = nn::focal_tversky_loss(probs, gt);
  // moving class: TP = FN = FP = 0 gives TI = 0 and one unit of loss
  CHECK(res.loss == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("focal tversky gradient matches finite differences") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const std::size_t n = 15;
    Rng rng(derive_seed(seed, 0x22));
    std::vector<double> logits(n * 2);
    for (double& l : logits) l = rng.uniform(-2.0, 2.0);
    MotionMask gt;
    for (std::size_t i = 0; i < n; ++i) {
      gt.flags.push_back(rng.bernoulli(0.4) ? Motion::Moving : Motion::Static);
    }
    const auto res = nn::focal_tversky_loss(nn::softmax_probs(logits), gt);
    auto value = [&](const std::vector<double>& l) {
      return nn::focal_tversky_loss(nn::softmax_probs(l), gt).loss;
    };
    std::vector<std::size_t> coords(logits.size());
    std::iota(coords.begin(), coords.end(), 0);
    const auto check = testing::check_gradient(value, logits, res.grad_logits, coords);
    CHECK(check.max_rel_err < 1e-4);
  }
}

TEST_CASE("missing ground truth labels are an error") {
  RadarScan scan;
  scan.points.push_back(RadarPoint{1, 0, 0});
  CHECK_THROWS_AS(nn::gt_mask(scan), DataError);
  MotionMask empty;
  CHECK_THROWS_AS(nn::focal_tversky_loss({}, empty), DataError);
}

TEST_CASE("plain gradient step when momentum and decay are off") {
  std::vector<double> params{1.0, -2.0};
  const std::vector<double> grads{0.5, 0.25};
  nn::SgdwState state;
  nn::sgdw_step(params, grads, state, 0.1, {0.0, 0.0});
  CHECK(params[0] == doctest::Approx(1.0 - 0.05).epsilon(1e-15));
  CHECK(params[1] == doctest::Approx(-2.0 - 0.025).epsilon(1e-15));
}

TEST_CASE("pure decay shrinks parameters geometrically") {
  std::vector<double> params{2.0};
  const std::vector<double> grads{0.0};
  nn::SgdwState state;
  nn::sgdw_step(params, grads, state, 0.1, {0.9, 0.01});
  CHECK(params[0] == doctest::Approx(2.0 * (1.0 - 0.1 * 0.01)).epsilon(1e-15));
}

TEST_CASE("zero gradient and zero decay leave parameters bit-identical") {
  std::vector<double> params{0.123456789, -9.87654321};
  const std::vector<double> before = params;
  const std::vector<double> grads{0.0, 0.0};
  nn::SgdwState s1;
  nn::sgdw_step(params, grads, s1, 0.1, {0.9, 0.0});
  CHECK(params == before);
  nn::AdamwState s2;
  nn::adamw_step(params, grads, s2, 0.1, {0.9, 0.999, 1e-8, 0.0});
  CHECK(params == before);
}

TEST_CASE("sgdw trajectory on a two-parameter quadratic matches by hand") {
  // f(p) = 0.5 * (p0^2 + 10 * p1^2), grad = (p0, 10 p1)
  std::vector<double> p{1.0, 1.0};
  nn::SgdwState state;
  const nn::SgdwParams opt{0.9, 0.01};
  const double lr = 0.05;
  double m0 = 0.0, m1 = 0.0, q0 = 1.0, q1 = 1.0;
  for (int step = 0; step < 25; ++step) {
    const std::vector<double> g{p[0], 10.0 * p[1]};
    nn::sgdw_step(p, g, state, lr, opt);
    // reference recursion with identical operation order
    m0 = opt.momentum * m0 + q0;
    m1 = opt.momentum * m1 + 10.0 * q1;
    q0 -= lr * m0 + lr * opt.weight_decay * q0;
    q1 -= lr * m1 + lr * opt.weight_decay * q1;
    CHECK(p[0] == doctest::Approx(q0).epsilon(1e-12));
    CHECK(p[1] == doctest::Approx(q1).epsilon(1e-12));
  }
}

TEST_CASE("adamw trajectory on a quadratic matches by hand") {
  std::vector<double> p{1.0, -1.0};
  nn::AdamwState state;
  const nn::AdamwParams opt;
  const double lr = 0.01;
  double m0 = 0, m1 = 0, v0 = 0, v1 = 0, q0 = 1.0, q1 = -1.0;
  for (int step = 1; step <= 25; ++step) {
    const std::vector<double> g{q0, 4.0 * q1};
    nn::adamw_step(p, g, state, lr, opt);
    m0 = opt.beta1 * m0 + (1 - opt.beta1) * g[0];
    m1 = opt.beta1 * m1 + (1 - opt.beta1) * g[1];
    v0 = opt.beta2 * v0 + (1 - opt.beta2) * g[0] * g[0];
    v1 = opt.beta2 * v1 + (1 - opt.beta2) * g[1] * g[1];
    const double bc1 = 1 - std::pow(opt.beta1, step);
    const double bc2 = 1 - std::pow(opt.beta2, step);
    q0 -= lr * (m0 / bc1) / (std::sqrt(v0 / bc2) + opt.epsilon) +
          lr * opt.weight_decay * q0;
    q1 -= lr * (m1 / bc1) / (std::sqrt(v1 / bc2) + opt.epsilon) +
          lr * opt.weight_decay * q1;
    CHECK(p[0] == doctest::Approx(q0).epsilon(1e-12));
    CHECK(p[1] == doctest::Approx(q1).epsilon(1e-12));
  }
}

TEST_CASE("multistep schedule drops by the factor at 60 and 80") {
  CHECK(nn::multistep_lr(0) == doctest::Approx(0.001));
  CHECK(nn::multistep_lr(59) == doctest::Approx(0.001));
  CHECK(nn::multistep_lr(60) == doctest::Approx(0.0001));
  CHECK(nn::multistep_lr(80) == doctest::Approx(0.00001));
  CHECK(nn::multistep_lr(99) == doctest::Approx(0.00001));
}

TEST_CASE("ema update is the stated convex combination") {
  std::vector<double> teacher{0.0};
  const std::vector<double> student{1.0};
  nn::ema_update(teacher, student, 0.1);
  CHECK(teacher[0] == doctest::Approx(0.1).epsilon(1e-15));
  teacher = {0.4};
  nn::ema_update(teacher, student, 1.0);
  CHECK(teacher[0] == 1.0);
}

TEST_CASE("ema error against a constant student decays as (1-alpha)^t") {
  Rng rng(8);
  const std::size_t dim = 32;
  std::vector<double> teacher(dim), student(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    teacher[i] = rng.uniform(-1.0, 1.0);
    student[i] = rng.uniform(-1.0, 1.0);
  }
  const double alpha = 0.03;
  double norm0 = 0.0;
  for (std::size_t i = 0; i < dim; ++i) {
    norm0 += (teacher[i] - student[i]) * (teacher[i] - student[i]);
  }
  norm0 = std::sqrt(norm0);
  for (int t = 1; t <= 100; ++t) {
    nn::ema_update(teacher, student, alpha);
    if (t == 1 || t == 10 || t == 100) {
      double norm = 0.0;
      for (std::size_t i = 0; i < dim; ++i) {
        norm += (teacher[i] - student[i]) * (teacher[i] - student[i]);
      }
      norm = std::sqrt(norm);
      CHECK(std::abs(norm - std::pow(1.0 - alpha, t) * norm0) < 1e-12);
    }
  }
}

TEST_CASE("ema teacher stays inside the historical coordinate envelope") {
  Rng rng(12);
  std::vector<double> teacher{0.5, -0.5, 0.0};
  std::vector<double> lo = teacher, hi = teacher;
  for (int t = 0; t < 50; ++t) {
    std::vector<double> student{rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0),
                                rng.uniform(-2.0, 2.0)};
    for (std::size_t i = 0; i < 3; ++i) {
      lo[i] = std::min(lo[i], student[i]);
      hi[i] = std::max(hi[i], student[i]);
    }
    nn::ema_update(teacher, student, 0.2);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(teacher[i] >= lo[i] - 1e-12);
      CHECK(teacher[i] <= hi[i] + 1e-12);
    }
  }
}

TEST_CASE("augment with no ops returns the scan unchanged") {
  const RadarScan scan = testing::random_blob_scan(31);
  const RadarScan out = nn::augment(scan, 5, 0);
  for (std::size_t i = 0; i < scan.size(); ++i) {
    CHECK(out.points[i].x == scan.points[i].x);
    CHECK(out.points[i].v_comp == scan.points[i].v_comp);
  }
}

TEST_CASE("rotation by a full turn is the identity within 1e-9") {
  const RadarScan scan = testing::random_blob_scan(32);
  const RadarScan out = nn::apply_rotate_z(scan, 2.0 * M_PI);
  for (std::size_t i = 0; i < scan.size(); ++i) {
    CHECK(out.points[i].x == doctest::Approx(scan.points[i].x).epsilon(1e-9));
    CHECK(out.points[i].y == doctest::Approx(scan.points[i].y).epsilon(1e-9));
  }
}

TEST_CASE("flip composed with flip is the identity") {
  const RadarScan scan = testing::random_blob_scan(33);
  const RadarScan out = nn::apply_flip_y(nn::apply_flip_y(scan));
  for (std::size_t i = 0; i < scan.size(); ++i) {
    CHECK(out.points[i].y == scan.points[i].y);
  }
}

TEST_CASE("augment leaves Doppler, RCS and labels untouched") {
  const RadarScan scan = testing::random_blob_scan(34);
  const RadarScan out = nn::augment(scan, 77);
  for (std::size_t i = 0; i < scan.size(); ++i) {
    CHECK(out.points[i].v_raw == scan.points[i].v_raw);
    CHECK(out.points[i].v_comp == scan.points[i].v_comp);
    CHECK(out.points[i].rcs == scan.points[i].rcs);
    CHECK(out.points[i].gt_label == scan.points[i].gt_label);
  }
  // same seed reproduces the same augmentation
  const RadarScan again = nn::augment(scan, 77);
  for (std::size_t i = 0; i < scan.size(); ++i) {
    CHECK(out.points[i].x == again.points[i].x);
  }
}

}  // TEST_SUITE
