#include "support/fixtures.hpp"

#include <cmath>

#include "rmss/rng.hpp"

namespace rmss::testing {

RadarScan random_blob_scan(std::uint64_t seed, int n_blobs, int points_per_blob,
                           double blob_sigma, double blob_spread) {
  Rng rng(derive_seed(seed, 0xF1));
  RadarScan scan;
  scan.seq_id = "fixture";
  scan.ego_vx = rng.uniform(0.0, 5.0);
  scan.ego_vy = rng.uniform(-1.0, 1.0);
  for (int b = 0; b < n_blobs; ++b) {
    const double cx = rng.uniform(8.0, 8.0 + blob_spread);
    const double cy = rng.uniform(-0.4, 0.4) * cx;
    const double cz = rng.uniform(0.0, 0.4);
    const bool moving = rng.bernoulli(0.4);
    for (int i = 0; i < points_per_blob; ++i) {
      RadarPoint p;
      p.x = cx + rng.normal(0.0, blob_sigma);
      p.y = cy + rng.normal(0.0, blob_sigma);
      p.z = cz + rng.normal(0.0, 0.1);
      p.rcs = rng.uniform(-10.0, 20.0);
      const double r = std::sqrt(p.x * p.x + p.y * p.y + p.z * p.z);
      const double radial_ego = (scan.ego_vx * p.x + scan.ego_vy * p.y) / r;
      p.v_raw = -radial_ego;
      if (moving) p.v_raw += rng.uniform(1.2, 4.0) * (rng.bernoulli(0.5) ? 1.0 : -1.0);
      p.v_comp = p.v_raw + radial_ego;
      p.gt_label = moving ? Motion::Moving : Motion::Static;
      scan.points.push_back(p);
    }
  }
  return scan;
}

std::vector<cluster::FeatureRow> random_features(std::uint64_t seed, int n,
                                                 double scale) {
  Rng rng(derive_seed(seed, 0xF2));
  std::vector<cluster::FeatureRow> rows(n);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < 4; ++k) rows[i][k] = rng.uniform(-scale, scale);
  }
  return rows;
}

RepresentationMatrix random_reps(std::uint64_t seed, std::size_t n) {
  Rng rng(derive_seed(seed, 0xF3));
  RepresentationMatrix reps(n);
  for (double& v : reps.data()) v = rng.uniform(-1.0, 1.0);
  return reps;
}

ClusterLabels random_labels(std::uint64_t seed, std::size_t n, int k,
                            double noise_rate) {
  Rng rng(derive_seed(seed, 0xF4));
  ClusterLabels labels;
  labels.labels.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (rng.bernoulli(noise_rate)) {
      labels.labels.push_back(-1);
    } else {
      labels.labels.push_back(rng.below_int(k));
    }
  }
  // guarantee every label in [0, k) appears when n allows it
  for (int l = 0; l < k && static_cast<std::size_t>(l) < n; ++l) {
    labels.labels[l] = l;
  }
  return labels;
}

MotionMask random_mask(std::uint64_t seed, std::size_t n) {
  Rng rng(derive_seed(seed, 0xF5));
  MotionMask mask;
  mask.flags.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    mask.flags.push_back(rng.bernoulli(0.3) ? Motion::Moving : Motion::Static);
  }
  return mask;
}

MaclFixture random_macl_fixture(std::uint64_t seed, std::size_t n, int k) {
  Rng rng(derive_seed(seed, 0xF6));
  MaclFixture fx;
  fx.reps_s = random_reps(derive_seed(seed, 1), n);
  fx.reps_t = random_reps(derive_seed(seed, 2), n);
  fx.labels_s = random_labels(derive_seed(seed, 3), n, k, 0.1);
  fx.labels_t = random_labels(derive_seed(seed, 4), n, k, 0.0);
  fx.labels_s.refined = true;
  fx.labels_t.refined = true;
  for (int l = 0; l < k; ++l) {
    fx.matches.push_back({l, l, rng.bernoulli(0.5)});
  }
  return fx;
}

}  // namespace rmss::testing
