#pragma once

// Shared random fixtures for the unit and acceptance suites.

#include <cstdint>
#include <vector>

#include "rmss/cluster.hpp"
#include "rmss/pseudo.hpp"
#include "rmss/types.hpp"

namespace rmss::testing {

/// Random scan with a handful of well-separated blobs; gt labels set.
RadarScan random_blob_scan(std::uint64_t seed, int n_blobs = 4,
                           int points_per_blob = 6, double blob_sigma = 0.3,
                           double blob_spread = 25.0);

/// Uniform random feature rows in [-scale, scale]^4.
std::vector<cluster::FeatureRow> random_features(std::uint64_t seed, int n,
                                                 double scale = 1.0);

/// Random representation matrix with entries uniform in [-1, 1].
RepresentationMatrix random_reps(std::uint64_t seed, std::size_t n);

/// Random cluster labels over n points: k clusters, possibly noise.
ClusterLabels random_labels(std::uint64_t seed, std::size_t n, int k,
                            double noise_rate = 0.1);

/// Random motion mask.
MotionMask random_mask(std::uint64_t seed, std::size_t n);

/// Random refined-label fixture with matching mask (every cluster pure) and
/// a match list over the shared labels.
struct MaclFixture {
  RepresentationMatrix reps_s;
  RepresentationMatrix reps_t;
  ClusterLabels labels_s;
  ClusterLabels labels_t;
  std::vector<pseudo::Match> matches;
};

MaclFixture random_macl_fixture(std::uint64_t seed, std::size_t n = 40, int k = 5);

}  // namespace rmss::testing
