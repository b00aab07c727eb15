#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "rmss/types.hpp"

namespace rmss::cluster {

struct ClusterParams {
  int min_cluster_size = 2;
  double cluster_selection_epsilon = 0.1;  // distance scale; 0 = plain HDBSCAN
  int min_samples = 0;                     // 0 -> defaults to min_cluster_size
  std::array<double, 4> feature_weights{1.0, 1.0, 1.0, 1.0};
  bool use_raw_doppler = false;            // v_raw instead of v_comp

  int effective_min_samples() const {
    return min_samples > 0 ? min_samples : min_cluster_size;
  }
  void validate() const;  // throws ArgError
};

using FeatureRow = std::array<double, 4>;

/// Row i = (w1*x, w2*y, w3*z, w4*doppler). RCS is deliberately left out.
std::vector<FeatureRow> cluster_features(const RadarScan& scan,
                                         const ClusterParams& params);

struct HdbscanDiagnostics {
  double mst_total_weight = 0.0;
  int n_clusters = 0;
};

/// HDBSCAN with epsilon-merged cluster selection:
///   1. core distance = distance to the min_samples-th nearest point, the
///      point itself counted first;
///   2. mutual reachability d_m(a,b) = max(core_a, core_b, d(a,b));
///   3. minimum spanning tree of the complete mutual-reachability graph;
///   4. single-linkage hierarchy from the sorted MST edges;
///   5. condensed tree under min_cluster_size;
///   6. excess-of-mass selection, then every selected cluster born below the
///      epsilon scale is replaced by its lowest ancestor born at or above it.
/// Ties are broken by lowest point index throughout. Unassigned points get
/// label -1.
ClusterLabels hdbscan_eps(const std::vector<FeatureRow>& features,
                          const ClusterParams& params,
                          HdbscanDiagnostics* diag = nullptr);

}  // namespace rmss::cluster
