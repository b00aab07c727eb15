#pragma once

#include <array>
#include <utility>
#include <vector>

#include "rmss/types.hpp"

namespace rmss::pseudo {

struct ClusterClassEntry {
  int label = -1;
  Motion cls = Motion::Static;
  int member_count = 0;
};

/// Per-cluster class map, sorted by label.
using ClusterClassMap = std::vector<ClusterClassEntry>;

struct RepCentroid {
  int label = -1;
  std::array<double, RepresentationMatrix::kDim> mean{};
};

struct SpatialCentroid {
  int label = -1;
  std::array<double, 3> mean{};
};

struct CentroidSet {
  std::vector<RepCentroid> representation;
  std::vector<SpatialCentroid> spatial;
};

/// Matched cluster pair; label_s == label_t except for the clustering-free
/// ablation, which cross-matches the two mask-derived clusters.
struct Match {
  int label_s = -1;
  int label_t = -1;
  bool positive = true;
};

/// Spatial (x, y, z) means of every cluster with label >= 0, sorted by label.
CentroidSet spatial_centroids(const RadarScan& scan, const ClusterLabels& labels);

/// 48-dim representation means of every cluster with label >= 0.
CentroidSet representation_centroids(const RepresentationMatrix& reps,
                                     const ClusterLabels& labels);

/// Assigns each teacher point the label of the spatially nearest student
/// cluster centroid. Output contains no noise labels. Throws NoClusters when
/// the student has none.
ClusterLabels derive_teacher_labels(const RadarScan& student_scan,
                                    const ClusterLabels& student_labels,
                                    const RadarScan& teacher_scan);

/// Splits every motion-impure cluster: moving members keep the original
/// label, static members move to label + C with C = (max label over both
/// sides) + 1. The shared offset makes the student's and teacher's new
/// static clusters coincide. Pure clusters keep their label; noise stays -1.
std::pair<ClusterLabels, ClusterLabels> refine_clusters(
    const ClusterLabels& labels_s, const MotionMask& mask_s,
    const ClusterLabels& labels_t, const MotionMask& mask_t);

/// Maps every refined cluster to its members' common flag. Throws DataError
/// if any cluster is impure ("refinement violated").
ClusterClassMap classify_clusters(const ClusterLabels& labels,
                                  const MotionMask& mask);

/// One entry per label in the intersection; positive when the classes agree.
/// Throws NoMatches on an empty intersection.
std::vector<Match> match_clusters(const ClusterClassMap& map_s,
                                  const ClusterClassMap& map_t);

struct MaclResult {
  double loss = 0.0;
  std::vector<double> grad_reps_s;  // row-major N x 48, student side only
};

/// Motion-aware contrastive loss over matched cluster centroids:
/// d = max(||c_s - c_t||, 1e-6); positive matches contribute d, negative
/// ones 1/d; the loss is the mean over matches. Gradients flow to student
/// rows only; the teacher branch is treated as constant.
MaclResult macl_loss(const RepresentationMatrix& reps_s,
                     const RepresentationMatrix& reps_t,
                     const ClusterLabels& labels_s, const ClusterLabels& labels_t,
                     const std::vector<Match>& matches);

/// Distance floor guarding the 1/d branch of the loss.
inline constexpr double kDistanceFloor = 1e-6;

}  // namespace rmss::pseudo
