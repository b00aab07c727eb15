#include "rmss/pseudo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace rmss::pseudo {

namespace {

void check_lengths(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw DataError(std::string(what) + ": length mismatch");
}

// label -> member indices, labels >= 0 only, sorted by label.
std::map<int, std::vector<int>> members_by_label(const ClusterLabels& labels) {
  std::map<int, std::vector<int>> m;
  for (std::size_t i = 0; i < labels.labels.size(); ++i) {
    if (labels.labels[i] >= 0) m[labels.labels[i]].push_back(static_cast<int>(i));
  }
  return m;
}

}  // namespace

CentroidSet spatial_centroids(const RadarScan& scan, const ClusterLabels& labels) {
  check_lengths(scan.size(), labels.size(), "spatial_centroids");
  CentroidSet out;
  for (const auto& [label, idx] : members_by_label(labels)) {
    SpatialCentroid c;
    c.label = label;
    for (int i : idx) {
      c.mean[0] += scan.points[i].x;
      c.mean[1] += scan.points[i].y;
      c.mean[2] += scan.points[i].z;
    }
    for (double& v : c.mean) v /= static_cast<double>(idx.size());
    out.spatial.push_back(c);
  }
  return out;
}

CentroidSet representation_centroids(const RepresentationMatrix& reps,
                                     const ClusterLabels& labels) {
  check_lengths(reps.rows(), labels.size(), "representation_centroids");
  CentroidSet out;
  for (const auto& [label, idx] : members_by_label(labels)) {
    RepCentroid c;
    c.label = label;
    for (int i : idx) {
      const double* row = reps.row(static_cast<std::size_t>(i));
      for (std::size_t k = 0; k < RepresentationMatrix::kDim; ++k) {
        c.mean[k] += row[k];
      }
    }
    for (double& v : c.mean) v /= static_cast<double>(idx.size());
    out.representation.push_back(c);
  }
  return out;
}

ClusterLabels derive_teacher_labels(const RadarScan& student_scan,
                                    const ClusterLabels& student_labels,
                                    const RadarScan& teacher_scan) {
  if (student_labels.refined) {
    throw DataError("derive_teacher_labels expects unrefined student labels");
  }
  const CentroidSet cents = spatial_centroids(student_scan, student_labels);
  if (cents.spatial.empty()) throw NoClusters();

  ClusterLabels out;
  out.refined = false;
  out.labels.reserve(teacher_scan.size());
  for (const RadarPoint& p : teacher_scan.points) {
    int best_label = cents.spatial.front().label;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (const SpatialCentroid& c : cents.spatial) {
      const double dx = p.x - c.mean[0];
      const double dy = p.y - c.mean[1];
      const double dz = p.z - c.mean[2];
      const double d2 = dx * dx + dy * dy + dz * dz;
      if (d2 < best_d2) {  // ties resolve to the lowest label (map order)
        best_d2 = d2;
        best_label = c.label;
      }
    }
    out.labels.push_back(best_label);
  }
  return out;
}

std::pair<ClusterLabels, ClusterLabels> refine_clusters(
    const ClusterLabels& labels_s, const MotionMask& mask_s,
    const ClusterLabels& labels_t, const MotionMask& mask_t) {
  check_lengths(labels_s.size(), mask_s.size(), "refine_clusters student");
  check_lengths(labels_t.size(), mask_t.size(), "refine_clusters teacher");

  int max_label = -1;
  for (int l : labels_s.labels) max_label = std::max(max_label, l);
  for (int l : labels_t.labels) max_label = std::max(max_label, l);
  const int offset = max_label + 1;  // shared by both sides

  auto refine_one = [offset](const ClusterLabels& labels, const MotionMask& mask) {
    // A cluster splits only when it holds both flags; the moving part keeps
    // the label, the static part moves to label + offset.
    std::map<int, std::pair<bool, bool>> seen;  // label -> (has_moving, has_static)
    for (std::size_t i = 0; i < labels.labels.size(); ++i) {
      const int l = labels.labels[i];
      if (l < 0) continue;
      auto& [has_m, has_s] = seen[l];
      (mask.flags[i] == Motion::Moving ? has_m : has_s) = true;
    }
    ClusterLabels out;
    out.refined = true;
    out.labels.reserve(labels.labels.size());
    for (std::size_t i = 0; i < labels.labels.size(); ++i) {
      const int l = labels.labels[i];
      if (l < 0) {
        out.labels.push_back(-1);
        continue;
      }
      const auto& [has_m, has_s] = seen[l];
      const bool mixed = has_m && has_s;
      if (mixed && mask.flags[i] == Motion::Static) {
        out.labels.push_back(l + offset);
      } else {
        out.labels.push_back(l);
      }
    }
    return out;
  };

  return {refine_one(labels_s, mask_s), refine_one(labels_t, mask_t)};
}

ClusterClassMap classify_clusters(const ClusterLabels& labels,
                                  const MotionMask& mask) {
  check_lengths(labels.size(), mask.size(), "classify_clusters");
  if (!labels.refined) throw DataError("classify_clusters expects refined labels");

  std::map<int, std::pair<Motion, int>> agg;  // label -> (flag, count)
  for (std::size_t i = 0; i < labels.labels.size(); ++i) {
    const int l = labels.labels[i];
    if (l < 0) continue;
    auto it = agg.find(l);
    if (it == agg.end()) {
      agg.emplace(l, std::make_pair(mask.flags[i], 1));
    } else {
      if (it->second.first != mask.flags[i]) {
        throw DataError("refinement violated: impure cluster " + std::to_string(l));
      }
      ++it->second.second;
    }
  }
  ClusterClassMap out;
  out.reserve(agg.size());
  for (const auto& [label, fc] : agg) {
    out.push_back({label, fc.first, fc.second});
  }
  return out;
}

std::vector<Match> match_clusters(const ClusterClassMap& map_s,
                                  const ClusterClassMap& map_t) {
  std::vector<Match> matches;
  auto it_s = map_s.begin();
  auto it_t = map_t.begin();
  while (it_s != map_s.end() && it_t != map_t.end()) {
    if (it_s->label < it_t->label) {
      ++it_s;
    } else if (it_t->label < it_s->label) {
      ++it_t;
    } else {
      matches.push_back({it_s->label, it_t->label, it_s->cls == it_t->cls});
      ++it_s;
      ++it_t;
    }
  }
  if (matches.empty()) throw NoMatches();
  return matches;
}

MaclResult macl_loss(const RepresentationMatrix& reps_s,
                     const RepresentationMatrix& reps_t,
                     const ClusterLabels& labels_s, const ClusterLabels& labels_t,
                     const std::vector<Match>& matches) {
  check_lengths(reps_s.rows(), labels_s.size(), "macl_loss student");
  check_lengths(reps_t.rows(), labels_t.size(), "macl_loss teacher");
  if (matches.empty()) throw NoMatches();
  for (double v : reps_s.data()) {
    if (!std::isfinite(v)) throw DataError("non-finite student representation");
  }
  for (double v : reps_t.data()) {
    if (!std::isfinite(v)) throw DataError("non-finite teacher representation");
  }

  constexpr std::size_t kDim = RepresentationMatrix::kDim;
  const auto members_s = members_by_label(labels_s);
  const auto members_t = members_by_label(labels_t);
  const CentroidSet cents_s = representation_centroids(reps_s, labels_s);
  const CentroidSet cents_t = representation_centroids(reps_t, labels_t);

  auto centroid_of = [](const CentroidSet& cs, int label) -> const RepCentroid& {
    for (const RepCentroid& c : cs.representation) {
      if (c.label == label) return c;
    }
    throw DataError("match references unknown cluster label " + std::to_string(label));
  };

  MaclResult result;
  result.grad_reps_s.assign(reps_s.rows() * kDim, 0.0);
  const double inv_m = 1.0 / static_cast<double>(matches.size());

  for (const Match& m : matches) {
    const RepCentroid& cs = centroid_of(cents_s, m.label_s);
    const RepCentroid& ct = centroid_of(cents_t, m.label_t);
    std::array<double, kDim> diff{};
    double d2 = 0.0;
    for (std::size_t k = 0; k < kDim; ++k) {
      diff[k] = cs.mean[k] - ct.mean[k];
      d2 += diff[k] * diff[k];
    }
    const double dist = std::sqrt(d2);
    const double d = std::max(dist, kDistanceFloor);
    const bool floored = dist < kDistanceFloor;

    result.loss += (m.positive ? d : 1.0 / d) * inv_m;

    if (floored) continue;  // flat region: no gradient
    // dL/dc_s = (c_s - c_t)/d for a positive match, -(c_s - c_t)/d^3 for a
    // negative one; each member row receives its cluster-mean share.
    const double scale = m.positive ? 1.0 / d : -1.0 / (d * d * d);
    const auto& members = members_s.at(m.label_s);
    const double row_share = inv_m * scale / static_cast<double>(members.size());
    for (int i : members) {
      double* g = result.grad_reps_s.data() + static_cast<std::size_t>(i) * kDim;
      for (std::size_t k = 0; k < kDim; ++k) g[k] += row_share * diff[k];
    }
  }
  return result;
}

}  // namespace rmss::pseudo
