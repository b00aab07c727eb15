#include "rmss/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace rmss::cluster {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double euclidean(const FeatureRow& a, const FeatureRow& b) {
  double s = 0.0;
  for (int k = 0; k < 4; ++k) {
    const double d = a[k] - b[k];
    s += d * d;
  }
  return std::sqrt(s);
}

// lambda = 1/distance; the density scale used for cluster stability.
double lambda_of(double distance) { return distance > 0.0 ? 1.0 / distance : kInf; }

struct Edge {
  double w;
  int u, v;  // u < v
  bool operator<(const Edge& o) const {
    if (w != o.w) return w < o.w;
    if (u != o.u) return u < o.u;
    return v < o.v;
  }
};

// Binary single-linkage merge node. Leaves are points 0..n-1; internal nodes
// n..2n-2 in merge order.
struct DendroNode {
  int left = -1;
  int right = -1;
  double weight = 0.0;
  int size = 1;
};

struct CondensedCluster {
  int parent = -1;
  double birth = kInf;      // distance scale at which the cluster appeared
  double split_scale = 0.0; // distance at which it split into two children
  int split_size = 0;       // points present at the split
  std::array<int, 2> children{-1, -1};
  bool has_children = false;
  std::vector<std::pair<int, double>> fallouts;  // (point, departure scale)
  double stability = 0.0;
};

std::vector<double> core_distances(const std::vector<FeatureRow>& rows, int min_samples) {
  const int n = static_cast<int>(rows.size());
  std::vector<double> core(n, 0.0);
  const int k = std::min(min_samples, n);  // self counts as the 1st neighbor
  std::vector<double> dists(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) dists[j] = euclidean(rows[i], rows[j]);
    std::nth_element(dists.begin(), dists.begin() + (k - 1), dists.end());
    core[i] = dists[k - 1];
  }
  return core;
}

// Kruskal over all pairwise mutual-reachability edges sorted by
// (weight, lower index, higher index). The accepted edges are the MST and,
// in acceptance order, also the single-linkage merge sequence.
std::vector<DendroNode> single_linkage(const std::vector<FeatureRow>& rows,
                                       const std::vector<double>& core,
                                       double* mst_weight) {
  const int n = static_cast<int>(rows.size());
  std::vector<Edge> edges;
  edges.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double w = std::max({core[i], core[j], euclidean(rows[i], rows[j])});
      edges.push_back({w, i, j});
    }
  }
  std::sort(edges.begin(), edges.end());

  std::vector<DendroNode> nodes(2 * n - 1);
  for (int i = 0; i < n; ++i) nodes[i] = DendroNode{-1, -1, 0.0, 1};

  std::vector<int> uf_parent(2 * n - 1);
  std::iota(uf_parent.begin(), uf_parent.end(), 0);
  auto find = [&](int x) {
    while (uf_parent[x] != x) {
      uf_parent[x] = uf_parent[uf_parent[x]];
      x = uf_parent[x];
    }
    return x;
  };

  *mst_weight = 0.0;
  int next = n;
  for (const Edge& e : edges) {
    const int ra = find(e.u);
    const int rb = find(e.v);
    if (ra == rb) continue;
    nodes[next] = DendroNode{std::min(ra, rb), std::max(ra, rb), e.w,
                             nodes[ra].size + nodes[rb].size};
    uf_parent[ra] = next;
    uf_parent[rb] = next;
    *mst_weight += e.w;
    ++next;
    if (next == 2 * n - 1) break;
  }
  return nodes;
}

void collect_leaves(const std::vector<DendroNode>& nodes, int root, int n,
                    std::vector<int>* out) {
  std::vector<int> stack{root};
  while (!stack.empty()) {
    const int x = stack.back();
    stack.pop_back();
    if (x < n) {
      out->push_back(x);
    } else {
      stack.push_back(nodes[x].left);
      stack.push_back(nodes[x].right);
    }
  }
}

// Walks the dendrogram top-down. A side with fewer than min_cluster_size
// points falls out of the current cluster at the node's merge scale; a split
// into two large sides creates two child clusters born at that scale.
std::vector<CondensedCluster> condense(const std::vector<DendroNode>& nodes, int n,
                                       int mcs) {
  std::vector<CondensedCluster> clusters;
  clusters.emplace_back();  // root, birth = +inf

  struct Item {
    int node;
    int cluster;
  };
  std::vector<Item> stack{{2 * n - 2, 0}};
  while (!stack.empty()) {
    const Item it = stack.back();
    stack.pop_back();
    const DendroNode& nd = nodes[it.node];
    const double w = nd.weight;
    const int ls = nodes[nd.left].size;
    const int rs = nodes[nd.right].size;
    CondensedCluster& c = clusters[it.cluster];

    if (ls >= mcs && rs >= mcs) {
      c.has_children = true;
      c.split_scale = w;
      c.split_size = ls + rs;
      for (int side = 0; side < 2; ++side) {
        const int child_node = side == 0 ? nd.left : nd.right;
        CondensedCluster child;
        child.parent = it.cluster;
        child.birth = w;
        clusters.push_back(child);
        const int child_id = static_cast<int>(clusters.size()) - 1;
        clusters[it.cluster].children[side] = child_id;
        stack.push_back({child_node, child_id});
      }
    } else if (ls >= mcs || rs >= mcs) {
      const int keep = ls >= mcs ? nd.left : nd.right;
      const int drop = ls >= mcs ? nd.right : nd.left;
      std::vector<int> dropped;
      collect_leaves(nodes, drop, n, &dropped);
      for (int p : dropped) c.fallouts.push_back({p, w});
      stack.push_back({keep, it.cluster});
    } else {
      // Both sides below the minimum size: the cluster dissolves here.
      std::vector<int> all;
      collect_leaves(nodes, it.node, n, &all);
      for (int p : all) c.fallouts.push_back({p, w});
    }
  }
  return clusters;
}

void compute_stability(std::vector<CondensedCluster>& clusters) {
  for (CondensedCluster& c : clusters) {
    const double lb = lambda_of(c.birth);  // root: lambda 0
    double s = 0.0;
    for (const auto& [pt, scale] : c.fallouts) s += lambda_of(scale) - lb;
    if (c.has_children) s += c.split_size * (lambda_of(c.split_scale) - lb);
    c.stability = s;
  }
}

// Excess-of-mass: a cluster is kept when its own stability is at least the
// total propagated stability of its children; the root is never selectable.
std::vector<char> select_eom(const std::vector<CondensedCluster>& clusters) {
  const int m = static_cast<int>(clusters.size());
  std::vector<char> selected(m, 0);
  std::vector<double> propagated(m, 0.0);
  // Children are created after their parent, so reverse creation order visits
  // children first.
  for (int c = m - 1; c >= 1; --c) {
    const CondensedCluster& cl = clusters[c];
    if (!cl.has_children) {
      selected[c] = 1;
      propagated[c] = cl.stability;
      continue;
    }
    const double child_sum =
        propagated[cl.children[0]] + propagated[cl.children[1]];
    if (child_sum > cl.stability) {
      selected[c] = 0;
      propagated[c] = child_sum;
    } else {
      selected[c] = 1;
      propagated[c] = cl.stability;
    }
  }
  return selected;
}

// Top-down extraction: the highest selected cluster on each path wins.
std::vector<int> extract_flat(const std::vector<CondensedCluster>& clusters,
                              const std::vector<char>& selected) {
  std::vector<int> result;
  std::vector<int> stack;
  if (clusters[0].has_children) {
    stack.push_back(clusters[0].children[0]);
    stack.push_back(clusters[0].children[1]);
  }
  while (!stack.empty()) {
    const int c = stack.back();
    stack.pop_back();
    if (selected[c]) {
      result.push_back(c);
    } else if (clusters[c].has_children) {
      stack.push_back(clusters[c].children[0]);
      stack.push_back(clusters[c].children[1]);
    }
  }
  return result;
}

// Clusters born below the epsilon scale are merged into their lowest
// ancestor born at or above it; the result is reduced to maximal clusters so
// labels stay disjoint.
std::vector<int> apply_epsilon(const std::vector<CondensedCluster>& clusters,
                               std::vector<int> chosen, double eps) {
  if (eps > 0.0) {
    for (int& c : chosen) {
      while (clusters[c].birth < eps && clusters[c].parent >= 0) {
        c = clusters[c].parent;
      }
    }
  }
  std::sort(chosen.begin(), chosen.end());
  chosen.erase(std::unique(chosen.begin(), chosen.end()), chosen.end());

  std::vector<char> in_set(clusters.size(), 0);
  for (int c : chosen) in_set[c] = 1;
  std::vector<int> maximal;
  for (int c : chosen) {
    bool has_ancestor = false;
    for (int p = clusters[c].parent; p >= 0; p = clusters[p].parent) {
      if (in_set[p]) {
        has_ancestor = true;
        break;
      }
    }
    if (!has_ancestor) maximal.push_back(c);
  }
  return maximal;
}

std::vector<int> subtree_points(const std::vector<CondensedCluster>& clusters,
                                int root) {
  std::vector<int> pts;
  std::vector<int> stack{root};
  while (!stack.empty()) {
    const int c = stack.back();
    stack.pop_back();
    for (const auto& [pt, scale] : clusters[c].fallouts) pts.push_back(pt);
    if (clusters[c].has_children) {
      stack.push_back(clusters[c].children[0]);
      stack.push_back(clusters[c].children[1]);
    }
  }
  return pts;
}

}  // namespace

void ClusterParams::validate() const {
  if (min_cluster_size < 2) throw ArgError("min_cluster_size must be >= 2");
  if (cluster_selection_epsilon < 0.0)
    throw ArgError("cluster_selection_epsilon must be >= 0");
  if (min_samples < 0) throw ArgError("min_samples must be >= 0");
  for (double w : feature_weights) {
    if (!(w >= 0.0)) throw ArgError("feature weights must be >= 0");
  }
}

std::vector<FeatureRow> cluster_features(const RadarScan& scan,
                                         const ClusterParams& params) {
  params.validate();
  std::vector<FeatureRow> rows;
  rows.reserve(scan.size());
  for (const RadarPoint& p : scan.points) {
    const double v = params.use_raw_doppler ? p.v_raw : p.v_comp;
    rows.push_back({params.feature_weights[0] * p.x,
                    params.feature_weights[1] * p.y,
                    params.feature_weights[2] * p.z,
                    params.feature_weights[3] * v});
  }
  return rows;
}

ClusterLabels hdbscan_eps(const std::vector<FeatureRow>& features,
                          const ClusterParams& params,
                          HdbscanDiagnostics* diag) {
  params.validate();
  const int n = static_cast<int>(features.size());
  ClusterLabels out;
  out.labels.assign(n, -1);
  out.refined = false;
  if (diag) *diag = HdbscanDiagnostics{};
  if (n < params.min_cluster_size || n < 2) return out;

  const std::vector<double> core =
      core_distances(features, params.effective_min_samples());

  double mst_weight = 0.0;
  const std::vector<DendroNode> dendro = single_linkage(features, core, &mst_weight);

  std::vector<CondensedCluster> clusters =
      condense(dendro, n, params.min_cluster_size);
  compute_stability(clusters);

  const std::vector<char> selected = select_eom(clusters);
  std::vector<int> chosen = extract_flat(clusters, selected);
  chosen = apply_epsilon(clusters, std::move(chosen),
                         params.cluster_selection_epsilon);

  // Deterministic label ids: clusters ordered by their lowest member index.
  std::vector<std::pair<int, std::vector<int>>> members;  // (min point, points)
  for (int c : chosen) {
    std::vector<int> pts = subtree_points(clusters, c);
    if (pts.empty()) continue;
    const int mn = *std::min_element(pts.begin(), pts.end());
    members.push_back({mn, std::move(pts)});
  }
  std::sort(members.begin(), members.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  for (int label = 0; label < static_cast<int>(members.size()); ++label) {
    for (int p : members[label].second) out.labels[p] = label;
  }

  if (diag) {
    diag->mst_total_weight = mst_weight;
    diag->n_clusters = static_cast<int>(members.size());
  }
  return out;
}

}  // namespace rmss::cluster
