#include "support/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

namespace rmss::testing {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double dist4(const cluster::FeatureRow& a, const cluster::FeatureRow& b) {
  double s = 0.0;
  for (int k = 0; k < 4; ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return std::sqrt(s);
}

double lam(double d) { return d > 0.0 ? 1.0 / d : kInf; }

// Merge tree node with explicit point sets.
struct NaiveNode {
  std::vector<int> points;  // sorted
  double weight = 0.0;
  int left = -1;
  int right = -1;
};

struct NaiveCluster {
  int parent = -1;
  double birth = kInf;
  std::vector<std::pair<int, double>> fallouts;
  std::vector<int> children;
  double split_scale = 0.0;
  int split_size = 0;
  double stability = 0.0;
};

void condense_rec(const std::vector<NaiveNode>& nodes, int node,
                  std::vector<NaiveCluster>& clusters, int cluster, int mcs) {
  const NaiveNode& nd = nodes[node];
  if (nd.left < 0) return;  // leaf point, nothing below
  const int ls = static_cast<int>(nodes[nd.left].points.size());
  const int rs = static_cast<int>(nodes[nd.right].points.size());
  if (ls >= mcs && rs >= mcs) {
    clusters[cluster].split_scale = nd.weight;
    clusters[cluster].split_size = ls + rs;
    for (int child_node : {nd.left, nd.right}) {
      NaiveCluster child;
      child.parent = cluster;
      child.birth = nd.weight;
      clusters.push_back(child);
      const int child_id = static_cast<int>(clusters.size()) - 1;
      clusters[cluster].children.push_back(child_id);
      condense_rec(nodes, child_node, clusters, child_id, mcs);
    }
  } else if (ls >= mcs || rs >= mcs) {
    const int keep = ls >= mcs ? nd.left : nd.right;
    const int drop = ls >= mcs ? nd.right : nd.left;
    for (int p : nodes[drop].points) {
      clusters[cluster].fallouts.push_back({p, nd.weight});
    }
    condense_rec(nodes, keep, clusters, cluster, mcs);
  } else {
    for (int p : nd.points) clusters[cluster].fallouts.push_back({p, nd.weight});
  }
}

double eom_rec(const std::vector<NaiveCluster>& clusters, int c,
               std::vector<char>& selected) {
  const NaiveCluster& cl = clusters[c];
  if (cl.children.empty()) {
    selected[c] = 1;
    return cl.stability;
  }
  double child_sum = 0.0;
  for (int ch : cl.children) child_sum += eom_rec(clusters, ch, selected);
  if (child_sum > cl.stability) {
    selected[c] = 0;
    return child_sum;
  }
  selected[c] = 1;
  return cl.stability;
}

void collect_selected(const std::vector<NaiveCluster>& clusters, int c,
                      const std::vector<char>& selected, std::vector<int>& out) {
  if (c != 0 && selected[c]) {
    out.push_back(c);
    return;
  }
  for (int ch : clusters[c].children) collect_selected(clusters, ch, selected, out);
}

void subtree_points_rec(const std::vector<NaiveCluster>& clusters, int c,
                        std::vector<int>& out) {
  for (const auto& [p, w] : clusters[c].fallouts) out.push_back(p);
  for (int ch : clusters[c].children) subtree_points_rec(clusters, ch, out);
}

}  // namespace

std::vector<int> naive_hdbscan(const std::vector<cluster::FeatureRow>& rows,
                               const cluster::ClusterParams& params) {
  const int n = static_cast<int>(rows.size());
  std::vector<int> labels(n, -1);
  const int mcs = params.min_cluster_size;
  if (n < mcs || n < 2) return labels;

  // Core distances by full sort, the point itself counted first.
  const int ms = std::min(params.effective_min_samples(), n);
  std::vector<double> core(n);
  for (int i = 0; i < n; ++i) {
    std::vector<double> row(n);
    for (int j = 0; j < n; ++j) row[j] = dist4(rows[i], rows[j]);
    std::sort(row.begin(), row.end());
    core[i] = row[ms - 1];
  }

  std::vector<std::vector<double>> mreach(n, std::vector<double>(n, 0.0));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      mreach[i][j] = std::max({core[i], core[j], dist4(rows[i], rows[j])});
    }
  }

  // Agglomerative single linkage: repeatedly merge the two components whose
  // closest cross pair (w, u, v) is lexicographically minimal.
  std::vector<NaiveNode> nodes(n);
  for (int i = 0; i < n; ++i) nodes[i].points = {i};
  std::vector<int> component(n);  // point -> current node
  for (int i = 0; i < n; ++i) component[i] = i;

  for (int step = 0; step < n - 1; ++step) {
    double best_w = kInf;
    int best_u = -1, best_v = -1;
    for (int u = 0; u < n; ++u) {
      for (int v = 0; v < n; ++v) {
        if (u >= v || component[u] == component[v]) continue;
        const double w = mreach[u][v];
        if (w < best_w || (w == best_w && (u < best_u || (u == best_u && v < best_v)))) {
          best_w = w;
          best_u = u;
          best_v = v;
        }
      }
    }
    NaiveNode merged;
    merged.weight = best_w;
    const int ca = component[best_u];
    const int cb = component[best_v];
    merged.left = std::min(ca, cb);
    merged.right = std::max(ca, cb);
    merged.points = nodes[ca].points;
    merged.points.insert(merged.points.end(), nodes[cb].points.begin(),
                         nodes[cb].points.end());
    std::sort(merged.points.begin(), merged.points.end());
    nodes.push_back(merged);
    const int id = static_cast<int>(nodes.size()) - 1;
    for (int p : merged.points) component[p] = id;
  }

  std::vector<NaiveCluster> clusters(1);  // root, birth inf
  condense_rec(nodes, static_cast<int>(nodes.size()) - 1, clusters, 0, mcs);

  for (NaiveCluster& c : clusters) {
    const double lb = lam(c.birth);
    double s = 0.0;
    for (const auto& [p, w] : c.fallouts) s += lam(w) - lb;
    if (!c.children.empty()) s += c.split_size * (lam(c.split_scale) - lb);
    c.stability = s;
  }

  std::vector<char> selected(clusters.size(), 0);
  for (int ch : clusters[0].children) eom_rec(clusters, ch, selected);
  std::vector<int> chosen;
  collect_selected(clusters, 0, selected, chosen);

  const double eps = params.cluster_selection_epsilon;
  if (eps > 0.0) {
    for (int& c : chosen) {
      while (clusters[c].birth < eps && clusters[c].parent >= 0) c = clusters[c].parent;
    }
  }
  std::sort(chosen.begin(), chosen.end());
  chosen.erase(std::unique(chosen.begin(), chosen.end()), chosen.end());
  std::set<int> in_set(chosen.begin(), chosen.end());
  std::vector<int> maximal;
  for (int c : chosen) {
    bool covered = false;
    for (int p = clusters[c].parent; p >= 0; p = clusters[p].parent) {
      if (in_set.count(p)) {
        covered = true;
        break;
      }
    }
    if (!covered) maximal.push_back(c);
  }

  std::vector<std::pair<int, std::vector<int>>> members;
  for (int c : maximal) {
    std::vector<int> pts;
    subtree_points_rec(clusters, c, pts);
    if (pts.empty()) continue;
    members.push_back({*std::min_element(pts.begin(), pts.end()), pts});
  }
  std::sort(members.begin(), members.end());
  for (int label = 0; label < static_cast<int>(members.size()); ++label) {
    for (int p : members[label].second) labels[p] = label;
  }
  return labels;
}

double prim_mst_weight(const std::vector<cluster::FeatureRow>& rows,
                       const cluster::ClusterParams& params) {
  const int n = static_cast<int>(rows.size());
  if (n < 2) return 0.0;
  const int ms = std::min(params.effective_min_samples(), n);
  std::vector<double> core(n);
  for (int i = 0; i < n; ++i) {
    std::vector<double> row(n);
    for (int j = 0; j < n; ++j) row[j] = dist4(rows[i], rows[j]);
    std::sort(row.begin(), row.end());
    core[i] = row[ms - 1];
  }
  std::vector<char> in_tree(n, 0);
  std::vector<double> best(n, kInf);
  best[0] = 0.0;
  double total = 0.0;
  for (int it = 0; it < n; ++it) {
    int u = -1;
    for (int i = 0; i < n; ++i) {
      if (!in_tree[i] && (u < 0 || best[i] < best[u])) u = i;
    }
    in_tree[u] = 1;
    total += best[u];
    for (int v = 0; v < n; ++v) {
      if (in_tree[v]) continue;
      const double w = std::max({core[u], core[v], dist4(rows[u], rows[v])});
      best[v] = std::min(best[v], w);
    }
  }
  return total;
}

bool same_partition(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) return false;
  std::map<int, int> fwd, bwd;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if ((a[i] < 0) != (b[i] < 0)) return false;
    if (a[i] < 0) continue;
    const auto f = fwd.emplace(a[i], b[i]);
    if (!f.second && f.first->second != b[i]) return false;
    const auto g = bwd.emplace(b[i], a[i]);
    if (!g.second && g.first->second != a[i]) return false;
  }
  return true;
}

double central_diff(const std::function<double(double)>& f, double x, double step) {
  return (f(x + step) - f(x - step)) / (2.0 * step);
}

GradCheckResult check_gradient(
    const std::function<double(const std::vector<double>&)>& f,
    std::vector<double> x, const std::vector<double>& analytic_grad,
    const std::vector<std::size_t>& coords, double step, double floor) {
  GradCheckResult res;
  for (std::size_t c : coords) {
    const double orig = x[c];
    x[c] = orig + step;
    const double fp = f(x);
    x[c] = orig - step;
    const double fm = f(x);
    x[c] = orig;
    const double numeric = (fp - fm) / (2.0 * step);
    const double analytic = analytic_grad[c];
    const double denom = std::max({std::abs(numeric), std::abs(analytic), floor});
    res.max_rel_err = std::max(res.max_rel_err, std::abs(numeric - analytic) / denom);
    ++res.n_checked;
  }
  return res;
}

double naive_macl_value(const RepresentationMatrix& reps_s,
                        const RepresentationMatrix& reps_t,
                        const ClusterLabels& labels_s,
                        const ClusterLabels& labels_t,
                        const std::vector<pseudo::Match>& matches) {
  constexpr std::size_t kDim = RepresentationMatrix::kDim;
  auto centroid = [](const RepresentationMatrix& reps, const ClusterLabels& labels,
                     int target) {
    std::vector<double> mean(kDim, 0.0);
    int count = 0;
    for (std::size_t i = 0; i < labels.labels.size(); ++i) {
      if (labels.labels[i] != target) continue;
      for (std::size_t k = 0; k < kDim; ++k) mean[k] += reps.row(i)[k];
      ++count;
    }
    for (double& v : mean) v /= count;
    return mean;
  };
  double total = 0.0;
  for (const pseudo::Match& m : matches) {
    const std::vector<double> cs = centroid(reps_s, labels_s, m.label_s);
    const std::vector<double> ct = centroid(reps_t, labels_t, m.label_t);
    double d2 = 0.0;
    for (std::size_t k = 0; k < kDim; ++k) d2 += (cs[k] - ct[k]) * (cs[k] - ct[k]);
    double d = std::sqrt(d2);
    if (d < 1e-6) d = 1e-6;
    total += m.positive ? d : 1.0 / d;
  }
  return total / static_cast<double>(matches.size());
}

}  // namespace rmss::testing
