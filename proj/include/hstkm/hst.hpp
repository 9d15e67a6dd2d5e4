#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hstkm/metric.hpp"
#include "hstkm/rng.hpp"

namespace hstkm {

namespace salt {
inline constexpr std::uint64_t kHstRoot = 0x68737472u;  // stream for the root pick
inline constexpr std::uint64_t kHstPerm = 0x68737470u;  // base for per-node permutations
}  // namespace salt

struct HstNode {
  int id = 0;
  int level = 0;  // root at level L; regular leaves at level 0
  int parent = -1;
  PointId center = -1;
  std::vector<int> children;
  PointId leaf_point = -1;  // valid iff leaf (no children)
  long long n_universe = 0;
  long long n_demand = 0;
};

// 2-HST built by recursive randomized decomposition. Distances are
// normalized internally by scale = 1/min_distance so the smallest nonzero
// pairwise distance is 1; norm_diameter is the diameter in that regime.
// A node at level i holds points that are pairwise within
// norm_diameter / 2^(L-i) of one another (ball radius half of that).
// Singleton clusters are carried down as single-child chains so every
// regular leaf sits at level 0; a multi-point cluster at level 0 (exact
// duplicates, or a user-fixed L smaller than log2 of the normalized
// diameter) gets one leaf child per point, attached with the same unit
// edge weight as a level-1 -> level-0 edge.
struct HstTree {
  std::vector<HstNode> nodes;
  int root = 0;
  int levels = 1;  // L
  int n = 0;
  double scale = 1.0;
  double norm_diameter = 0.0;
  std::uint64_t seed = 0;
  const MetricSpace* space = nullptr;
  std::vector<int> leaf_of_point;

  bool is_leaf(int id) const { return nodes[id].children.empty(); }

  // Leaf attached below a multi-point level-0 cluster.
  bool is_attached_leaf(int id) const {
    const HstNode& v = nodes[id];
    return v.parent >= 0 && v.level == 0 && nodes[v.parent].level == 0;
  }

  // Weight of the edge from a node to its parent: 2^level, with attached
  // leaves reusing the level-0 edge weight of 1.
  double edge_weight(int id) const { return std::exp2(double(nodes[id].level)); }
};

// Edge weights are powers of two up to 2^(L-1), so depths beyond 60
// would overflow tree distances; datasets with a larger normalized
// dynamic range are rejected rather than silently miscomputed.
inline constexpr int kMaxHstLevels = 60;

inline int hst_auto_levels(const MetricSpace& space) {
  if (space.min_distance() <= 0.0) return 1;
  const double dn = space.diameter() / space.min_distance();
  const double log_dn = std::isfinite(dn)
                            ? std::log2(dn)
                            : std::log2(space.diameter()) - std::log2(space.min_distance());
  if (log_dn > double(kMaxHstLevels)) {
    throw InputError("hst_auto_levels: normalized dynamic range needs " +
                     std::to_string(int(std::ceil(log_dn))) + " levels, max is " +
                     std::to_string(kMaxHstLevels));
  }
  return std::max(1, int(std::ceil(log_dn)));
}

inline HstTree build_hst(const MetricSpace& space, int levels, std::uint64_t seed) {
  if (levels <= 0) throw InputError("build_hst: level count must be >= 1");
  if (levels > kMaxHstLevels) {
    throw InputError("build_hst: level count " + std::to_string(levels) + " exceeds max " +
                     std::to_string(kMaxHstLevels));
  }
  if (space.size() < 1) throw InputError("build_hst: empty space");

  HstTree t;
  t.levels = levels;
  t.n = space.size();
  t.seed = seed;
  t.space = &space;
  t.scale = space.min_distance() > 0.0 ? 1.0 / space.min_distance() : 1.0;
  t.norm_diameter = space.diameter() * t.scale;
  t.leaf_of_point.assign(t.n, -1);

  std::vector<PointId> all(t.n);
  for (int i = 0; i < t.n; ++i) all[i] = i;

  HstNode root;
  root.id = 0;
  root.level = levels;
  root.center = PointId(RandomStream(derive_seed(seed, salt::kHstRoot)).below(t.n));
  t.nodes.push_back(root);

  struct Task {
    int node;
    std::vector<PointId> pts;
  };
  std::vector<Task> stack;
  stack.push_back({0, std::move(all)});

  while (!stack.empty()) {
    Task task = std::move(stack.back());
    stack.pop_back();
    const int node_id = task.node;
    const int level = t.nodes[node_id].level;

    if (level == 0) {
      if (task.pts.size() == 1) {
        t.nodes[node_id].leaf_point = task.pts[0];
        t.leaf_of_point[task.pts[0]] = node_id;
      } else {
        // depth exhausted: one leaf per point below the level-0 node
        for (PointId p : task.pts) {
          HstNode leaf;
          leaf.id = int(t.nodes.size());
          leaf.level = 0;
          leaf.parent = node_id;
          leaf.center = p;
          leaf.leaf_point = p;
          t.nodes[node_id].children.push_back(leaf.id);
          t.leaf_of_point[p] = leaf.id;
          t.nodes.push_back(leaf);
        }
      }
      continue;
    }

    // Children live at level-1 and must be pairwise within
    // norm_diameter / 2^(L-(level-1)); membership balls use half that.
    // The comparison is done in raw units (scale cancels).
    const double raw_radius = space.diameter() / std::exp2(double(t.levels - level + 2));

    std::vector<PointId> perm = task.pts;
    RandomStream rs(derive_seed(seed, salt::kHstPerm + std::uint64_t(node_id) * 2654435761u));
    rs.shuffle(perm);

    std::vector<char> taken(perm.size(), 0);
    std::vector<std::pair<PointId, std::vector<PointId>>> clusters;
    for (std::size_t i = 0; i < perm.size(); ++i) {
      if (taken[i]) continue;
      const PointId c = perm[i];
      taken[i] = 1;
      std::vector<PointId> members{c};
      for (std::size_t j = i + 1; j < perm.size(); ++j) {
        if (!taken[j] && space.distance(c, perm[j]) <= raw_radius) {
          taken[j] = 1;
          members.push_back(perm[j]);
        }
      }
      clusters.emplace_back(c, std::move(members));
    }

    std::vector<int> child_ids;
    child_ids.reserve(clusters.size());
    for (auto& [center, members] : clusters) {
      HstNode child;
      child.id = int(t.nodes.size());
      child.level = level - 1;
      child.parent = node_id;
      child.center = center;
      t.nodes[node_id].children.push_back(child.id);
      t.nodes.push_back(child);
      child_ids.push_back(child.id);
    }
    // depth-first, in child order; per-node seeds keep the result
    // independent of traversal order
    for (std::size_t i = clusters.size(); i > 0; --i) {
      stack.push_back({child_ids[i - 1], std::move(clusters[i - 1].second)});
    }
  }

  // children always carry larger ids than parents
  for (int id = int(t.nodes.size()) - 1; id >= 0; --id) {
    HstNode& v = t.nodes[id];
    if (v.children.empty()) {
      v.n_universe = 1;
    } else {
      v.n_universe = 0;
      for (int c : v.children) v.n_universe += t.nodes[c].n_universe;
    }
  }
  return t;
}

// Tree metric between two points: 0 iff same point, otherwise the sum of
// edge weights along the unique path; equals 2*(2^h - 1) when the LCA of
// two regular leaves sits at level h.
inline double tree_distance(const HstTree& t, PointId u, PointId v) {
  if (u < 0 || u >= t.n || v < 0 || v >= t.n) {
    throw InputError("tree_distance: point id out of range");
  }
  if (u == v) return 0.0;
  int a = t.leaf_of_point[u];
  int b = t.leaf_of_point[v];
  double extra = 0.0;
  if (t.is_attached_leaf(a)) {
    a = t.nodes[a].parent;
    extra += 1.0;
  }
  if (t.is_attached_leaf(b)) {
    b = t.nodes[b].parent;
    extra += 1.0;
  }
  if (a == b) return extra;
  int h = 0;
  while (a != b) {
    a = t.nodes[a].parent;
    b = t.nodes[b].parent;
    ++h;
  }
  return extra + 2.0 * (std::exp2(double(h)) - 1.0);
}

// Returns a copy with per-node demand counts filled in.
inline HstTree annotate_demand(const HstTree& tree, const DemandSet& demand) {
  validate_demand(demand, tree.n);
  std::vector<char> in_demand(tree.n, 0);
  for (PointId p : demand.members) in_demand[p] = 1;

  HstTree t = tree;
  for (int id = int(t.nodes.size()) - 1; id >= 0; --id) {
    HstNode& v = t.nodes[id];
    if (v.children.empty()) {
      v.n_demand = in_demand[v.leaf_point] ? 1 : 0;
    } else {
      v.n_demand = 0;
      for (int c : v.children) v.n_demand += t.nodes[c].n_demand;
    }
  }
  return t;
}

struct DistortionReport {
  double mean_ratio = 0.0;
  double max_ratio = 0.0;
  int pairs_used = 0;
};

// Samples distinct pairs and reports tree-vs-normalized-metric ratio
// statistics. Pairs at metric distance 0 are skipped.
inline DistortionReport measure_distortion(const HstTree& t, int sample_pairs,
                                           std::uint64_t seed) {
  const MetricSpace& space = *t.space;
  if (space.size() < 2) throw InputError("measure_distortion: need at least 2 points");
  const long long all = (long long)space.size() * (space.size() - 1) / 2;

  std::vector<std::pair<PointId, PointId>> pairs;
  if (all <= sample_pairs) {
    for (PointId u = 0; u < space.size(); ++u) {
      for (PointId v = u + 1; v < space.size(); ++v) pairs.push_back({u, v});
    }
  } else {
    RandomStream rs(seed);
    std::set<std::pair<PointId, PointId>> seen;
    while (int(seen.size()) < sample_pairs) {
      PointId u = PointId(rs.below(space.size()));
      PointId v = PointId(rs.below(space.size()));
      if (u == v) continue;
      if (u > v) std::swap(u, v);
      seen.insert({u, v});
    }
    pairs.assign(seen.begin(), seen.end());
  }

  DistortionReport rep;
  double sum = 0.0;
  for (auto [u, v] : pairs) {
    const double d = space.distance(u, v) * t.scale;
    if (d <= 0.0) continue;
    const double r = tree_distance(t, u, v) / d;
    sum += r;
    rep.max_ratio = std::max(rep.max_ratio, r);
    ++rep.pairs_used;
  }
  if (rep.pairs_used > 0) rep.mean_ratio = sum / rep.pairs_used;
  return rep;
}

// Structural validation: leaf completeness, linkage/levels, count
// consistency, and the per-level diameter bound (exhaustive pair check).
// Returns human-readable violations; empty means the tree is sound.
inline std::vector<std::string> validate_tree(const HstTree& t) {
  std::vector<std::string> bad;
  const MetricSpace& space = *t.space;

  std::vector<int> leaf_seen(t.n, 0);
  for (std::size_t id = 0; id < t.nodes.size(); ++id) {
    const HstNode& v = t.nodes[id];
    if (v.id != int(id)) bad.push_back("node " + std::to_string(id) + ": id mismatch");
    if (v.children.empty()) {
      if (v.leaf_point < 0 || v.leaf_point >= t.n) {
        bad.push_back("leaf " + std::to_string(id) + ": bad leaf_point");
      } else {
        ++leaf_seen[v.leaf_point];
      }
      if (v.n_universe != 1) bad.push_back("leaf " + std::to_string(id) + ": n_universe != 1");
      if (v.level != 0) bad.push_back("leaf " + std::to_string(id) + ": not at level 0");
    } else {
      long long nu = 0, nd = 0;
      for (int c : v.children) {
        const HstNode& ch = t.nodes[c];
        if (ch.parent != int(id)) bad.push_back("node " + std::to_string(c) + ": parent link broken");
        const bool attached = ch.level == 0 && v.level == 0;
        if (!attached && ch.level != v.level - 1) {
          bad.push_back("node " + std::to_string(c) + ": level not parent-1");
        }
        nu += ch.n_universe;
        nd += ch.n_demand;
      }
      if (nu != v.n_universe) bad.push_back("node " + std::to_string(id) + ": n_universe sum mismatch");
      if (nd != v.n_demand) bad.push_back("node " + std::to_string(id) + ": n_demand sum mismatch");
    }
  }
  for (int p = 0; p < t.n; ++p) {
    if (leaf_seen[p] != 1) {
      bad.push_back("point " + std::to_string(p) + " appears in " + std::to_string(leaf_seen[p]) +
                    " leaves");
    }
  }
  if (t.nodes[t.root].level != t.levels) bad.push_back("root not at level L");
  if (t.nodes[t.root].n_universe != t.n) bad.push_back("root n_universe != n");

  // per-node subtree point lists, children first
  std::vector<std::vector<PointId>> pts(t.nodes.size());
  for (int id = int(t.nodes.size()) - 1; id >= 0; --id) {
    const HstNode& v = t.nodes[id];
    if (v.children.empty()) {
      pts[id] = {v.leaf_point};
    } else {
      for (int c : v.children) pts[id].insert(pts[id].end(), pts[c].begin(), pts[c].end());
    }
  }
  for (std::size_t id = 0; id < t.nodes.size(); ++id) {
    const HstNode& v = t.nodes[id];
    const double bound = t.norm_diameter / std::exp2(double(t.levels - v.level));
    const auto& ps = pts[id];
    for (std::size_t i = 0; i < ps.size(); ++i) {
      for (std::size_t j = i + 1; j < ps.size(); ++j) {
        const double d = space.distance(ps[i], ps[j]) * t.scale;
        if (d > bound * (1.0 + 1e-9)) {
          bad.push_back("node " + std::to_string(id) + " level " + std::to_string(v.level) +
                        ": pair (" + std::to_string(ps[i]) + "," + std::to_string(ps[j]) +
                        ") at normalized distance " + std::to_string(d) + " exceeds bound " +
                        std::to_string(bound));
        }
      }
    }
  }
  return bad;
}

inline nlohmann::ordered_json tree_to_json(const HstTree& t) {
  nlohmann::ordered_json j;
  j["n"] = t.n;
  j["levels"] = t.levels;
  j["root"] = t.root;
  j["scale"] = t.scale;
  j["norm_diameter"] = t.norm_diameter;
  auto nodes = nlohmann::ordered_json::array();
  for (const auto& v : t.nodes) {
    nodes.push_back({{"id", v.id},
                     {"level", v.level},
                     {"center", v.center},
                     {"parent", v.parent},
                     {"n_universe", v.n_universe},
                     {"n_demand", v.n_demand}});
  }
  j["nodes"] = std::move(nodes);
  return j;
}

}  // namespace hstkm
