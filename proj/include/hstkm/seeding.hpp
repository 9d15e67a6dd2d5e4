#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <queue>
#include <span>
#include <string>
#include <vector>

#include "hstkm/hst.hpp"
#include "hstkm/metric.hpp"
#include "hstkm/rng.hpp"

namespace hstkm {

enum class CenterOrigin { random, kmedianpp, hst, dp_hst };

inline const char* to_string(CenterOrigin o) {
  switch (o) {
    case CenterOrigin::random: return "random";
    case CenterOrigin::kmedianpp: return "kmedianpp";
    case CenterOrigin::hst: return "hst";
    case CenterOrigin::dp_hst: return "dp_hst";
  }
  return "?";
}

struct CenterSet {
  std::vector<PointId> centers;
  CenterOrigin origin = CenterOrigin::random;
};

// k roots of pairwise disjoint subtrees (an antichain in the tree).
struct SubtreeRootSet {
  std::vector<int> roots;
};

enum class CountField { universe, demand };

inline CenterSet random_init(const MetricSpace& space, int k, std::uint64_t seed) {
  if (k < 1 || k > space.size()) {
    throw InputError("random_init: k must be in [1," + std::to_string(space.size()) + "]");
  }
  RandomStream rs(seed);
  CenterSet cs;
  cs.origin = CenterOrigin::random;
  cs.centers = rs.sample_without_replacement(space.size(), k);
  return cs;
}

// One D-sampling step: probability of u proportional to dist(u, F)
// (squared for the k-means variant). Falls back to a uniform pick among
// unchosen points when all remaining mass is zero (duplicate-heavy input).
inline PointId kmedianpp_next_center(const MetricSpace& space,
                                     const std::vector<double>& dist_to_centers,
                                     const std::vector<char>& chosen, bool squared,
                                     RandomStream& rs) {
  const int n = space.size();
  double total = 0.0;
  std::vector<double> w(n, 0.0);
  for (int u = 0; u < n; ++u) {
    if (chosen[u]) continue;
    const double d = dist_to_centers[u];
    w[u] = squared ? d * d : d;
    total += w[u];
  }
  if (total <= 0.0) {
    int left = 0;
    for (int u = 0; u < n; ++u) left += chosen[u] ? 0 : 1;
    if (left == 0) throw std::logic_error("kmedianpp_next_center: no points left");
    std::uint64_t pick = rs.below(std::uint64_t(left));
    for (int u = 0; u < n; ++u) {
      if (!chosen[u] && pick-- == 0) return u;
    }
    return n - 1;
  }
  const double r = rs.uniform01() * total;
  double acc = 0.0;
  for (int u = 0; u < n; ++u) {
    acc += w[u];
    if (acc > r) return u;
  }
  for (int u = n - 1; u >= 0; --u) {
    if (!chosen[u] && w[u] > 0.0) return u;
  }
  return n - 1;
}

inline CenterSet kmedianpp_init(const MetricSpace& space, int k, std::uint64_t seed,
                                bool squared = false) {
  const int n = space.size();
  if (k < 1 || k > n) {
    throw InputError("kmedianpp_init: k must be in [1," + std::to_string(n) + "]");
  }
  RandomStream rs(seed);
  CenterSet cs;
  cs.origin = CenterOrigin::kmedianpp;
  std::vector<char> chosen(n, 0);
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());

  const PointId first = PointId(rs.below(std::uint64_t(n)));
  cs.centers.push_back(first);
  chosen[first] = 1;
  for (int u = 0; u < n; ++u) nearest[u] = space.distance(u, first);

  while (int(cs.centers.size()) < k) {
    const PointId c = kmedianpp_next_center(space, nearest, chosen, squared, rs);
    cs.centers.push_back(c);
    chosen[c] = 1;
    for (int u = 0; u < n; ++u) nearest[u] = std::min(nearest[u], space.distance(u, c));
  }
  return cs;
}

// Score-greedy selection of k disjoint subtree roots. Nodes are taken in
// descending score(v) = counts[v] * 2^level order (ties to the smaller
// id). Selecting a node permanently blocks its ancestors; if a selected
// node later turns out to be the ancestor of a higher-priority pick, the
// ancestor is dropped and stays ineligible. Runs off a priority queue,
// O(n log n).
inline SubtreeRootSet subtree_search_scored(const HstTree& t, int k,
                                            std::span<const double> counts) {
  long long leaves = 0;
  for (std::size_t id = 0; id < t.nodes.size(); ++id) leaves += t.is_leaf(int(id)) ? 1 : 0;
  if (k < 1 || leaves < k) {
    throw InputError("subtree_search: need k in [1, #leaves], got k=" + std::to_string(k) +
                     " with " + std::to_string(leaves) + " leaves");
  }
  if (counts.size() != t.nodes.size()) {
    throw std::logic_error("subtree_search: counts size mismatch");
  }

  using Item = std::pair<double, int>;  // (score, -id): ties pop smaller id first
  std::priority_queue<Item> heap;
  for (std::size_t id = 0; id < t.nodes.size(); ++id) {
    heap.push({counts[id] * std::exp2(double(t.nodes[id].level)), -int(id)});
  }

  std::vector<char> selected(t.nodes.size(), 0);
  std::vector<char> blocked(t.nodes.size(), 0);
  std::vector<int> order;
  int n_selected = 0;

  while (n_selected < k && !heap.empty()) {
    const int v = -heap.top().second;
    heap.pop();
    if (blocked[v]) continue;
    // at most one selected ancestor can exist at a time
    for (int a = t.nodes[v].parent; a >= 0; a = t.nodes[a].parent) {
      if (selected[a]) {
        selected[a] = 0;
        --n_selected;
        break;
      }
    }
    selected[v] = 1;
    ++n_selected;
    order.push_back(v);
    for (int a = t.nodes[v].parent; a >= 0; a = t.nodes[a].parent) blocked[a] = 1;
  }
  if (n_selected < k) throw std::logic_error("subtree_search: exhausted candidates");

  SubtreeRootSet out;
  for (int v : order) {
    if (selected[v]) out.roots.push_back(v);
  }
  return out;
}

inline std::vector<double> node_counts(const HstTree& t, CountField field) {
  std::vector<double> c(t.nodes.size());
  for (std::size_t id = 0; id < t.nodes.size(); ++id) {
    c[id] = double(field == CountField::universe ? t.nodes[id].n_universe : t.nodes[id].n_demand);
  }
  return c;
}

inline SubtreeRootSet subtree_search(const HstTree& t, int k, CountField field) {
  const auto c = node_counts(t, field);
  return subtree_search_scored(t, k, c);
}

// Greedy descent from each root: enter the child preferred by `better`
// until a leaf is reached.
template <typename Better>
inline CenterSet find_leaf_by(const HstTree& t, const SubtreeRootSet& roots, Better better,
                              CenterOrigin origin) {
  CenterSet cs;
  cs.origin = origin;
  for (int r : roots.roots) {
    if (r < 0 || r >= int(t.nodes.size())) throw InputError("find_leaf: bad root id");
    int v = r;
    while (!t.is_leaf(v)) {
      const auto& ch = t.nodes[v].children;
      int best = ch[0];
      for (std::size_t i = 1; i < ch.size(); ++i) {
        if (better(ch[i], best)) best = ch[i];
      }
      v = best;
    }
    cs.centers.push_back(t.nodes[v].leaf_point);
  }
  return cs;
}

// Non-private descent: by the requested count, with universe count and
// then node id as tie-breakers (demand counts can be all zero).
inline CenterSet find_leaf(const HstTree& t, const SubtreeRootSet& roots, CountField field) {
  auto better = [&](int a, int b) {
    const HstNode& x = t.nodes[a];
    const HstNode& y = t.nodes[b];
    const long long cx = field == CountField::universe ? x.n_universe : x.n_demand;
    const long long cy = field == CountField::universe ? y.n_universe : y.n_demand;
    if (cx != cy) return cx > cy;
    if (x.n_universe != y.n_universe) return x.n_universe > y.n_universe;
    return a < b;
  };
  return find_leaf_by(t, roots, better, CenterOrigin::hst);
}

// Descent by externally supplied (noisy) per-node counts, ties by id.
inline CenterSet find_leaf_scored(const HstTree& t, const SubtreeRootSet& roots,
                                  std::span<const double> counts, CenterOrigin origin) {
  if (counts.size() != t.nodes.size()) throw std::logic_error("find_leaf: counts size mismatch");
  auto better = [&](int a, int b) {
    if (counts[a] != counts[b]) return counts[a] > counts[b];
    return a < b;
  };
  return find_leaf_by(t, roots, better, origin);
}

// HST initialization: build the tree, pick k disjoint subtrees by
// universe-count score, then greedily descend to one leaf per subtree.
inline CenterSet hst_init(const MetricSpace& space, int k, int levels, std::uint64_t seed) {
  if (k < 1 || k > space.size()) {
    throw InputError("hst_init: k must be in [1," + std::to_string(space.size()) + "]");
  }
  const int L = levels > 0 ? levels : hst_auto_levels(space);
  const HstTree t = build_hst(space, L, seed);
  const SubtreeRootSet roots = subtree_search(t, k, CountField::universe);
  return find_leaf(t, roots, CountField::universe);
}

}  // namespace hstkm
