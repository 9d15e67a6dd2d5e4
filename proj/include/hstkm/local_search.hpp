#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hstkm/metric.hpp"
#include "hstkm/seeding.hpp"

namespace hstkm {

enum class Objective { median, means };

inline double apply_objective(double d, Objective obj) {
  return obj == Objective::median ? d : d * d;
}

// Clustering cost: sum over demand points of the (squared) distance to
// the nearest center.
inline double clustering_cost(const MetricSpace& space, std::span<const PointId> centers,
                              std::span<const PointId> demand, Objective obj) {
  if (centers.empty()) throw InputError("cost: empty center set");
  if (demand.empty()) throw InputError("cost: empty demand set");
  double total = 0.0;
  for (PointId p : demand) {
    double best = std::numeric_limits<double>::infinity();
    for (PointId c : centers) best = std::min(best, space.distance(p, c));
    total += apply_objective(best, obj);
  }
  return total;
}

inline double clustering_cost(const MetricSpace& space, const CenterSet& centers,
                              const DemandSet& demand, Objective obj) {
  return clustering_cost(space, centers.centers, demand.members, obj);
}

// Cost of every single-swap neighbor of F, evaluated in O(n * |D|) per
// call: per demand point we keep the nearest / second-nearest center, so
// for a fixed incoming y one pass yields cost(F - x + y) for all x.
struct SwapScan {
  std::vector<PointId> xs;       // outgoing center, by position in F
  std::vector<PointId> ys;       // incoming point
  std::vector<double> costs;     // candidate cost, same indexing
  std::vector<std::pair<int, PointId>> order;  // (x position, y) per candidate
};

inline SwapScan scan_swaps(const MetricSpace& space, std::span<const PointId> demand,
                           std::span<const PointId> centers, Objective obj) {
  const int n = space.size();
  const int k = int(centers.size());
  std::vector<char> is_center(n, 0);
  for (PointId c : centers) is_center[c] = 1;

  // nearest & second-nearest center per demand point
  std::vector<double> d1(demand.size()), d2(demand.size());
  std::vector<int> owner(demand.size());
  for (std::size_t i = 0; i < demand.size(); ++i) {
    double b1 = std::numeric_limits<double>::infinity();
    double b2 = b1;
    int o = 0;
    for (int c = 0; c < k; ++c) {
      const double d = apply_objective(space.distance(demand[i], centers[c]), obj);
      if (d < b1) {
        b2 = b1;
        b1 = d;
        o = c;
      } else if (d < b2) {
        b2 = d;
      }
    }
    d1[i] = b1;
    d2[i] = k > 1 ? b2 : std::numeric_limits<double>::infinity();
    owner[i] = o;
  }

  SwapScan out;
  std::vector<double> delta(k);
  for (PointId y = 0; y < n; ++y) {
    if (is_center[y]) continue;
    std::fill(delta.begin(), delta.end(), 0.0);
    double base = 0.0;  // cost with y added, nothing removed
    for (std::size_t i = 0; i < demand.size(); ++i) {
      const double dy = apply_objective(space.distance(demand[i], y), obj);
      const double with_y = std::min(d1[i], dy);
      base += with_y;
      // removing the owner bumps this point to min(second-nearest, y)
      delta[owner[i]] += std::min(d2[i], dy) - with_y;
    }
    for (int x = 0; x < k; ++x) {
      out.xs.push_back(centers[x]);
      out.ys.push_back(y);
      out.costs.push_back(base + delta[x]);
      out.order.push_back({x, y});
    }
  }
  return out;
}

// Run trace: costs[0] is the initial cost, one entry per accepted swap
// afterwards.
struct CostTrace {
  std::vector<double> costs;
  std::vector<std::pair<PointId, PointId>> swaps;  // (out, in)
  CenterSet final_centers;
  int iterations = 0;
};

// Single-swap local search: each iteration evaluates every
// (x in F, y in U \ F) swap, takes the cheapest (ties to the smallest
// (x position, y)), and accepts it only if it improves the current cost
// by at least a factor alpha/k.
inline CostTrace local_search(const MetricSpace& space, const DemandSet& demand,
                              const CenterSet& init, double alpha, int max_iter,
                              Objective obj) {
  if (alpha <= 0.0) throw InputError("local_search: alpha must be > 0");
  validate_demand(demand, space.size());
  CostTrace trace;
  trace.final_centers = init;
  std::vector<PointId>& F = trace.final_centers.centers;
  const int k = int(F.size());
  double cur = clustering_cost(space, F, demand.members, obj);
  trace.costs.push_back(cur);

  while (trace.iterations < max_iter) {
    const SwapScan scan = scan_swaps(space, demand.members, F, obj);
    if (scan.costs.empty()) break;  // k == n, nothing to swap in
    std::size_t best = 0;
    for (std::size_t i = 1; i < scan.costs.size(); ++i) {
      if (scan.costs[i] < scan.costs[best] ||
          (scan.costs[i] == scan.costs[best] && scan.order[i] < scan.order[best])) {
        best = i;
      }
    }
    if (!(scan.costs[best] <= (1.0 - alpha / k) * cur)) break;
    cur = scan.costs[best];
    trace.swaps.push_back({scan.xs[best], scan.ys[best]});
    F[scan.order[best].first] = scan.ys[best];
    trace.costs.push_back(cur);
    ++trace.iterations;
  }
  return trace;
}

}  // namespace hstkm
