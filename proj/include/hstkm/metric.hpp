#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <queue>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "hstkm/rng.hpp"

namespace hstkm {

using PointId = int;

enum class Norm { L1, L2 };

// One undirected weighted edge, 0-based endpoints.
struct Edge {
  int u = 0;
  int v = 0;
  double w = 0.0;
};

// Demand set D: the subset of the universe whose clustering cost is
// optimized (and, in the DP setting, protected).
struct DemandSet {
  std::vector<PointId> members;
};

// Finite metric space over point ids [0, n). Two backends:
//   - vector: rows of an n x d matrix with an L1 or L2 norm, distances
//     computed on demand;
//   - graph: a precomputed all-pairs shortest-path table.
// Immutable after construction; concurrent reads are safe.
class MetricSpace {
 public:
  static MetricSpace from_vectors(std::vector<std::vector<double>> rows, Norm norm) {
    if (rows.empty()) throw InputError("vector metric: empty point matrix");
    const std::size_t d = rows[0].size();
    if (d == 0) throw InputError("vector metric: zero-dimensional points");
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != d) {
        throw InputError("vector metric: row " + std::to_string(i) + " has " +
                         std::to_string(rows[i].size()) + " values, expected " +
                         std::to_string(d));
      }
    }
    MetricSpace s;
    s.n_ = int(rows.size());
    s.dim_ = int(d);
    s.norm_ = norm;
    s.data_.reserve(rows.size() * d);
    for (const auto& r : rows) s.data_.insert(s.data_.end(), r.begin(), r.end());
    s.scan_extremes();
    return s;
  }

  // All-pairs table via Dijkstra from every node. Weights must be > 0 and
  // the graph connected.
  static MetricSpace from_graph(const std::vector<Edge>& edges, int n) {
    if (n <= 0) throw InputError("graph metric: need at least one node");
    std::vector<std::vector<std::pair<int, double>>> adj(n);
    for (std::size_t i = 0; i < edges.size(); ++i) {
      const auto& e = edges[i];
      if (e.u < 0 || e.u >= n || e.v < 0 || e.v >= n) {
        throw InputError("graph metric: edge " + std::to_string(i) + " endpoint out of range");
      }
      if (!(e.w > 0.0)) {
        throw InputError("graph metric: edge " + std::to_string(i) + " (" + std::to_string(e.u) +
                         "," + std::to_string(e.v) + ") has nonpositive weight");
      }
      adj[e.u].push_back({e.v, e.w});
      adj[e.v].push_back({e.u, e.w});
    }
    MetricSpace s;
    s.n_ = n;
    s.table_.assign(std::size_t(n) * n, std::numeric_limits<double>::infinity());
    std::vector<double> dist(n);
    for (int src = 0; src < n; ++src) {
      std::fill(dist.begin(), dist.end(), std::numeric_limits<double>::infinity());
      dist[src] = 0.0;
      using Item = std::pair<double, int>;
      std::priority_queue<Item, std::vector<Item>, std::greater<Item>> pq;
      pq.push({0.0, src});
      while (!pq.empty()) {
        auto [d, u] = pq.top();
        pq.pop();
        if (d > dist[u]) continue;
        for (auto [v, w] : adj[u]) {
          if (d + w < dist[v]) {
            dist[v] = d + w;
            pq.push({dist[v], v});
          }
        }
      }
      for (int v = 0; v < n; ++v) {
        if (std::isinf(dist[v])) {
          throw InputError("graph metric: no path between node " + std::to_string(src) +
                           " and node " + std::to_string(v) + " (graph disconnected)");
        }
        s.table_[std::size_t(src) * n + v] = dist[v];
      }
    }
    s.scan_extremes();
    return s;
  }

  int size() const { return n_; }
  int dim() const { return dim_; }
  bool is_graph() const { return !table_.empty(); }

  double distance(PointId u, PointId v) const {
    check_id(u);
    check_id(v);
    if (!table_.empty()) return table_[std::size_t(u) * n_ + v];
    const double* a = &data_[std::size_t(u) * dim_];
    const double* b = &data_[std::size_t(v) * dim_];
    double acc = 0.0;
    if (norm_ == Norm::L1) {
      for (int i = 0; i < dim_; ++i) acc += std::abs(a[i] - b[i]);
      return acc;
    }
    for (int i = 0; i < dim_; ++i) {
      const double d = a[i] - b[i];
      acc += d * d;
    }
    return std::sqrt(acc);
  }

  // Max pairwise distance; 0 for spaces without a distinct pair.
  double diameter() const { return diameter_; }
  // Min nonzero pairwise distance; 0 when all points coincide or n == 1.
  double min_distance() const { return min_dist_; }

 private:
  MetricSpace() = default;

  void check_id(PointId p) const {
    if (p < 0 || p >= n_) {
      throw InputError("point id " + std::to_string(p) + " out of range [0," +
                       std::to_string(n_) + ")");
    }
  }

  // Exact O(n^2) scan; fine at the scales this toolkit targets.
  void scan_extremes() {
    diameter_ = 0.0;
    min_dist_ = 0.0;
    for (int u = 0; u < n_; ++u) {
      for (int v = u + 1; v < n_; ++v) {
        const double d = distance(u, v);
        diameter_ = std::max(diameter_, d);
        if (d > 0.0 && (min_dist_ == 0.0 || d < min_dist_)) min_dist_ = d;
      }
    }
  }

  int n_ = 0;
  int dim_ = 0;
  Norm norm_ = Norm::L2;
  std::vector<double> data_;   // vector backend, row-major
  std::vector<double> table_;  // graph backend, n x n
  double diameter_ = 0.0;
  double min_dist_ = 0.0;
};

inline MetricSpace build_vector_metric(std::vector<std::vector<double>> rows, Norm norm) {
  return MetricSpace::from_vectors(std::move(rows), norm);
}

inline MetricSpace build_graph_metric(const std::vector<Edge>& edges, int n) {
  return MetricSpace::from_graph(edges, n);
}

// ---- file formats ----------------------------------------------------
//
// Graph file: first line "n m", then m lines "u v w" (0-based ids,
// positive weight). Vector file: CSV, one point per row, all rows the
// same length. Parse errors carry 1-based line numbers.

struct GraphFile {
  int n = 0;
  std::vector<Edge> edges;
};

inline GraphFile parse_graph_file(std::istream& in, const std::string& name) {
  GraphFile g;
  std::string line;
  long lineno = 0;
  long m = -1;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ss(line);
    if (m < 0) {
      if (!(ss >> g.n >> m) || g.n <= 0 || m < 0) {
        throw InputError(name + ":" + std::to_string(lineno) + ": expected header 'n m'");
      }
      continue;
    }
    Edge e;
    if (!(ss >> e.u >> e.v >> e.w)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      throw InputError(name + ":" + std::to_string(lineno) + ": expected 'u v w'");
    }
    g.edges.push_back(e);
  }
  if (m < 0) throw InputError(name + ": empty graph file");
  if (long(g.edges.size()) != m) {
    throw InputError(name + ": header says " + std::to_string(m) + " edges, found " +
                     std::to_string(g.edges.size()));
  }
  return g;
}

inline GraphFile load_graph_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open graph file: " + path);
  return parse_graph_file(in, path);
}

inline std::vector<std::vector<double>> parse_vector_csv(std::istream& in,
                                                         const std::string& name) {
  std::vector<std::vector<double>> rows;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<double> row;
    std::istringstream ss(line);
    std::string cell;
    int col = 0;
    while (std::getline(ss, cell, ',')) {
      ++col;
      try {
        std::size_t used = 0;
        const double x = std::stod(cell, &used);
        while (used < cell.size() && std::isspace((unsigned char)cell[used])) ++used;
        if (used != cell.size()) throw std::invalid_argument(cell);
        row.push_back(x);
      } catch (const std::exception&) {
        throw InputError(name + ":" + std::to_string(lineno) + ": field " + std::to_string(col) +
                         " is not a number: '" + cell + "'");
      }
    }
    if (!rows.empty() && row.size() != rows[0].size()) {
      throw InputError(name + ":" + std::to_string(lineno) + ": row has " +
                       std::to_string(row.size()) + " values, expected " +
                       std::to_string(rows[0].size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InputError(name + ": empty vector file");
  return rows;
}

inline std::vector<std::vector<double>> load_vector_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open vector file: " + path);
  return parse_vector_csv(in, path);
}

inline void validate_demand(const DemandSet& demand, int n) {
  if (demand.members.empty()) throw InputError("demand set is empty");
  for (PointId p : demand.members) {
    if (p < 0 || p >= n) {
      throw InputError("demand point " + std::to_string(p) + " not in universe [0," +
                       std::to_string(n) + ")");
    }
  }
}

}  // namespace hstkm
