#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "hstkm/dp.hpp"
#include "hstkm/local_search.hpp"
#include "hstkm/metric.hpp"
#include "hstkm/seeding.hpp"

namespace hstkm {

namespace salt {
inline constexpr std::uint64_t kGraphGen = 0x67656eu;
inline constexpr std::uint64_t kGaussGen = 0x676175u;
inline constexpr std::uint64_t kDemand = 0x64656du;
inline constexpr std::uint64_t kCellMethod = 0x6d65u;
inline constexpr std::uint64_t kCellK = 0x6bu;
inline constexpr std::uint64_t kCellRep = 0x7265u;
inline constexpr std::uint64_t kData = 0x6461u;
}  // namespace salt

// ---- synthetic data ----------------------------------------------------

struct GraphGenConfig {
  int n = 0;
  int n_clusters = 10;
  double p_intra = 0.2;
  double p_inter = 0.01;
  double r = 100.0;  // inter-cluster weights ~ U(0.5, r); larger = more separable
  std::uint64_t seed = 0;
};

struct GeneratedGraph {
  int n = 0;
  std::vector<Edge> edges;
  std::vector<int> labels;
};

namespace detail {

inline bool connected(int n, const std::vector<Edge>& edges, std::vector<int>* comp_out = nullptr) {
  std::vector<std::vector<int>> adj(n);
  for (const auto& e : edges) {
    adj[e.u].push_back(e.v);
    adj[e.v].push_back(e.u);
  }
  std::vector<int> comp(n, -1);
  int n_comp = 0;
  for (int s = 0; s < n; ++s) {
    if (comp[s] >= 0) continue;
    comp[s] = n_comp;
    std::vector<int> stack{s};
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      for (int v : adj[u]) {
        if (comp[v] < 0) {
          comp[v] = n_comp;
          stack.push_back(v);
        }
      }
    }
    ++n_comp;
  }
  if (comp_out) *comp_out = comp;
  return n_comp == 1;
}

inline double positive_uniform(RandomStream& rs, double lo, double hi) {
  double w;
  do {
    w = rs.uniform(lo, hi);
  } while (!(w > 0.0));
  return w;
}

}  // namespace detail

// Planted-partition generator: nodes split evenly into n_clusters groups,
// intra-cluster pairs connected with probability p_intra and weight
// U(0,1), cross-cluster pairs with probability p_inter and weight
// U(0.5, r). Regenerates up to 10 times if disconnected, then patches the
// remaining components together with U(0.5, r) edges.
inline GeneratedGraph gen_cluster_graph(const GraphGenConfig& cfg) {
  if (cfg.n < cfg.n_clusters || cfg.n_clusters < 1) {
    throw InputError("gen_cluster_graph: need n >= n_clusters >= 1");
  }
  if (cfg.p_intra < 0 || cfg.p_intra > 1 || cfg.p_inter < 0 || cfg.p_inter > 1) {
    throw InputError("gen_cluster_graph: probabilities must be in [0,1]");
  }
  if (cfg.r < 0.5) throw InputError("gen_cluster_graph: r must be >= 0.5");

  GeneratedGraph g;
  for (int attempt = 0; attempt < 10; ++attempt) {
    RandomStream rs(derive_seed(cfg.seed, salt::kGraphGen + std::uint64_t(attempt)));
    g.n = cfg.n;
    g.edges.clear();
    g.labels.assign(cfg.n, 0);

    std::vector<int> ids(cfg.n);
    for (int i = 0; i < cfg.n; ++i) ids[i] = i;
    rs.shuffle(ids);
    const int base = cfg.n / cfg.n_clusters;
    const int extra = cfg.n % cfg.n_clusters;
    int pos = 0;
    for (int c = 0; c < cfg.n_clusters; ++c) {
      const int sz = base + (c < extra ? 1 : 0);
      for (int i = 0; i < sz; ++i) g.labels[ids[pos++]] = c;
    }

    for (int u = 0; u < cfg.n; ++u) {
      for (int v = u + 1; v < cfg.n; ++v) {
        if (g.labels[u] == g.labels[v]) {
          if (rs.uniform01() < cfg.p_intra) {
            g.edges.push_back({u, v, detail::positive_uniform(rs, 0.0, 1.0)});
          }
        } else if (rs.uniform01() < cfg.p_inter) {
          g.edges.push_back({u, v, rs.uniform(0.5, cfg.r)});
        }
      }
    }

    std::vector<int> comp;
    if (detail::connected(cfg.n, g.edges, &comp)) return g;
    if (attempt == 9) {
      // spanning patch over components
      int n_comp = 0;
      for (int c : comp) n_comp = std::max(n_comp, c + 1);
      std::vector<int> rep(n_comp, -1);
      for (int v = 0; v < cfg.n; ++v) {
        if (rep[comp[v]] < 0) rep[comp[v]] = v;
      }
      for (int c = 1; c < n_comp; ++c) {
        g.edges.push_back({rep[0], rep[c], rs.uniform(0.5, cfg.r)});
      }
      return g;
    }
  }
  return g;  // unreachable
}

struct GaussianMixConfig {
  int n = 0;
  int d = 2;
  int components = 10;
  double spread = 10.0;  // component means ~ U(0, spread)^d, unit noise
  std::uint64_t seed = 0;
};

struct GeneratedVectors {
  std::vector<std::vector<double>> points;
  std::vector<int> labels;
};

inline GeneratedVectors gen_gaussian_mixture(const GaussianMixConfig& cfg) {
  if (cfg.n < 1 || cfg.d < 1 || cfg.components < 1) {
    throw InputError("gen_gaussian_mixture: n, d, components must be >= 1");
  }
  RandomStream rs(derive_seed(cfg.seed, salt::kGaussGen));
  std::vector<std::vector<double>> means(cfg.components, std::vector<double>(cfg.d));
  for (auto& m : means) {
    for (double& x : m) x = rs.uniform(0.0, cfg.spread);
  }
  GeneratedVectors out;
  out.points.resize(cfg.n, std::vector<double>(cfg.d));
  out.labels.resize(cfg.n);
  for (int i = 0; i < cfg.n; ++i) {
    const int c = i % cfg.components;
    out.labels[i] = c;
    for (int j = 0; j < cfg.d; ++j) out.points[i][j] = means[c][j] + rs.gaussian();
  }
  return out;
}

// ---- demand sampling ----------------------------------------------------

enum class DemandMode { balanced, imbalanced };

// balanced: uniform without replacement from the universe. imbalanced:
// uniform without replacement from two clusters (the two largest unless
// specified).
inline DemandSet sample_demand(int n, DemandMode mode, int size, std::span<const int> labels,
                               std::optional<std::pair<int, int>> clusters, std::uint64_t seed) {
  if (size < 1) throw InputError("sample_demand: size must be >= 1");
  RandomStream rs(derive_seed(seed, salt::kDemand));
  DemandSet d;
  if (mode == DemandMode::balanced) {
    if (size > n) throw InputError("sample_demand: size exceeds universe");
    d.members = rs.sample_without_replacement(n, size);
    return d;
  }
  if (labels.size() != std::size_t(n)) {
    throw InputError("sample_demand: imbalanced mode requires cluster labels");
  }
  int a, b;
  if (clusters) {
    a = clusters->first;
    b = clusters->second;
  } else {
    std::vector<long long> sizes;
    for (int v = 0; v < n; ++v) {
      if (labels[v] >= int(sizes.size())) sizes.resize(labels[v] + 1, 0);
      ++sizes[labels[v]];
    }
    a = 0;
    b = -1;
    for (int c = 1; c < int(sizes.size()); ++c) {
      if (sizes[c] > sizes[a]) {
        b = a;
        a = c;
      } else if (b < 0 || sizes[c] > sizes[b]) {
        b = c;
      }
    }
    if (b < 0) throw InputError("sample_demand: imbalanced mode needs >= 2 clusters");
  }
  std::vector<PointId> pool;
  for (int v = 0; v < n; ++v) {
    if (labels[v] == a || labels[v] == b) pool.push_back(v);
  }
  if (int(pool.size()) < size) {
    throw InputError("sample_demand: clusters " + std::to_string(a) + "," + std::to_string(b) +
                     " hold " + std::to_string(pool.size()) + " points, need " +
                     std::to_string(size));
  }
  for (int i = 0; i < size; ++i) {
    std::swap(pool[i], pool[i + int(rs.below(pool.size() - i))]);
  }
  pool.resize(size);
  d.members = std::move(pool);
  return d;
}

// ---- iteration-cost metric ----------------------------------------------

// 1-based index where the window-w moving average of the cost sequence is
// minimal (first occurrence on ties); a proxy for when a probabilistic
// run reached a local optimum.
inline int iteration_cost(std::span<const double> costs, int window = 5) {
  if (window < 1) throw InputError("iteration_cost: window must be >= 1");
  if (int(costs.size()) < window) {
    throw InputError("iteration_cost: need at least " + std::to_string(window) + " costs, got " +
                     std::to_string(costs.size()));
  }
  double sum = 0.0;
  for (int i = 0; i < window; ++i) sum += costs[i];
  double best = sum;
  int best_idx = 1;
  for (int i = 1; i + window <= int(costs.size()); ++i) {
    sum += costs[i + window - 1] - costs[i - 1];
    if (sum < best) {
      best = sum;
      best_idx = i + 1;
    }
  }
  return best_idx;
}

// ---- experiment orchestration --------------------------------------------

enum class Method { ndp_rand, ndp_kmedianpp, ndp_hst, dp_rand, dp_kmedianpp, dp_hst };

inline const char* method_name(Method m) {
  switch (m) {
    case Method::ndp_rand: return "NDP-rand";
    case Method::ndp_kmedianpp: return "NDP-kmedianpp";
    case Method::ndp_hst: return "NDP-HST";
    case Method::dp_rand: return "DP-rand";
    case Method::dp_kmedianpp: return "DP-kmedianpp";
    case Method::dp_hst: return "DP-HST";
  }
  return "?";
}

inline std::optional<Method> method_from_name(const std::string& s) {
  for (Method m : {Method::ndp_rand, Method::ndp_kmedianpp, Method::ndp_hst, Method::dp_rand,
                   Method::dp_kmedianpp, Method::dp_hst}) {
    if (s == method_name(m)) return m;
  }
  return std::nullopt;
}

inline bool is_dp(Method m) {
  return m == Method::dp_rand || m == Method::dp_kmedianpp || m == Method::dp_hst;
}

struct DatasetSpec {
  enum class Kind { graph_gen, graph_file, vector_csv, gaussian_gen } kind = Kind::graph_gen;
  GraphGenConfig graph;
  GaussianMixConfig gaussian;
  std::string path;
  std::string labels_path;
  Norm norm = Norm::L2;
};

struct ExperimentConfig {
  DatasetSpec dataset;
  int demand_size = 500;
  DemandMode demand_mode = DemandMode::balanced;
  std::optional<std::pair<int, int>> demand_clusters;
  std::vector<Method> methods;
  std::vector<int> ks{2, 5, 10, 15, 20};
  double epsilon = 1.0;
  int T = 20;
  int repetitions = 10;
  double alpha = 1e-3;
  int max_iter = 20;
  int L_ndp = 6;
  int L_dp = 8;
  Objective objective = Objective::median;
  std::uint64_t seed = 0;
  bool secure_rng = false;
  std::string report_json = "report.json";
  std::string report_csv = "report.csv";
};

struct CellResult {
  Method method = Method::ndp_rand;
  int k = 0;
  int rep = 0;
  bool failed = false;
  std::string error;
  double init_cost = 0.0;
  double final_cost = 0.0;
  double best_cost = 0.0;
  double avg_cost = 0.0;  // DP only: mean cost over the T+1 iterates
  int iter_cost = 0;      // DP only: window-5 iteration-cost index
  double wall_ms = 0.0;   // initialization phase only
};

struct AggregateRow {
  Method method = Method::ndp_rand;
  int k = 0;
  int cells_ok = 0;
  double mean_init = 0.0, std_init = 0.0;
  double mean_final = 0.0, std_final = 0.0;
  double mean_best = 0.0;
  double mean_avg = 0.0;
  double mean_iter_cost = 0.0;
  double mean_wall_ms = 0.0;
};

struct CostReport {
  std::vector<CellResult> cells;
  std::vector<AggregateRow> aggregates;
  nlohmann::ordered_json config_echo;

  const AggregateRow* find(Method m, int k) const {
    for (const auto& a : aggregates) {
      if (a.method == m && a.k == k) return &a;
    }
    return nullptr;
  }
};

namespace detail {

inline std::string fmt_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

template <typename Fn>
inline void parallel_for(std::size_t count, Fn&& fn) {
  unsigned workers = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("HSTKM_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) workers = unsigned(v);
  }
  workers = unsigned(std::min<std::size_t>(workers, count));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

struct LoadedDataset {
  MetricSpace space;
  std::vector<int> labels;
};

inline std::vector<int> load_labels(const std::string& path, int n) {
  if (path.empty()) return {};
  std::ifstream in(path);
  if (!in) throw InputError("cannot open labels file: " + path);
  std::vector<int> labels;
  int x;
  while (in >> x) labels.push_back(x);
  if (int(labels.size()) != n) {
    throw InputError("labels file " + path + " holds " + std::to_string(labels.size()) +
                     " labels for " + std::to_string(n) + " points");
  }
  return labels;
}

inline LoadedDataset load_dataset(const DatasetSpec& ds, std::uint64_t seed) {
  switch (ds.kind) {
    case DatasetSpec::Kind::graph_gen: {
      GraphGenConfig cfg = ds.graph;
      cfg.seed = derive_seed(seed, salt::kData);
      GeneratedGraph g = gen_cluster_graph(cfg);
      return {build_graph_metric(g.edges, g.n), std::move(g.labels)};
    }
    case DatasetSpec::Kind::gaussian_gen: {
      GaussianMixConfig cfg = ds.gaussian;
      cfg.seed = derive_seed(seed, salt::kData);
      GeneratedVectors v = gen_gaussian_mixture(cfg);
      return {build_vector_metric(std::move(v.points), ds.norm), std::move(v.labels)};
    }
    case DatasetSpec::Kind::graph_file: {
      GraphFile g = load_graph_file(ds.path);
      LoadedDataset out{build_graph_metric(g.edges, g.n), {}};
      out.labels = load_labels(ds.labels_path, out.space.size());
      return out;
    }
    case DatasetSpec::Kind::vector_csv: {
      auto rows = load_vector_csv(ds.path);
      LoadedDataset out{build_vector_metric(std::move(rows), ds.norm), {}};
      out.labels = load_labels(ds.labels_path, out.space.size());
      return out;
    }
  }
  throw std::logic_error("load_dataset: bad kind");
}

}  // namespace detail

inline std::uint64_t cell_seed(std::uint64_t base, int method_idx, int k, int rep) {
  std::uint64_t s = derive_seed(base, salt::kCellMethod + std::uint64_t(method_idx));
  s = derive_seed(s, salt::kCellK + std::uint64_t(k));
  return derive_seed(s, salt::kCellRep + std::uint64_t(rep));
}

// Runs every (method, k, repetition) cell. The dataset is built once; one
// demand set per repetition is shared across methods and k so
// comparisons are paired. Deterministic given the config seed, except for
// wall-clock fields. Cells run in parallel (HSTKM_THREADS caps workers);
// a failing cell records its error and does not abort the run.
inline CostReport run_experiment(const ExperimentConfig& cfg) {
  if (cfg.methods.empty()) throw InputError("experiment: no methods configured");
  if (cfg.ks.empty()) throw InputError("experiment: no k values configured");
  if (cfg.repetitions < 1) throw InputError("experiment: repetitions must be >= 1");

  detail::LoadedDataset data = detail::load_dataset(cfg.dataset, cfg.seed);
  const MetricSpace& space = data.space;
  for (int k : cfg.ks) {
    if (k < 1 || k > space.size()) {
      throw InputError("experiment: k=" + std::to_string(k) + " out of range for universe size " +
                       std::to_string(space.size()));
    }
  }

  std::vector<DemandSet> demands(cfg.repetitions);
  for (int rep = 0; rep < cfg.repetitions; ++rep) {
    demands[rep] = sample_demand(space.size(), cfg.demand_mode, cfg.demand_size, data.labels,
                                 cfg.demand_clusters, derive_seed(cfg.seed, std::uint64_t(rep)));
  }

  struct CellSpec {
    int method_idx;
    int k;
    int rep;
  };
  std::vector<CellSpec> specs;
  for (int mi = 0; mi < int(cfg.methods.size()); ++mi) {
    for (int k : cfg.ks) {
      for (int rep = 0; rep < cfg.repetitions; ++rep) specs.push_back({mi, k, rep});
    }
  }

  CostReport report;
  report.cells.resize(specs.size());

  detail::parallel_for(specs.size(), [&](std::size_t idx) {
    const CellSpec& sp = specs[idx];
    const Method m = cfg.methods[sp.method_idx];
    CellResult cell;
    cell.method = m;
    cell.k = sp.k;
    cell.rep = sp.rep;
    const std::uint64_t s = cell_seed(cfg.seed, int(m), sp.k, sp.rep);
    const DemandSet& D = demands[sp.rep];
    try {
      using clock = std::chrono::steady_clock;
      if (!is_dp(m)) {
        const auto t0 = clock::now();
        CenterSet init;
        switch (m) {
          case Method::ndp_rand: init = random_init(space, sp.k, s); break;
          case Method::ndp_kmedianpp:
            init = kmedianpp_init(space, sp.k, s, cfg.objective == Objective::means);
            break;
          default: init = hst_init(space, sp.k, cfg.L_ndp, s); break;
        }
        cell.wall_ms = std::chrono::duration<double, std::milli>(clock::now() - t0).count();
        const CostTrace trace = local_search(space, D, init, cfg.alpha, cfg.max_iter, cfg.objective);
        cell.init_cost = trace.costs.front();
        cell.final_cost = trace.costs.back();
        cell.best_cost = trace.costs.back();
      } else {
        DpRunConfig dp;
        dp.epsilon = cfg.epsilon;
        dp.T = cfg.T;
        dp.L = cfg.L_dp;
        dp.k = sp.k;
        dp.seed = s;
        dp.delta_diameter = space.diameter();
        dp.secure_rng = cfg.secure_rng;
        dp.objective = cfg.objective;
        const DpInit mode = m == Method::dp_hst    ? DpInit::hst
                            : m == Method::dp_rand ? DpInit::random
                                                   : DpInit::kmedianpp;
        // time the initialization phase alone (same derived seed as the
        // run, so the timed centers are the run's centers)
        const auto t0 = clock::now();
        switch (mode) {
          case DpInit::hst:
            dp_hst_init(space, D, sp.k, cfg.epsilon / 2.0, cfg.L_dp, derive_seed(s, salt::kDpInit));
            break;
          case DpInit::random: random_init(space, sp.k, derive_seed(s, salt::kDpInit)); break;
          case DpInit::kmedianpp:
            kmedianpp_init(space, sp.k, derive_seed(s, salt::kDpInit),
                           cfg.objective == Objective::means);
            break;
        }
        cell.wall_ms = std::chrono::duration<double, std::milli>(clock::now() - t0).count();

        const DpResult res = dp_local_search(space, D, sp.k, dp, mode);
        cell.init_cost = res.trace.costs.front();
        cell.final_cost = clustering_cost(space, res.centers.centers, D.members, cfg.objective);
        cell.best_cost = *std::min_element(res.trace.costs.begin(), res.trace.costs.end());
        double sum = 0.0;
        for (double c : res.trace.costs) sum += c;
        cell.avg_cost = sum / double(res.trace.costs.size());
        if (int(res.trace.costs.size()) >= 5) {
          cell.iter_cost = iteration_cost(res.trace.costs, 5);
        }
      }
    } catch (const std::exception& e) {
      cell.failed = true;
      cell.error = e.what();
    }
    report.cells[idx] = std::move(cell);
  });

  for (int mi = 0; mi < int(cfg.methods.size()); ++mi) {
    for (int k : cfg.ks) {
      AggregateRow row;
      row.method = cfg.methods[mi];
      row.k = k;
      std::vector<const CellResult*> ok;
      for (const auto& c : report.cells) {
        if (c.method == row.method && c.k == k && !c.failed) ok.push_back(&c);
      }
      row.cells_ok = int(ok.size());
      if (!ok.empty()) {
        auto mean_of = [&](auto get) {
          double s = 0.0;
          for (auto* c : ok) s += get(*c);
          return s / double(ok.size());
        };
        row.mean_init = mean_of([](const CellResult& c) { return c.init_cost; });
        row.mean_final = mean_of([](const CellResult& c) { return c.final_cost; });
        row.mean_best = mean_of([](const CellResult& c) { return c.best_cost; });
        row.mean_avg = mean_of([](const CellResult& c) { return c.avg_cost; });
        row.mean_iter_cost = mean_of([](const CellResult& c) { return double(c.iter_cost); });
        row.mean_wall_ms = mean_of([](const CellResult& c) { return c.wall_ms; });
        auto std_of = [&](auto get, double mean) {
          if (ok.size() < 2) return 0.0;
          double s = 0.0;
          for (auto* c : ok) {
            const double d = get(*c) - mean;
            s += d * d;
          }
          return std::sqrt(s / double(ok.size() - 1));
        };
        row.std_init = std_of([](const CellResult& c) { return c.init_cost; }, row.mean_init);
        row.std_final = std_of([](const CellResult& c) { return c.final_cost; }, row.mean_final);
      }
      report.aggregates.push_back(row);
    }
  }

  report.config_echo = {{"methods", [&] {
                           auto a = nlohmann::ordered_json::array();
                           for (Method m : cfg.methods) a.push_back(method_name(m));
                           return a;
                         }()},
                        {"k", cfg.ks},
                        {"epsilon", cfg.epsilon},
                        {"T", cfg.T},
                        {"repetitions", cfg.repetitions},
                        {"demand_size", cfg.demand_size},
                        {"demand_mode", cfg.demand_mode == DemandMode::balanced ? "balanced" : "imbalanced"},
                        {"objective", cfg.objective == Objective::median ? "median" : "means"},
                        {"seed", cfg.seed},
                        {"universe_size", space.size()}};
  return report;
}

// ---- report emission ------------------------------------------------------

inline nlohmann::ordered_json report_to_json(const CostReport& r) {
  nlohmann::ordered_json j;
  j["config"] = r.config_echo;
  auto cells = nlohmann::ordered_json::array();
  for (const auto& c : r.cells) {
    nlohmann::ordered_json jc{{"method", method_name(c.method)}, {"k", c.k}, {"rep", c.rep}};
    if (c.failed) {
      jc["failed"] = true;
      jc["error"] = c.error;
    } else {
      jc["init_cost"] = c.init_cost;
      jc["final_cost"] = c.final_cost;
      jc["best_cost"] = c.best_cost;
      if (is_dp(c.method)) {
        jc["avg_cost"] = c.avg_cost;
        jc["iter_cost"] = c.iter_cost;
      }
      jc["wall_ms"] = c.wall_ms;
    }
    cells.push_back(std::move(jc));
  }
  j["cells"] = std::move(cells);
  auto aggs = nlohmann::ordered_json::array();
  for (const auto& a : r.aggregates) {
    aggs.push_back({{"method", method_name(a.method)},
                    {"k", a.k},
                    {"cells_ok", a.cells_ok},
                    {"mean_init_cost", a.mean_init},
                    {"std_init_cost", a.std_init},
                    {"mean_final_cost", a.mean_final},
                    {"std_final_cost", a.std_final},
                    {"mean_best_cost", a.mean_best},
                    {"mean_avg_cost", a.mean_avg},
                    {"mean_iter_cost", a.mean_iter_cost},
                    {"mean_wall_ms", a.mean_wall_ms}});
  }
  j["aggregates"] = std::move(aggs);
  return j;
}

inline void write_report_csv(const CostReport& r, std::ostream& out) {
  out << "method,k,rep,init_cost,final_cost,avg_cost,iter_cost,wall_ms\n";
  for (const auto& c : r.cells) {
    out << method_name(c.method) << ',' << c.k << ',' << c.rep << ',';
    if (c.failed) {
      out << ",,,,\n";
      continue;
    }
    out << detail::fmt_double(c.init_cost) << ',' << detail::fmt_double(c.final_cost) << ',';
    if (is_dp(c.method)) {
      out << detail::fmt_double(c.avg_cost) << ',' << c.iter_cost;
    } else {
      out << ',';
    }
    out << ',' << detail::fmt_double(c.wall_ms) << '\n';
  }
}

inline void write_graph_file(std::ostream& out, int n, const std::vector<Edge>& edges) {
  out << n << ' ' << edges.size() << '\n';
  for (const auto& e : edges) {
    out << e.u << ' ' << e.v << ' ' << detail::fmt_double(e.w) << '\n';
  }
}

// ---- config file parsing ----------------------------------------------------

namespace detail {

template <typename T>
inline T config_get(const nlohmann::json& j, const std::string& field, const T& fallback) {
  if (!j.contains(field)) return fallback;
  try {
    return j.at(field).get<T>();
  } catch (const std::exception&) {
    throw InputError("config: field '" + field + "' has the wrong type");
  }
}

template <typename T>
inline T config_require(const nlohmann::json& j, const std::string& field,
                        const std::string& where) {
  if (!j.contains(field)) throw InputError("config: missing field '" + where + field + "'");
  try {
    return j.at(field).get<T>();
  } catch (const std::exception&) {
    throw InputError("config: field '" + where + field + "' has the wrong type");
  }
}

}  // namespace detail

inline ExperimentConfig parse_experiment_config(const nlohmann::json& j) {
  ExperimentConfig cfg;

  const auto ds = detail::config_require<nlohmann::json>(j, "dataset", "");
  const auto kind = detail::config_require<std::string>(ds, "type", "dataset.");
  if (kind == "graph-gen") {
    cfg.dataset.kind = DatasetSpec::Kind::graph_gen;
    cfg.dataset.graph.n = detail::config_require<int>(ds, "n", "dataset.");
    cfg.dataset.graph.n_clusters = detail::config_get(ds, "clusters", 10);
    cfg.dataset.graph.p_intra = detail::config_get(ds, "p_intra", 0.2);
    cfg.dataset.graph.p_inter = detail::config_get(ds, "p_inter", 0.01);
    cfg.dataset.graph.r = detail::config_get(ds, "r", 100.0);
  } else if (kind == "gaussian-gen") {
    cfg.dataset.kind = DatasetSpec::Kind::gaussian_gen;
    cfg.dataset.gaussian.n = detail::config_require<int>(ds, "n", "dataset.");
    cfg.dataset.gaussian.d = detail::config_get(ds, "d", 2);
    cfg.dataset.gaussian.components = detail::config_get(ds, "components", 10);
    cfg.dataset.gaussian.spread = detail::config_get(ds, "spread", 10.0);
  } else if (kind == "graph-file" || kind == "vector-csv") {
    cfg.dataset.kind = kind == "graph-file" ? DatasetSpec::Kind::graph_file
                                            : DatasetSpec::Kind::vector_csv;
    cfg.dataset.path = detail::config_require<std::string>(ds, "path", "dataset.");
    cfg.dataset.labels_path = detail::config_get(ds, "labels", std::string());
  } else {
    throw InputError("config: dataset.type '" + kind + "' is not one of graph-gen, gaussian-gen, graph-file, vector-csv");
  }
  const std::string norm = detail::config_get(ds, "norm", std::string("l2"));
  if (norm == "l1") {
    cfg.dataset.norm = Norm::L1;
  } else if (norm == "l2") {
    cfg.dataset.norm = Norm::L2;
  } else {
    throw InputError("config: dataset.norm '" + norm + "' is not 'l1' or 'l2'");
  }

  if (j.contains("demand")) {
    const auto& d = j.at("demand");
    cfg.demand_size = detail::config_get(d, "size", 500);
    const std::string mode = detail::config_get(d, "mode", std::string("balanced"));
    if (mode == "balanced") {
      cfg.demand_mode = DemandMode::balanced;
    } else if (mode == "imbalanced") {
      cfg.demand_mode = DemandMode::imbalanced;
    } else {
      throw InputError("config: demand.mode '" + mode + "' is not 'balanced' or 'imbalanced'");
    }
    if (d.contains("clusters")) {
      const auto cl = detail::config_require<std::vector<int>>(d, "clusters", "demand.");
      if (cl.size() != 2) throw InputError("config: demand.clusters must list exactly 2 clusters");
      cfg.demand_clusters = {cl[0], cl[1]};
    }
  }

  const auto names = detail::config_require<std::vector<std::string>>(j, "methods", "");
  for (std::size_t i = 0; i < names.size(); ++i) {
    const auto m = method_from_name(names[i]);
    if (!m) {
      throw InputError("config: methods[" + std::to_string(i) + "]: unknown method '" + names[i] +
                       "'");
    }
    cfg.methods.push_back(*m);
  }

  cfg.ks = detail::config_get(j, "k", cfg.ks);
  cfg.epsilon = detail::config_get(j, "epsilon", 1.0);
  cfg.T = detail::config_get(j, "T", 20);
  cfg.repetitions = detail::config_get(j, "repetitions", 10);
  cfg.alpha = detail::config_get(j, "alpha", 1e-3);
  cfg.max_iter = detail::config_get(j, "max_iter", 20);
  cfg.L_ndp = detail::config_get(j, "L_ndp", 6);
  cfg.L_dp = detail::config_get(j, "L_dp", 8);
  cfg.seed = detail::config_get<std::uint64_t>(j, "seed", 0);
  cfg.secure_rng = detail::config_get(j, "secure_rng", false);
  cfg.report_json = detail::config_get(j, "report_json", std::string("report.json"));
  cfg.report_csv = detail::config_get(j, "report_csv", std::string("report.csv"));
  const std::string obj = detail::config_get(j, "objective", std::string("median"));
  if (obj == "median") {
    cfg.objective = Objective::median;
  } else if (obj == "means") {
    cfg.objective = Objective::means;
  } else {
    throw InputError("config: objective '" + obj + "' is not 'median' or 'means'");
  }
  if (!(cfg.epsilon > 0.0)) throw InputError("config: epsilon must be > 0");
  if (cfg.T < 1) throw InputError("config: T must be >= 1");
  return cfg;
}

}  // namespace hstkm
