#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "hstkm/hst.hpp"
#include "hstkm/local_search.hpp"
#include "hstkm/metric.hpp"
#include "hstkm/rng.hpp"
#include "hstkm/seeding.hpp"

namespace hstkm {

namespace salt {
inline constexpr std::uint64_t kDpTree = 0x64707472u;
inline constexpr std::uint64_t kDpNoise = 0x64706e6fu;
inline constexpr std::uint64_t kDpMech = 0x64706d65u;
inline constexpr std::uint64_t kDpInit = 0x647069u;
}  // namespace salt

struct PrivacyLedgerEntry {
  std::string component;
  double epsilon = 0.0;
};

// Total budget plus an append-only record of what each mechanism spent.
struct PrivacyBudget {
  double epsilon_total = 0.0;
  std::vector<PrivacyLedgerEntry> ledger;

  void spend(std::string component, double eps) {
    ledger.push_back({std::move(component), eps});
    if (spent() > epsilon_total * (1.0 + 1e-12) + 1e-15) {
      throw std::logic_error("privacy ledger exceeds declared budget");
    }
  }

  double spent() const {
    double s = 0.0;
    for (const auto& e : ledger) s += e.epsilon;
    return s;
  }

  nlohmann::ordered_json to_json() const {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& e : ledger) arr.push_back({{"component", e.component}, {"epsilon", e.epsilon}});
    return arr;
  }
};

// Laplace mechanism noise, density (1/2b) exp(-|x|/b).
inline double laplace_noise(double scale, RandomStream& stream) {
  if (!(scale > 0.0)) throw InputError("laplace_noise: scale must be > 0");
  return stream.laplace(scale);
}

// Samples index i with probability proportional to exp(eps_prime * u_i),
// max-shifted for numerical stability. eps_prime = 0 degenerates to a
// uniform draw.
inline std::size_t exponential_mechanism(std::span<const double> utilities, double eps_prime,
                                         RandomStream& stream) {
  if (utilities.empty()) throw InputError("exponential_mechanism: empty utility vector");
  double m = -std::numeric_limits<double>::infinity();
  for (double u : utilities) {
    if (!std::isfinite(u)) throw InputError("exponential_mechanism: non-finite utility");
    m = std::max(m, u);
  }
  std::vector<double> w(utilities.size());
  double total = 0.0;
  for (std::size_t i = 0; i < utilities.size(); ++i) {
    w[i] = std::exp(eps_prime * (utilities[i] - m));
    total += w[i];
  }
  const double r = stream.uniform01() * total;
  double acc = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    acc += w[i];
    if (acc > r) return i;
  }
  return w.size() - 1;
}

struct DpRunConfig {
  double epsilon = 1.0;
  int T = 20;  // swap iterations
  int L = 8;   // tree depth for the private initialization
  int k = 2;
  std::uint64_t seed = 0;
  double delta_diameter = 0.0;  // sensitivity; callers pass space.diameter()
  // Laplace scale exponent divisor: scale = 2^((L-h)/divisor)/eps. The
  // default 1 keeps the per-level budget a geometric series summing below
  // eps; 2 is exposed for experimentation and inflates the ledger total.
  int laplace_exponent_divisor = 1;
  bool secure_rng = false;
  Objective objective = Objective::median;

  double eps_prime() const {
    return epsilon / (4.0 * delta_diameter * double(T + 1));
  }
};

inline RandomStream make_stream(std::uint64_t seed, std::uint64_t salt, bool secure) {
  return secure ? RandomStream::from_entropy() : RandomStream(derive_seed(seed, salt));
}

// Laplace scale for a level-h node in an L-level tree: 2^((L-h)/divisor)/eps.
inline double dp_laplace_scale(int L, int level, double epsilon, int exponent_divisor = 1) {
  return std::exp2(double(L - level) / double(exponent_divisor)) / epsilon;
}

// Per-node noisy demand counts, Laplace scale 2^(L - level)/eps, one
// independent stream per (seed, node id). The root is pinned to +inf so it
// is always screened first without consuming budget -- the geometric
// per-level schedule eps/2^(L-h) covers levels L-1..0 and sums to
// (1 - 2^-L) eps. Leaves attached below a level-0 cluster carry no count
// (descent among them falls back to node-id order, which is
// data-independent).
inline std::vector<double> noisy_demand_counts(const HstTree& t, double epsilon,
                                               std::uint64_t seed, int exponent_divisor,
                                               bool secure) {
  if (!(epsilon > 0.0)) throw InputError("noisy_demand_counts: epsilon must be > 0");
  std::vector<double> noisy(t.nodes.size(), 0.0);
  for (std::size_t id = 0; id < t.nodes.size(); ++id) {
    if (int(id) == t.root) {
      noisy[id] = std::numeric_limits<double>::infinity();
      continue;
    }
    if (t.is_attached_leaf(int(id))) {
      noisy[id] = 0.0;
      continue;
    }
    const double scale = dp_laplace_scale(t.levels, t.nodes[id].level, epsilon, exponent_divisor);
    RandomStream rs = make_stream(seed, salt::kDpNoise + std::uint64_t(id) * 2654435761u, secure);
    noisy[id] = double(t.nodes[id].n_demand) + laplace_noise(scale, rs);
  }
  return noisy;
}

// Ledger entries for the per-level Laplace schedule above.
inline void record_hst_noise_budget(PrivacyBudget& budget, double epsilon, int L,
                                    int exponent_divisor) {
  for (int h = L - 1; h >= 0; --h) {
    const double spent = epsilon / std::exp2(double(L - h) / double(exponent_divisor));
    budget.spend("hst-level-" + std::to_string(h), spent);
  }
}

struct DpInitResult {
  CenterSet centers;
  PrivacyBudget budget;
};

// Private HST initialization: the tree over the public universe costs
// nothing; demand counts are Laplace-perturbed per level, and both the
// subtree selection and the leaf descent run on the noisy counts.
inline DpInitResult dp_hst_init(const MetricSpace& space, const DemandSet& demand, int k,
                                double epsilon, int levels, std::uint64_t seed,
                                int exponent_divisor = 1, bool secure = false) {
  if (!(epsilon > 0.0)) throw InputError("dp_hst_init: epsilon must be > 0");
  validate_demand(demand, space.size());
  const int L = levels > 0 ? levels : 8;

  HstTree t = build_hst(space, L, derive_seed(seed, salt::kDpTree));
  t = annotate_demand(t, demand);
  const std::vector<double> noisy = noisy_demand_counts(t, epsilon, seed, exponent_divisor, secure);

  DpInitResult out;
  if (exponent_divisor == 1) {
    out.budget.epsilon_total = epsilon;
  } else {
    double total = 0.0;
    for (int h = L - 1; h >= 0; --h) total += epsilon / std::exp2(double(L - h) / exponent_divisor);
    out.budget.epsilon_total = total;
  }
  record_hst_noise_budget(out.budget, epsilon, L, exponent_divisor);

  const SubtreeRootSet roots = subtree_search_scored(t, k, noisy);
  out.centers = find_leaf_scored(t, roots, noisy, CenterOrigin::dp_hst);
  return out;
}

enum class DpInit { hst, random, kmedianpp };

struct DpResult {
  CenterSet centers;  // output of the final selection mechanism
  CostTrace trace;    // costs of F_1 .. F_{T+1}; not monotone
  PrivacyBudget budget;
};

// Private local search: T exponential-mechanism swaps with utility
// -cost(F - x + y) at eps' = eps/(4 * diameter * (T+1)), then one more
// exponential-mechanism draw over the T+1 iterates to pick the output.
// The HST variant first spends eps/2 on private initial centers; random
// and k-median++ initialization run on the public universe and spend
// nothing.
inline DpResult dp_local_search(const MetricSpace& space, const DemandSet& demand, int k,
                                const DpRunConfig& cfg, DpInit init_mode = DpInit::hst) {
  if (!(cfg.epsilon > 0.0)) throw InputError("dp_local_search: epsilon must be > 0");
  if (cfg.T < 1) throw InputError("dp_local_search: T must be >= 1");
  if (!(cfg.delta_diameter > 0.0)) {
    throw InputError("dp_local_search: delta_diameter must be > 0");
  }
  validate_demand(demand, space.size());

  DpResult out;
  out.budget.epsilon_total = cfg.epsilon;

  CenterSet F;
  switch (init_mode) {
    case DpInit::hst: {
      DpInitResult init = dp_hst_init(space, demand, k, cfg.epsilon / 2.0, cfg.L,
                                      derive_seed(cfg.seed, salt::kDpInit),
                                      cfg.laplace_exponent_divisor, cfg.secure_rng);
      F = std::move(init.centers);
      out.budget.spend("init-dp-hst", cfg.epsilon / 2.0);
      break;
    }
    case DpInit::random:
      F = random_init(space, k, derive_seed(cfg.seed, salt::kDpInit));
      break;
    case DpInit::kmedianpp:
      F = kmedianpp_init(space, k, derive_seed(cfg.seed, salt::kDpInit),
                         cfg.objective == Objective::means);
      break;
  }

  const double eps_prime = cfg.eps_prime();
  const double eps_step = cfg.epsilon / (2.0 * double(cfg.T + 1));  // = 2 * diameter * eps'
  RandomStream mech = make_stream(cfg.seed, salt::kDpMech, cfg.secure_rng);

  std::vector<std::vector<PointId>> iterates;
  iterates.push_back(F.centers);
  out.trace.costs.push_back(clustering_cost(space, F.centers, demand.members, cfg.objective));

  for (int i = 1; i <= cfg.T; ++i) {
    const SwapScan scan = scan_swaps(space, demand.members, F.centers, cfg.objective);
    if (!scan.costs.empty()) {
      std::vector<double> util(scan.costs.size());
      for (std::size_t c = 0; c < scan.costs.size(); ++c) util[c] = -scan.costs[c];
      const std::size_t pick = exponential_mechanism(util, eps_prime, mech);
      out.trace.swaps.push_back({scan.xs[pick], scan.ys[pick]});
      F.centers[scan.order[pick].first] = scan.ys[pick];
      out.trace.costs.push_back(scan.costs[pick]);
    } else {
      out.trace.costs.push_back(out.trace.costs.back());  // k == n, no candidate
    }
    iterates.push_back(F.centers);
    out.budget.spend("swap-" + std::to_string(i), eps_step);
    ++out.trace.iterations;
  }

  std::vector<double> out_util(out.trace.costs.size());
  for (std::size_t j = 0; j < out.trace.costs.size(); ++j) out_util[j] = -out.trace.costs[j];
  const std::size_t j = exponential_mechanism(out_util, eps_prime, mech);
  out.budget.spend("output-selection", eps_step);

  out.centers.centers = iterates[j];
  out.centers.origin = F.origin;
  out.trace.final_centers = out.centers;
  return out;
}

}  // namespace hstkm
