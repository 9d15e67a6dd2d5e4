// hstkm: k-median clustering in general metric spaces with HST
// initialization, local search, and differentially private variants.
//
// Subcommands: gen-graph, cluster, experiment, inspect-hst, version.
// All stdout payloads are JSON; human-readable tables go to stderr.
// Exit codes: 0 ok, 1 bad input, 2 internal error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "hstkm/hstkm.hpp"

namespace {

using nlohmann::ordered_json;

hstkm::MetricSpace load_space(const std::string& path, const std::string& format,
                              const std::string& norm) {
  if (norm != "l1" && norm != "l2") {
    throw hstkm::InputError("--norm must be 'l1' or 'l2', got '" + norm + "'");
  }
  const hstkm::Norm nm = norm == "l1" ? hstkm::Norm::L1 : hstkm::Norm::L2;
  std::string fmt = format;
  if (fmt == "auto") {
    const auto ext = std::filesystem::path(path).extension().string();
    fmt = ext == ".csv" ? "csv" : "graph";
  }
  if (fmt == "csv") {
    return hstkm::build_vector_metric(hstkm::load_vector_csv(path), nm);
  }
  if (fmt != "graph") {
    throw hstkm::InputError("--format must be 'auto', 'csv' or 'graph', got '" + format + "'");
  }
  const hstkm::GraphFile g = hstkm::load_graph_file(path);
  return hstkm::build_graph_metric(g.edges, g.n);
}

hstkm::DemandSet load_demand(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw hstkm::InputError("cannot open demand file: " + path);
  hstkm::DemandSet d;
  int x;
  while (in >> x) d.members.push_back(x);
  if (d.members.empty()) throw hstkm::InputError("demand file is empty: " + path);
  return d;
}

int parse_levels(const std::string& L, const hstkm::MetricSpace& space) {
  if (L == "auto") return hstkm::hst_auto_levels(space);
  try {
    std::size_t used = 0;
    const int v = std::stoi(L, &used);
    if (used != L.size() || v < 1) throw std::invalid_argument(L);
    return v;
  } catch (const std::exception&) {
    throw hstkm::InputError("--L must be 'auto' or a positive integer, got '" + L + "'");
  }
}

void emit(const ordered_json& j, bool pretty) {
  if (pretty) {
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << j.dump() << "\n";
  }
}

struct ClusterArgs {
  std::string data, format = "auto", norm = "l2", method, demand_path, L = "auto";
  std::string objective = "median";
  int k = 0;
  std::uint64_t seed = 0;
  double alpha = 1e-3;
  int max_iter = 20;
  double epsilon = 0.0;
  bool has_epsilon = false;
  int T = 20;
  bool secure = false;
  bool pretty = false;
};

int run_cluster(const ClusterArgs& a) {
  const bool dp = a.method.rfind("dp-", 0) == 0;
  if (dp && !a.has_epsilon) {
    throw hstkm::InputError("method '" + a.method + "' requires --epsilon");
  }
  if (dp && a.demand_path.empty()) {
    throw hstkm::InputError("method '" + a.method + "' requires --demand");
  }

  if (a.objective != "median" && a.objective != "means") {
    throw hstkm::InputError("--objective must be 'median' or 'means', got '" + a.objective + "'");
  }
  const hstkm::MetricSpace space = load_space(a.data, a.format, a.norm);
  hstkm::DemandSet demand;
  if (!a.demand_path.empty()) {
    demand = load_demand(a.demand_path);
  } else {
    demand.members.resize(space.size());
    for (int i = 0; i < space.size(); ++i) demand.members[i] = i;
  }
  hstkm::validate_demand(demand, space.size());
  const hstkm::Objective obj =
      a.objective == "means" ? hstkm::Objective::means : hstkm::Objective::median;

  ordered_json out;
  out["method"] = a.method;
  out["k"] = a.k;
  out["seed"] = a.seed;
  out["objective"] = a.objective;

  if (!dp) {
    hstkm::CenterSet init;
    if (a.method == "rand") {
      init = hstkm::random_init(space, a.k, a.seed);
    } else if (a.method == "kmedianpp") {
      init = hstkm::kmedianpp_init(space, a.k, a.seed, obj == hstkm::Objective::means);
    } else if (a.method == "hst") {
      init = hstkm::hst_init(space, a.k, parse_levels(a.L, space), a.seed);
    } else {
      throw hstkm::InputError("unknown method '" + a.method +
                              "' (rand, kmedianpp, hst, dp-rand, dp-kmedianpp, dp-hst)");
    }
    const hstkm::CostTrace trace =
        hstkm::local_search(space, demand, init, a.alpha, a.max_iter, obj);
    out["centers"] = trace.final_centers.centers;
    out["initial_cost"] = trace.costs.front();
    out["final_cost"] = trace.costs.back();
    out["iterations"] = trace.iterations;
  } else {
    hstkm::DpRunConfig cfg;
    cfg.epsilon = a.epsilon;
    cfg.T = a.T;
    cfg.L = parse_levels(a.L, space);
    cfg.k = a.k;
    cfg.seed = a.seed;
    cfg.delta_diameter = space.diameter();
    cfg.secure_rng = a.secure;
    cfg.objective = obj;
    const hstkm::DpInit mode = a.method == "dp-hst"    ? hstkm::DpInit::hst
                               : a.method == "dp-rand" ? hstkm::DpInit::random
                               : a.method == "dp-kmedianpp"
                                   ? hstkm::DpInit::kmedianpp
                                   : throw hstkm::InputError("unknown method '" + a.method + "'");
    const hstkm::DpResult res = hstkm::dp_local_search(space, demand, a.k, cfg, mode);
    out["centers"] = res.centers.centers;
    out["initial_cost"] = res.trace.costs.front();
    out["final_cost"] =
        hstkm::clustering_cost(space, res.centers.centers, demand.members, obj);
    out["iterations"] = res.trace.iterations;
    out["ledger"] = res.budget.to_json();
  }
  emit(out, a.pretty);
  return 0;
}

int run_experiment_cmd(const std::string& config_path, bool pretty) {
  std::ifstream in(config_path);
  if (!in) throw hstkm::InputError("cannot open config file: " + config_path);
  nlohmann::json raw;
  try {
    in >> raw;
  } catch (const std::exception& e) {
    throw hstkm::InputError("config: not valid JSON: " + std::string(e.what()));
  }
  const hstkm::ExperimentConfig cfg = hstkm::parse_experiment_config(raw);
  const hstkm::CostReport report = hstkm::run_experiment(cfg);

  {
    std::ofstream jf(cfg.report_json);
    if (!jf) throw hstkm::InputError("cannot write " + cfg.report_json);
    jf << hstkm::report_to_json(report).dump(2) << "\n";
  }
  {
    std::ofstream cf(cfg.report_csv);
    if (!cf) throw hstkm::InputError("cannot write " + cfg.report_csv);
    hstkm::write_report_csv(report, cf);
  }

  ordered_json out;
  out["report_json"] = cfg.report_json;
  out["report_csv"] = cfg.report_csv;
  out["aggregates"] = hstkm::report_to_json(report)["aggregates"];
  emit(out, pretty);

  if (pretty) {
    std::cerr << "method           k   cells  mean_init      mean_final     mean_best\n";
    for (const auto& a : report.aggregates) {
      char line[160];
      std::snprintf(line, sizeof(line), "%-16s %-3d %-6d %-14.6g %-14.6g %-14.6g\n",
                    hstkm::method_name(a.method), a.k, a.cells_ok, a.mean_init, a.mean_final,
                    a.mean_best);
      std::cerr << line;
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"k-median clustering toolkit: HST / k-median++ / random initialization, "
               "local search, and differentially private variants"};
  app.require_subcommand(1);

  // gen-graph
  auto* gen = app.add_subcommand("gen-graph", "generate a clustered random graph");
  hstkm::GraphGenConfig gcfg;
  std::string gen_out, gen_labels;
  bool gen_pretty = false;
  gen->add_option("--n", gcfg.n, "node count")->required();
  gen->add_option("--clusters", gcfg.n_clusters, "planted cluster count (default 10)");
  gen->add_option("--p-intra", gcfg.p_intra, "intra-cluster edge probability (default 0.2)");
  gen->add_option("--p-inter", gcfg.p_inter, "cross-cluster edge probability (default 0.01)");
  gen->add_option("--r", gcfg.r, "upper bound of U(0.5,r) cross-cluster weights (default 100)");
  gen->add_option("--seed", gcfg.seed, "rng seed");
  gen->add_option("--out", gen_out, "output graph file")->required();
  gen->add_option("--labels-out", gen_labels, "optional cluster-label file");
  gen->add_flag("--pretty", gen_pretty, "indent JSON output");

  // cluster
  auto* cl = app.add_subcommand("cluster", "run one clustering method on a dataset");
  ClusterArgs ca;
  cl->add_option("--data", ca.data, "dataset file (.csv = vectors, otherwise graph edge list)")
      ->required();
  cl->add_option("--format", ca.format, "auto|csv|graph (default auto)");
  cl->add_option("--norm", ca.norm, "l1|l2 for vector data (default l2)");
  cl->add_option("--k", ca.k, "number of centers")->required();
  cl->add_option("--method", ca.method, "rand|kmedianpp|hst|dp-rand|dp-kmedianpp|dp-hst")
      ->required();
  cl->add_option("--seed", ca.seed, "rng seed")->required();
  cl->add_option("--objective", ca.objective, "median|means (default median)");
  cl->add_option("--alpha", ca.alpha, "local-search improvement factor (default 1e-3)");
  cl->add_option("--max-iter", ca.max_iter, "local-search iteration cap (default 20)");
  auto* eps_opt = cl->add_option("--epsilon", ca.epsilon, "privacy budget (DP methods)");
  cl->add_option("--T", ca.T, "DP local-search iterations (default 20)");
  cl->add_option("--L", ca.L, "HST depth, 'auto' or integer (default auto)");
  cl->add_option("--demand", ca.demand_path, "demand point-id file (required for DP methods)");
  cl->add_flag("--secure-rng", ca.secure,
               "entropy-sourced noise; without it DP runs are seed-reproducible, which is for "
               "research only, not a privacy-faithful deployment mode");
  cl->add_flag("--pretty", ca.pretty, "indent JSON output");

  // experiment
  auto* ex = app.add_subcommand("experiment", "run a full experiment sweep from a JSON config");
  std::string config_path;
  bool ex_pretty = false;
  ex->add_option("config", config_path, "experiment config JSON")->required();
  ex->add_flag("--pretty", ex_pretty, "indent JSON and print a table to stderr");

  // inspect-hst
  auto* ih = app.add_subcommand("inspect-hst", "build an HST and dump it as JSON");
  std::string ih_data, ih_format = "auto", ih_norm = "l2", ih_L = "auto";
  std::uint64_t ih_seed = 0;
  bool ih_check = false, ih_pretty = false;
  ih->add_option("--data", ih_data, "dataset file")->required();
  ih->add_option("--format", ih_format, "auto|csv|graph");
  ih->add_option("--norm", ih_norm, "l1|l2 for vector data");
  ih->add_option("--L", ih_L, "HST depth, 'auto' or integer");
  ih->add_option("--seed", ih_seed, "rng seed")->required();
  ih->add_flag("--check", ih_check, "run the structural validator");
  ih->add_flag("--pretty", ih_pretty, "indent JSON output");

  auto* ver = app.add_subcommand("version", "print version");
  bool ver_pretty = false;
  ver->add_flag("--pretty", ver_pretty, "indent JSON output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help() << std::flush;
    return 1;
  }

  try {
    if (gen->parsed()) {
      const hstkm::GeneratedGraph g = hstkm::gen_cluster_graph(gcfg);
      std::ofstream out(gen_out);
      if (!out) throw hstkm::InputError("cannot write " + gen_out);
      hstkm::write_graph_file(out, g.n, g.edges);
      if (!gen_labels.empty()) {
        std::ofstream lf(gen_labels);
        if (!lf) throw hstkm::InputError("cannot write " + gen_labels);
        for (int l : g.labels) lf << l << "\n";
      }
      ordered_json j{{"n", g.n}, {"edges", g.edges.size()}, {"out", gen_out}};
      if (!gen_labels.empty()) j["labels_out"] = gen_labels;
      emit(j, gen_pretty);
      return 0;
    }
    if (cl->parsed()) {
      ca.has_epsilon = eps_opt->count() > 0;
      return run_cluster(ca);
    }
    if (ex->parsed()) {
      return run_experiment_cmd(config_path, ex_pretty);
    }
    if (ih->parsed()) {
      const hstkm::MetricSpace space = load_space(ih_data, ih_format, ih_norm);
      const hstkm::HstTree tree =
          hstkm::build_hst(space, parse_levels(ih_L, space), ih_seed);
      ordered_json j = hstkm::tree_to_json(tree);
      if (ih_check) {
        const auto problems = hstkm::validate_tree(tree);
        j["diameter_property"] = problems.empty() ? "pass" : "fail";
        std::cerr << "diameter-property: " << (problems.empty() ? "pass" : "fail") << "\n";
        for (const auto& p : problems) std::cerr << "  " << p << "\n";
        if (!problems.empty()) {
          emit(j, ih_pretty);
          return 2;
        }
      }
      emit(j, ih_pretty);
      return 0;
    }
    if (ver->parsed()) {
      emit(ordered_json{{"name", "hstkm"}, {"version", hstkm::kVersion}}, ver_pretty);
      return 0;
    }
  } catch (const hstkm::InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
