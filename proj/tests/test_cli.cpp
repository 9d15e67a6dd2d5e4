// End-to-end checks of the hstkm binary: flag validation, exit codes,
// JSON-only stdout, and determinism across reruns.
#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string out;
};

RunResult run(const std::string& args) {
  const std::string cmd = std::string(HSTKM_CLI_PATH) + " " + args + " 2>/dev/null";
  std::array<char, 4096> buf{};
  RunResult r;
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
  const int status = pclose(p);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("hstkm_cli_test_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream f(p);
  f << content;
}

}  // namespace

TEST_CASE("version prints json") {
  const RunResult r = run("version");
  CHECK(r.exit_code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["name"] == "hstkm");
}

TEST_CASE("unknown flags and missing required flags exit 1") {
  CHECK(run("cluster --bogus 1").exit_code == 1);
  CHECK(run("cluster").exit_code == 1);
  CHECK(run("definitely-not-a-subcommand").exit_code == 1);
}

TEST_CASE("cluster on a csv line") {
  TempDir tmp;
  const auto csv = tmp.path / "line4.csv";
  write_file(csv, "0\n1\n2\n3\n");

  SECTION("rand method returns valid json with one center") {
    const RunResult r = run("cluster --data " + csv.string() + " --k 1 --method rand --seed 7");
    REQUIRE(r.exit_code == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j["centers"].size() == 1);
    CHECK(j.contains("initial_cost"));
    CHECK(j.contains("final_cost"));
    CHECK(j["final_cost"].get<double>() == 4.0);  // 1-median of the unit line
  }
  SECTION("dp method without epsilon exits 1") {
    const RunResult r =
        run("cluster --data " + csv.string() + " --k 1 --method dp-hst --seed 7");
    CHECK(r.exit_code == 1);
  }
  SECTION("dp method without demand exits 1") {
    const RunResult r = run("cluster --data " + csv.string() +
                            " --k 1 --method dp-hst --seed 7 --epsilon 1");
    CHECK(r.exit_code == 1);
  }
  SECTION("same seed twice gives identical stdout") {
    const std::string cmd =
        "cluster --data " + csv.string() + " --k 2 --method kmedianpp --seed 42";
    const RunResult a = run(cmd);
    const RunResult b = run(cmd);
    CHECK(a.exit_code == 0);
    CHECK(a.out == b.out);
  }
  SECTION("unknown method exits 1") {
    const RunResult r =
        run("cluster --data " + csv.string() + " --k 1 --method lloyd --seed 7");
    CHECK(r.exit_code == 1);
  }
  SECTION("bad flag values exit 1") {
    const std::string base = "cluster --data " + csv.string() + " --k 1 --method rand --seed 7";
    CHECK(run(base + " --norm l3").exit_code == 1);
    CHECK(run(base + " --format yaml").exit_code == 1);
    CHECK(run(base + " --objective sum").exit_code == 1);
    CHECK(run("cluster --data " + csv.string() +
              " --k 1 --method hst --seed 7 --L 12abc").exit_code == 1);
  }
}

TEST_CASE("dp cluster run emits a ledger that sums to epsilon") {
  TempDir tmp;
  const auto csv = tmp.path / "pts.csv";
  write_file(csv, "0\n1\n2\n3\n10\n11\n12\n13\n");
  const auto dem = tmp.path / "demand.txt";
  write_file(dem, "0 1 2 4\n");
  const RunResult r = run("cluster --data " + csv.string() + " --k 2 --method dp-hst --seed 3" +
                          " --epsilon 1 --T 5 --demand " + dem.string());
  REQUIRE(r.exit_code == 0);
  const auto j = nlohmann::json::parse(r.out);
  REQUIRE(j.contains("ledger"));
  double total = 0.0;
  for (const auto& e : j["ledger"]) total += e["epsilon"].get<double>();
  CHECK(total == Catch::Approx(1.0).margin(1e-9));
  CHECK(j["centers"].size() == 2);
}

TEST_CASE("gen-graph writes a loadable graph and labels") {
  TempDir tmp;
  const auto g = tmp.path / "g.txt";
  const auto l = tmp.path / "labels.txt";
  const RunResult r = run("gen-graph --n 30 --clusters 3 --r 5 --seed 1 --out " + g.string() +
                          " --labels-out " + l.string());
  REQUIRE(r.exit_code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["n"] == 30);
  REQUIRE(fs::exists(g));
  std::ifstream in(g);
  int n, m;
  in >> n >> m;
  CHECK(n == 30);
  CHECK(m > 0);
  std::ifstream lin(l);
  int count = 0, lab;
  while (lin >> lab) ++count;
  CHECK(count == 30);

  SECTION("graph file feeds cluster subcommand") {
    const RunResult c = run("cluster --data " + g.string() + " --k 3 --method hst --seed 2");
    CHECK(c.exit_code == 0);
    const auto cj = nlohmann::json::parse(c.out);
    CHECK(cj["centers"].size() == 3);
  }
}

TEST_CASE("inspect-hst dumps a tree and validates it") {
  TempDir tmp;
  const auto csv = tmp.path / "one.csv";
  write_file(csv, "5\n");
  SECTION("singleton dataset yields a one-leaf tree") {
    const RunResult r = run("inspect-hst --data " + csv.string() + " --seed 1");
    REQUIRE(r.exit_code == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j["n"] == 1);
  }
  SECTION("check flag reports pass") {
    const auto pts = tmp.path / "pts.csv";
    write_file(pts, "0,0\n1,0\n4,2\n9,3\n2,8\n");
    const RunResult r = run("inspect-hst --data " + pts.string() + " --seed 3 --check");
    REQUIRE(r.exit_code == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j["diameter_property"] == "pass");
  }
  SECTION("fixed seed dumps identically") {
    const std::string cmd = "inspect-hst --data " + csv.string() + " --seed 9";
    CHECK(run(cmd).out == run(cmd).out);
  }
}

TEST_CASE("experiment subcommand") {
  TempDir tmp;
  const auto cfgp = tmp.path / "exp.json";
  const auto rj = tmp.path / "report.json";
  const auto rc = tmp.path / "report.csv";
  nlohmann::json cfg{
      {"dataset", {{"type", "graph-gen"}, {"n", 30}, {"clusters", 3}, {"r", 10.0}}},
      {"methods", {"NDP-rand"}},
      {"k", {2}},
      {"repetitions", 1},
      {"demand", {{"size", 10}, {"mode", "balanced"}}},
      {"seed", 4},
      {"report_json", rj.string()},
      {"report_csv", rc.string()}};
  write_file(cfgp, cfg.dump());

  SECTION("minimal config produces both reports") {
    const RunResult r = run("experiment " + cfgp.string());
    REQUIRE(r.exit_code == 0);
    CHECK(nlohmann::json::parse(r.out).contains("aggregates"));
    REQUIRE(fs::exists(rj));
    REQUIRE(fs::exists(rc));
    std::ifstream in(rc);
    std::string header, row;
    std::getline(in, header);
    CHECK(header == "method,k,rep,init_cost,final_cost,avg_cost,iter_cost,wall_ms");
    CHECK(std::getline(in, row));
  }
  SECTION("rerun writes identical cost columns") {
    REQUIRE(run("experiment " + cfgp.string()).exit_code == 0);
    std::ifstream a(rc);
    std::string first((std::istreambuf_iterator<char>(a)), std::istreambuf_iterator<char>());
    REQUIRE(run("experiment " + cfgp.string()).exit_code == 0);
    std::ifstream b(rc);
    std::string second((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
    // strip the wall_ms column (last) from every row before comparing
    auto strip = [](const std::string& s) {
      std::string out;
      std::istringstream lines(s);
      std::string line;
      while (std::getline(lines, line)) {
        out += line.substr(0, line.rfind(','));
        out += '\n';
      }
      return out;
    };
    CHECK(strip(first) == strip(second));
  }
  SECTION("unknown method in config names it and exits 1") {
    nlohmann::json bad = cfg;
    bad["methods"] = {"NDP-rand", "NDP-simplex"};
    write_file(cfgp, bad.dump());
    const RunResult r = run("experiment " + cfgp.string());
    CHECK(r.exit_code == 1);
  }
  SECTION("malformed json exits 1") {
    write_file(cfgp, "{not json");
    CHECK(run("experiment " + cfgp.string()).exit_code == 1);
  }
  SECTION("missing config file exits 1") {
    CHECK(run("experiment /nonexistent/nope.json").exit_code == 1);
  }
}
