#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "bloomcoreset/json_io.hpp"
#include "test_helpers.hpp"

using namespace bloomcoreset;
namespace fs = std::filesystem;

namespace {

const fs::path& workdir() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() /
             ("bloomcoreset-cli-" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunResult run_cli(const std::string& args) {
  const char* cli = std::getenv("BLOOMCORESET_CLI");
  REQUIRE(cli != nullptr);
  const auto out_path = workdir() / "run.stdout";
  const auto err_path = workdir() / "run.stderr";
  const std::string cmd = std::string(cli) + " " + args + " >" +
                          out_path.string() + " 2>" + err_path.string();
  const int rc = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  r.out = slurp(out_path);
  r.err = slurp(err_path);
  return r;
}

std::string write_spec_json(const json& spec, const char* name) {
  const auto path = workdir() / name;
  std::ofstream(path) << spec.dump();
  return path.string();
}

}  // namespace

TEST_CASE("file-based pipeline equals the in-process sampler") {
  const json spec_json = {{"dim", 32},
                          {"num_clusters", 4},
                          {"points_per_cluster", 200},
                          {"downstream_clusters", {0, 1}},
                          {"downstream_count", 120},
                          {"cluster_spread", 0.04},
                          {"rng_seed", 91}};
  const auto spec_path = write_spec_json(spec_json, "spec.json");
  const auto down = (workdir() / "down.bcf").string();
  const auto open = (workdir() / "open.bcf").string();
  const auto cbf = (workdir() / "fingerprint.cbf").string();
  const auto sel_path = (workdir() / "selection.json").string();
  const auto idx_path = (workdir() / "selection.txt").string();

  auto gen = run_cli("gen --spec " + spec_path + " --out-downstream " + down +
                     " --out-openset " + open);
  REQUIRE(gen.exit_code == 0);

  auto build = run_cli("build-filter --downstream " + down + " --out " + cbf);
  REQUIRE(build.exit_code == 0);
  const auto stats = json::parse(build.out);
  CHECK(stats["inserted"] == 120);
  CHECK(stats["size"] == sized_for(120));
  CHECK(stats["num_hashes"] == 10);

  auto sample = run_cli("sample --filter " + cbf + " --downstream " + down +
                        " --openset " + open +
                        " --budget 0.02 --agg max --out " + sel_path +
                        " --indices " + idx_path);
  REQUIRE(sample.exit_code == 0);
  const auto from_cli = json::parse(slurp(sel_path));

  // in-process equivalent on the same inputs and config
  const auto downstream = load_matrix(down);
  const auto openset = load_matrix(open);
  SamplerConfig cfg;
  cfg.budget_fraction = 0.02;
  cfg.strategy = Aggregation::max;
  const auto sel = sample_coreset(downstream, openset, cfg);
  CHECK(strip_timings(from_cli) == strip_timings(to_json(sel)));

  SECTION("indices file lists the selection, one per line") {
    std::istringstream lines(slurp(idx_path));
    std::vector<std::uint32_t> got;
    std::string line;
    while (std::getline(lines, line)) {
      got.push_back(static_cast<std::uint32_t>(std::stoul(line)));
    }
    CHECK(got == sel.indices);
  }

  SECTION("a second identical run is byte-identical modulo timings") {
    auto again = run_cli("sample --filter " + cbf + " --downstream " + down +
                         " --openset " + open +
                         " --budget 0.02 --agg max --out " + sel_path);
    REQUIRE(again.exit_code == 0);
    CHECK(strip_timings(json::parse(slurp(sel_path))) == strip_timings(from_cli));
  }

  SECTION("gen output matches in-process generation bit for bit") {
    const auto data = generate(spec_from_json(spec_json));
    CHECK(data.downstream == downstream);
    CHECK(data.openset == openset);
  }

  SECTION("full budget selects every candidate") {
    auto full = run_cli("sample --filter " + cbf + " --downstream " + down +
                        " --openset " + open + " --budget 1.0 --out " +
                        sel_path);
    REQUIRE(full.exit_code == 0);
    const auto j = json::parse(slurp(sel_path));
    CHECK(j["n_selected"] == j["n_candidates"]);
  }

  SECTION("aggregation choice is recorded in the output") {
    auto sum = run_cli("sample --filter " + cbf + " --downstream " + down +
                       " --openset " + open + " --agg sum --out " + sel_path);
    REQUIRE(sum.exit_code == 0);
    CHECK(json::parse(slurp(sel_path))["strategy"] == "sum");
  }

  SECTION("--verbose echoes the resolved config to stderr") {
    auto v = run_cli("sample --filter " + cbf + " --downstream " + down +
                     " --openset " + open + " --out " + sel_path + " --verbose");
    REQUIRE(v.exit_code == 0);
    CHECK(v.err.find("config:") != std::string::npos);
  }
}

TEST_CASE("build-filter matches the sizing rule on a 3500-row downstream") {
  const json spec_json = {{"dim", 16},         {"num_clusters", 2},
                          {"points_per_cluster", 10},
                          {"downstream_clusters", {0}},
                          {"downstream_count", 3500},
                          {"cluster_spread", 0.05},
                          {"rng_seed", 5}};
  const auto spec_path = write_spec_json(spec_json, "spec3500.json");
  const auto down = (workdir() / "down3500.bcf").string();
  const auto open = (workdir() / "open3500.bcf").string();
  const auto cbf = (workdir() / "f3500.cbf").string();

  REQUIRE(run_cli("gen --spec " + spec_path + " --out-downstream " + down +
                  " --out-openset " + open)
              .exit_code == 0);
  auto build = run_cli("build-filter --downstream " + down + " --out " + cbf);
  REQUIRE(build.exit_code == 0);
  const auto stats = json::parse(build.out);
  CHECK(stats["size"] == 10000);
  CHECK(stats["num_hashes"] == 10);
  CHECK(stats["inserted"] == 3500);

  SECTION("--size overrides the rule") {
    auto forced = run_cli("build-filter --downstream " + down +
                          " --size 64 --out " + cbf);
    REQUIRE(forced.exit_code == 0);
    CHECK(json::parse(forced.out)["size"] == 64);
  }

  SECTION("stats subcommand re-reads the same numbers") {
    REQUIRE(run_cli("build-filter --downstream " + down + " --out " + cbf)
                .exit_code == 0);
    auto st = run_cli("stats --filter " + cbf);
    REQUIRE(st.exit_code == 0);
    CHECK(json::parse(st.out)["inserted"] == 3500);
  }
}

TEST_CASE("bench subcommand") {
  const json spec_json = {{"dim", 32},        {"num_clusters", 5},
                          {"points_per_cluster", 80},
                          {"downstream_clusters", {0}},
                          {"downstream_count", 40},
                          {"cluster_spread", 0.05},
                          {"rng_seed", 77}};
  const auto spec_path = write_spec_json(spec_json, "benchspec.json");
  const auto csv_path = (workdir() / "bench.csv").string();

  auto r = run_cli("bench --spec " + spec_path + " --csv " + csv_path);
  REQUIRE(r.exit_code == 0);
  const auto report = json::parse(r.out);
  REQUIRE(report["rows"].size() == 4);
  CHECK(report["spec"]["rng_seed"] == 77);
  CHECK(r.err.find("strategy") != std::string::npos);  // aligned table
  CHECK(slurp(csv_path).find("bloom_topk") != std::string::npos);

  SECTION("same spec and seed give identical reports modulo wall clock") {
    auto again = run_cli("bench --spec " + spec_path);
    REQUIRE(again.exit_code == 0);
    CHECK(strip_timings(json::parse(again.out)) ==
          strip_timings(json::parse(r.out)));
  }

  SECTION("--seed overrides the spec seed") {
    auto reseeded = run_cli("bench --spec " + spec_path + " --seed 123");
    REQUIRE(reseeded.exit_code == 0);
    CHECK(json::parse(reseeded.out)["spec"]["rng_seed"] == 123);
  }
}

TEST_CASE("cli error handling and exit codes") {
  SECTION("missing input file -> 2, path named") {
    auto r = run_cli("stats --filter /nonexistent/f.cbf");
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("/nonexistent/f.cbf") != std::string::npos);
  }

  SECTION("corrupted magic -> 2") {
    const auto bad = workdir() / "bad.cbf";
    std::ofstream(bad) << "XXXXGARBAGE";
    auto r = run_cli("stats --filter " + bad.string());
    CHECK(r.exit_code == 2);
  }

  SECTION("unknown flag -> 1") {
    auto r = run_cli("stats --filter x.cbf --frobnicate");
    CHECK(r.exit_code == 1);
  }

  SECTION("missing subcommand -> 1") {
    CHECK(run_cli("").exit_code == 1);
  }

  SECTION("invalid spec json -> 1") {
    const auto bad = workdir() / "bad.json";
    std::ofstream(bad) << "{not json";
    auto r = run_cli("bench --spec " + bad.string());
    CHECK(r.exit_code == 1);
  }

  SECTION("spec validation failure -> 1") {
    const auto bad = write_spec_json(json{{"cluster_spread", 0.0}}, "zero.json");
    auto r = run_cli("bench --spec " + bad);
    CHECK(r.exit_code == 1);
  }

  SECTION("budget outside (0,1] -> 1") {
    auto r = run_cli("sample --filter f --downstream d --openset o "
                     "--budget 2.0 --out s.json");
    CHECK(r.exit_code == 1);
  }

  SECTION("empty candidate pool -> 3") {
    std::mt19937_64 rng(6);
    const auto down_m = testutil::random_matrix(rng, 1, 128, true);
    const auto open_m = testutil::random_matrix(rng, 40, 128, true);
    const auto down = workdir() / "lonely.bcf";
    const auto open = workdir() / "strangers.bcf";
    const auto cbf = workdir() / "lonely.cbf";
    write_matrix(down_m, down);
    write_matrix(open_m, open);
    REQUIRE(run_cli("build-filter --downstream " + down.string() +
                    " --size 100000 --out " + cbf.string())
                .exit_code == 0);
    auto r = run_cli("sample --filter " + cbf.string() + " --downstream " +
                     down.string() + " --openset " + open.string() +
                     " --out " + (workdir() / "x.json").string());
    CHECK(r.exit_code == 3);
    CHECK(r.err.find("no open-set rows") != std::string::npos);
  }

  SECTION("dim mismatch across inputs -> 2") {
    std::mt19937_64 rng(7);
    const auto down_m = testutil::random_matrix(rng, 5, 16, true);
    const auto open_m = testutil::random_matrix(rng, 5, 32, true);
    const auto down = workdir() / "d16.bcf";
    const auto open = workdir() / "o32.bcf";
    const auto cbf = workdir() / "d16.cbf";
    write_matrix(down_m, down);
    write_matrix(open_m, open);
    REQUIRE(run_cli("build-filter --downstream " + down.string() + " --out " +
                    cbf.string())
                .exit_code == 0);
    auto r = run_cli("sample --filter " + cbf.string() + " --downstream " +
                     down.string() + " --openset " + open.string() +
                     " --out " + (workdir() / "y.json").string());
    CHECK(r.exit_code == 2);
  }
}

TEST_CASE("stats reports an untouched filter as empty") {
  CountingBloomFilter fresh(64, 16);
  const auto path = workdir() / "fresh.cbf";
  fresh.save(path);
  auto r = run_cli("stats --filter " + path.string());
  REQUIRE(r.exit_code == 0);
  const auto j = json::parse(r.out);
  CHECK(j["occupied"] == 0);
  CHECK(j["inserted"] == 0);
  CHECK(j["fpr_estimate"] == 0.0);
}
