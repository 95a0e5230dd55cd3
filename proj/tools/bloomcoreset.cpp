// Command-line front end: build downstream fingerprints, sample coresets,
// inspect filters, generate synthetic data, and run the strategy benchmark.
//
// Exit codes: 0 success, 1 usage error, 2 data/format error, 3 runtime error.
// stdout carries data/JSON only; diagnostics go to stderr.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bloomcoreset/bench.hpp"
#include "bloomcoreset/json_io.hpp"

namespace {

using namespace bloomcoreset;

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open " + path);
  }
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw IoError("cannot open " + path + " for writing");
  }
  out << text;
  if (!out) {
    throw IoError("write failed for " + path);
  }
}

struct CommonOpts {
  bool verbose = false;
  std::size_t threads = 0;
  std::vector<std::uint32_t> seeds = HashFamily::default_seeds(HashFamily::kDefaultSize);
};

void print_config(const json& resolved) {
  std::cerr << "config: " << resolved.dump() << "\n";
}

int cmd_build_filter(const std::string& downstream_path,
                     std::optional<std::size_t> size_override,
                     const CommonOpts& opts, bool no_normalize,
                     const std::string& out_path) {
  SamplerConfig cfg;
  cfg.seeds = opts.seeds;
  cfg.filter_size = size_override;
  cfg.normalize = !no_normalize;

  const EmbeddingMatrix downstream = load_matrix(downstream_path);
  if (opts.verbose) {
    print_config(json{{"command", "build-filter"},
                      {"downstream", downstream_path},
                      {"rows", downstream.count()},
                      {"dim", downstream.dim()},
                      {"size", size_override ? json(*size_override) : json()},
                      {"seeds", cfg.seeds},
                      {"normalize", cfg.normalize},
                      {"out", out_path}});
  }
  const CountingBloomFilter filter = build_fingerprint(downstream, cfg);
  filter.save(out_path);
  std::cout << to_json(filter.stats()).dump(2) << "\n";
  return 0;
}

int cmd_sample(const std::string& filter_path, const std::string& downstream_path,
               const std::string& openset_path, double budget,
               const std::string& agg, const CommonOpts& opts,
               bool no_normalize, const std::string& out_path,
               const std::string& indices_path) {
  SamplerConfig cfg;
  cfg.budget_fraction = budget;
  cfg.strategy = parse_aggregation(agg);
  cfg.normalize = !no_normalize;
  cfg.threads = opts.threads;
  cfg.validate();

  const CountingBloomFilter filter = CountingBloomFilter::load(filter_path);
  const EmbeddingMatrix downstream = load_matrix(downstream_path);
  const EmbeddingMatrix openset = load_matrix(openset_path);
  if (downstream.dim() != filter.dim()) {
    throw DimError("downstream dim " + std::to_string(downstream.dim()) +
                   " does not match filter dim " + std::to_string(filter.dim()));
  }
  if (opts.verbose) {
    print_config(json{{"command", "sample"},
                      {"filter", filter_path},
                      {"downstream", downstream_path},
                      {"openset", openset_path},
                      {"budget_fraction", budget},
                      {"strategy", agg},
                      {"normalize", cfg.normalize},
                      {"threads", resolve_threads(cfg.threads)},
                      {"out", out_path}});
  }

  const CoresetSelection sel = sample_with_filter(downstream, openset, filter, cfg);
  write_text_file(out_path, to_json(sel).dump(2) + "\n");
  if (!indices_path.empty()) {
    std::string lines;
    for (std::uint32_t idx : sel.indices) {
      lines += std::to_string(idx);
      lines += '\n';
    }
    write_text_file(indices_path, lines);
  }
  std::cerr << "candidates=" << sel.n_candidates << " selected=" << sel.n_selected
            << " total_ms=" << sel.timings.total_ms() << "\n";
  if (sel.n_selected < sel.budget_count) {
    std::cerr << "note: candidate pool smaller than budget ("
              << sel.n_candidates << " < " << sel.budget_count << ")\n";
  }
  return 0;
}

int cmd_bench(const std::string& spec_path, const std::string& csv_path,
              double budget, const std::string& agg,
              std::optional<std::uint64_t> seed, const CommonOpts& opts) {
  SyntheticSpec spec = spec_path.empty() ? default_bench_spec()
                                         : spec_from_json(read_json_file(spec_path));
  if (seed) {
    spec.rng_seed = *seed;
  }
  SamplerConfig cfg;
  cfg.budget_fraction = budget;
  cfg.strategy = parse_aggregation(agg);
  cfg.threads = opts.threads;
  cfg.seeds = opts.seeds;
  cfg.validate();
  if (opts.verbose) {
    print_config(json{{"command", "bench"},
                      {"spec", to_json(spec)},
                      {"budget_fraction", budget},
                      {"strategy", agg},
                      {"threads", resolve_threads(cfg.threads)}});
  }

  const BenchReport report = run_bench(spec, cfg);
  print_bench_table(report, std::cerr);
  std::cout << to_json(report).dump(2) << "\n";
  if (!csv_path.empty()) {
    write_text_file(csv_path, bench_csv(report));
  }
  return 0;
}

int cmd_gen(const std::string& spec_path, std::optional<std::uint64_t> seed,
            const CommonOpts& opts, const std::string& out_downstream,
            const std::string& out_openset) {
  SyntheticSpec spec = spec_path.empty() ? default_bench_spec()
                                         : spec_from_json(read_json_file(spec_path));
  if (seed) {
    spec.rng_seed = *seed;
  }
  if (opts.verbose) {
    print_config(json{{"command", "gen"},
                      {"spec", to_json(spec)},
                      {"out_downstream", out_downstream},
                      {"out_openset", out_openset}});
  }
  const SyntheticData data = generate(spec);
  write_matrix(data.downstream, out_downstream);
  write_matrix(data.openset, out_openset);
  std::cerr << "wrote " << data.downstream.count() << " downstream rows, "
            << data.openset.count() << " open-set rows (dim " << spec.dim
            << ")\n";
  return 0;
}

int cmd_stats(const std::string& filter_path) {
  const CountingBloomFilter filter = CountingBloomFilter::load(filter_path);
  std::cout << to_json(filter.stats()).dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Coreset sampling from large embedding pools: counting-Bloom-"
               "filter screening plus budgeted top-k cosine refinement"};
  app.require_subcommand(1);

  CommonOpts opts;

  // build-filter
  auto* build = app.add_subcommand("build-filter",
                                   "Build a downstream fingerprint filter");
  std::string bf_downstream, bf_out;
  std::optional<std::size_t> bf_size;
  bool bf_no_normalize = false;
  build->add_option("--downstream", bf_downstream, "Downstream BCF1 matrix")
      ->required();
  build->add_option("--size", bf_size, "Counter array size (default: sized from row count)");
  build->add_option("--seeds", opts.seeds, "Hash seeds (default 0..9)");
  build->add_flag("--no-normalize", bf_no_normalize, "Skip row normalization");
  build->add_option("--out", bf_out, "Output CBF1 filter path")->required();
  build->add_flag("--verbose", opts.verbose, "Print resolved config");

  // sample
  auto* sample = app.add_subcommand("sample", "Sample a coreset from an open-set");
  std::string s_filter, s_downstream, s_openset, s_out, s_indices, s_agg = "max";
  double s_budget = 0.01;
  bool s_no_normalize = false;
  sample->add_option("--filter", s_filter, "CBF1 fingerprint filter")->required();
  sample->add_option("--downstream", s_downstream, "Downstream BCF1 matrix")
      ->required();
  sample->add_option("--openset", s_openset, "Open-set BCF1 matrix")->required();
  sample->add_option("--budget", s_budget, "Coreset budget as a fraction (0,1]");
  sample->add_option("--agg", s_agg, "Aggregation strategy: base|sum|max")
      ->check(CLI::IsMember({"base", "sum", "max"}));
  sample->add_option("--out", s_out, "Output selection JSON")->required();
  sample->add_option("--indices", s_indices, "Optional one-index-per-line file");
  sample->add_flag("--no-normalize", s_no_normalize, "Skip row normalization");
  sample->add_option("--threads", opts.threads, "Worker threads (0 = auto)");
  sample->add_flag("--verbose", opts.verbose, "Print resolved config");

  // bench
  auto* bench = app.add_subcommand("bench", "Run the four-strategy benchmark");
  std::string b_spec, b_csv, b_agg = "max";
  double b_budget = 0.01;
  std::optional<std::uint64_t> b_seed;
  bench->add_option("--spec", b_spec, "Synthetic spec JSON (default: built-in)");
  bench->add_option("--csv", b_csv, "Also write the report as CSV");
  bench->add_option("--budget", b_budget, "Coreset budget as a fraction (0,1]");
  bench->add_option("--agg", b_agg, "Aggregation strategy: base|sum|max")
      ->check(CLI::IsMember({"base", "sum", "max"}));
  bench->add_option("--seed", b_seed, "Override the spec rng_seed");
  bench->add_option("--threads", opts.threads, "Worker threads (0 = auto)");
  bench->add_flag("--verbose", opts.verbose, "Print resolved config");

  // gen
  auto* gen = app.add_subcommand("gen", "Materialize synthetic matrices");
  std::string g_spec, g_downstream, g_openset;
  std::optional<std::uint64_t> g_seed;
  gen->add_option("--spec", g_spec, "Synthetic spec JSON (default: built-in)");
  gen->add_option("--seed", g_seed, "Override the spec rng_seed");
  gen->add_option("--out-downstream", g_downstream, "Downstream BCF1 output")
      ->required();
  gen->add_option("--out-openset", g_openset, "Open-set BCF1 output")->required();
  gen->add_flag("--verbose", opts.verbose, "Print resolved config");

  // stats
  auto* stats = app.add_subcommand("stats", "Print filter stats as JSON");
  std::string st_filter;
  stats->add_option("--filter", st_filter, "CBF1 filter path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (build->parsed()) {
      return cmd_build_filter(bf_downstream, bf_size, opts, bf_no_normalize,
                              bf_out);
    }
    if (sample->parsed()) {
      return cmd_sample(s_filter, s_downstream, s_openset, s_budget, s_agg,
                        opts, s_no_normalize, s_out, s_indices);
    }
    if (bench->parsed()) {
      return cmd_bench(b_spec, b_csv, b_budget, b_agg, b_seed, opts);
    }
    if (gen->parsed()) {
      return cmd_gen(g_spec, g_seed, opts, g_downstream, g_openset);
    }
    if (stats->parsed()) {
      return cmd_stats(st_filter);
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const EmptyCandidateError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
