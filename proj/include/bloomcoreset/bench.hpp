#ifndef BLOOMCORESET_BENCH_HPP
#define BLOOMCORESET_BENCH_HPP

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "bloomcoreset/sampler.hpp"
#include "bloomcoreset/synthetic.hpp"

namespace bloomcoreset {

/// Exhaustive baseline: score + refine over every open-set row, no
/// membership screening. Exact by construction; the quality reference for
/// everything else.
inline CoresetSelection oracle_coreset(const EmbeddingMatrix& downstream,
                                       const EmbeddingMatrix& openset,
                                       std::size_t budget_count,
                                       Aggregation strategy,
                                       std::size_t threads = 0) {
  if (downstream.dim() != openset.dim()) {
    throw DimError("oracle_coreset: dim mismatch");
  }
  std::vector<std::uint32_t> all(openset.count());
  std::iota(all.begin(), all.end(), 0u);
  CandidateSet candidates(openset, std::move(all));

  StageTimings stage;
  CoresetSelection sel =
      detail::refine_impl(candidates, downstream.count(), budget_count,
                          strategy, nullptr, &downstream, threads, &stage);
  sel.timings = stage;
  return sel;
}

struct BenchRow {
  std::string strategy;  // bloom_topk | bloom_only | random | exhaustive
  StageTimings timings;
  double wall_ms = 0.0;
  double precision_vs_oracle = 0.0;
  double recall_vs_oracle = 0.0;
  double in_distribution_fraction = 0.0;
  std::size_t n_candidates = 0;
  std::size_t n_selected = 0;
};

struct BenchReport {
  SyntheticSpec spec;
  std::size_t budget_count = 0;
  std::vector<BenchRow> rows;

  const BenchRow& row(const std::string& strategy) const {
    for (const auto& r : rows) {
      if (r.strategy == strategy) return r;
    }
    throw std::out_of_range("no bench row for strategy " + strategy);
  }
};

namespace detail {

inline double overlap(std::vector<std::uint32_t> a, std::vector<std::uint32_t> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::vector<std::uint32_t> both;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                        std::back_inserter(both));
  return static_cast<double>(both.size());
}

inline double in_distribution_fraction(const std::vector<std::uint32_t>& selected,
                                       const std::vector<std::uint32_t>& labels,
                                       const std::vector<std::uint32_t>& downstream_clusters) {
  if (selected.empty()) return 0.0;
  std::size_t in = 0;
  for (std::uint32_t idx : selected) {
    if (std::find(downstream_clusters.begin(), downstream_clusters.end(),
                  labels[idx]) != downstream_clusters.end()) {
      ++in;
    }
  }
  return static_cast<double>(in) / static_cast<double>(selected.size());
}

}  // namespace detail

/// Runs the four sampling strategies on one generated dataset and reports
/// stage timings plus quality against the exhaustive baseline. Strategies
/// run sequentially so the timings are uncontended.
inline BenchReport run_bench(const SyntheticSpec& spec,
                             const SamplerConfig& config) {
  spec.validate();
  config.validate();
  using clock = std::chrono::steady_clock;

  SyntheticData data = generate(spec);
  if (config.normalize) {
    data.downstream = normalize(std::move(data.downstream));
    data.openset = normalize(std::move(data.openset));
  }
  SamplerConfig cfg = config;
  cfg.normalize = false;  // inputs normalized once, outside the timed region

  BenchReport report;
  report.spec = spec;
  report.budget_count =
      budget_from_fraction(cfg.budget_fraction, data.openset.count());

  const CoresetSelection oracle = oracle_coreset(
      data.downstream, data.openset, report.budget_count, cfg.strategy,
      cfg.threads);

  auto quality_row = [&](std::string name, const StageTimings& t,
                         const std::vector<std::uint32_t>& selected,
                         std::size_t n_candidates) {
    BenchRow row;
    row.strategy = std::move(name);
    row.timings = t;
    row.wall_ms = t.total_ms();
    const double hit = detail::overlap(selected, oracle.indices);
    row.precision_vs_oracle =
        selected.empty() ? 0.0 : hit / static_cast<double>(selected.size());
    row.recall_vs_oracle = oracle.indices.empty()
                               ? 0.0
                               : hit / static_cast<double>(oracle.indices.size());
    row.in_distribution_fraction = detail::in_distribution_fraction(
        selected, data.labels, spec.downstream_clusters);
    row.n_candidates = n_candidates;
    row.n_selected = selected.size();
    return row;
  };

  // bloom + top-k refinement: the full pipeline
  {
    const CoresetSelection sel =
        sample_coreset(data.downstream, data.openset, cfg);
    report.rows.push_back(quality_row("bloom_topk", sel.timings, sel.indices,
                                      sel.n_candidates));
  }

  // bloom only: budgeted uniform draw from the screened candidates
  {
    StageTimings t;
    auto t0 = clock::now();
    const CountingBloomFilter filter = build_fingerprint(data.downstream, cfg);
    t.fingerprint_ms =
        std::chrono::duration<double, std::milli>(clock::now() - t0).count();
    t0 = clock::now();
    const CandidateSet candidates = screen(data.openset, filter, cfg.threads);
    t.screen_ms =
        std::chrono::duration<double, std::milli>(clock::now() - t0).count();

    t0 = clock::now();
    std::vector<std::uint32_t> picked;
    std::mt19937_64 rng(spec.rng_seed ^ 0x9e3779b97f4a7c15ULL);
    std::sample(candidates.indices().begin(), candidates.indices().end(),
                std::back_inserter(picked), report.budget_count, rng);
    t.refine_ms =
        std::chrono::duration<double, std::milli>(clock::now() - t0).count();
    report.rows.push_back(
        quality_row("bloom_only", t, picked, candidates.size()));
  }

  // uniform over the whole open-set
  {
    StageTimings t;
    auto t0 = clock::now();
    std::vector<std::uint32_t> all(data.openset.count());
    std::iota(all.begin(), all.end(), 0u);
    std::vector<std::uint32_t> picked;
    std::mt19937_64 rng(spec.rng_seed ^ 0x517cc1b727220a95ULL);
    std::sample(all.begin(), all.end(), std::back_inserter(picked),
                report.budget_count, rng);
    t.refine_ms =
        std::chrono::duration<double, std::milli>(clock::now() - t0).count();
    report.rows.push_back(quality_row("random", t, picked, all.size()));
  }

  report.rows.push_back(quality_row("exhaustive", oracle.timings,
                                    oracle.indices, data.openset.count()));
  return report;
}

}  // namespace bloomcoreset

#endif
