#ifndef BLOOMCORESET_SAMPLER_HPP
#define BLOOMCORESET_SAMPLER_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "bloomcoreset/counting_bloom_filter.hpp"
#include "bloomcoreset/errors.hpp"
#include "bloomcoreset/matrix.hpp"
#include "bloomcoreset/parallel.hpp"

namespace bloomcoreset {

// ---------------------------------------------------------------------------
// Configuration

enum class Aggregation { base, sum, max };

inline const char* to_string(Aggregation a) {
  switch (a) {
    case Aggregation::base:
      return "base";
    case Aggregation::sum:
      return "sum";
    case Aggregation::max:
      return "max";
  }
  return "?";
}

inline Aggregation parse_aggregation(const std::string& s) {
  if (s == "base") return Aggregation::base;
  if (s == "sum") return Aggregation::sum;
  if (s == "max") return Aggregation::max;
  throw std::invalid_argument("unknown aggregation strategy: " + s);
}

struct SamplerConfig {
  double budget_fraction = 0.01;
  Aggregation strategy = Aggregation::max;
  bool normalize = true;
  std::vector<std::uint32_t> seeds = HashFamily::default_seeds(HashFamily::kDefaultSize);
  std::optional<std::size_t> filter_size;  // overrides sized_for
  unsigned counter_bits = 32;
  std::size_t threads = 0;  // 0 = auto

  void validate() const {
    if (!(budget_fraction > 0.0) || budget_fraction > 1.0) {
      throw std::invalid_argument("budget_fraction must be in (0, 1]");
    }
  }
};

/// ceil(fraction * count), with a small slack so that fractions like 0.01,
/// which are not exactly representable, do not bump an integral product to
/// the next integer (0.01 * 10000 must give 100, not 101).
inline std::size_t budget_from_fraction(double fraction, std::size_t count) {
  const double target = fraction * static_cast<double>(count);
  const auto b = static_cast<std::size_t>(std::ceil(target - 1e-9));
  return std::max<std::size_t>(1, b);
}

// ---------------------------------------------------------------------------
// Pipeline data

/// Open-set rows that passed membership screening, in strictly increasing
/// row order. Holds a pointer to the open-set matrix; does not copy rows.
class CandidateSet {
 public:
  CandidateSet(const EmbeddingMatrix& openset,
               std::vector<std::uint32_t> indices)
      : openset_(&openset), indices_(std::move(indices)) {
    for (std::size_t i = 0; i < indices_.size(); ++i) {
      if (indices_[i] >= openset_->count() ||
          (i > 0 && indices_[i - 1] >= indices_[i])) {
        throw std::invalid_argument(
            "CandidateSet: indices must be strictly increasing open-set rows");
      }
    }
  }

  const EmbeddingMatrix& openset() const { return *openset_; }
  std::span<const std::uint32_t> indices() const { return indices_; }
  std::size_t size() const { return indices_.size(); }

  std::span<const float> embedding(std::size_t position) const {
    return openset_->row(indices_[position]);
  }

 private:
  const EmbeddingMatrix* openset_;
  std::vector<std::uint32_t> indices_;
};

/// Dense N_X x N_M cosine matrix; scores[i*cols + j] = dot(X_i, M_j).
struct ScoreTable {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<float> scores;

  float at(std::size_t i, std::size_t j) const { return scores[i * cols + j]; }
};

struct StageTimings {
  double fingerprint_ms = 0.0;
  double screen_ms = 0.0;
  double score_ms = 0.0;
  double refine_ms = 0.0;

  double total_ms() const {
    return fingerprint_ms + screen_ms + score_ms + refine_ms;
  }
};

struct CoresetSelection {
  Aggregation strategy = Aggregation::max;
  double budget_fraction = 0.0;  // 0 when refine() is called directly
  std::size_t budget_count = 0;
  std::size_t n_downstream = 0;
  std::size_t n_openset = 0;
  std::size_t n_candidates = 0;
  std::size_t n_selected = 0;
  std::vector<std::uint32_t> indices;  // distinct open-set rows
  std::vector<double> scores;          // aggregate per selected index
  StageTimings timings;
};

// ---------------------------------------------------------------------------
// Scoring kernel

/// Dot product with a fixed 16-lane accumulation pattern. The lane layout
/// and the final combine order never change, so the result is bit-identical
/// however the call is scheduled, while the independent lanes still let the
/// compiler vectorize.
inline float dot_f32(std::span<const float> a, std::span<const float> b) {
  const float* x = a.data();
  const float* y = b.data();
  const std::size_t n = a.size();

  float acc[16] = {};
  const std::size_t vec_end = n - n % 16;
  std::size_t d = 0;
  for (; d < vec_end; d += 16) {
    for (std::size_t l = 0; l < 16; ++l) {
      acc[l] += x[d + l] * y[d + l];
    }
  }
  float tail = 0.0f;
  for (; d < n; ++d) {
    tail += x[d] * y[d];
  }

  const float s01 = (acc[0] + acc[1]) + (acc[2] + acc[3]);
  const float s23 = (acc[4] + acc[5]) + (acc[6] + acc[7]);
  const float s45 = (acc[8] + acc[9]) + (acc[10] + acc[11]);
  const float s67 = (acc[12] + acc[13]) + (acc[14] + acc[15]);
  return ((s01 + s23) + (s45 + s67)) + tail;
}

// ---------------------------------------------------------------------------
// Stages

/// Builds the downstream fingerprint: one update per downstream row.
/// Signatures are scale-invariant, so whether the rows were normalized
/// first does not change the filter.
inline CountingBloomFilter build_fingerprint(const EmbeddingMatrix& downstream,
                                             const SamplerConfig& config) {
  if (downstream.count() == 0) {
    throw EmptyInputError("build_fingerprint: downstream set is empty");
  }
  const std::size_t m =
      config.filter_size.value_or(sized_for(downstream.count()));
  CountingBloomFilter filter(m, downstream.dim(), HashFamily(config.seeds),
                             config.counter_bits);
  for (std::size_t i = 0; i < downstream.count(); ++i) {
    filter.update(binarize(downstream.row(i)));
  }
  return filter;
}

/// Membership pass over the open-set. Parallel over fixed row blocks and
/// merged in block order, so the result is the same for any worker count.
inline CandidateSet screen(const EmbeddingMatrix& openset,
                           const CountingBloomFilter& filter,
                           std::size_t threads = 0) {
  if (openset.dim() != filter.dim()) {
    throw DimError("screen: open-set dim " + std::to_string(openset.dim()) +
                   " does not match filter dim " + std::to_string(filter.dim()));
  }

  constexpr std::size_t kBlock = 4096;
  const std::size_t num_blocks = (openset.count() + kBlock - 1) / kBlock;
  std::vector<std::vector<std::uint32_t>> hits(num_blocks);

  for_each_block(openset.count(), kBlock, threads,
                 [&](std::size_t b, std::size_t begin, std::size_t end) {
                   auto& local = hits[b];
                   for (std::size_t i = begin; i < end; ++i) {
                     if (filter.check(binarize(openset.row(i)))) {
                       local.push_back(static_cast<std::uint32_t>(i));
                     }
                   }
                 });

  std::vector<std::uint32_t> indices;
  for (const auto& local : hits) {
    indices.insert(indices.end(), local.begin(), local.end());
  }
  return CandidateSet(openset, std::move(indices));
}

/// Full cosine table between downstream rows and candidates. Assumes both
/// matrices are unit-normalized. Empty candidate sets yield an empty table.
inline ScoreTable score(const EmbeddingMatrix& downstream,
                        const CandidateSet& candidates,
                        std::size_t threads = 0) {
  const auto& openset = candidates.openset();
  if (downstream.dim() != openset.dim()) {
    throw DimError("score: downstream dim " + std::to_string(downstream.dim()) +
                   " does not match open-set dim " +
                   std::to_string(openset.dim()));
  }

  ScoreTable table;
  table.rows = downstream.count();
  table.cols = candidates.size();
  table.scores.resize(table.rows * table.cols);

  const auto idx = candidates.indices();
  constexpr std::size_t kRowBlock = 64;
  for_each_block(table.rows, kRowBlock, threads,
                 [&](std::size_t, std::size_t begin, std::size_t end) {
                   for (std::size_t i = begin; i < end; ++i) {
                     const auto xrow = downstream.row(i);
                     float* out = table.scores.data() + i * table.cols;
                     for (std::size_t j = 0; j < table.cols; ++j) {
                       out[j] = dot_f32(xrow, openset.row(idx[j]));
                     }
                   }
                 });
  return table;
}

namespace detail {

constexpr std::size_t kCandidateBlock = 128;

/// Per-candidate aggregates for sum/max, streamed without materializing the
/// score table. Sums accumulate in double over downstream rows in ascending
/// order -- the same arithmetic aggregate_from_table uses, so both paths
/// select identically.
inline std::vector<double> aggregate_streaming(const EmbeddingMatrix& downstream,
                                               const CandidateSet& candidates,
                                               Aggregation strategy,
                                               std::size_t threads) {
  const auto idx = candidates.indices();
  const auto& openset = candidates.openset();
  std::vector<double> agg(candidates.size(),
                          strategy == Aggregation::max
                              ? -std::numeric_limits<double>::infinity()
                              : 0.0);

  for_each_block(
      candidates.size(), kCandidateBlock, threads,
      [&](std::size_t, std::size_t begin, std::size_t end) {
        for (std::size_t i = 0; i < downstream.count(); ++i) {
          const auto xrow = downstream.row(i);
          for (std::size_t j = begin; j < end; ++j) {
            const double s = dot_f32(xrow, openset.row(idx[j]));
            if (strategy == Aggregation::max) {
              agg[j] = std::max(agg[j], s);
            } else {
              agg[j] += s;
            }
          }
        }
      });
  return agg;
}

inline std::vector<double> aggregate_from_table(const ScoreTable& table,
                                                Aggregation strategy) {
  std::vector<double> agg(table.cols,
                          strategy == Aggregation::max
                              ? -std::numeric_limits<double>::infinity()
                              : 0.0);
  for (std::size_t i = 0; i < table.rows; ++i) {
    const float* row = table.scores.data() + i * table.cols;
    for (std::size_t j = 0; j < table.cols; ++j) {
      if (strategy == Aggregation::max) {
        agg[j] = std::max(agg[j], static_cast<double>(row[j]));
      } else {
        agg[j] += static_cast<double>(row[j]);
      }
    }
  }
  return agg;
}

/// Top budget_count candidate positions by (aggregate desc, position asc).
/// Candidate positions follow open-set row order, so the position tiebreak
/// is exactly the lower-open-set-index rule.
inline std::vector<std::uint32_t> select_top(const std::vector<double>& agg,
                                             std::size_t budget_count) {
  std::vector<std::uint32_t> order(agg.size());
  std::iota(order.begin(), order.end(), 0u);
  const std::size_t take = std::min(budget_count, order.size());
  std::partial_sort(order.begin(), order.begin() + take, order.end(),
                    [&](std::uint32_t a, std::uint32_t b) {
                      if (agg[a] != agg[b]) return agg[a] > agg[b];
                      return a < b;
                    });
  order.resize(take);
  return order;
}

/// Per-downstream-row candidate rankings truncated at depth: positions
/// ordered by (similarity desc, position asc). depth sweeps are enough for
/// the round-robin fill because after sweep r at least r distinct
/// candidates are selected.
inline std::vector<std::vector<std::uint32_t>> rankings_streaming(
    const EmbeddingMatrix& downstream, const CandidateSet& candidates,
    std::size_t depth, std::size_t threads) {
  const auto idx = candidates.indices();
  const auto& openset = candidates.openset();
  std::vector<std::vector<std::uint32_t>> rankings(downstream.count());

  constexpr std::size_t kRowBlock = 8;
  for_each_block(
      downstream.count(), kRowBlock, threads,
      [&](std::size_t, std::size_t begin, std::size_t end) {
        std::vector<float> sims(candidates.size());
        std::vector<std::uint32_t> order(candidates.size());
        for (std::size_t i = begin; i < end; ++i) {
          const auto xrow = downstream.row(i);
          for (std::size_t j = 0; j < candidates.size(); ++j) {
            sims[j] = dot_f32(xrow, openset.row(idx[j]));
          }
          std::iota(order.begin(), order.end(), 0u);
          std::partial_sort(order.begin(), order.begin() + depth, order.end(),
                            [&](std::uint32_t a, std::uint32_t b) {
                              if (sims[a] != sims[b]) return sims[a] > sims[b];
                              return a < b;
                            });
          rankings[i].assign(order.begin(), order.begin() + depth);
        }
      });
  return rankings;
}

inline std::vector<std::vector<std::uint32_t>> rankings_from_table(
    const ScoreTable& table, std::size_t depth) {
  std::vector<std::vector<std::uint32_t>> rankings(table.rows);
  std::vector<std::uint32_t> order(table.cols);
  for (std::size_t i = 0; i < table.rows; ++i) {
    const float* sims = table.scores.data() + i * table.cols;
    std::iota(order.begin(), order.end(), 0u);
    std::partial_sort(order.begin(), order.begin() + depth, order.end(),
                      [&](std::uint32_t a, std::uint32_t b) {
                        if (sims[a] != sims[b]) return sims[a] > sims[b];
                        return a < b;
                      });
    rankings[i].assign(order.begin(), order.begin() + depth);
  }
  return rankings;
}

struct BasePick {
  std::vector<std::uint32_t> positions;
  std::vector<double> scores;
};

/// Round-robin fill: sweep ranks r = 0, 1, ...; at each rank visit
/// downstream rows in order and take that row's r-th ranked candidate if it
/// is not selected yet. The score recorded for a pick is the similarity
/// from the (row, rank) slot that selected it.
template <typename SimAt>
BasePick round_robin_fill(const std::vector<std::vector<std::uint32_t>>& rankings,
                          std::size_t num_candidates, std::size_t budget_count,
                          SimAt&& sim_at) {
  const std::size_t target = std::min(budget_count, num_candidates);
  BasePick pick;
  std::vector<char> taken(num_candidates, 0);
  const std::size_t depth = rankings.empty() ? 0 : rankings.front().size();
  for (std::size_t r = 0; r < depth && pick.positions.size() < target; ++r) {
    for (std::size_t i = 0; i < rankings.size() && pick.positions.size() < target;
         ++i) {
      const std::uint32_t p = rankings[i][r];
      if (!taken[p]) {
        taken[p] = 1;
        pick.positions.push_back(p);
        pick.scores.push_back(static_cast<double>(sim_at(i, p)));
      }
    }
  }
  return pick;
}

inline CoresetSelection make_selection(const CandidateSet& candidates,
                                       Aggregation strategy,
                                       std::size_t budget_count,
                                       std::size_t n_downstream,
                                       const std::vector<std::uint32_t>& positions,
                                       std::vector<double> scores) {
  const auto idx = candidates.indices();
  CoresetSelection sel;
  sel.strategy = strategy;
  sel.budget_count = budget_count;
  sel.n_downstream = n_downstream;
  sel.n_openset = candidates.openset().count();
  sel.n_candidates = candidates.size();
  sel.n_selected = positions.size();
  sel.indices.reserve(positions.size());
  for (std::uint32_t p : positions) {
    sel.indices.push_back(idx[p]);
  }
  sel.scores = std::move(scores);
  return sel;
}

inline CoresetSelection refine_impl(const CandidateSet& candidates,
                                    std::size_t n_downstream,
                                    std::size_t budget_count,
                                    Aggregation strategy,
                                    const ScoreTable* table,
                                    const EmbeddingMatrix* downstream,
                                    std::size_t threads,
                                    StageTimings* timings = nullptr) {
  if (budget_count == 0) {
    throw std::invalid_argument("refine: budget_count must be positive");
  }
  if (candidates.size() > 0 && n_downstream == 0) {
    throw EmptyInputError("refine: no downstream rows to aggregate over");
  }

  using clock = std::chrono::steady_clock;
  auto t0 = clock::now();
  auto lap_ms = [&t0] {
    const auto t1 = clock::now();
    const double ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    t0 = t1;
    return ms;
  };

  if (strategy == Aggregation::base) {
    const std::size_t depth = std::min(budget_count, candidates.size());
    auto rankings = table ? rankings_from_table(*table, depth)
                          : rankings_streaming(*downstream, candidates, depth,
                                               threads);
    if (timings) timings->score_ms += lap_ms();
    BasePick pick;
    if (table) {
      pick = round_robin_fill(rankings, candidates.size(), budget_count,
                              [&](std::size_t i, std::uint32_t p) {
                                return table->at(i, p);
                              });
    } else {
      const auto idx = candidates.indices();
      pick = round_robin_fill(rankings, candidates.size(), budget_count,
                              [&](std::size_t i, std::uint32_t p) {
                                return dot_f32(downstream->row(i),
                                               candidates.openset().row(idx[p]));
                              });
    }
    if (timings) timings->refine_ms += lap_ms();
    return make_selection(candidates, strategy, budget_count, n_downstream,
                          pick.positions, std::move(pick.scores));
  }

  const auto agg = table ? aggregate_from_table(*table, strategy)
                         : aggregate_streaming(*downstream, candidates,
                                               strategy, threads);
  if (timings) timings->score_ms += lap_ms();
  const auto top = select_top(agg, budget_count);
  std::vector<double> scores;
  scores.reserve(top.size());
  for (std::uint32_t p : top) {
    scores.push_back(agg[p]);
  }
  if (timings) timings->refine_ms += lap_ms();
  return make_selection(candidates, strategy, budget_count, n_downstream, top,
                        std::move(scores));
}

}  // namespace detail

/// Budgeted selection from a precomputed score table.
inline CoresetSelection refine(const ScoreTable& table,
                               const CandidateSet& candidates,
                               std::size_t budget_count, Aggregation strategy) {
  return detail::refine_impl(candidates, table.rows, budget_count, strategy,
                             &table, nullptr, 0);
}

/// Same selection as score() + refine(), but aggregates are streamed in
/// candidate blocks so the N_X x N_M table is never materialized.
inline CoresetSelection refine_streaming(const EmbeddingMatrix& downstream,
                                         const CandidateSet& candidates,
                                         std::size_t budget_count,
                                         Aggregation strategy,
                                         std::size_t threads = 0) {
  return detail::refine_impl(candidates, downstream.count(), budget_count,
                             strategy, nullptr, &downstream, threads);
}

/// Screening + refinement against an already-built fingerprint.
inline CoresetSelection sample_with_filter(const EmbeddingMatrix& downstream,
                                           const EmbeddingMatrix& openset,
                                           const CountingBloomFilter& filter,
                                           const SamplerConfig& config) {
  config.validate();
  if (downstream.dim() != openset.dim()) {
    throw DimError("sample: downstream dim " + std::to_string(downstream.dim()) +
                   " does not match open-set dim " +
                   std::to_string(openset.dim()));
  }
  using clock = std::chrono::steady_clock;
  auto ms_since = [](clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(clock::now() - t0).count();
  };

  auto t0 = clock::now();
  const CandidateSet candidates = screen(openset, filter, config.threads);
  const double screen_ms = ms_since(t0);
  if (candidates.size() == 0) {
    throw EmptyCandidateError(
        "screening admitted no open-set rows; nothing to refine (filter has " +
        std::to_string(filter.inserted()) + " inserts over m=" +
        std::to_string(filter.size()) + ")");
  }

  const std::size_t budget_count =
      budget_from_fraction(config.budget_fraction, openset.count());

  // scoring needs unit rows; screening does not (signatures are
  // scale-invariant), so normalization happens after the membership pass
  const EmbeddingMatrix* x = &downstream;
  EmbeddingMatrix x_norm;
  CandidateSet scored_candidates = candidates;
  EmbeddingMatrix u_norm;
  if (config.normalize) {
    x_norm = normalize(downstream);
    x = &x_norm;
    u_norm = normalize(openset);
    scored_candidates = CandidateSet(
        u_norm, std::vector<std::uint32_t>(candidates.indices().begin(),
                                           candidates.indices().end()));
  }

  StageTimings stage;
  CoresetSelection sel =
      detail::refine_impl(scored_candidates, x->count(), budget_count,
                          config.strategy, nullptr, x, config.threads, &stage);
  sel.budget_fraction = config.budget_fraction;
  sel.n_openset = openset.count();
  sel.timings = stage;
  sel.timings.screen_ms = screen_ms;
  return sel;
}

/// Algorithm pipeline end to end: fingerprint, screen, score, refine.
inline CoresetSelection sample_coreset(const EmbeddingMatrix& downstream,
                                       const EmbeddingMatrix& openset,
                                       const SamplerConfig& config) {
  config.validate();
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  const CountingBloomFilter filter = build_fingerprint(downstream, config);
  const double fingerprint_ms =
      std::chrono::duration<double, std::milli>(clock::now() - t0).count();

  CoresetSelection sel = sample_with_filter(downstream, openset, filter, config);
  sel.timings.fingerprint_ms = fingerprint_ms;
  return sel;
}

}  // namespace bloomcoreset

#endif
