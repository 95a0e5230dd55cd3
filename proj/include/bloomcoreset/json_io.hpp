#ifndef BLOOMCORESET_JSON_IO_HPP
#define BLOOMCORESET_JSON_IO_HPP

#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "bloomcoreset/bench.hpp"
#include "bloomcoreset/counting_bloom_filter.hpp"
#include "bloomcoreset/sampler.hpp"
#include "bloomcoreset/synthetic.hpp"

namespace bloomcoreset {

using json = nlohmann::json;

inline json to_json(const StageTimings& t) {
  return json{{"fingerprint", t.fingerprint_ms},
              {"screen", t.screen_ms},
              {"score", t.score_ms},
              {"refine", t.refine_ms}};
}

inline json to_json(const CoresetSelection& sel) {
  json selected = json::array();
  for (std::size_t i = 0; i < sel.indices.size(); ++i) {
    selected.push_back(json{{"index", sel.indices[i]}, {"score", sel.scores[i]}});
  }
  return json{{"strategy", to_string(sel.strategy)},
              {"budget_fraction", sel.budget_fraction},
              {"budget_count", sel.budget_count},
              {"n_downstream", sel.n_downstream},
              {"n_openset", sel.n_openset},
              {"n_candidates", sel.n_candidates},
              {"n_selected", sel.n_selected},
              {"timings_ms", to_json(sel.timings)},
              {"selected", selected}};
}

inline json to_json(const FilterStats& s) {
  return json{{"size", s.size},
              {"num_hashes", s.num_hashes},
              {"inserted", s.inserted},
              {"occupied", s.occupied},
              {"fpr_estimate", s.fpr_estimate}};
}

inline json to_json(const SyntheticSpec& spec) {
  return json{{"dim", spec.dim},
              {"num_clusters", spec.num_clusters},
              {"points_per_cluster", spec.points_per_cluster},
              {"downstream_clusters", spec.downstream_clusters},
              {"downstream_count", spec.downstream_count},
              {"cluster_spread", spec.cluster_spread},
              {"rng_seed", spec.rng_seed}};
}

inline SyntheticSpec spec_from_json(const json& j) {
  SyntheticSpec spec;
  spec.dim = j.value("dim", spec.dim);
  spec.num_clusters = j.value("num_clusters", spec.num_clusters);
  spec.points_per_cluster = j.value("points_per_cluster", spec.points_per_cluster);
  spec.downstream_clusters =
      j.value("downstream_clusters", spec.downstream_clusters);
  spec.downstream_count = j.value("downstream_count", spec.downstream_count);
  spec.cluster_spread = j.value("cluster_spread", spec.cluster_spread);
  spec.rng_seed = j.value("rng_seed", spec.rng_seed);
  spec.validate();
  return spec;
}

inline json to_json(const BenchRow& row) {
  return json{{"strategy", row.strategy},
              {"timings_ms", to_json(row.timings)},
              {"wall_ms", row.wall_ms},
              {"precision_vs_oracle", row.precision_vs_oracle},
              {"recall_vs_oracle", row.recall_vs_oracle},
              {"in_distribution_fraction", row.in_distribution_fraction},
              {"n_candidates", row.n_candidates},
              {"n_selected", row.n_selected}};
}

inline json to_json(const BenchReport& report) {
  json rows = json::array();
  for (const auto& row : report.rows) {
    rows.push_back(to_json(row));
  }
  return json{{"spec", to_json(report.spec)},
              {"budget_count", report.budget_count},
              {"rows", rows}};
}

/// Drops every wall-clock field; what remains must be byte-identical across
/// runs and thread counts.
inline json strip_timings(json j) {
  j.erase("timings_ms");
  j.erase("wall_ms");
  if (j.contains("rows")) {
    for (auto& row : j["rows"]) {
      row.erase("timings_ms");
      row.erase("wall_ms");
    }
  }
  return j;
}

inline void print_bench_table(const BenchReport& report, std::ostream& os) {
  os << std::left << std::setw(12) << "strategy" << std::right  //
     << std::setw(12) << "wall_ms" << std::setw(12) << "precision"
     << std::setw(12) << "recall" << std::setw(10) << "in_dist"  //
     << std::setw(12) << "candidates" << std::setw(10) << "selected" << '\n';
  for (const auto& row : report.rows) {
    os << std::left << std::setw(12) << row.strategy << std::right  //
       << std::setw(12) << std::fixed << std::setprecision(2) << row.wall_ms
       << std::setw(12) << std::setprecision(4) << row.precision_vs_oracle
       << std::setw(12) << row.recall_vs_oracle  //
       << std::setw(10) << row.in_distribution_fraction  //
       << std::setw(12) << row.n_candidates << std::setw(10) << row.n_selected
       << '\n';
  }
  os.unsetf(std::ios::fixed);
}

inline std::string bench_csv(const BenchReport& report) {
  std::ostringstream os;
  os << "strategy,fingerprint_ms,screen_ms,score_ms,refine_ms,wall_ms,"
        "precision_vs_oracle,recall_vs_oracle,in_distribution_fraction,"
        "n_candidates,n_selected\n";
  for (const auto& row : report.rows) {
    os << row.strategy << ',' << row.timings.fingerprint_ms << ','
       << row.timings.screen_ms << ',' << row.timings.score_ms << ','
       << row.timings.refine_ms << ',' << row.wall_ms << ','
       << row.precision_vs_oracle << ',' << row.recall_vs_oracle << ','
       << row.in_distribution_fraction << ',' << row.n_candidates << ','
       << row.n_selected << '\n';
  }
  return os.str();
}

}  // namespace bloomcoreset

#endif
