#ifndef BLOOMCORESET_SYNTHETIC_HPP
#define BLOOMCORESET_SYNTHETIC_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "bloomcoreset/bit_signature.hpp"
#include "bloomcoreset/matrix.hpp"

namespace bloomcoreset {

/// Clustered benchmark data: cluster prototypes are random sign patterns on
/// the unit sphere, so cluster identity survives binarization and the
/// spread knob directly controls how often point signatures drift off the
/// prototype.
struct SyntheticSpec {
  std::size_t dim = 512;
  std::size_t num_clusters = 10;
  std::size_t points_per_cluster = 1000;           // open-set rows per cluster
  std::vector<std::uint32_t> downstream_clusters = {0, 1};
  std::size_t downstream_count = 500;
  double cluster_spread = 0.05;  // per-coordinate noise scale
  std::uint64_t rng_seed = 42;

  void validate() const {
    if (dim == 0) throw std::invalid_argument("spec: dim must be positive");
    if (num_clusters == 0) {
      throw std::invalid_argument("spec: num_clusters must be positive");
    }
    if (points_per_cluster == 0) {
      throw std::invalid_argument("spec: points_per_cluster must be positive");
    }
    if (downstream_count == 0) {
      throw std::invalid_argument("spec: downstream_count must be positive");
    }
    if (downstream_clusters.empty()) {
      throw std::invalid_argument("spec: downstream_clusters must be nonempty");
    }
    for (std::uint32_t c : downstream_clusters) {
      if (c >= num_clusters) {
        throw std::invalid_argument("spec: downstream cluster " +
                                    std::to_string(c) + " out of range");
      }
    }
    if (!(cluster_spread > 0.0)) {
      throw std::invalid_argument("spec: cluster_spread must be positive");
    }
  }
};

struct SyntheticData {
  EmbeddingMatrix downstream;
  EmbeddingMatrix openset;
  std::vector<std::uint32_t> labels;  // cluster id per open-set row
};

inline SyntheticSpec default_bench_spec() { return SyntheticSpec{}; }

namespace detail {

/// Random +-1/sqrt(D) sign patterns, redrawn on signature collision so every
/// prototype is signature-distinct.
inline std::vector<std::vector<float>> make_prototypes(const SyntheticSpec& spec,
                                                       std::mt19937_64& rng) {
  const float mag = 1.0f / std::sqrt(static_cast<float>(spec.dim));
  std::vector<std::vector<float>> protos;
  std::vector<BitSignature> sigs;
  protos.reserve(spec.num_clusters);
  for (std::size_t c = 0; c < spec.num_clusters; ++c) {
    for (int attempt = 0;; ++attempt) {
      if (attempt >= 1000) {
        throw std::invalid_argument(
            "spec: dim too small for signature-distinct prototypes");
      }
      std::vector<float> p(spec.dim);
      for (auto& v : p) {
        v = (rng() & 1) ? mag : -mag;
      }
      BitSignature sig = binarize(p);
      if (std::find(sigs.begin(), sigs.end(), sig) == sigs.end()) {
        sigs.push_back(std::move(sig));
        protos.push_back(std::move(p));
        break;
      }
    }
  }
  return protos;
}

inline void emit_point(const std::vector<float>& proto, double spread,
                       std::mt19937_64& rng, std::normal_distribution<double>& gauss,
                       float* out, std::size_t dim) {
  double sq = 0.0;
  for (std::size_t d = 0; d < dim; ++d) {
    const double v = static_cast<double>(proto[d]) + spread * gauss(rng);
    out[d] = static_cast<float>(v);
    sq += v * v;
  }
  const auto inv = static_cast<float>(1.0 / std::sqrt(sq));
  for (std::size_t d = 0; d < dim; ++d) {
    out[d] *= inv;
  }
}

}  // namespace detail

/// Deterministic for a fixed seed. Downstream rows cycle through the
/// downstream clusters; open-set rows are laid out cluster-major with one
/// label per row.
inline SyntheticData generate(const SyntheticSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.rng_seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const auto protos = detail::make_prototypes(spec, rng);

  std::vector<float> down(spec.downstream_count * spec.dim);
  for (std::size_t i = 0; i < spec.downstream_count; ++i) {
    const auto cluster = spec.downstream_clusters[i % spec.downstream_clusters.size()];
    detail::emit_point(protos[cluster], spec.cluster_spread, rng, gauss,
                       down.data() + i * spec.dim, spec.dim);
  }

  const std::size_t n_open = spec.num_clusters * spec.points_per_cluster;
  std::vector<float> open(n_open * spec.dim);
  std::vector<std::uint32_t> labels(n_open);
  std::size_t row = 0;
  for (std::size_t c = 0; c < spec.num_clusters; ++c) {
    for (std::size_t p = 0; p < spec.points_per_cluster; ++p, ++row) {
      labels[row] = static_cast<std::uint32_t>(c);
      detail::emit_point(protos[c], spec.cluster_spread, rng, gauss,
                         open.data() + row * spec.dim, spec.dim);
    }
  }

  return SyntheticData{
      EmbeddingMatrix(spec.downstream_count, spec.dim, std::move(down)),
      EmbeddingMatrix(n_open, spec.dim, std::move(open)),
      std::move(labels),
  };
}

}  // namespace bloomcoreset

#endif
