#ifndef BLOOMCORESET_COUNTING_BLOOM_FILTER_HPP
#define BLOOMCORESET_COUNTING_BLOOM_FILTER_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "bloomcoreset/bit_signature.hpp"
#include "bloomcoreset/errors.hpp"
#include "bloomcoreset/murmur3.hpp"

namespace bloomcoreset {

/// Counter array size for a downstream set of the given row count:
/// max(1, round(10000 * n / 3500)), rounding half away from zero.
inline std::size_t sized_for(std::size_t downstream_count) {
  const double m = 10000.0 * static_cast<double>(downstream_count) / 3500.0;
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(m)));
}

/// A family of k murmur3 x86-32 variants, one per seed. Deterministic:
/// the same signature and seed map to the same index forever.
class HashFamily {
 public:
  static constexpr std::size_t kDefaultSize = 10;

  HashFamily() : HashFamily(default_seeds(kDefaultSize)) {}

  explicit HashFamily(std::vector<std::uint32_t> seeds)
      : seeds_(std::move(seeds)) {
    if (seeds_.empty()) {
      throw std::invalid_argument("HashFamily: need at least one seed");
    }
    std::unordered_set<std::uint32_t> unique(seeds_.begin(), seeds_.end());
    if (unique.size() != seeds_.size()) {
      throw std::invalid_argument("HashFamily: seeds must be pairwise distinct");
    }
  }

  static std::vector<std::uint32_t> default_seeds(std::size_t k) {
    std::vector<std::uint32_t> s(k);
    std::iota(s.begin(), s.end(), 0u);
    return s;
  }

  std::size_t size() const { return seeds_.size(); }
  std::span<const std::uint32_t> seeds() const { return seeds_; }

  /// Index of hash i for a packed signature, reduced modulo m.
  std::size_t index(const BitSignature& sig, std::size_t i,
                    std::size_t m) const {
    const auto bytes = sig.bytes();
    return murmur3_x86_32(bytes.data(), bytes.size(), seeds_[i]) % m;
  }

  friend bool operator==(const HashFamily&, const HashFamily&) = default;

 private:
  std::vector<std::uint32_t> seeds_;
};

struct FilterStats {
  std::size_t size = 0;        // m
  std::size_t num_hashes = 0;  // k
  std::uint64_t inserted = 0;  // n, update() calls
  std::size_t occupied = 0;    // nonzero counters
  double fpr_estimate = 0.0;   // (occupied/m)^k
};

/// Counting Bloom filter over bit signatures. Counters saturate at
/// 2^counter_bits - 1 instead of wrapping; there is no removal, so a
/// signature that was ever inserted always checks true.
///
/// Construction is single-writer. Once updates stop, check / frequency /
/// stats are pure reads and safe from any number of threads.
class CountingBloomFilter {
 public:
  CountingBloomFilter(std::size_t size, std::size_t dim,
                      HashFamily family = HashFamily(),
                      unsigned counter_bits = 32)
      : size_(size),
        dim_(dim),
        counter_bits_(counter_bits),
        family_(std::move(family)),
        counters_(size, 0) {
    if (size_ == 0) {
      throw std::invalid_argument("CountingBloomFilter: size must be positive");
    }
    if (dim_ == 0) {
      throw std::invalid_argument("CountingBloomFilter: dim must be positive");
    }
    if (counter_bits_ == 0 || counter_bits_ > 32) {
      throw std::invalid_argument(
          "CountingBloomFilter: counter_bits must be in [1, 32]");
    }
    counter_max_ = counter_bits_ == 32
                       ? UINT32_MAX
                       : (std::uint32_t{1} << counter_bits_) - 1;
  }

  std::size_t size() const { return size_; }
  std::size_t dim() const { return dim_; }
  unsigned counter_bits() const { return counter_bits_; }
  std::uint64_t inserted() const { return inserted_; }
  const HashFamily& family() const { return family_; }
  std::size_t num_hashes() const { return family_.size(); }
  std::span<const std::uint32_t> counters() const { return counters_; }

  /// Increments the counter at each of the k hash positions (saturating).
  /// A position hit by more than one hash of the same signature is
  /// incremented once per hit.
  void update(const BitSignature& sig) {
    require_dim(sig);
    for (std::size_t i = 0; i < family_.size(); ++i) {
      std::uint32_t& c = counters_[family_.index(sig, i, size_)];
      if (c < counter_max_) {
        ++c;
      }
    }
    ++inserted_;
  }

  /// True iff every hash position of the signature is nonzero. Never false
  /// for a signature that was inserted.
  bool check(const BitSignature& sig) const {
    require_dim(sig);
    for (std::size_t i = 0; i < family_.size(); ++i) {
      if (counters_[family_.index(sig, i, size_)] == 0) {
        return false;
      }
    }
    return true;
  }

  /// Minimum counter across the signature's hash positions: an upper bound
  /// on how many times that signature was inserted (exact when none of its
  /// positions collided with other inserts or saturated).
  std::uint32_t estimate_frequency(const BitSignature& sig) const {
    require_dim(sig);
    std::uint32_t min = counter_max_;
    for (std::size_t i = 0; i < family_.size(); ++i) {
      min = std::min(min, counters_[family_.index(sig, i, size_)]);
    }
    return min;
  }

  FilterStats stats() const {
    FilterStats s;
    s.size = size_;
    s.num_hashes = family_.size();
    s.inserted = inserted_;
    s.occupied = static_cast<std::size_t>(
        std::count_if(counters_.begin(), counters_.end(),
                      [](std::uint32_t c) { return c != 0; }));
    s.fpr_estimate = std::pow(
        static_cast<double>(s.occupied) / static_cast<double>(size_),
        static_cast<double>(s.num_hashes));
    return s;
  }

  // CBF1 stream layout: magic "CBF1", u32le version=1, u32le m, u32le k,
  // u32le counter_bits, u32le dim, k x u32le seeds, u64le inserted,
  // m x u32le counters.

  std::vector<std::uint8_t> serialize() const {
    if (size_ > UINT32_MAX || dim_ > UINT32_MAX || family_.size() > UINT32_MAX) {
      throw DataError("filter too large for CBF1 header");
    }
    std::vector<std::uint8_t> out;
    out.reserve(28 + 4 * family_.size() + 4 * size_);
    auto put_u32 = [&out](std::uint32_t v) {
      for (int b = 0; b < 4; ++b) {
        out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
      }
    };
    for (char c : {'C', 'B', 'F', '1'}) {
      out.push_back(static_cast<std::uint8_t>(c));
    }
    put_u32(1);
    put_u32(static_cast<std::uint32_t>(size_));
    put_u32(static_cast<std::uint32_t>(family_.size()));
    put_u32(counter_bits_);
    put_u32(static_cast<std::uint32_t>(dim_));
    for (std::uint32_t s : family_.seeds()) {
      put_u32(s);
    }
    for (int b = 0; b < 8; ++b) {
      out.push_back(static_cast<std::uint8_t>(inserted_ >> (8 * b)));
    }
    for (std::uint32_t c : counters_) {
      put_u32(c);
    }
    return out;
  }

  static CountingBloomFilter deserialize(std::span<const std::uint8_t> bytes) {
    std::size_t pos = 0;
    auto need = [&](std::size_t n) {
      if (bytes.size() - pos < n) {
        throw FormatError("CBF1 stream truncated");
      }
    };
    auto get_u32 = [&]() {
      need(4);
      std::uint32_t v = 0;
      for (int b = 0; b < 4; ++b) {
        v |= static_cast<std::uint32_t>(bytes[pos + b]) << (8 * b);
      }
      pos += 4;
      return v;
    };

    need(4);
    if (bytes[0] != 0x43 || bytes[1] != 0x42 || bytes[2] != 0x46 ||
        bytes[3] != 0x31) {
      throw FormatError("not a CBF1 filter stream");
    }
    pos = 4;
    const std::uint32_t version = get_u32();
    if (version != 1) {
      throw FormatError("unsupported CBF1 version " + std::to_string(version));
    }
    const std::uint32_t m = get_u32();
    const std::uint32_t k = get_u32();
    const std::uint32_t counter_bits = get_u32();
    const std::uint32_t dim = get_u32();
    if (m == 0 || k == 0 || dim == 0 || counter_bits == 0 || counter_bits > 32) {
      throw FormatError("CBF1 header fields out of range");
    }
    std::vector<std::uint32_t> seeds(k);
    for (auto& s : seeds) {
      s = get_u32();
    }
    need(8);
    std::uint64_t inserted = 0;
    for (int b = 0; b < 8; ++b) {
      inserted |= static_cast<std::uint64_t>(bytes[pos + b]) << (8 * b);
    }
    pos += 8;

    CountingBloomFilter f = [&] {
      try {
        return CountingBloomFilter(m, dim, HashFamily(std::move(seeds)),
                                   counter_bits);
      } catch (const std::invalid_argument& e) {
        throw FormatError(std::string("CBF1 header invalid: ") + e.what());
      }
    }();
    f.inserted_ = inserted;
    for (auto& c : f.counters_) {
      c = get_u32();
    }
    if (pos != bytes.size()) {
      throw FormatError("CBF1 stream has trailing bytes");
    }
    for (std::uint32_t c : f.counters_) {
      if (c > f.counter_max_) {
        throw FormatError("CBF1 counter exceeds counter_bits range");
      }
    }
    return f;
  }

  void save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw IoError("cannot open " + path.string() + " for writing");
    }
    const auto bytes = serialize();
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) {
      throw IoError("write failed for " + path.string());
    }
  }

  static CountingBloomFilter load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
      throw IoError("cannot open " + path.string());
    }
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return deserialize(bytes);
  }

  friend bool operator==(const CountingBloomFilter&,
                         const CountingBloomFilter&) = default;

 private:
  void require_dim(const BitSignature& sig) const {
    if (sig.dim() != dim_) {
      throw DimError("signature dim " + std::to_string(sig.dim()) +
                     " does not match filter dim " + std::to_string(dim_));
    }
  }

  std::size_t size_;
  std::size_t dim_;
  unsigned counter_bits_;
  std::uint32_t counter_max_;
  HashFamily family_;
  std::uint64_t inserted_ = 0;
  std::vector<std::uint32_t> counters_;
};

}  // namespace bloomcoreset

#endif
