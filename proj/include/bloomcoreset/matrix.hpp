#ifndef BLOOMCORESET_MATRIX_HPP
#define BLOOMCORESET_MATRIX_HPP

#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "bloomcoreset/errors.hpp"

namespace bloomcoreset {

static_assert(std::endian::native == std::endian::little,
              "BCF1 payloads are little-endian float32");

/// Row-major matrix of float32 embeddings. Immutable once loaded; safe for
/// concurrent reads.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;

  EmbeddingMatrix(std::size_t count, std::size_t dim, std::vector<float> data)
      : count_(count), dim_(dim), data_(std::move(data)) {
    if (dim_ == 0) {
      throw std::invalid_argument("EmbeddingMatrix: dim must be positive");
    }
    if (data_.size() != count_ * dim_) {
      throw std::invalid_argument("EmbeddingMatrix: data length " +
                                  std::to_string(data_.size()) +
                                  " does not match count*dim");
    }
  }

  std::size_t count() const { return count_; }
  std::size_t dim() const { return dim_; }

  std::span<const float> row(std::size_t i) const {
    return {data_.data() + i * dim_, dim_};
  }
  std::span<float> row(std::size_t i) {
    return {data_.data() + i * dim_, dim_};
  }

  const std::vector<float>& data() const { return data_; }

  friend bool operator==(const EmbeddingMatrix&, const EmbeddingMatrix&) = default;

 private:
  std::size_t count_ = 0;
  std::size_t dim_ = 0;
  std::vector<float> data_;
};

namespace detail {

/// Throws DataError naming the first row that holds a NaN/Inf entry.
inline void require_finite(const EmbeddingMatrix& m, const char* context) {
  for (std::size_t i = 0; i < m.count(); ++i) {
    for (float v : m.row(i)) {
      if (!std::isfinite(v)) {
        throw DataError(std::string(context) + ": non-finite entry in row " +
                        std::to_string(i));
      }
    }
  }
}

inline constexpr char kMatrixMagic[4] = {'B', 'C', 'F', '1'};

}  // namespace detail

// BCF1 file layout: magic "BCF1", u32le row count, u32le dim, then
// count*dim float32le values row-major. No padding, no footer.

inline EmbeddingMatrix load_matrix(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open " + path.string());
  }

  char magic[4];
  in.read(magic, 4);
  if (in.gcount() != 4 || std::memcmp(magic, detail::kMatrixMagic, 4) != 0) {
    throw FormatError(path.string() + ": not a BCF1 matrix file");
  }

  std::uint32_t count = 0;
  std::uint32_t dim = 0;
  in.read(reinterpret_cast<char*>(&count), 4);
  in.read(reinterpret_cast<char*>(&dim), 4);
  if (!in) {
    throw TruncationError(path.string() + ": header cut short");
  }
  if (dim == 0) {
    throw FormatError(path.string() + ": dim must be positive");
  }

  const std::size_t total = std::size_t{count} * dim;
  std::vector<float> data(total);
  in.read(reinterpret_cast<char*>(data.data()),
          static_cast<std::streamsize>(total * sizeof(float)));
  if (static_cast<std::size_t>(in.gcount()) != total * sizeof(float)) {
    throw TruncationError(path.string() + ": payload shorter than " +
                          std::to_string(count) + "x" + std::to_string(dim));
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw FormatError(path.string() + ": trailing bytes after payload");
  }

  EmbeddingMatrix m(count, dim, std::move(data));
  detail::require_finite(m, "load_matrix");
  return m;
}

inline void write_matrix(const EmbeddingMatrix& m,
                         const std::filesystem::path& path) {
  detail::require_finite(m, "write_matrix");
  if (m.count() > UINT32_MAX || m.dim() > UINT32_MAX) {
    throw DataError("write_matrix: matrix too large for BCF1 header");
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("cannot open " + path.string() + " for writing");
  }
  const auto count = static_cast<std::uint32_t>(m.count());
  const auto dim = static_cast<std::uint32_t>(m.dim());
  out.write(detail::kMatrixMagic, 4);
  out.write(reinterpret_cast<const char*>(&count), 4);
  out.write(reinterpret_cast<const char*>(&dim), 4);
  out.write(reinterpret_cast<const char*>(m.data().data()),
            static_cast<std::streamsize>(m.data().size() * sizeof(float)));
  if (!out) {
    throw IoError("write failed for " + path.string());
  }
}

/// Scales every row to unit L2 norm. Idempotent; preserves row directions,
/// so sign patterns (and thus signatures) are unchanged.
inline EmbeddingMatrix normalize(EmbeddingMatrix m) {
  for (std::size_t i = 0; i < m.count(); ++i) {
    auto r = m.row(i);
    double sq = 0.0;
    for (float v : r) {
      sq += static_cast<double>(v) * v;
    }
    if (sq == 0.0) {
      throw DataError("normalize: zero row " + std::to_string(i));
    }
    const auto inv = static_cast<float>(1.0 / std::sqrt(sq));
    for (float& v : r) {
      v *= inv;
    }
  }
  return m;
}

}  // namespace bloomcoreset

#endif
