#ifndef BLOOMCORESET_BIT_SIGNATURE_HPP
#define BLOOMCORESET_BIT_SIGNATURE_HPP

#include <cassert>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace bloomcoreset {

/// Packed sign pattern of an embedding: bit j is 0 where component j is
/// strictly negative and 1 otherwise (zero counts as positive). Bits are
/// packed LSB-first, bit j at byte j/8 position j%8; pad bits past dim are
/// always zero, so the byte image is a canonical hash input.
class BitSignature {
 public:
  BitSignature() = default;

  explicit BitSignature(std::size_t dim) : dim_(dim), bytes_((dim + 7) / 8, 0) {}

  std::size_t dim() const { return dim_; }

  std::span<const std::uint8_t> bytes() const { return bytes_; }

  bool bit(std::size_t j) const {
    assert(j < dim_);
    return (bytes_[j >> 3] >> (j & 7)) & 1;
  }

  void set_bit(std::size_t j) {
    assert(j < dim_);
    bytes_[j >> 3] |= static_cast<std::uint8_t>(1u << (j & 7));
  }

  friend bool operator==(const BitSignature&, const BitSignature&) = default;

 private:
  std::size_t dim_ = 0;
  std::vector<std::uint8_t> bytes_;
};

/// where(z < 0, 0, 1) over one embedding row.
inline BitSignature binarize(std::span<const float> embedding) {
  BitSignature sig(embedding.size());
  for (std::size_t j = 0; j < embedding.size(); ++j) {
    if (!(embedding[j] < 0.0f)) {
      sig.set_bit(j);
    }
  }
  return sig;
}

}  // namespace bloomcoreset

#endif
