#include "fkqkd/hamming.hpp"

#include <bit>
#include <stdexcept>

namespace fkqkd {

namespace {
bool is_extended(std::size_t length) { return std::has_single_bit(length); }
}  // namespace

bool is_supported_block_length(std::size_t length) {
  for (unsigned m = kMinSyndromeBits; m <= kMaxSyndromeBits; ++m) {
    const std::size_t full = std::size_t{1} << m;
    if (length == full || length == full - 1) return true;
  }
  return false;
}

unsigned syndrome_bits_for(std::size_t length) {
  if (!is_supported_block_length(length)) {
    throw std::invalid_argument("hamming: unsupported block length " + std::to_string(length));
  }
  return static_cast<unsigned>(std::bit_width(length)) - (is_extended(length) ? 1U : 0U);
}

unsigned hamming_syndrome(const BitVector& block) {
  syndrome_bits_for(block.size());
  const unsigned offset = is_extended(block.size()) ? 0U : 1U;
  unsigned syndrome = 0;
  for (std::size_t i = 0; i < block.size(); ++i) {
    if (block.get(i)) syndrome ^= static_cast<unsigned>(i) + offset;
  }
  return syndrome;
}

unsigned hamming_syndrome(const BitVector& bits, std::span<const std::uint32_t> positions) {
  unsigned syndrome = 0;
  for (std::size_t k = 0; k < positions.size(); ++k) {
    if (bits.get(positions[k])) syndrome ^= static_cast<unsigned>(k);
  }
  return syndrome;
}

HammingCorrection hamming_decode(const BitVector& difference) {
  HammingCorrection out{difference, 0, syndrome_bits_for(difference.size()), std::nullopt};
  out.syndrome = hamming_syndrome(difference);
  if (is_extended(difference.size())) {
    if (out.syndrome != 0 || difference.parity()) out.flipped = out.syndrome;
  } else if (out.syndrome != 0) {
    out.flipped = out.syndrome - 1;
  }
  if (out.flipped) out.corrected.flip(*out.flipped);
  return out;
}

}  // namespace fkqkd
