#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>

#include "fkqkd/bitvector.hpp"

namespace fkqkd {

inline constexpr unsigned kMinSyndromeBits = 3;  // block 8
inline constexpr unsigned kMaxSyndromeBits = 8;  // block 256

/// Block lengths 2^m (extended form, index 0 included) and 2^m - 1 (plain
/// form, positions labelled 1..2^m-1) for m in [3, 8].
bool is_supported_block_length(std::size_t length);

/// m for a supported block length; throws std::invalid_argument otherwise.
unsigned syndrome_bits_for(std::size_t length);

/// XOR of the labels of the set bits of a block. Labels are the bit index
/// for 2^m blocks and bit index + 1 for 2^m - 1 blocks.
unsigned hamming_syndrome(const BitVector& block);

/// Syndrome of the block whose k-th bit is bits[positions[k]] (label k).
/// Used for permuted Winnow blocks; a short final block behaves as if padded
/// with zeros.
unsigned hamming_syndrome(const BitVector& bits, std::span<const std::uint32_t> positions);

struct HammingCorrection {
  BitVector corrected;
  unsigned syndrome = 0;
  unsigned syndrome_bits = 0;
  std::optional<std::size_t> flipped;
};

/// Decodes a difference block (own block XOR the peer's block).
///
/// For 2^m blocks the bit labelled by the syndrome is flipped unless the
/// syndrome is zero and the block parity is even; for 2^m - 1 blocks a
/// non-zero syndrome s flips position s - 1. At most one bit changes.
HammingCorrection hamming_decode(const BitVector& difference);

}  // namespace fkqkd
