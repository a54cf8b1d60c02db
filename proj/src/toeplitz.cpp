#include "fkqkd/toeplitz.hpp"

#include <bit>
#include <stdexcept>
#include <vector>

#include "fkqkd/rng.hpp"

namespace fkqkd {

ToeplitzSeed::ToeplitzSeed(BitVector diagonal, std::size_t out_len, std::size_t in_len)
    : diagonal_(std::move(diagonal)), out_len_(out_len), in_len_(in_len) {
  if (out_len == 0 || in_len == 0) {
    throw std::invalid_argument("ToeplitzSeed: dimensions must be positive");
  }
  if (diagonal_.size() != out_len + in_len - 1) {
    throw std::invalid_argument("ToeplitzSeed: diagonal length must be out_len + in_len - 1");
  }
}

ToeplitzSeed ToeplitzSeed::random(std::size_t out_len, std::size_t in_len, RngStream& rng) {
  if (out_len == 0 || in_len == 0) {
    throw std::invalid_argument("ToeplitzSeed: dimensions must be positive");
  }
  return {BitVector::random(out_len + in_len - 1, rng), out_len, in_len};
}

ToeplitzSeed ToeplitzSeed::identity(std::size_t len) {
  BitVector diagonal(2 * len - 1);
  diagonal.set(len - 1, true);
  return {std::move(diagonal), len, len};
}

// Row i of the matrix, read right to left, is diagonal[i .. i + n - 1]. So
// with r = reverse(input), output bit i = parity(diagonal[i .. i+n-1] & r).
BitVector toeplitz_hash(const ToeplitzSeed& seed, const BitVector& input) {
  const std::size_t n = seed.in_len();
  if (input.size() != n) throw std::invalid_argument("toeplitz_hash: input length mismatch");

  const std::size_t in_words = (n + 63) / 64;
  std::vector<std::uint64_t> reversed(in_words, 0);
  for (std::size_t j = 0; j < n; ++j) {
    if (input.get(j)) {
      const std::size_t r = n - 1 - j;
      reversed[r >> 6] |= std::uint64_t{1} << (r & 63);
    }
  }

  // One spare zero word so the two-word window read never runs off the end.
  const auto diag_span = seed.diagonal().words();
  std::vector<std::uint64_t> diag(diag_span.begin(), diag_span.end());
  diag.resize(diag.size() + in_words + 1, 0);

  BitVector out(seed.out_len());
  for (std::size_t i = 0; i < seed.out_len(); ++i) {
    const std::size_t base = i >> 6;
    const unsigned shift = i & 63;
    std::uint64_t acc = 0;
    if (shift == 0) {
      for (std::size_t t = 0; t < in_words; ++t) acc ^= diag[base + t] & reversed[t];
    } else {
      for (std::size_t t = 0; t < in_words; ++t) {
        const std::uint64_t window =
            (diag[base + t] >> shift) | (diag[base + t + 1] << (64 - shift));
        acc ^= window & reversed[t];
      }
    }
    if (std::popcount(acc) & 1) out.set(i, true);
  }
  return out;
}

}  // namespace fkqkd
