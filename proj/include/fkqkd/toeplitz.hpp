#pragma once

#include <cstddef>

#include "fkqkd/bitvector.hpp"

namespace fkqkd {

class RngStream;

/// An out_len x in_len Toeplitz matrix over GF(2), stored as its
/// out_len + in_len - 1 diagonals. Entry (i, j) is diagonal[i - j + in_len - 1].
class ToeplitzSeed {
 public:
  ToeplitzSeed(BitVector diagonal, std::size_t out_len, std::size_t in_len);

  static ToeplitzSeed random(std::size_t out_len, std::size_t in_len, RngStream& rng);
  /// Square identity matrix: a single 1 on the main diagonal.
  static ToeplitzSeed identity(std::size_t len);

  const BitVector& diagonal() const { return diagonal_; }
  std::size_t out_len() const { return out_len_; }
  std::size_t in_len() const { return in_len_; }
  bool entry(std::size_t row, std::size_t col) const {
    return diagonal_.get(row + in_len_ - 1 - col);
  }

 private:
  BitVector diagonal_;
  std::size_t out_len_;
  std::size_t in_len_;
};

/// GF(2) product seed * input. Linear in input.
BitVector toeplitz_hash(const ToeplitzSeed& seed, const BitVector& input);

}  // namespace fkqkd
