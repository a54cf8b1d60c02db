#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fkqkd {

class RngStream;

/// Packed bit string over GF(2).
///
/// Bit i lives in word i / 64 at position i % 64 (little-endian by bit
/// index). Bits past size() in the last word are always zero. The byte form
/// used on the wire and in files follows the same rule: bit i is bit
/// (i % 8) of byte i / 8.
class BitVector {
 public:
  BitVector() = default;
  explicit BitVector(std::size_t size, bool value = false);

  /// Parses a string of '0'/'1' characters; index 0 is the first character.
  static BitVector from_string(std::string_view bits);
  static BitVector from_bytes(std::span<const std::uint8_t> bytes, std::size_t size);
  static BitVector random(std::size_t size, RngStream& rng);

  std::size_t size() const { return size_; }
  bool empty() const { return size_ == 0; }

  bool get(std::size_t i) const { return ((words_[i >> 6] >> (i & 63)) & 1U) != 0; }
  bool operator[](std::size_t i) const { return get(i); }
  void set(std::size_t i, bool value);
  void flip(std::size_t i) { words_[i >> 6] ^= std::uint64_t{1} << (i & 63); }
  void push_back(bool value);

  std::size_t weight() const;
  bool parity() const;

  BitVector& operator^=(const BitVector& other);
  friend BitVector operator^(BitVector lhs, const BitVector& rhs) { return lhs ^= rhs; }
  friend bool operator==(const BitVector& lhs, const BitVector& rhs) = default;

  /// Number of positions where the two vectors differ.
  std::size_t distance(const BitVector& other) const;

  std::vector<std::uint8_t> to_bytes() const;
  std::string to_string() const;
  std::string to_hex() const;

  std::span<const std::uint64_t> words() const { return words_; }
  std::span<std::uint64_t> mutable_words() { return words_; }

 private:
  void check_same_size(const BitVector& other) const;
  void clear_tail();

  std::vector<std::uint64_t> words_;
  std::size_t size_ = 0;
};

}  // namespace fkqkd
