#include "fkqkd/bitvector.hpp"

#include <bit>
#include <stdexcept>

#include "fkqkd/rng.hpp"

namespace fkqkd {

namespace {
constexpr std::size_t words_for(std::size_t bits) { return (bits + 63) / 64; }
}  // namespace

BitVector::BitVector(std::size_t size, bool value)
    : words_(words_for(size), value ? ~std::uint64_t{0} : 0), size_(size) {
  clear_tail();
}

BitVector BitVector::from_string(std::string_view bits) {
  BitVector out(bits.size());
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i] == '1') {
      out.set(i, true);
    } else if (bits[i] != '0') {
      throw std::invalid_argument("BitVector::from_string: expected '0' or '1'");
    }
  }
  return out;
}

BitVector BitVector::from_bytes(std::span<const std::uint8_t> bytes, std::size_t size) {
  if (bytes.size() < (size + 7) / 8) {
    throw std::invalid_argument("BitVector::from_bytes: not enough bytes");
  }
  BitVector out(size);
  for (std::size_t i = 0; i < (size + 7) / 8; ++i) {
    out.words_[i / 8] |= static_cast<std::uint64_t>(bytes[i]) << (8 * (i % 8));
  }
  out.clear_tail();
  return out;
}

BitVector BitVector::random(std::size_t size, RngStream& rng) {
  BitVector out(size);
  for (auto& w : out.words_) w = rng.next_u64();
  out.clear_tail();
  return out;
}

void BitVector::set(std::size_t i, bool value) {
  const std::uint64_t mask = std::uint64_t{1} << (i & 63);
  if (value) {
    words_[i >> 6] |= mask;
  } else {
    words_[i >> 6] &= ~mask;
  }
}

void BitVector::push_back(bool value) {
  if ((size_ & 63) == 0) words_.push_back(0);
  ++size_;
  set(size_ - 1, value);
}

std::size_t BitVector::weight() const {
  std::size_t total = 0;
  for (auto w : words_) total += static_cast<std::size_t>(std::popcount(w));
  return total;
}

bool BitVector::parity() const {
  std::uint64_t acc = 0;
  for (auto w : words_) acc ^= w;
  return (std::popcount(acc) & 1) != 0;
}

BitVector& BitVector::operator^=(const BitVector& other) {
  check_same_size(other);
  for (std::size_t i = 0; i < words_.size(); ++i) words_[i] ^= other.words_[i];
  return *this;
}

std::size_t BitVector::distance(const BitVector& other) const {
  check_same_size(other);
  std::size_t total = 0;
  for (std::size_t i = 0; i < words_.size(); ++i) {
    total += static_cast<std::size_t>(std::popcount(words_[i] ^ other.words_[i]));
  }
  return total;
}

std::vector<std::uint8_t> BitVector::to_bytes() const {
  std::vector<std::uint8_t> out((size_ + 7) / 8);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<std::uint8_t>(words_[i / 8] >> (8 * (i % 8)));
  }
  return out;
}

std::string BitVector::to_string() const {
  std::string out(size_, '0');
  for (std::size_t i = 0; i < size_; ++i) {
    if (get(i)) out[i] = '1';
  }
  return out;
}

std::string BitVector::to_hex() const {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  for (auto byte : to_bytes()) {
    out.push_back(kDigits[byte >> 4]);
    out.push_back(kDigits[byte & 15]);
  }
  return out;
}

void BitVector::check_same_size(const BitVector& other) const {
  if (other.size_ != size_) throw std::invalid_argument("BitVector: length mismatch");
}

void BitVector::clear_tail() {
  if (const auto rem = size_ & 63; rem != 0) {
    words_.back() &= (std::uint64_t{1} << rem) - 1;
  }
}

}  // namespace fkqkd
