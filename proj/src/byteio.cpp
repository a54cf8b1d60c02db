#include "fkqkd/byteio.hpp"

#include <bit>

namespace fkqkd {

void ByteWriter::f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

void ByteWriter::bits(const BitVector& v) {
  u32(static_cast<std::uint32_t>(v.size()));
  const auto packed = v.to_bytes();
  bytes(packed);
}

double ByteReader::f64() { return std::bit_cast<double>(u64()); }

std::span<const std::uint8_t> ByteReader::bytes(std::size_t count) {
  if (remaining() < count) throw DecodeError("truncated buffer");
  auto out = data_.subspan(pos_, count);
  pos_ += count;
  return out;
}

BitVector ByteReader::bits() {
  const std::size_t size = u32();
  return BitVector::from_bytes(bytes((size + 7) / 8), size);
}

std::uint64_t ByteReader::get(int width) {
  if (remaining() < static_cast<std::size_t>(width)) throw DecodeError("truncated buffer");
  std::uint64_t v = 0;
  for (int i = 0; i < width; ++i) v = (v << 8) | data_[pos_++];
  return v;
}

}  // namespace fkqkd
