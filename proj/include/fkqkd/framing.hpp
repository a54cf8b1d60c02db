#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fkqkd/bitvector.hpp"

namespace fkqkd {

inline constexpr std::size_t kFramesPerPacket = 12;
inline constexpr std::size_t kHeaderSlots = 11;
inline constexpr std::size_t kPayloadSlots = 240;
inline constexpr std::size_t kSlotsPerFrame = kHeaderSlots + kPayloadSlots;
inline constexpr std::size_t kSlotsPerPacket = kFramesPerPacket * kSlotsPerFrame;
inline constexpr std::size_t kPacketKeyBits = 2880;
/// Payload slots that carry key bits; the rest of the packet is zero pairs.
inline constexpr std::size_t kUsedPayloadSlots = kPacketKeyBits / 2;

/// One slot, one byte on disk. Header slots are pulse durations; payload
/// slots carry a bit pair (first, second) as 0x10 | first << 1 | second.
enum class SlotSymbol : std::uint8_t {
  Short = 0x00,
  Long = 0x01,
  Pair00 = 0x10,
  Pair01 = 0x11,
  Pair10 = 0x12,
  Pair11 = 0x13,
};

constexpr SlotSymbol pair_symbol(bool first, bool second) {
  return static_cast<SlotSymbol>(0x10 | (first ? 2 : 0) | (second ? 1 : 0));
}

enum class FramingErrorKind { HeaderPattern, FrameDiscontinuity, Truncated, InvalidPayload };

class FramingError : public std::runtime_error {
 public:
  FramingError(FramingErrorKind kind, std::size_t frame, const std::string& what)
      : std::runtime_error(what), kind_(kind), frame_(frame) {}
  FramingErrorKind kind() const { return kind_; }
  /// Index of the offending frame within the packet (0 for Truncated).
  std::size_t frame() const { return frame_; }

 private:
  FramingErrorKind kind_;
  std::size_t frame_;
};

/// Header of frame f: 1 0 0 0 0 0, then f in four bits most significant
/// first, then 1 (Long = 1, Short = 0).
std::vector<SlotSymbol> frame_header(std::size_t frame);

/// 12 frames of 11 header and 240 payload slots for exactly 2880 key bits.
/// Key bits 2i and 2i+1 go to payload slot i (counted across frames); payload
/// slots from 1440 on carry zero pairs.
std::vector<SlotSymbol> encode_packet(const BitVector& key_bits);

struct DecodedPacket {
  BitVector key_bits;
  std::vector<std::size_t> frame_numbers;
};

/// Inverse of encode_packet. Throws FramingError.
DecodedPacket decode_packet(std::span<const SlotSymbol> slots);

/// Any key length: ceil(len / 2880) packets, the last one zero-filled.
std::vector<SlotSymbol> encode_stream(const BitVector& key_bits);
/// Concatenated key bits of every packet (a multiple of 2880).
BitVector decode_stream(std::span<const SlotSymbol> slots);

std::vector<std::uint8_t> to_bytes(std::span<const SlotSymbol> slots);
std::vector<SlotSymbol> slots_from_bytes(std::span<const std::uint8_t> bytes);

}  // namespace fkqkd
