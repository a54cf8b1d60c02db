#include "fkqkd/framing.hpp"

#include <algorithm>

namespace fkqkd {

namespace {

constexpr bool kFixedHeader[kHeaderSlots] = {true, false, false, false, false, false,
                                             false, false, false, false, true};
constexpr std::size_t kFrameNumberStart = 6;
constexpr std::size_t kFrameNumberBits = 4;

bool is_pair(SlotSymbol s) {
  const auto v = static_cast<std::uint8_t>(s);
  return v >= 0x10 && v <= 0x13;
}

std::string frame_label(std::size_t frame) { return "frame " + std::to_string(frame); }

}  // namespace

std::vector<SlotSymbol> frame_header(std::size_t frame) {
  if (frame >= kFramesPerPacket) throw std::out_of_range("frame_header: frame index past 11");
  std::vector<SlotSymbol> out(kHeaderSlots);
  for (std::size_t i = 0; i < kHeaderSlots; ++i) {
    bool symbol = kFixedHeader[i];
    if (i >= kFrameNumberStart && i < kFrameNumberStart + kFrameNumberBits) {
      symbol = ((frame >> (kFrameNumberStart + kFrameNumberBits - 1 - i)) & 1U) != 0;
    }
    out[i] = symbol ? SlotSymbol::Long : SlotSymbol::Short;
  }
  return out;
}

std::vector<SlotSymbol> encode_packet(const BitVector& key_bits) {
  if (key_bits.size() != kPacketKeyBits) {
    throw std::invalid_argument("encode_packet: a packet holds exactly 2880 key bits");
  }
  std::vector<SlotSymbol> out;
  out.reserve(kSlotsPerPacket);
  for (std::size_t f = 0; f < kFramesPerPacket; ++f) {
    const auto header = frame_header(f);
    out.insert(out.end(), header.begin(), header.end());
    for (std::size_t s = 0; s < kPayloadSlots; ++s) {
      const std::size_t slot = f * kPayloadSlots + s;
      if (slot < kUsedPayloadSlots) {
        out.push_back(pair_symbol(key_bits.get(2 * slot), key_bits.get(2 * slot + 1)));
      } else {
        out.push_back(SlotSymbol::Pair00);
      }
    }
  }
  return out;
}

DecodedPacket decode_packet(std::span<const SlotSymbol> slots) {
  if (slots.size() < kSlotsPerPacket) {
    throw FramingError(FramingErrorKind::Truncated, 0,
                       "decode_packet: stream ends after " + std::to_string(slots.size()) +
                           " of 3012 slots");
  }
  if (slots.size() > kSlotsPerPacket) {
    throw std::invalid_argument("decode_packet: more than one packet; use decode_stream");
  }
  DecodedPacket out{BitVector(kPacketKeyBits), {}};
  for (std::size_t f = 0; f < kFramesPerPacket; ++f) {
    const auto frame = slots.subspan(f * kSlotsPerFrame, kSlotsPerFrame);
    std::size_t number = 0;
    for (std::size_t i = 0; i < kHeaderSlots; ++i) {
      const SlotSymbol s = frame[i];
      if (s != SlotSymbol::Short && s != SlotSymbol::Long) {
        throw FramingError(FramingErrorKind::HeaderPattern, f,
                           frame_label(f) + ": header slot " + std::to_string(i) +
                               " is not a pulse symbol");
      }
      const bool bit = s == SlotSymbol::Long;
      if (i >= kFrameNumberStart && i < kFrameNumberStart + kFrameNumberBits) {
        number = (number << 1) | (bit ? 1U : 0U);
      } else if (bit != kFixedHeader[i]) {
        throw FramingError(FramingErrorKind::HeaderPattern, f,
                           frame_label(f) + ": header does not match 100000xxxx1");
      }
    }
    if (number != f) {
      throw FramingError(FramingErrorKind::FrameDiscontinuity, f,
                         frame_label(f) + ": carries frame number " + std::to_string(number));
    }
    out.frame_numbers.push_back(number);
    for (std::size_t s = 0; s < kPayloadSlots; ++s) {
      const SlotSymbol symbol = frame[kHeaderSlots + s];
      if (!is_pair(symbol)) {
        throw FramingError(FramingErrorKind::InvalidPayload, f,
                           frame_label(f) + ": payload slot " + std::to_string(s) +
                               " is not a bit pair");
      }
      const auto v = static_cast<std::uint8_t>(symbol);
      const std::size_t slot = f * kPayloadSlots + s;
      if (slot < kUsedPayloadSlots) {
        out.key_bits.set(2 * slot, (v & 2U) != 0);
        out.key_bits.set(2 * slot + 1, (v & 1U) != 0);
      } else if (symbol != SlotSymbol::Pair00) {
        throw FramingError(FramingErrorKind::InvalidPayload, f,
                           frame_label(f) + ": padding slot " + std::to_string(s) +
                               " is not zero");
      }
    }
  }
  return out;
}

std::vector<SlotSymbol> encode_stream(const BitVector& key_bits) {
  const std::size_t packets =
      std::max<std::size_t>(1, (key_bits.size() + kPacketKeyBits - 1) / kPacketKeyBits);
  std::vector<SlotSymbol> out;
  out.reserve(packets * kSlotsPerPacket);
  for (std::size_t p = 0; p < packets; ++p) {
    BitVector chunk(kPacketKeyBits);
    for (std::size_t i = 0; i < kPacketKeyBits && p * kPacketKeyBits + i < key_bits.size(); ++i) {
      chunk.set(i, key_bits.get(p * kPacketKeyBits + i));
    }
    const auto slots = encode_packet(chunk);
    out.insert(out.end(), slots.begin(), slots.end());
  }
  return out;
}

BitVector decode_stream(std::span<const SlotSymbol> slots) {
  if (slots.empty() || slots.size() % kSlotsPerPacket != 0) {
    throw FramingError(FramingErrorKind::Truncated, 0,
                       "decode_stream: slot count is not a whole number of packets");
  }
  BitVector out;
  for (std::size_t p = 0; p < slots.size() / kSlotsPerPacket; ++p) {
    const auto packet = decode_packet(slots.subspan(p * kSlotsPerPacket, kSlotsPerPacket));
    for (std::size_t i = 0; i < kPacketKeyBits; ++i) out.push_back(packet.key_bits.get(i));
  }
  return out;
}

std::vector<std::uint8_t> to_bytes(std::span<const SlotSymbol> slots) {
  std::vector<std::uint8_t> out(slots.size());
  for (std::size_t i = 0; i < slots.size(); ++i) out[i] = static_cast<std::uint8_t>(slots[i]);
  return out;
}

std::vector<SlotSymbol> slots_from_bytes(std::span<const std::uint8_t> bytes) {
  std::vector<SlotSymbol> out(bytes.size());
  for (std::size_t i = 0; i < bytes.size(); ++i) out[i] = static_cast<SlotSymbol>(bytes[i]);
  return out;
}

}  // namespace fkqkd
