#include "fkqkd/privacy.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "fkqkd/byteio.hpp"

namespace fkqkd {

std::size_t verification_hash_length(double fail_budget, double eps_cor) {
  if (!(fail_budget > 0.0 && fail_budget < 1.0 && eps_cor > 0.0 && eps_cor < 1.0)) {
    throw std::domain_error("verification_hash_length: budgets must lie in (0, 1)");
  }
  // The small slack keeps exact powers of two from rounding up a step.
  const double bits = std::ceil(std::log2(fail_budget / eps_cor) - 1e-9);
  return bits < 1.0 ? 1 : static_cast<std::size_t>(bits);
}

VerificationTag make_verification_tag(const BitVector& key, std::size_t hash_len,
                                      RngStream& public_rng) {
  if (key.empty()) throw std::invalid_argument("make_verification_tag: empty key");
  ToeplitzSeed seed = ToeplitzSeed::random(hash_len, key.size(), public_rng);
  BitVector tag = toeplitz_hash(seed, key);
  return {std::move(seed), std::move(tag)};
}

bool tag_matches(const VerificationTag& tag, const BitVector& key) {
  return toeplitz_hash(tag.seed, key) == tag.tag;
}

VerifyResult verify(const BitVector& reference, const BitVector& reconciled,
                    std::size_t hash_len, RngStream& public_rng) {
  if (reference.size() != reconciled.size()) {
    throw std::invalid_argument("verify: key lengths differ");
  }
  VerificationTag tag = make_verification_tag(reference, hash_len, public_rng);
  const auto outcome = tag_matches(tag, reconciled) ? VerifyOutcome::Match : VerifyOutcome::Abort;
  return {outcome, std::move(tag)};
}

BitVector privacy_amplify(const BitVector& key, std::size_t length, RngStream& public_rng) {
  if (length == 0 || length > key.size()) {
    throw std::invalid_argument("privacy_amplify: output length must be in [1, key length]");
  }
  return toeplitz_hash(ToeplitzSeed::random(length, key.size(), public_rng), key);
}

std::string to_string(SecrecyMode mode) { return mode == SecrecyMode::General ? "GS" : "PS"; }

SecrecyMode parse_secrecy_mode(const std::string& text) {
  if (text == "GS" || text == "gs") return SecrecyMode::General;
  if (text == "PS" || text == "ps") return SecrecyMode::Pragmatic;
  throw std::invalid_argument("unknown secrecy mode '" + text + "'");
}

void write_key(std::ostream& out, const ExportedKey& key) {
  out << "length=" << key.bits.size() << '\n'
      << "mode=" << to_string(key.mode) << '\n';
  out.precision(17);
  out << "epsilon=" << key.epsilon << '\n' << key.bits.to_hex() << '\n';
}

namespace {

std::string header_value(std::istream& in, const std::string& name) {
  std::string line;
  if (!std::getline(in, line) || line.rfind(name + "=", 0) != 0) {
    throw DecodeError("key file: expected '" + name + "=' line");
  }
  return line.substr(name.size() + 1);
}

int hex_digit(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  throw DecodeError("key file: invalid hex digit");
}

}  // namespace

ExportedKey read_key(std::istream& in) {
  ExportedKey key;
  const std::size_t length = std::stoull(header_value(in, "length"));
  key.mode = parse_secrecy_mode(header_value(in, "mode"));
  key.epsilon = std::stod(header_value(in, "epsilon"));
  std::string hex;
  std::getline(in, hex);
  if (hex.size() != 2 * ((length + 7) / 8)) throw DecodeError("key file: hex length mismatch");
  std::vector<std::uint8_t> bytes(hex.size() / 2);
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    bytes[i] = static_cast<std::uint8_t>(hex_digit(hex[2 * i]) << 4 | hex_digit(hex[2 * i + 1]));
  }
  key.bits = BitVector::from_bytes(bytes, length);
  return key;
}

}  // namespace fkqkd
