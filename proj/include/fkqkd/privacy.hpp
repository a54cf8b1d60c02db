#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>

#include "fkqkd/bitvector.hpp"
#include "fkqkd/rng.hpp"
#include "fkqkd/toeplitz.hpp"

namespace fkqkd {

/// ceil(log2(fail_budget / eps_cor)), at least 1.
std::size_t verification_hash_length(double fail_budget, double eps_cor);

struct VerificationTag {
  ToeplitzSeed seed;
  BitVector tag;

  std::size_t hash_len() const { return tag.size(); }
};

/// Hashes key with a fresh Toeplitz seed of hash_len rows drawn from
/// public_rng.
VerificationTag make_verification_tag(const BitVector& key, std::size_t hash_len,
                                      RngStream& public_rng);

/// True iff key hashes to the tag under the tag's seed.
bool tag_matches(const VerificationTag& tag, const BitVector& key);

enum class VerifyOutcome { Match, Abort };

struct VerifyResult {
  VerifyOutcome outcome;
  VerificationTag tag;
};

/// Alice's tag over reference, checked against Bob's reconciled key.
VerifyResult verify(const BitVector& reference, const BitVector& reconciled,
                    std::size_t hash_len, RngStream& public_rng);

/// Compresses key to length bits with a Toeplitz seed drawn from public_rng.
/// Throws std::invalid_argument unless 0 < length <= key.size().
BitVector privacy_amplify(const BitVector& key, std::size_t length, RngStream& public_rng);

enum class SecrecyMode { General, Pragmatic };

std::string to_string(SecrecyMode mode);  // "GS" / "PS"
SecrecyMode parse_secrecy_mode(const std::string& text);

/// A distilled key together with the parameters it was produced for.
struct ExportedKey {
  BitVector bits;
  SecrecyMode mode = SecrecyMode::General;
  double epsilon = 0.0;  // eps_sec for GS, delta_sec for PS
};

/// Text form:
///   length=<bits>
///   mode=GS|PS
///   epsilon=<value>
///   <hex of the packed bytes>
void write_key(std::ostream& out, const ExportedKey& key);
ExportedKey read_key(std::istream& in);

}  // namespace fkqkd
