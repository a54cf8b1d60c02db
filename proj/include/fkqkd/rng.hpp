#pragma once

#include <cstdint>
#include <limits>
#include <random>

namespace fkqkd {

/// Who owns a random stream. Public streams are shared by both endpoints.
enum class Party : std::uint32_t { Alice = 1, Bob = 2, Public = 3, Channel = 4 };

/// What a random stream is used for.
enum class Purpose : std::uint32_t {
  Source = 1,     // Alice's raw bits and preparation bases
  Basis = 2,      // Bob's measurement bases
  Noise = 3,      // channel loss and bit flips
  Subsample = 4,  // choosing n of the X matches and k of the Z matches
  Winnow = 5,     // per-iteration permutation seeds
  Verify = 6,     // error-verification Toeplitz seed
  Amplify = 7,    // privacy-amplification Toeplitz seed
};

/// SplitMix64 output function; bijective 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed of the stream identified by (master, session, party, purpose):
///
///   s0 = mix64(master)
///   s1 = mix64(s0 ^ session)
///   s2 = mix64(s1 ^ (party << 32 | purpose))
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t session, Party party,
                                    Purpose purpose) {
  const std::uint64_t s0 = mix64(master);
  const std::uint64_t s1 = mix64(s0 ^ session);
  const std::uint64_t tag =
      (static_cast<std::uint64_t>(party) << 32) | static_cast<std::uint64_t>(purpose);
  return mix64(s1 ^ tag);
}

/// A reproducible random stream: std::mt19937_64 seeded with a single 64-bit
/// value, plus distribution helpers whose output is fixed by this file (the
/// standard distributions are implementation-defined).
class RngStream {
 public:
  using result_type = std::uint64_t;

  explicit RngStream(std::uint64_t seed) : engine_(seed) {}

  static RngStream derive(std::uint64_t master, std::uint64_t session, Party party,
                          Purpose purpose) {
    return RngStream(derive_seed(master, session, party, purpose));
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()() { return engine_(); }

  std::uint64_t next_u64() { return engine_(); }

  /// Top bit of the next output.
  bool bit() { return (engine_() >> 63) != 0; }

  /// (next >> 11) * 2^-53, in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// uniform() < p.
  bool bernoulli(double p) { return uniform() < p; }

  /// Uniform integer in [0, bound) by Lemire's multiply-and-reject method.
  std::uint64_t below(std::uint64_t bound);

 private:
  std::mt19937_64 engine_;
};

}  // namespace fkqkd
