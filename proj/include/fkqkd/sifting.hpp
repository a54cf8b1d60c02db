#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "fkqkd/bitvector.hpp"
#include "fkqkd/channel.hpp"
#include "fkqkd/numerics.hpp"
#include "fkqkd/rng.hpp"

namespace fkqkd {

/// Sifted key length n, estimation length k, basis probabilities and the
/// two error thresholds.
struct ProtocolParams {
  std::int64_t n = 0;
  std::int64_t k = 0;
  Probability p_x{0.5};
  Probability p_z{0.5};
  Probability q_tol_z{0.05};
  Probability q_max_x{0.05};

  /// Basis probabilities from the quotas: p_X = 1 / (1 + sqrt(k/n)).
  static ProtocolParams from_quota(std::int64_t n, std::int64_t k, double q_tol_z,
                                   double q_max_x);
  /// k = max(1, round(n (p_Z / p_X)^2)) with p_Z kept as given.
  static ProtocolParams from_basis_probability(std::int64_t n, double p_z, double q_tol_z,
                                               double q_max_x);

  /// Throws std::invalid_argument when an invariant is broken. The quota
  /// relation is checked up to the rounding of k.
  void validate() const;
};

/// (p_X, p_Z) = (1 / (1 + sqrt(k/n)), 1 - p_X).
std::pair<double, double> basis_probs_from_quota(std::int64_t n, std::int64_t k);

/// Inverse of the quota relation: round(n (p_Z / (1 - p_Z))^2), at least 1.
std::int64_t quota_from_basis_probability(std::int64_t n, double p_z);

/// Output of the quantum phase and sifting for one session.
struct SessionRecord {
  BitVector x;        // Alice's sifted key
  BitVector x_prime;  // Bob's sifted key
  BitVector z;        // Alice's estimation bits
  BitVector z_prime;  // Bob's estimation bits
  std::uint64_t sent_count = 0;
  std::uint64_t received_count = 0;
  std::uint64_t x_match_count = 0;  // matching-X detections before subsampling
  std::uint64_t z_match_count = 0;
  double empirical_q_z = 0.0;

  std::size_t estimation_errors() const { return z.distance(z_prime); }
};

/// The random streams one session consumes.
struct SessionStreams {
  RngStream source;     // Alice: raw bit, then basis, per slot
  RngStream basis;      // Bob: basis per slot
  RngStream noise;      // channel
  RngStream subsample;  // public: selection of n and k matched slots

  static SessionStreams derive(std::uint64_t master, std::uint64_t session);
};

/// One party's view of the sifting bookkeeping. Both parties feed it the
/// same public information (bases and detections) and their own bit, so
/// both reach the same stopping slot and the same selected positions.
class SiftingLedger {
 public:
  SiftingLedger(std::int64_t n, std::int64_t k);

  /// Records one slot; returns true once both quotas are met. Slots offered
  /// after that are ignored.
  bool add_slot(Basis alice, Basis bob, bool detected, bool local_bit);

  bool complete() const { return complete_; }
  std::uint64_t sent() const { return sent_; }
  std::uint64_t received() const { return received_; }
  std::uint64_t x_matches() const { return x_bits_.size(); }
  std::uint64_t z_matches() const { return z_bits_.size(); }

  struct Selection {
    BitVector key;
    BitVector estimation;
  };

  /// Chooses n of the X matches, then k of the Z matches, by partial
  /// Fisher-Yates shuffles on the public stream. The caller supplies a copy
  /// of the public stream so that both parties draw identically.
  Selection select(RngStream public_rng) const;

 private:
  std::int64_t n_;
  std::int64_t k_;
  std::vector<bool> x_bits_;
  std::vector<bool> z_bits_;
  std::uint64_t sent_ = 0;
  std::uint64_t received_ = 0;
  bool complete_ = false;
};

class SiftingBudgetExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Draws for one slot, in stream order: Alice bit, Alice basis, Bob basis,
/// channel.
struct SlotDraw {
  bool alice_bit;
  Basis alice_basis;
  Basis bob_basis;
  std::optional<bool> bob_bit;
};
SlotDraw draw_slot(const ProtocolParams& params, const ChannelModel& model,
                   SessionStreams& streams);

/// Runs the quantum phase slot by slot until n X-matches and k Z-matches
/// exist, then subsamples. Gives up after 100 M(n,k) / eta slots.
SessionRecord run_sifting(const ProtocolParams& params, const ChannelModel& model,
                          SessionStreams& streams);

enum class EstimationDecision { Continue, Abort };

/// Abort iff the estimation-string error rate exceeds q_tol_z. Reads only
/// z and z_prime.
EstimationDecision estimate_and_test(const SessionRecord& record, const ProtocolParams& params);

/// Tagged binary form of a SessionRecord (see docs/formats.md).
std::vector<std::uint8_t> serialize(const SessionRecord& record);
SessionRecord deserialize_session_record(std::span<const std::uint8_t> blob);

}  // namespace fkqkd
