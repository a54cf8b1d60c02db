#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "fkqkd/bitvector.hpp"
#include "fkqkd/numerics.hpp"
#include "fkqkd/rng.hpp"

namespace fkqkd {

inline constexpr std::size_t kMaxWinnowIterations = 6;
inline constexpr std::array<unsigned, 6> kWinnowBlockSizes{8, 16, 32, 64, 128, 256};

/// Block sizes per Winnow iteration.
struct WinnowSchedule {
  std::vector<unsigned> block_sizes;
  bool permute_between = true;

  /// Throws std::invalid_argument unless 1..6 sizes, each a power of two in
  /// [8, 256].
  void validate() const;
};

/// Thrown when no schedule reaches the residual-error target.
class ReconciliationInfeasible : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Threshold on the key-string error rate, with a flag set when the search
/// ran off the grid and fell back to 0.5.
struct QmaxChoice {
  double value = 0.5;
  bool fallback = false;
};

inline constexpr double kQmaxGridStep = 1e-4;

/// Smallest grid value t > expected_qber (grid step 1e-4) such that
/// P[Bin(n, expected_qber) >= ceil(t n)] < fail_budget / 2.
QmaxChoice choose_qmax(double expected_qber, std::int64_t n, double fail_budget);

/// Analytic model of one Winnow pass over i.i.d. errors.
struct WinnowStep {
  double residual_ber = 0.0;  // error rate after the pass
  double leakage_per_bit = 0.0;  // expected disclosed bits / key length
};

/// One pass with blocks of the given size at input error rate ber. A block
/// with odd error weight w is corrected when w = 1; for w >= 3 the syndrome
/// flip lands on an existing error with the exact probability for an
/// extended Hamming code, otherwise it adds one.
WinnowStep predict_winnow_step(double ber, unsigned block_size);

struct WinnowPrediction {
  double residual_ber = 0.0;
  double leakage = 0.0;  // expected disclosed bits for a key of length n
};

WinnowPrediction predict_schedule(std::span<const unsigned> block_sizes, double ber,
                                  std::int64_t n);

struct ScheduleChoice {
  WinnowSchedule schedule;
  WinnowPrediction at_threshold;  // evaluated at q_max_x
  WinnowPrediction at_expected;   // evaluated at the expected error rate
};

/// Exhaustive search over every schedule of length <= 6.
///
/// A schedule is feasible when, at q_max_x, its predicted residual error rate
/// is below fail_budget / (2n) and its predicted leakage is below n. Among
/// feasible schedules the one with the least expected leakage at
/// expected_qber (q_max_x when omitted) wins; ties go to the shorter, then
/// lexicographically smaller, schedule. Throws ReconciliationInfeasible.
ScheduleChoice optimize_schedule(double q_max_x, std::int64_t n, double fail_budget);
ScheduleChoice optimize_schedule(double q_max_x, std::int64_t n, double fail_budget,
                                 double expected_qber);

/// Public parameters of one Winnow pass.
struct WinnowRound {
  std::uint32_t iteration = 0;
  std::uint32_t block_size = 0;
  bool permuted = false;
  std::uint64_t permutation_seed = 0;
};

/// Bit positions visited by a round, in block order. Identity when the round
/// is not permuted, otherwise a Fisher-Yates shuffle driven by
/// RngStream(permutation_seed).
std::vector<std::uint32_t> round_order(const WinnowRound& round, std::size_t n);

/// Number of blocks of a round; the last one may be short.
std::size_t round_block_count(const WinnowRound& round, std::size_t n);

/// Questions Bob puts to the holder of the reference string.
class WinnowOracle {
 public:
  virtual ~WinnowOracle() = default;
  /// Starts a round; returns one parity per block.
  virtual BitVector block_parities(const WinnowRound& round) = 0;
  /// Hamming syndromes of the listed blocks of the current round.
  virtual std::vector<std::uint32_t> block_syndromes(std::span<const std::uint32_t> blocks) = 0;
};

/// Alice's side: answers oracle queries from her own string.
class WinnowResponder final : public WinnowOracle {
 public:
  explicit WinnowResponder(BitVector reference) : reference_(std::move(reference)) {}

  BitVector block_parities(const WinnowRound& round) override;
  std::vector<std::uint32_t> block_syndromes(std::span<const std::uint32_t> blocks) override;

 private:
  BitVector reference_;
  WinnowRound round_{};
  std::vector<std::uint32_t> order_;
};

enum class DisclosureKind : std::uint8_t { Parity = 0, Syndrome = 1 };

struct DisclosureEntry {
  std::uint32_t iteration;
  std::uint32_t block;
  DisclosureKind kind;
  std::uint32_t value;  // parity bit or syndrome
  std::uint32_t bits;   // number of disclosed bits
};

struct ReconciliationReport {
  BitVector corrected;
  std::uint64_t leakage = 0;
  std::uint32_t iterations_run = 0;
  std::uint64_t corrections = 0;
  double residual_estimate = 0.0;
  std::vector<DisclosureEntry> transcript;
};

/// Bob's side of Winnow. Each round's permutation seed is drawn from
/// public_rng (one next_u64 per round). Leakage is the exact number of
/// parity and syndrome bits received from the oracle.
ReconciliationReport winnow_reconcile(const BitVector& noisy, const WinnowSchedule& schedule,
                                      WinnowOracle& oracle, RngStream& public_rng);

}  // namespace fkqkd
