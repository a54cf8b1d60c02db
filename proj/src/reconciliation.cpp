#include "fkqkd/reconciliation.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>

#include "fkqkd/hamming.hpp"

namespace fkqkd {

namespace {

double log_choose(double n, double k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

/// Per-block-size tables for the pass model.
struct BlockTables {
  unsigned size = 0;
  unsigned syndrome_bits = 0;
  std::vector<double> log_choose;  // log C(N, w)
  std::vector<double> hit;         // P[flip lands on an error | odd weight w]
};

/// For odd w >= 3 the flipped label is the XOR s of the w error labels, and
/// s is itself an error label iff some w-1 of them XOR to zero. With z_j the
/// number of zero-XOR j-subsets of the N labels,
///   z_j = (C(N,j) + (N-1) [j even] (-1)^(j/2) C(N/2, j/2)) / N,
/// the probability is w z_{w-1} / C(N, w-1).
BlockTables make_tables(unsigned size) {
  BlockTables t;
  t.size = size;
  t.syndrome_bits = static_cast<unsigned>(std::bit_width(size)) - 1;
  t.log_choose.resize(size + 1);
  t.hit.assign(size + 1, 0.0);
  const double n = size;
  for (unsigned w = 0; w <= size; ++w) t.log_choose[w] = log_choose(n, w);
  for (unsigned w = 3; w <= size; w += 2) {
    const unsigned j = w - 1;
    const double sign = (j / 2) % 2 == 0 ? 1.0 : -1.0;
    const double ratio = std::exp(log_choose(n / 2.0, j / 2.0) - t.log_choose[j]);
    const double zero_fraction = (1.0 + (n - 1.0) * sign * ratio) / n;
    t.hit[w] = std::clamp(w * zero_fraction, 0.0, 1.0);
  }
  return t;
}

const BlockTables& tables_for(unsigned size) {
  static const std::array<BlockTables, 6> all = [] {
    std::array<BlockTables, 6> out;
    for (std::size_t i = 0; i < kWinnowBlockSizes.size(); ++i) {
      out[i] = make_tables(kWinnowBlockSizes[i]);
    }
    return out;
  }();
  for (const auto& t : all) {
    if (t.size == size) return t;
  }
  throw std::invalid_argument("winnow: unsupported block size " + std::to_string(size));
}

/// Expected error weight after the pass and probability of odd parity.
std::pair<double, double> pass_moments(double ber, const BlockTables& t) {
  if (ber <= 0.0) return {0.0, 0.0};
  const double lp = std::log(ber);
  const double lq = std::log1p(-ber);
  double weight_after = 0.0;
  double odd = 0.0;
  for (unsigned w = 1; w <= t.size; ++w) {
    const double pmf = std::exp(t.log_choose[w] + w * lp + (t.size - w) * lq);
    if (w % 2 == 0) {
      weight_after += pmf * w;
    } else {
      odd += pmf;
      if (w >= 3) weight_after += pmf * (t.hit[w] * (w - 1) + (1.0 - t.hit[w]) * (w + 1));
    }
  }
  return {weight_after, odd};
}

std::size_t blocks_for(std::int64_t n, unsigned size) {
  return static_cast<std::size_t>((n + size - 1) / size);
}

bool schedule_less(const std::vector<unsigned>& a, const std::vector<unsigned>& b) {
  if (a.size() != b.size()) return a.size() < b.size();
  return a < b;
}

}  // namespace

void WinnowSchedule::validate() const {
  if (block_sizes.empty() || block_sizes.size() > kMaxWinnowIterations) {
    throw std::invalid_argument("WinnowSchedule: need 1 to 6 iterations");
  }
  for (unsigned size : block_sizes) {
    if (std::find(kWinnowBlockSizes.begin(), kWinnowBlockSizes.end(), size) ==
        kWinnowBlockSizes.end()) {
      throw std::invalid_argument("WinnowSchedule: unsupported block size " +
                                  std::to_string(size));
    }
  }
}

QmaxChoice choose_qmax(double expected_qber, std::int64_t n, double fail_budget) {
  if (!(expected_qber >= 0.0 && expected_qber < 0.5)) {
    throw std::domain_error("choose_qmax: expected QBER outside [0, 0.5)");
  }
  if (n < 1) throw std::invalid_argument("choose_qmax: n must be >= 1");
  constexpr std::int64_t kSteps = 10'000;  // 1 / kQmaxGridStep
  auto tail = [&](std::int64_t i) {
    const std::int64_t threshold = (i * n + kSteps - 1) / kSteps;  // ceil(t n)
    return binom_sf(threshold - 1, n, expected_qber);
  };
  std::int64_t lo = static_cast<std::int64_t>(std::floor(expected_qber * kSteps)) + 1;
  while (static_cast<double>(lo) / kSteps <= expected_qber) ++lo;
  std::int64_t hi = kSteps / 2 - 1;
  const double target = fail_budget / 2.0;
  if (lo > hi || tail(hi) >= target) return {0.5, true};
  while (lo < hi) {
    const std::int64_t mid = lo + (hi - lo) / 2;
    if (tail(mid) < target) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  return {static_cast<double>(lo) / kSteps, false};
}

WinnowStep predict_winnow_step(double ber, unsigned block_size) {
  const BlockTables& t = tables_for(block_size);
  const auto [weight_after, odd] = pass_moments(ber, t);
  return {weight_after / block_size, (1.0 + t.syndrome_bits * odd) / block_size};
}

WinnowPrediction predict_schedule(std::span<const unsigned> block_sizes, double ber,
                                  std::int64_t n) {
  WinnowPrediction out{ber, 0.0};
  for (unsigned size : block_sizes) {
    const BlockTables& t = tables_for(size);
    const auto [weight_after, odd] = pass_moments(out.residual_ber, t);
    out.leakage += static_cast<double>(blocks_for(n, size)) * (1.0 + t.syndrome_bits * odd);
    out.residual_ber = weight_after / size;
  }
  return out;
}

ScheduleChoice optimize_schedule(double q_max_x, std::int64_t n, double fail_budget) {
  return optimize_schedule(q_max_x, n, fail_budget, q_max_x);
}

ScheduleChoice optimize_schedule(double q_max_x, std::int64_t n, double fail_budget,
                                 double expected_qber) {
  if (n < 1) throw std::invalid_argument("optimize_schedule: n must be >= 1");
  const double target = fail_budget / (2.0 * static_cast<double>(n));

  struct Node {
    WinnowPrediction thr;
    WinnowPrediction exp;
  };
  std::array<Node, kMaxWinnowIterations + 1> stack{};
  stack[0] = {{q_max_x, 0.0}, {expected_qber, 0.0}};
  std::vector<unsigned> current;
  std::optional<ScheduleChoice> best;

  auto advance = [&](const WinnowPrediction& in, const BlockTables& t) {
    const auto [weight_after, odd] = pass_moments(in.residual_ber, t);
    return WinnowPrediction{
        weight_after / t.size,
        in.leakage + static_cast<double>(blocks_for(n, t.size)) * (1.0 + t.syndrome_bits * odd)};
  };

  // Depth-first walk over all 6 + 6^2 + ... + 6^6 schedules.
  auto visit = [&](auto&& self, std::size_t depth) -> void {
    for (unsigned size : kWinnowBlockSizes) {
      const BlockTables& t = tables_for(size);
      Node& next = stack[depth + 1];
      next.thr = advance(stack[depth].thr, t);
      next.exp = advance(stack[depth].exp, t);
      current.push_back(size);
      const bool feasible =
          next.thr.residual_ber < target && next.thr.leakage < static_cast<double>(n);
      if (feasible) {
        bool better = !best;
        if (best) {
          const double incumbent = best->at_expected.leakage;
          const double slack = 1e-9 * std::max(1.0, incumbent);
          if (next.exp.leakage < incumbent - slack) {
            better = true;
          } else if (next.exp.leakage <= incumbent + slack) {
            better = schedule_less(current, best->schedule.block_sizes);
          }
        }
        if (better) best = ScheduleChoice{{current, true}, next.thr, next.exp};
      }
      if (depth + 1 < kMaxWinnowIterations) self(self, depth + 1);
      current.pop_back();
    }
  };
  visit(visit, 0);

  if (!best) {
    throw ReconciliationInfeasible("optimize_schedule: no schedule of at most 6 passes reaches "
                                   "the residual target at Q_max = " +
                                   std::to_string(q_max_x));
  }
  return *best;
}

std::vector<std::uint32_t> round_order(const WinnowRound& round, std::size_t n) {
  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0U);
  if (round.permuted && n > 1) {
    RngStream rng(round.permutation_seed);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      std::swap(order[i], order[i + rng.below(n - i)]);
    }
  }
  return order;
}

std::size_t round_block_count(const WinnowRound& round, std::size_t n) {
  return (n + round.block_size - 1) / round.block_size;
}

namespace {

std::span<const std::uint32_t> block_span(std::span<const std::uint32_t> order,
                                          std::size_t block, std::size_t size) {
  const std::size_t begin = block * size;
  return order.subspan(begin, std::min(size, order.size() - begin));
}

BitVector parities_of(const BitVector& bits, std::span<const std::uint32_t> order,
                      std::size_t size) {
  const std::size_t blocks = (order.size() + size - 1) / size;
  BitVector out(blocks);
  for (std::size_t b = 0; b < blocks; ++b) {
    bool parity = false;
    for (std::uint32_t pos : block_span(order, b, size)) parity ^= bits.get(pos);
    out.set(b, parity);
  }
  return out;
}

}  // namespace

BitVector WinnowResponder::block_parities(const WinnowRound& round) {
  syndrome_bits_for(round.block_size);
  round_ = round;
  order_ = round_order(round, reference_.size());
  return parities_of(reference_, order_, round.block_size);
}

std::vector<std::uint32_t> WinnowResponder::block_syndromes(
    std::span<const std::uint32_t> blocks) {
  const std::size_t count = round_block_count(round_, reference_.size());
  std::vector<std::uint32_t> out;
  out.reserve(blocks.size());
  for (std::uint32_t b : blocks) {
    if (b >= count) throw std::out_of_range("WinnowResponder: block index out of range");
    out.push_back(hamming_syndrome(reference_, block_span(order_, b, round_.block_size)));
  }
  return out;
}

ReconciliationReport winnow_reconcile(const BitVector& noisy, const WinnowSchedule& schedule,
                                      WinnowOracle& oracle, RngStream& public_rng) {
  schedule.validate();
  if (noisy.empty()) throw std::invalid_argument("winnow_reconcile: empty key");
  ReconciliationReport report;
  report.corrected = noisy;
  BitVector& bits = report.corrected;
  const std::size_t n = bits.size();
  double first_odd_fraction = 0.0;

  for (std::size_t i = 0; i < schedule.block_sizes.size(); ++i) {
    WinnowRound round;
    round.iteration = static_cast<std::uint32_t>(i);
    round.block_size = schedule.block_sizes[i];
    round.permuted = schedule.permute_between && i > 0;
    round.permutation_seed = public_rng.next_u64();
    const unsigned m = syndrome_bits_for(round.block_size);
    const std::vector<std::uint32_t> order = round_order(round, n);
    const std::size_t blocks = round_block_count(round, n);

    const BitVector theirs = oracle.block_parities(round);
    if (theirs.size() != blocks) throw std::runtime_error("winnow_reconcile: parity count mismatch");
    const BitVector mine = parities_of(bits, order, round.block_size);
    std::vector<std::uint32_t> failing;
    for (std::size_t b = 0; b < blocks; ++b) {
      report.transcript.push_back({round.iteration, static_cast<std::uint32_t>(b),
                                   DisclosureKind::Parity, theirs.get(b) ? 1U : 0U, 1});
      if (theirs.get(b) != mine.get(b)) failing.push_back(static_cast<std::uint32_t>(b));
    }
    report.leakage += blocks;
    if (i == 0) first_odd_fraction = static_cast<double>(failing.size()) / blocks;

    if (!failing.empty()) {
      const std::vector<std::uint32_t> syndromes = oracle.block_syndromes(failing);
      if (syndromes.size() != failing.size()) {
        throw std::runtime_error("winnow_reconcile: syndrome count mismatch");
      }
      for (std::size_t f = 0; f < failing.size(); ++f) {
        const auto positions = block_span(order, failing[f], round.block_size);
        const unsigned label = syndromes[f] ^ hamming_syndrome(bits, positions);
        report.transcript.push_back(
            {round.iteration, failing[f], DisclosureKind::Syndrome, syndromes[f], m});
        report.leakage += m;
        // A label past the end of a short block points into its zero padding.
        if (label < positions.size()) {
          bits.flip(positions[label]);
          ++report.corrections;
        }
      }
    }
    ++report.iterations_run;
  }

  // Invert the first pass's odd-parity rate into an input error rate and
  // push it through the model.
  const double n0 = schedule.block_sizes.front();
  const double base = std::clamp(1.0 - 2.0 * first_odd_fraction, 0.0, 1.0);
  const double estimated_ber = (1.0 - std::pow(base, 1.0 / n0)) / 2.0;
  report.residual_estimate =
      predict_schedule(schedule.block_sizes, estimated_ber, static_cast<std::int64_t>(n))
          .residual_ber;
  return report;
}

}  // namespace fkqkd
