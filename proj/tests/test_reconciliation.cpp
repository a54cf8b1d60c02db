#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "fkqkd/numerics.hpp"
#include "fkqkd/reconciliation.hpp"

using namespace fkqkd;

namespace {

/// Oracle wrapper that counts what it answers.
class CountingOracle final : public WinnowOracle {
 public:
  explicit CountingOracle(BitVector reference) : inner_(std::move(reference)) {}
  BitVector block_parities(const WinnowRound& round) override {
    auto p = inner_.block_parities(round);
    parity_bits += p.size();
    block_size = round.block_size;
    return p;
  }
  std::vector<std::uint32_t> block_syndromes(std::span<const std::uint32_t> blocks) override {
    syndrome_bits += blocks.size() * syndrome_bits_per(block_size);
    return inner_.block_syndromes(blocks);
  }
  std::uint64_t parity_bits = 0;
  std::uint64_t syndrome_bits = 0;

 private:
  static unsigned syndrome_bits_per(unsigned size) {
    unsigned m = 0;
    while ((1U << m) < size) ++m;
    return m;
  }
  WinnowResponder inner_;
  unsigned block_size = 0;
};

BitVector noisy_copy(const BitVector& x, double q, RngStream& rng) {
  BitVector y = x;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (rng.bernoulli(q)) y.flip(i);
  }
  return y;
}

}  // namespace

TEST_CASE("schedule validation") {
  const WinnowSchedule ok{{8, 256}};
  const WinnowSchedule empty{};
  const WinnowSchedule odd_size{{12}};
  const WinnowSchedule too_large{{512}};
  const WinnowSchedule too_long{{8, 8, 8, 8, 8, 8, 8}};
  CHECK_NOTHROW(ok.validate());
  CHECK_THROWS_AS(empty.validate(), std::invalid_argument);
  CHECK_THROWS_AS(odd_size.validate(), std::invalid_argument);
  CHECK_THROWS_AS(too_large.validate(), std::invalid_argument);
  CHECK_THROWS_AS(too_long.validate(), std::invalid_argument);
}

TEST_CASE("threshold choice") {
  CHECK(choose_qmax(0.0, 1000, 1e-3).value == doctest::Approx(kQmaxGridStep));
  // scipy.stats.binom.sf reference search
  CHECK(choose_qmax(0.024, 10000, 1e-3).value == doctest::Approx(0.0293));
  CHECK(choose_qmax(0.003, 100000, 1e-3).value == doctest::Approx(0.0036));
  CHECK(choose_qmax(0.083, 100000, 1e-3).value == doctest::Approx(0.0859));
  CHECK(choose_qmax(0.024, 1000, 1e-3).value == doctest::Approx(0.0411));
  CHECK(!choose_qmax(0.024, 1000, 1e-3).fallback);
  CHECK(choose_qmax(0.49, 10, 1e-3).fallback);
  CHECK(choose_qmax(0.49, 10, 1e-3).value == 0.5);
}

TEST_CASE("threshold choice is the first grid point below the tail budget") {
  const std::int64_t n = 10000;
  const double q = 0.024;
  const double t = choose_qmax(q, n, 1e-3).value;
  auto tail = [&](double thr) {
    const auto c = static_cast<std::int64_t>(std::ceil(thr * n - 1e-9));
    return binom_sf(c - 1, n, q);
  };
  CHECK(tail(t) < 5e-4);
  CHECK(tail(t - kQmaxGridStep) >= 5e-4);
}

TEST_CASE("one Winnow pass matches exhaustive enumeration") {
  struct Case {
    unsigned block;
    double ber, residual, leakage;
  };
  // Enumerates all 2^N error patterns of a block, applies the syndrome flip.
  const Case cases[] = {
      {8, 0.05, 0.015758318749999944, 0.23178739812499974},
      {8, 0.02, 0.0026880878182400153, 0.1772394539405313},
      {8, 0.2, 0.1752704000000003, 0.3093507200000002},
      {16, 0.05, 0.0290925844657768, 0.16433724763946211},
      {16, 0.02, 0.005444105808867888, 0.12244963441669379},
      {16, 0.2, 0.21033722671924485, 0.187464736126067},
  };
  for (const auto& c : cases) {
    const WinnowStep s = predict_winnow_step(c.ber, c.block);
    CAPTURE(c.block);
    CAPTURE(c.ber);
    CHECK(s.residual_ber == doctest::Approx(c.residual).epsilon(1e-12));
    CHECK(s.leakage_per_bit == doctest::Approx(c.leakage).epsilon(1e-12));
  }
}

TEST_CASE("schedule search limits") {
  const auto tiny = optimize_schedule(1e-7, 10000, 1e-3);
  CHECK(tiny.schedule.block_sizes == std::vector<unsigned>{256});
  CHECK_THROWS_AS(optimize_schedule(0.15, 10000, 1e-3), ReconciliationInfeasible);
}

TEST_CASE("schedule search returns the cheapest feasible schedule") {
  const std::int64_t n = 10000;
  const double q_max = 0.03;
  const double target = 1e-3 / (2.0 * n);
  const auto choice = optimize_schedule(q_max, n, 1e-3);
  CHECK(choice.at_threshold.residual_ber < target);
  const double best = choice.at_expected.leakage;

  std::vector<unsigned> current;
  int feasible = 0;
  auto walk = [&](auto&& self) -> void {
    if (!current.empty()) {
      const auto p = predict_schedule(current, q_max, n);
      if (p.residual_ber < target && p.leakage < static_cast<double>(n)) {
        ++feasible;
        CHECK(best <= p.leakage + 1e-9);
      }
    }
    if (current.size() == kMaxWinnowIterations) return;
    for (unsigned b : kWinnowBlockSizes) {
      current.push_back(b);
      self(self);
      current.pop_back();
    }
  };
  walk(walk);
  CHECK(feasible > 0);
}

TEST_CASE("round orders") {
  const WinnowRound plain{0, 8, false, 0};
  const auto order = round_order(plain, 20);
  for (std::uint32_t i = 0; i < 20; ++i) CHECK(order[i] == i);
  CHECK(round_block_count(plain, 20) == 3);

  const WinnowRound shuffled{1, 8, true, 99};
  auto perm = round_order(shuffled, 1000);
  CHECK(perm == round_order(shuffled, 1000));
  std::vector<bool> seen(1000, false);
  for (auto p : perm) seen[p] = true;
  for (bool s : seen) CHECK(s);
}

TEST_CASE("equal strings disclose only parities") {
  RngStream rng(1);
  const BitVector x = BitVector::random(1000, rng);
  WinnowResponder oracle(x);
  RngStream pub(2);
  const WinnowSchedule schedule{{8, 64, 256}};
  const auto r = winnow_reconcile(x, schedule, oracle, pub);
  CHECK(r.corrected == x);
  CHECK(r.corrections == 0);
  CHECK(r.leakage == 125 + 16 + 4);
  CHECK(r.iterations_run == 3);
}

TEST_CASE("single error in one pass of blocks of 8") {
  RngStream rng(1);
  const BitVector x = BitVector::random(800, rng);
  BitVector y = x;
  y.flip(421);
  WinnowResponder oracle(x);
  RngStream pub(2);
  const auto r = winnow_reconcile(y, WinnowSchedule{{8}}, oracle, pub);
  CHECK(r.corrected == x);
  CHECK(r.corrections == 1);
  CHECK(r.leakage == 100 + 3);
}

TEST_CASE("leakage equals the disclosed bits in the transcript") {
  RngStream rng(4);
  const BitVector x = BitVector::random(5000, rng);
  const BitVector y = noisy_copy(x, 0.03, rng);
  CountingOracle oracle(x);
  RngStream pub(5);
  const auto r = winnow_reconcile(y, WinnowSchedule{{16, 32, 64, 256}}, oracle, pub);
  std::uint64_t from_transcript = 0;
  for (const auto& e : r.transcript) from_transcript += e.bits;
  CHECK(from_transcript == r.leakage);
  CHECK(oracle.parity_bits + oracle.syndrome_bits == r.leakage);
}

TEST_CASE("reconciliation is deterministic") {
  RngStream rng(6);
  const BitVector x = BitVector::random(3000, rng);
  const BitVector y = noisy_copy(x, 0.05, rng);
  auto run = [&] {
    WinnowResponder oracle(x);
    RngStream pub(77);
    return winnow_reconcile(y, WinnowSchedule{{8, 32, 128}}, oracle, pub);
  };
  const auto a = run();
  const auto b = run();
  CHECK(a.corrected == b.corrected);
  CHECK(a.leakage == b.leakage);
  REQUIRE(a.transcript.size() == b.transcript.size());
  for (std::size_t i = 0; i < a.transcript.size(); ++i) {
    CHECK(a.transcript[i].value == b.transcript[i].value);
    CHECK(a.transcript[i].block == b.transcript[i].block);
  }
}

TEST_CASE("a pass changes the distance of a block of 8 by at most one") {
  RngStream rng(3);
  const BitVector x = BitVector::random(8, rng);
  for (unsigned pattern = 0; pattern < 256; ++pattern) {
    BitVector y = x;
    for (std::size_t i = 0; i < 8; ++i) {
      if ((pattern >> i) & 1U) y.flip(i);
    }
    WinnowResponder oracle(x);
    RngStream pub(1);
    const auto r = winnow_reconcile(y, WinnowSchedule{{8}}, oracle, pub);
    const auto before = y.distance(x);
    const auto after = r.corrected.distance(x);
    CHECK(after <= before + 1);
    if (before % 2 == 0) CHECK(after == before);
    if (before == 1) CHECK(after == 0);
  }
}

TEST_CASE("residual estimate is small after a successful run") {
  RngStream rng(8);
  const BitVector x = BitVector::random(10000, rng);
  const BitVector y = noisy_copy(x, 0.024, rng);
  const auto choice = optimize_schedule(0.0293, 10000, 1e-3, 0.024);
  WinnowResponder oracle(x);
  RngStream pub(9);
  const auto r = winnow_reconcile(y, choice.schedule, oracle, pub);
  CHECK(r.residual_estimate >= 0.0);
  CHECK(r.residual_estimate < 1e-6);
}

TEST_CASE("Winnow Monte Carlo at n = 1e4, Q = 0.024: failure rate and mean leakage band") {
  const std::int64_t n = 10000;
  const double q = 0.024;
  const double fail = 1e-3;
  const auto q_max = choose_qmax(q, n, fail).value;
  const auto choice = optimize_schedule(q_max, n, fail, q);
  RngStream rng(2025);
  const int trials = 500;
  int failures = 0;
  double leakage = 0.0;
  for (int t = 0; t < trials; ++t) {
    const BitVector x = BitVector::random(n, rng);
    const BitVector y = noisy_copy(x, q, rng);
    WinnowResponder oracle(x);
    RngStream pub(rng.next_u64());
    const auto r = winnow_reconcile(y, choice.schedule, oracle, pub);
    if (!(r.corrected == x)) ++failures;
    leakage += static_cast<double>(r.leakage);
  }
  const double rate = static_cast<double>(failures) / trials;
  CHECK(rate <= fail + 3 * std::sqrt(fail * (1 - fail) / trials));

  const double mean = leakage / trials;
  // the analytic model tracks the simulation
  CHECK(mean == doctest::Approx(choice.at_expected.leakage).epsilon(0.02));
  const double ratio = mean / (n * binary_entropy(q));
  CAPTURE(ratio);
  CHECK(ratio >= 1.0);
  CHECK(ratio <= 1.35);
}
