#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "fkqkd/bounds.hpp"
#include "fkqkd/byteio.hpp"
#include "fkqkd/sifting.hpp"

using namespace fkqkd;

namespace {

ChannelModel noiseless(double eta = 1.0) {
  return {Probability(0.0), Probability(0.0), Probability(0.0), Probability(eta)};
}

SessionRecord estimation_only(std::size_t k, std::size_t errors) {
  SessionRecord r;
  r.z = BitVector(k);
  r.z_prime = BitVector(k);
  for (std::size_t i = 0; i < errors; ++i) r.z_prime.flip(i);
  r.x = BitVector(10);
  r.x_prime = BitVector(10);
  return r;
}

}  // namespace

TEST_CASE("basis probabilities from quotas") {
  const auto [px, pz] = basis_probs_from_quota(500, 500);
  CHECK(px == doctest::Approx(0.5));
  CHECK(pz == doctest::Approx(0.5));
  CHECK(quota_from_basis_probability(100000, 0.09) == 978);
  const std::int64_t k = quota_from_basis_probability(1'000'000, 0.49);
  CHECK(static_cast<double>(k) / 1e6 == doctest::Approx(std::pow(0.49 / 0.51, 2)).epsilon(1e-6));
  CHECK(quota_from_basis_probability(10, 0.001) == 1);
  const auto [px2, pz2] = basis_probs_from_quota(1'000'000, k);
  CHECK(pz2 == doctest::Approx(0.49).epsilon(1e-6));
  CHECK(px2 + pz2 == doctest::Approx(1.0));
}

TEST_CASE("protocol params validation") {
  CHECK_NOTHROW(ProtocolParams::from_quota(1000, 100, 0.05, 0.05));
  CHECK_NOTHROW(ProtocolParams::from_basis_probability(100000, 0.09, 0.09, 0.05));
  CHECK_THROWS_AS(ProtocolParams::from_quota(0, 10, 0.05, 0.05), std::invalid_argument);
  CHECK_THROWS_AS(ProtocolParams::from_quota(100, 0, 0.05, 0.05), std::invalid_argument);
  ProtocolParams bad = ProtocolParams::from_quota(1000, 100, 0.05, 0.05);
  bad.k = 900;  // breaks the quota relation
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("noiseless sifting gives identical strings of exact lengths") {
  const auto params = ProtocolParams::from_quota(2000, 700, 0.05, 0.05);
  auto streams = SessionStreams::derive(1, 0);
  const SessionRecord r = run_sifting(params, noiseless(), streams);
  CHECK(r.x.size() == 2000);
  CHECK(r.z.size() == 700);
  CHECK(r.x == r.x_prime);
  CHECK(r.z == r.z_prime);
  CHECK(r.x_match_count >= 2000);
  CHECK(r.z_match_count >= 700);
  CHECK(r.received_count == r.sent_count);
  CHECK(r.empirical_q_z == 0.0);
}

TEST_CASE("sifting is deterministic per session") {
  const auto params = ProtocolParams::from_quota(1000, 300, 0.05, 0.05);
  const ChannelModel m = ChannelModel::from_qber(channel_preset("b").qber);
  auto s1 = SessionStreams::derive(7, 3);
  auto s2 = SessionStreams::derive(7, 3);
  auto s3 = SessionStreams::derive(7, 4);
  const auto a = run_sifting(params, m, s1);
  const auto b = run_sifting(params, m, s2);
  const auto c = run_sifting(params, m, s3);
  CHECK(serialize(a) == serialize(b));
  CHECK(serialize(a) != serialize(c));
}

TEST_CASE("symmetric quotas need about 4n slots") {
  const std::int64_t n = 5000;
  const auto params = ProtocolParams::from_quota(n, n, 0.05, 0.05);
  double sum = 0.0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    auto streams = SessionStreams::derive(11, s);
    sum += static_cast<double>(run_sifting(params, noiseless(), streams).sent_count);
  }
  CHECK(std::abs(sum / 20 / (4.0 * n) - 1.0) <= 0.05);
  CHECK(expected_qubits(n, n) == doctest::Approx(4.0 * n));
}

TEST_CASE("retention fractions match eta p^2 per basis") {
  const double eta = 0.6;
  const auto params = ProtocolParams::from_basis_probability(40000, 0.3, 0.05, 0.05);
  auto streams = SessionStreams::derive(5, 0);
  const auto r = run_sifting(params, noiseless(eta), streams);
  const double sent = static_cast<double>(r.sent_count);
  REQUIRE(sent >= 1e5);
  for (const auto& [count, p] :
       {std::pair{r.x_match_count, params.p_x * params.p_x * eta},
        std::pair{r.z_match_count, params.p_z * params.p_z * eta}}) {
    const double sigma = std::sqrt(p * (1 - p) / sent);
    CHECK(std::abs(static_cast<double>(count) / sent - p) <= 3 * sigma);
  }
  CHECK(std::abs(static_cast<double>(r.received_count) / sent - eta) <=
        3 * std::sqrt(eta * (1 - eta) / sent));
}

TEST_CASE("sifted strings concentrate on the diagonal with the channel QBER off it") {
  // p_Z = 0.49 on the best channel
  const auto params = ProtocolParams::from_basis_probability(50000, 0.49, 0.05, 0.05);
  const ChannelModel m = ChannelModel::from_qber(channel_preset("a").qber);
  auto streams = SessionStreams::derive(2, 0);
  const auto r = run_sifting(params, m, streams);
  const double qx = static_cast<double>(r.x.distance(r.x_prime)) / r.x.size();
  const double qz = static_cast<double>(r.z.distance(r.z_prime)) / r.z.size();
  CHECK(std::abs(qx - 0.003) <= 3 * std::sqrt(0.003 * 0.997 / r.x.size()));
  CHECK(std::abs(qz - 0.015) <= 3 * std::sqrt(0.015 * 0.985 / r.z.size()));
  const double ones = static_cast<double>(r.x.weight()) / r.x.size();
  CHECK(std::abs(ones - 0.5) <= 3 * std::sqrt(0.25 / r.x.size()));
}

TEST_CASE("ledgers agree when fed the same public information") {
  SiftingLedger alice(5, 3);
  SiftingLedger bob(5, 3);
  RngStream rng(9);
  while (!alice.complete()) {
    const Basis a = rng.bit() ? Basis::Z : Basis::X;
    const Basis b = rng.bit() ? Basis::Z : Basis::X;
    const bool bit = rng.bit();
    alice.add_slot(a, b, true, bit);
    bob.add_slot(a, b, true, bit);
  }
  CHECK(bob.complete());
  const auto sent = alice.sent();
  alice.add_slot(Basis::X, Basis::X, true, true);
  CHECK(alice.sent() == sent);
  const auto sa = alice.select(RngStream(1));
  const auto sb = bob.select(RngStream(1));
  CHECK(sa.key == sb.key);
  CHECK(sa.estimation == sb.estimation);
  CHECK(sa.key.size() == 5);
  CHECK(sa.estimation.size() == 3);
}

TEST_CASE("estimation test") {
  const auto params = ProtocolParams::from_quota(1000, 100, 0.05, 0.05);
  CHECK(estimate_and_test(estimation_only(100, 0), params) == EstimationDecision::Continue);
  CHECK(estimate_and_test(estimation_only(100, 5), params) == EstimationDecision::Continue);
  CHECK(estimate_and_test(estimation_only(100, 6), params) == EstimationDecision::Abort);
}

TEST_CASE("estimation reads only the estimation strings") {
  const auto params = ProtocolParams::from_quota(1000, 100, 0.05, 0.05);
  for (std::size_t errors : {3u, 9u}) {
    SessionRecord r = estimation_only(100, errors);
    const auto before = estimate_and_test(r, params);
    r.x_prime.flip(0);
    r.x_prime.flip(7);
    CHECK(estimate_and_test(r, params) == before);
  }
}

TEST_CASE("abort frequency without eavesdropper stays under the robustness bound") {
  // k = 1000, Q_Z = 0.015, Q_tol_Z = 0.03, 1e4 runs
  const auto params = ProtocolParams::from_quota(10000, 1000, 0.03, 0.05);
  const double bound = eps_rob_bound(1000, 0.03, 0.015);
  CHECK(bound == doctest::Approx(0.37883570890353934).epsilon(1e-10));  // mpmath
  RngStream rng(12);
  int aborts = 0;
  const int runs = 10'000;
  for (int t = 0; t < runs; ++t) {
    SessionRecord r;
    r.z = BitVector(1000);
    r.z_prime = BitVector(1000);
    for (std::size_t i = 0; i < 1000; ++i) {
      if (rng.bernoulli(0.015)) r.z_prime.flip(i);
    }
    if (estimate_and_test(r, params) == EstimationDecision::Abort) ++aborts;
  }
  CHECK(static_cast<double>(aborts) / runs <= bound);
}

TEST_CASE("session record round trip") {
  const auto params = ProtocolParams::from_quota(300, 50, 0.05, 0.05);
  const ChannelModel m = ChannelModel::from_qber(channel_preset("c").qber);
  auto streams = SessionStreams::derive(3, 1);
  const auto r = run_sifting(params, m, streams);
  const auto blob = serialize(r);
  CHECK(blob[0] == 'Q');
  CHECK(blob[3] == 'R');
  const auto back = deserialize_session_record(blob);
  CHECK(back.x == r.x);
  CHECK(back.x_prime == r.x_prime);
  CHECK(back.z == r.z);
  CHECK(back.z_prime == r.z_prime);
  CHECK(back.sent_count == r.sent_count);
  CHECK(back.received_count == r.received_count);
  CHECK(back.x_match_count == r.x_match_count);
  CHECK(back.z_match_count == r.z_match_count);
  CHECK(back.empirical_q_z == r.empirical_q_z);
}

TEST_CASE("session record decoding skips unknown tags and rejects damage") {
  SessionRecord r = estimation_only(20, 2);
  auto blob = serialize(r);
  auto extended = blob;
  for (std::uint8_t b : {std::uint8_t{0x7F}, std::uint8_t{0}, std::uint8_t{0}, std::uint8_t{0},
                         std::uint8_t{2}, std::uint8_t{0xAA}, std::uint8_t{0xBB}}) {
    extended.push_back(b);
  }
  CHECK(deserialize_session_record(extended).z == r.z);

  auto truncated = blob;
  truncated.resize(blob.size() - 3);
  CHECK_THROWS_AS(deserialize_session_record(truncated), DecodeError);
  auto bad_magic = blob;
  bad_magic[0] = 'X';
  CHECK_THROWS_AS(deserialize_session_record(bad_magic), DecodeError);
  auto bad_version = blob;
  bad_version[4] = 9;
  CHECK_THROWS_AS(deserialize_session_record(bad_version), DecodeError);
}

TEST_CASE("zero detection probability cannot fill the quotas") {
  const auto params = ProtocolParams::from_quota(100, 100, 0.05, 0.05);
  auto streams = SessionStreams::derive(1, 0);
  CHECK_THROWS_AS(run_sifting(params, noiseless(0.0), streams), SiftingBudgetExceeded);
}
