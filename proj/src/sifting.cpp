#include "fkqkd/sifting.hpp"

#include <cmath>
#include <numeric>

#include "fkqkd/byteio.hpp"

namespace fkqkd {

namespace {

constexpr std::uint8_t kRecordMagic[4] = {'Q', 'K', 'S', 'R'};
constexpr std::uint8_t kRecordVersion = 1;

enum RecordTag : std::uint8_t {
  kTagX = 0x01,
  kTagXPrime = 0x02,
  kTagZ = 0x03,
  kTagZPrime = 0x04,
  kTagSent = 0x10,
  kTagReceived = 0x11,
  kTagXMatches = 0x12,
  kTagZMatches = 0x13,
};

BitVector pick(const std::vector<bool>& bits, std::int64_t count, RngStream& rng) {
  std::vector<std::uint32_t> order(bits.size());
  std::iota(order.begin(), order.end(), 0U);
  BitVector out(static_cast<std::size_t>(count));
  for (std::size_t i = 0; i < out.size(); ++i) {
    const std::size_t j = i + rng.below(order.size() - i);
    std::swap(order[i], order[j]);
    out.set(i, bits[order[i]]);
  }
  return out;
}

double expected_slots(std::int64_t n, std::int64_t k) {
  const auto dn = static_cast<double>(n);
  const auto dk = static_cast<double>(k);
  return dn + dk + 2.0 * std::sqrt(dn * dk);
}

}  // namespace

std::pair<double, double> basis_probs_from_quota(std::int64_t n, std::int64_t k) {
  if (n < 1 || k < 1) throw std::invalid_argument("basis_probs_from_quota: quotas must be >= 1");
  const double p_x = 1.0 / (1.0 + std::sqrt(static_cast<double>(k) / static_cast<double>(n)));
  return {p_x, 1.0 - p_x};
}

std::int64_t quota_from_basis_probability(std::int64_t n, double p_z) {
  if (n < 1) throw std::invalid_argument("quota_from_basis_probability: n must be >= 1");
  if (!(p_z > 0.0 && p_z < 1.0)) {
    throw std::domain_error("quota_from_basis_probability: p_Z outside (0, 1)");
  }
  const double ratio = p_z / (1.0 - p_z);
  const auto k = static_cast<std::int64_t>(std::llround(static_cast<double>(n) * ratio * ratio));
  return std::max<std::int64_t>(1, k);
}

ProtocolParams ProtocolParams::from_quota(std::int64_t n, std::int64_t k, double q_tol_z,
                                          double q_max_x) {
  const auto [p_x, p_z] = basis_probs_from_quota(n, k);
  ProtocolParams params{n, k, Probability(p_x), Probability(p_z), Probability(q_tol_z),
                        Probability(q_max_x)};
  params.validate();
  return params;
}

ProtocolParams ProtocolParams::from_basis_probability(std::int64_t n, double p_z, double q_tol_z,
                                                      double q_max_x) {
  ProtocolParams params{n,
                        quota_from_basis_probability(n, p_z),
                        Probability(1.0 - p_z),
                        Probability(p_z),
                        Probability(q_tol_z),
                        Probability(q_max_x)};
  params.validate();
  return params;
}

void ProtocolParams::validate() const {
  if (n < 1 || k < 1) throw std::invalid_argument("ProtocolParams: n and k must be >= 1");
  if (std::fabs(p_x + p_z - 1.0) > 1e-12) {
    throw std::invalid_argument("ProtocolParams: p_X + p_Z must equal 1");
  }
  if (!(p_x > 0.0 && p_z > 0.0)) {
    throw std::invalid_argument("ProtocolParams: basis probabilities must be positive");
  }
  // k is an integer, so k/n can only match (p_Z/p_X)^2 to within half a unit.
  const double ratio = p_z / p_x;
  const double implied_k = static_cast<double>(n) * ratio * ratio;
  if (std::fabs(implied_k - static_cast<double>(k)) > 0.5 + 1e-9 * implied_k &&
      !(k == 1 && implied_k < 1.0)) {
    throw std::invalid_argument("ProtocolParams: p_Z^2 / p_X^2 does not match k / n");
  }
  for (double q : {q_tol_z.value(), q_max_x.value()}) {
    if (!(q > 0.0 && q < 0.5)) {
      throw std::invalid_argument("ProtocolParams: thresholds must lie in (0, 0.5)");
    }
  }
}

SessionStreams SessionStreams::derive(std::uint64_t master, std::uint64_t session) {
  return {RngStream::derive(master, session, Party::Alice, Purpose::Source),
          RngStream::derive(master, session, Party::Bob, Purpose::Basis),
          RngStream::derive(master, session, Party::Channel, Purpose::Noise),
          RngStream::derive(master, session, Party::Public, Purpose::Subsample)};
}

SiftingLedger::SiftingLedger(std::int64_t n, std::int64_t k) : n_(n), k_(k) {
  if (n < 1 || k < 1) throw std::invalid_argument("SiftingLedger: quotas must be >= 1");
}

bool SiftingLedger::add_slot(Basis alice, Basis bob, bool detected, bool local_bit) {
  if (complete_) return true;
  ++sent_;
  if (detected) {
    ++received_;
    if (alice == bob) (alice == Basis::X ? x_bits_ : z_bits_).push_back(local_bit);
  }
  complete_ = static_cast<std::int64_t>(x_bits_.size()) >= n_ &&
              static_cast<std::int64_t>(z_bits_.size()) >= k_;
  return complete_;
}

SiftingLedger::Selection SiftingLedger::select(RngStream public_rng) const {
  if (!complete_) throw std::logic_error("SiftingLedger::select: quotas not met");
  Selection out;
  out.key = pick(x_bits_, n_, public_rng);
  out.estimation = pick(z_bits_, k_, public_rng);
  return out;
}

SlotDraw draw_slot(const ProtocolParams& params, const ChannelModel& model,
                   SessionStreams& streams) {
  SlotDraw slot{};
  slot.alice_bit = streams.source.bit();
  slot.alice_basis = streams.source.bernoulli(params.p_x) ? Basis::X : Basis::Z;
  slot.bob_basis = streams.basis.bernoulli(params.p_x) ? Basis::X : Basis::Z;
  slot.bob_bit = transmit(model, slot.alice_bit, slot.alice_basis, slot.bob_basis, streams.noise);
  return slot;
}

SessionRecord run_sifting(const ProtocolParams& params, const ChannelModel& model,
                          SessionStreams& streams) {
  params.validate();
  const double eta = model.detection;
  if (eta <= 0.0) throw SiftingBudgetExceeded("run_sifting: detection probability is zero");
  const double budget = 100.0 * expected_slots(params.n, params.k) / eta;

  SiftingLedger alice(params.n, params.k);
  SiftingLedger bob(params.n, params.k);
  while (!alice.complete()) {
    if (static_cast<double>(alice.sent()) >= budget) {
      throw SiftingBudgetExceeded("run_sifting: slot budget exhausted before quotas were met");
    }
    const SlotDraw slot = draw_slot(params, model, streams);
    const bool detected = slot.bob_bit.has_value();
    alice.add_slot(slot.alice_basis, slot.bob_basis, detected, slot.alice_bit);
    bob.add_slot(slot.alice_basis, slot.bob_basis, detected, slot.bob_bit.value_or(false));
  }

  auto alice_sel = alice.select(streams.subsample);
  auto bob_sel = bob.select(streams.subsample);
  SessionRecord record;
  record.x = std::move(alice_sel.key);
  record.z = std::move(alice_sel.estimation);
  record.x_prime = std::move(bob_sel.key);
  record.z_prime = std::move(bob_sel.estimation);
  record.sent_count = alice.sent();
  record.received_count = alice.received();
  record.x_match_count = alice.x_matches();
  record.z_match_count = alice.z_matches();
  record.empirical_q_z =
      static_cast<double>(record.estimation_errors()) / static_cast<double>(params.k);
  return record;
}

EstimationDecision estimate_and_test(const SessionRecord& record, const ProtocolParams& params) {
  if (record.z.empty() || record.z.size() != record.z_prime.size()) {
    throw std::invalid_argument("estimate_and_test: incomplete estimation strings");
  }
  const double q = static_cast<double>(record.estimation_errors()) /
                   static_cast<double>(record.z.size());
  return q > params.q_tol_z ? EstimationDecision::Abort : EstimationDecision::Continue;
}

std::vector<std::uint8_t> serialize(const SessionRecord& record) {
  ByteWriter w;
  w.bytes(kRecordMagic);
  w.u8(kRecordVersion);
  auto put_bits = [&](std::uint8_t tag, const BitVector& v) {
    ByteWriter body;
    body.bits(v);
    w.u8(tag);
    w.u32(static_cast<std::uint32_t>(body.buffer().size()));
    w.bytes(body.buffer());
  };
  auto put_count = [&](std::uint8_t tag, std::uint64_t v) {
    w.u8(tag);
    w.u32(8);
    w.u64(v);
  };
  put_bits(kTagX, record.x);
  put_bits(kTagXPrime, record.x_prime);
  put_bits(kTagZ, record.z);
  put_bits(kTagZPrime, record.z_prime);
  put_count(kTagSent, record.sent_count);
  put_count(kTagReceived, record.received_count);
  put_count(kTagXMatches, record.x_match_count);
  put_count(kTagZMatches, record.z_match_count);
  return w.take();
}

SessionRecord deserialize_session_record(std::span<const std::uint8_t> blob) {
  ByteReader r(blob);
  const auto magic = r.bytes(4);
  if (!std::equal(magic.begin(), magic.end(), std::begin(kRecordMagic))) {
    throw DecodeError("session record: bad magic");
  }
  if (r.u8() != kRecordVersion) throw DecodeError("session record: unsupported version");

  SessionRecord record;
  while (!r.done()) {
    const std::uint8_t tag = r.u8();
    const std::uint32_t length = r.u32();
    ByteReader field(r.bytes(length));
    switch (tag) {
      case kTagX: record.x = field.bits(); break;
      case kTagXPrime: record.x_prime = field.bits(); break;
      case kTagZ: record.z = field.bits(); break;
      case kTagZPrime: record.z_prime = field.bits(); break;
      case kTagSent: record.sent_count = field.u64(); break;
      case kTagReceived: record.received_count = field.u64(); break;
      case kTagXMatches: record.x_match_count = field.u64(); break;
      case kTagZMatches: record.z_match_count = field.u64(); break;
      default: break;  // unknown tags are skipped
    }
  }
  if (record.x.size() != record.x_prime.size() || record.z.size() != record.z_prime.size()) {
    throw DecodeError("session record: string length mismatch");
  }
  if (!record.z.empty()) {
    record.empirical_q_z =
        static_cast<double>(record.estimation_errors()) / static_cast<double>(record.z.size());
  }
  return record;
}

}  // namespace fkqkd
