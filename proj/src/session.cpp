#include "fkqkd/session.hpp"

#include <exception>
#include <thread>

#include "fkqkd/byteio.hpp"
#include "fkqkd/toeplitz.hpp"

namespace fkqkd {

namespace {

constexpr std::uint8_t kSent = 0;
constexpr std::uint8_t kReceived = 1;

Message make_message(MessageType type, ByteWriter& w) { return {type, w.take()}; }

/// Receives one message of the expected type; Abort and anything else raise.
Message expect(Transport& link, MessageType type) {
  Message m = link.receive();
  if (m.type == MessageType::Abort) {
    throw ProtocolError("peer aborted: " + std::string(m.payload.begin(), m.payload.end()));
  }
  if (m.type != type) {
    throw ProtocolError("expected " + to_string(type) + ", got " + to_string(m.type));
  }
  return m;
}

/// Alice's link wrapper that records the classical transcript.
class RecordingLink {
 public:
  RecordingLink(Transport& link, std::vector<std::uint8_t>& log) : link_(link), log_(log) {}

  void send(const Message& m) {
    if (m.type != MessageType::QuantumBatch) record(kSent, m);
    link_.send(m);
  }
  Message expect(MessageType type) {
    Message m = fkqkd::expect(link_, type);
    record(kReceived, m);
    return m;
  }
  Message receive_any() {
    Message m = link_.receive();
    if (m.type == MessageType::Abort) {
      throw ProtocolError("peer aborted: " + std::string(m.payload.begin(), m.payload.end()));
    }
    record(kReceived, m);
    return m;
  }

 private:
  void record(std::uint8_t direction, const Message& m) {
    log_.push_back(direction);
    const auto frame = encode_frame(m);
    log_.insert(log_.end(), frame.begin(), frame.end());
  }
  Transport& link_;
  std::vector<std::uint8_t>& log_;
};

/// Sends Abort before rethrowing so the peer does not block forever.
template <typename Fn>
auto guarded(Transport& link, Fn&& body) {
  try {
    return body();
  } catch (const std::exception& e) {
    try {
      const std::string reason = e.what();
      link.send({MessageType::Abort, std::vector<std::uint8_t>(reason.begin(), reason.end())});
    } catch (...) {
    }
    throw;
  }
}

/// Bob's WinnowOracle: each query is one request/response pair on the link.
class RemoteOracle final : public WinnowOracle {
 public:
  explicit RemoteOracle(Transport& link) : link_(link) {}

  BitVector block_parities(const WinnowRound& round) override {
    ByteWriter w;
    w.u32(round.iteration);
    w.u32(round.block_size);
    w.u8(round.permuted ? 1 : 0);
    w.u64(round.permutation_seed);
    link_.send(make_message(MessageType::ParityRequest, w));
    const Message reply = expect(link_, MessageType::Parities);
    ByteReader r(reply.payload);
    return r.bits();
  }

  std::vector<std::uint32_t> block_syndromes(std::span<const std::uint32_t> blocks) override {
    ByteWriter w;
    w.u32(static_cast<std::uint32_t>(blocks.size()));
    for (std::uint32_t b : blocks) w.u32(b);
    link_.send(make_message(MessageType::SyndromeRequest, w));
    const Message reply = expect(link_, MessageType::Syndromes);
    ByteReader r(reply.payload);
    std::vector<std::uint32_t> out(r.u32());
    for (auto& s : out) s = r.u16();
    return out;
  }

 private:
  Transport& link_;
};

BitVector select_bits(const BitVector& bits, const BitVector& mask) {
  BitVector out;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask.get(i)) out.push_back(bits.get(i));
  }
  return out;
}

double epsilon_for(SecrecyMode mode, const SecurityBudget& budget) {
  return mode == SecrecyMode::General ? budget.eps_sec : budget.delta_sec();
}

}  // namespace

std::string to_string(SessionStatus status) {
  switch (status) {
    case SessionStatus::Accepted: return "accepted";
    case SessionStatus::EstimationAbort: return "estimation_abort";
    case SessionStatus::VerificationAbort: return "verification_abort";
    case SessionStatus::ReconciliationInfeasible: return "reconciliation_infeasible";
  }
  return "unknown";
}

SessionPlan make_plan(const ProtocolParams& params, const ChannelModel& channel,
                      const SecurityBudget& budget, std::uint64_t master_seed,
                      std::uint64_t session) {
  SessionPlan plan{params, channel, budget, std::nullopt, {SecrecyMode::General, SecrecyMode::Pragmatic},
                   master_seed, session, 4096, nullptr};
  try {
    plan.schedule = optimize_schedule(params.q_max_x, params.n, budget.fail,
                                      effective_qber(channel).x)
                        .schedule;
  } catch (const ReconciliationInfeasible&) {
    plan.schedule.reset();
  }
  return plan;
}

AliceOutcome run_alice(const SessionPlan& plan, Transport& transport) {
  AliceOutcome out;
  if (!plan.schedule) {
    out.status = SessionStatus::ReconciliationInfeasible;
    return out;
  }
  return guarded(transport, [&] {
    RecordingLink link(transport, out.transcript);
    const ProtocolParams& params = plan.params;
    RngStream source = RngStream::derive(plan.master_seed, plan.session, Party::Alice, Purpose::Source);

    // Quantum phase and sifting, one batch of slots at a time.
    SiftingLedger ledger(params.n, params.k);
    while (!ledger.complete()) {
      const std::size_t count = plan.batch_slots;
      BitVector bits(count);
      BitVector bases(count);  // 1 = Z
      for (std::size_t i = 0; i < count; ++i) {
        bits.set(i, source.bit());
        bases.set(i, !source.bernoulli(params.p_x));
      }
      ByteWriter batch;
      batch.u32(static_cast<std::uint32_t>(count));
      batch.bits(bits);
      batch.bits(bases);
      link.send(make_message(MessageType::QuantumBatch, batch));

      const Message det = link.expect(MessageType::Detections);
      ByteReader det_reader(det.payload);
      const BitVector detected = det_reader.bits();
      if (detected.size() != count) throw ProtocolError("detection mask has the wrong length");

      ByteWriter mine;
      mine.bits(select_bits(bases, detected));
      link.send(make_message(MessageType::Bases, mine));
      const Message theirs = link.expect(MessageType::Bases);
      ByteReader theirs_reader(theirs.payload);
      const BitVector bob_bases = theirs_reader.bits();
      if (bob_bases.size() != detected.weight()) throw ProtocolError("basis list has the wrong length");

      std::size_t d = 0;
      for (std::size_t i = 0; i < count && !ledger.complete(); ++i) {
        const Basis a = bases.get(i) ? Basis::Z : Basis::X;
        if (detected.get(i)) {
          const Basis b = bob_bases.get(d++) ? Basis::Z : Basis::X;
          ledger.add_slot(a, b, true, bits.get(i));
        } else {
          ledger.add_slot(a, a, false, bits.get(i));
        }
      }
    }
    auto selection =
        ledger.select(RngStream::derive(plan.master_seed, plan.session, Party::Public, Purpose::Subsample));
    out.key = std::move(selection.key);
    out.sent_count = ledger.sent();
    out.received_count = ledger.received();
    out.x_match_count = ledger.x_matches();
    out.z_match_count = ledger.z_matches();

    // Parameter estimation.
    const Message est = link.expect(MessageType::EstimationBits);
    ByteReader est_reader(est.payload);
    const BitVector bob_estimation = est_reader.bits();
    if (bob_estimation.size() != selection.estimation.size()) {
      throw ProtocolError("estimation string has the wrong length");
    }
    SessionRecord view;
    view.z = selection.estimation;
    view.z_prime = bob_estimation;
    out.estimation_errors = view.estimation_errors();
    const bool abort = estimate_and_test(view, params) == EstimationDecision::Abort;
    ByteWriter verdict;
    verdict.u8(abort ? 1 : 0);
    verdict.u32(static_cast<std::uint32_t>(out.estimation_errors));
    link.send(make_message(MessageType::Verdict, verdict));
    if (abort) {
      out.status = SessionStatus::EstimationAbort;
      return out;
    }

    // Winnow: answer Bob's queries until he reports the leakage.
    WinnowResponder responder(out.key);
    for (;;) {
      const Message m = link.receive_any();
      ByteReader r(m.payload);
      if (m.type == MessageType::ParityRequest) {
        WinnowRound round;
        round.iteration = r.u32();
        round.block_size = r.u32();
        round.permuted = r.u8() != 0;
        round.permutation_seed = r.u64();
        ByteWriter w;
        w.bits(responder.block_parities(round));
        link.send(make_message(MessageType::Parities, w));
      } else if (m.type == MessageType::SyndromeRequest) {
        std::vector<std::uint32_t> blocks(r.u32());
        for (auto& b : blocks) b = r.u32();
        const auto syndromes = responder.block_syndromes(blocks);
        ByteWriter w;
        w.u32(static_cast<std::uint32_t>(syndromes.size()));
        for (auto s : syndromes) w.u16(static_cast<std::uint16_t>(s));
        link.send(make_message(MessageType::Syndromes, w));
      } else if (m.type == MessageType::WinnowDone) {
        out.leakage = r.u64();
        break;
      } else {
        throw ProtocolError("unexpected " + to_string(m.type) + " during reconciliation");
      }
    }

    // Error verification.
    RngStream verify_rng =
        RngStream::derive(plan.master_seed, plan.session, Party::Public, Purpose::Verify);
    const VerificationTag tag = make_verification_tag(
        out.key, static_cast<std::size_t>(plan.budget.verification_bits()), verify_rng);
    ByteWriter tag_msg;
    tag_msg.bits(tag.seed.diagonal());
    tag_msg.bits(tag.tag);
    link.send(make_message(MessageType::VerifyTag, tag_msg));
    const Message vv = link.expect(MessageType::VerifyVerdict);
    ByteReader vv_reader(vv.payload);
    if (vv_reader.u8() == 0) {
      out.status = SessionStatus::VerificationAbort;
      return out;
    }

    // Key lengths from the measured leakage, then privacy amplification.
    const auto leakage = static_cast<std::int64_t>(out.leakage);
    BoundReport& rep = out.report;
    rep.n = params.n;
    rep.k = params.k;
    rep.p_z = params.p_z;
    rep.q_tol_z = params.q_tol_z;
    rep.q_max_x = params.q_max_x;
    rep.leakage = leakage;
    rep.mu = mu(params.n, params.k, plan.budget.eps_sec);
    rep.length_gs = secret_len_gs(params.n, params.k, params.q_tol_z, leakage, plan.budget);
    const std::int64_t code_length = pragmatic_code_length(params.n, leakage, plan.budget);
    if (plan.pragmatic) {
      rep.length_ps = plan.pragmatic->secret_length(code_length, plan.budget.delta_sec());
    } else {
      rep.length_ps = secret_len_ps(params.n, params.k, params.q_tol_z, code_length,
                                    plan.budget.delta_sec());
    }
    rep.eps_rob = eps_rob_bound(params.k, params.q_tol_z, effective_qber(plan.channel).z);
    rep.qubits = expected_qubits(params.n, params.k);
    rep.rate_gs = key_rate(rep.length_gs, params.n, params.k, rep.eps_rob);
    rep.rate_ps = key_rate(rep.length_ps, params.n, params.k, rep.eps_rob);

    RngStream amplify_rng =
        RngStream::derive(plan.master_seed, plan.session, Party::Public, Purpose::Amplify);
    for (SecrecyMode mode : plan.modes) {
      const std::int64_t length = mode == SecrecyMode::General ? rep.length_gs : rep.length_ps;
      ByteWriter w;
      w.u8(mode == SecrecyMode::General ? 0 : 1);
      w.u64(static_cast<std::uint64_t>(length));
      if (length > 0) {
        const ToeplitzSeed seed =
            ToeplitzSeed::random(static_cast<std::size_t>(length), out.key.size(), amplify_rng);
        w.bits(seed.diagonal());
        out.keys.push_back({toeplitz_hash(seed, out.key), mode, epsilon_for(mode, plan.budget)});
      }
      link.send(make_message(MessageType::AmplifySeed, w));
    }
    return out;
  });
}

BobOutcome run_bob(const SessionPlan& plan, Transport& link) {
  BobOutcome out;
  if (!plan.schedule) {
    out.status = SessionStatus::ReconciliationInfeasible;
    return out;
  }
  return guarded(link, [&] {
    const ProtocolParams& params = plan.params;
    RngStream basis_rng = RngStream::derive(plan.master_seed, plan.session, Party::Bob, Purpose::Basis);
    RngStream noise_rng =
        RngStream::derive(plan.master_seed, plan.session, Party::Channel, Purpose::Noise);

    SiftingLedger ledger(params.n, params.k);
    while (!ledger.complete()) {
      const Message batch = expect(link, MessageType::QuantumBatch);
      ByteReader r(batch.payload);
      const std::size_t count = r.u32();
      const BitVector bits = r.bits();
      const BitVector alice_bases_all = r.bits();
      if (bits.size() != count || alice_bases_all.size() != count) {
        throw ProtocolError("quantum batch has inconsistent lengths");
      }
      BitVector detected(count);
      BitVector measured(count);
      BitVector my_bases(count);
      for (std::size_t i = 0; i < count; ++i) {
        const Basis sent_basis = alice_bases_all.get(i) ? Basis::Z : Basis::X;
        const Basis mine = basis_rng.bernoulli(params.p_x) ? Basis::X : Basis::Z;
        my_bases.set(i, mine == Basis::Z);
        const auto outcome = transmit(plan.channel, bits.get(i), sent_basis, mine, noise_rng);
        if (outcome) {
          detected.set(i, true);
          measured.set(i, *outcome);
        }
      }
      ByteWriter det;
      det.bits(detected);
      link.send(make_message(MessageType::Detections, det));
      const Message theirs = expect(link, MessageType::Bases);
      ByteReader theirs_reader(theirs.payload);
      const BitVector alice_bases = theirs_reader.bits();
      if (alice_bases.size() != detected.weight()) throw ProtocolError("basis list has the wrong length");
      ByteWriter mine_msg;
      mine_msg.bits(select_bits(my_bases, detected));
      link.send(make_message(MessageType::Bases, mine_msg));

      std::size_t d = 0;
      for (std::size_t i = 0; i < count && !ledger.complete(); ++i) {
        const Basis b = my_bases.get(i) ? Basis::Z : Basis::X;
        if (detected.get(i)) {
          const Basis a = alice_bases.get(d++) ? Basis::Z : Basis::X;
          ledger.add_slot(a, b, true, measured.get(i));
        } else {
          ledger.add_slot(b, b, false, false);
        }
      }
    }
    auto selection =
        ledger.select(RngStream::derive(plan.master_seed, plan.session, Party::Public, Purpose::Subsample));

    ByteWriter est;
    est.bits(selection.estimation);
    link.send(make_message(MessageType::EstimationBits, est));
    const Message verdict = expect(link, MessageType::Verdict);
    ByteReader verdict_reader(verdict.payload);
    if (verdict_reader.u8() != 0) {
      out.status = SessionStatus::EstimationAbort;
      return out;
    }

    RemoteOracle oracle(link);
    RngStream winnow_rng =
        RngStream::derive(plan.master_seed, plan.session, Party::Public, Purpose::Winnow);
    ReconciliationReport report = winnow_reconcile(selection.key, *plan.schedule, oracle, winnow_rng);
    ByteWriter done;
    done.u64(report.leakage);
    link.send(make_message(MessageType::WinnowDone, done));
    out.reconciled = std::move(report.corrected);
    out.corrections = report.corrections;
    out.residual_estimate = report.residual_estimate;

    const Message tag_msg = expect(link, MessageType::VerifyTag);
    ByteReader tag_reader(tag_msg.payload);
    BitVector diagonal = tag_reader.bits();
    BitVector tag_bits = tag_reader.bits();
    const std::size_t hash_len = tag_bits.size();
    const VerificationTag tag{ToeplitzSeed(std::move(diagonal), hash_len, out.reconciled.size()),
                              std::move(tag_bits)};
    const bool match = tag_matches(tag, out.reconciled);
    ByteWriter vv;
    vv.u8(match ? 1 : 0);
    link.send(make_message(MessageType::VerifyVerdict, vv));
    if (!match) {
      out.status = SessionStatus::VerificationAbort;
      return out;
    }

    for (std::size_t i = 0; i < plan.modes.size(); ++i) {
      const Message m = expect(link, MessageType::AmplifySeed);
      ByteReader r(m.payload);
      const SecrecyMode mode = r.u8() == 0 ? SecrecyMode::General : SecrecyMode::Pragmatic;
      const auto length = static_cast<std::size_t>(r.u64());
      if (length == 0) continue;
      const ToeplitzSeed seed(r.bits(), length, out.reconciled.size());
      out.keys.push_back({toeplitz_hash(seed, out.reconciled), mode, epsilon_for(mode, plan.budget)});
    }
    return out;
  });
}

SessionResult run_session(const SessionPlan& plan, TransportKind kind) {
  auto [alice_end, bob_end] =
      kind == TransportKind::Memory ? make_memory_pair() : make_socket_pair();

  AliceOutcome alice;
  std::exception_ptr alice_error;
  std::thread worker([&, link = alice_end.get()] {
    try {
      alice = run_alice(plan, *link);
    } catch (...) {
      alice_error = std::current_exception();
    }
  });
  BobOutcome bob;
  std::exception_ptr bob_error;
  try {
    bob = run_bob(plan, *bob_end);
  } catch (...) {
    bob_error = std::current_exception();
  }
  worker.join();
  if (alice_error) std::rethrow_exception(alice_error);
  if (bob_error) std::rethrow_exception(bob_error);
  if (alice.status != bob.status) throw ProtocolError("endpoints finished in different states");

  SessionResult result;
  result.status = alice.status;
  result.sent_count = alice.sent_count;
  result.received_count = alice.received_count;
  result.x_match_count = alice.x_match_count;
  result.z_match_count = alice.z_match_count;
  result.estimation_errors = alice.estimation_errors;
  result.empirical_q_z = plan.params.k > 0 ? static_cast<double>(alice.estimation_errors) /
                                                 static_cast<double>(plan.params.k)
                                           : 0.0;
  result.leakage = alice.leakage;
  result.corrections = bob.corrections;
  result.residual_estimate = bob.residual_estimate;
  result.reconciled_equal = !bob.reconciled.empty() && bob.reconciled == alice.key;
  result.report = alice.report;
  result.alice_keys = std::move(alice.keys);
  result.bob_keys = std::move(bob.keys);
  result.transcript = std::move(alice.transcript);
  return result;
}

}  // namespace fkqkd
