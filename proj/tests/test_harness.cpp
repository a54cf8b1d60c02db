#include <doctest.h>

#include <cmath>
#include <sstream>
#include <thread>

#include "fkqkd/config.hpp"
#include "fkqkd/session.hpp"
#include "fkqkd/sweep.hpp"
#include "fkqkd/transport.hpp"

using namespace fkqkd;

namespace {

ExperimentConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

SessionPlan plan_for(const ChannelModel& channel, std::int64_t n, double p_z, std::uint64_t seed,
                     std::uint64_t session) {
  const SecurityBudget budget{};
  const Qber q = effective_qber(channel);
  const std::int64_t k = quota_from_basis_probability(n, p_z);
  const OperatingPoint op = choose_operating_point(n, k, q.x, q.z, budget);
  const auto params = ProtocolParams::from_basis_probability(n, p_z, op.q_tol_z, op.q_max_x);
  return make_plan(params, channel, budget, seed, session);
}

void exchange(Transport& a, Transport& b) {
  const Message m{MessageType::Parities, {1, 2, 3}};
  a.send(m);
  const Message got = b.receive();
  CHECK(got.type == MessageType::Parities);
  CHECK(got.payload == m.payload);
  b.send({MessageType::WinnowDone, {}});
  const Message back = a.receive();
  CHECK(back.type == MessageType::WinnowDone);
  CHECK(back.payload.empty());
}

}  // namespace

TEST_CASE("config defaults and overrides") {
  const ExperimentConfig d = parse("");
  CHECK(d.n == 10000);
  CHECK(d.p_z == doctest::Approx(0.49));
  CHECK(d.presets.size() == 4);
  CHECK(d.budget.eps_sec == doctest::Approx(1e-10));

  const ExperimentConfig c = parse(
      "# comment\n"
      "n = 2000   # trailing\n"
      "presets = b, d\n"
      "n_values = 1000,5000\n"
      "modes = PS\n"
      "seed = 42\n"
      "transport = socket\n");
  CHECK(c.n == 2000);
  CHECK(c.presets == std::vector<std::string>{"b", "d"});
  CHECK(c.n_values == std::vector<std::int64_t>{1000, 5000});
  CHECK(c.modes == std::vector<SecrecyMode>{SecrecyMode::Pragmatic});
  CHECK(c.master_seed == 42);
  CHECK(c.transport == "socket");

  const ExperimentConfig custom = parse("background = 0.1\nerror_x = 0.003\nerror_z = 0\n");
  REQUIRE(custom.channel);
  CHECK(effective_qber(primary_channel(custom)).x == doctest::Approx(0.0527));
  const ExperimentConfig pair = parse("qber_x = 0.02\nqber_z = 0.04\n");
  CHECK(effective_qber(primary_channel(pair)).z == doctest::Approx(0.04));
}

TEST_CASE("config errors") {
  CHECK_THROWS_AS(parse("n 100\n"), ConfigError);
  CHECK_THROWS_AS(parse("colour = red\n"), ConfigError);
  CHECK_THROWS_AS(parse("n = many\n"), ConfigError);
  CHECK_THROWS_AS(parse("preset = z\n"), ConfigError);
  CHECK_THROWS_AS(parse("background = 0.1\n"), ConfigError);
  CHECK_THROWS_AS(parse("qber_x = 0.02\n"), ConfigError);
  CHECK_THROWS_AS(parse("trials = 0\n"), ConfigError);
  CHECK_THROWS_AS(parse("eps_sec = 2\n"), ConfigError);
  CHECK_THROWS_AS(parse("transport = pigeon\n"), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/config.txt"), ConfigError);
}

TEST_CASE("stream framing") {
  const auto bytes = encode_frame({MessageType::Bases, {0xAA, 0xBB}});
  CHECK(bytes == std::vector<std::uint8_t>{0, 0, 0, 2, 0x03, 0xAA, 0xBB});
  CHECK(to_string(MessageType::Abort) == "Abort");
}

TEST_CASE("transports deliver in order") {
  SUBCASE("memory") {
    auto [a, b] = make_memory_pair();
    exchange(*a, *b);
    b.reset();
    CHECK_THROWS_AS(a->receive(), TransportClosed);
  }
  SUBCASE("socketpair") {
    auto [a, b] = make_socket_pair();
    exchange(*a, *b);
    std::vector<std::uint8_t> big(1 << 20, 7);
    std::thread writer([&] { a->send({MessageType::QuantumBatch, big}); });
    CHECK(b->receive().payload == big);
    writer.join();
    b.reset();
    CHECK_THROWS_AS(a->receive(), TransportClosed);
  }
  SUBCASE("tcp") {
    TcpListener listener(0);
    CHECK(listener.port() != 0);
    std::unique_ptr<Transport> client;
    std::thread connector([&] { client = tcp_connect("127.0.0.1", listener.port()); });
    auto server = listener.accept();
    connector.join();
    exchange(*client, *server);
  }
}

TEST_CASE("noiseless session yields equal keys") {
  const ChannelModel channel{Probability(0.0), Probability(0.0), Probability(0.0),
                             Probability(1.0)};
  const SessionResult r = run_session(plan_for(channel, 10000, 0.49, 1, 0));
  CHECK(r.status == SessionStatus::Accepted);
  CHECK(r.reconciled_equal);
  CHECK(r.estimation_errors == 0);
  CHECK(r.corrections == 0);
  REQUIRE(r.alice_keys.size() == 2);
  REQUIRE(r.bob_keys.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(r.alice_keys[i].bits == r.bob_keys[i].bits);
    CHECK(r.alice_keys[i].mode == r.bob_keys[i].mode);
    CHECK(r.alice_keys[i].bits.size() > 0);
  }
  CHECK(r.alice_keys[0].bits.size() == static_cast<std::size_t>(r.report.length_gs));
  CHECK(r.alice_keys[1].bits.size() == static_cast<std::size_t>(r.report.length_ps));
}

TEST_CASE("session on the best preset over both transports") {
  const ChannelModel channel = ChannelModel::from_qber(channel_preset("a").qber);
  const SessionPlan plan = plan_for(channel, 10000, 0.49, 3, 5);
  const SessionResult memory = run_session(plan, TransportKind::Memory);
  const SessionResult socket = run_session(plan, TransportKind::Socket);
  CHECK(memory.status == SessionStatus::Accepted);
  CHECK(memory.reconciled_equal);
  CHECK(memory.leakage > 0);
  CHECK(memory.transcript == socket.transcript);
  CHECK(memory.alice_keys[0].bits == socket.alice_keys[0].bits);
  // a direction byte then the framed message; the quantum batches are left out
  REQUIRE(memory.transcript.size() > 6);
  CHECK(memory.transcript[0] == 1);
  CHECK(memory.transcript[5] == static_cast<std::uint8_t>(MessageType::Detections));
}

TEST_CASE("transcripts are reproducible and depend on the session index") {
  const ChannelModel channel = ChannelModel::from_qber(channel_preset("b").qber);
  const SessionResult a = run_session(plan_for(channel, 3000, 0.4, 9, 1));
  const SessionResult b = run_session(plan_for(channel, 3000, 0.4, 9, 1));
  const SessionResult c = run_session(plan_for(channel, 3000, 0.4, 9, 2));
  CHECK(a.transcript == b.transcript);
  CHECK(a.transcript != c.transcript);
}

TEST_CASE("noisy preset: general secrecy empty, pragmatic secrecy positive") {
  const ChannelModel channel = ChannelModel::from_qber(channel_preset("d").qber);
  const SessionResult r = run_session(plan_for(channel, 100000, 0.16, 1, 0));
  REQUIRE(r.status == SessionStatus::Accepted);
  CHECK(r.reconciled_equal);
  CHECK(r.report.length_gs == 0);
  CHECK(r.report.length_ps > 0);
  // empty keys are not exported
  REQUIRE(r.alice_keys.size() == 1);
  REQUIRE(r.bob_keys.size() == 1);
  CHECK(r.alice_keys[0].mode == SecrecyMode::Pragmatic);
  CHECK(r.alice_keys[0].bits.size() == static_cast<std::size_t>(r.report.length_ps));
  CHECK(r.alice_keys[0].bits == r.bob_keys[0].bits);
}

TEST_CASE("estimation aborts above the tolerance") {
  const ChannelModel channel = ChannelModel::from_qber({0.05, 0.2});
  const auto params = ProtocolParams::from_quota(2000, 1000, 0.05, 0.07);
  const SessionResult r = run_session(make_plan(params, channel, SecurityBudget{}, 1, 0));
  CHECK(r.status == SessionStatus::EstimationAbort);
  CHECK(r.alice_keys.empty());
  CHECK(r.bob_keys.empty());
}

TEST_CASE("sweep output is reproducible") {
  const ExperimentConfig config = parse(
      "presets = a\n"
      "n_values = 2000\n"
      "p_z_values = 0.49\n"
      "trials = 3\n"
      "optimize_theory = false\n");
  std::string streamed;
  const auto rows = sweep_rates(config, [&](const SweepRow& r) { streamed += sweep_csv_row(r); });
  REQUIRE(rows.size() == 2);
  std::string again;
  for (const auto& r : sweep_rates(config)) again += sweep_csv_row(r);
  CHECK(streamed == again);
  CHECK(rows[0].mode == SecrecyMode::General);
  CHECK(rows[1].mode == SecrecyMode::Pragmatic);
  CHECK(rows[0].trials == 3);
  CHECK(rows[0].accepted + rows[0].estimation_aborts + rows[0].verification_aborts <= 3);
  CHECK(rows[1].rate_mean >= rows[0].rate_mean);
  CHECK(rows[0].rate_asymptotic == doctest::Approx(asymptotic_rate(0.003, 0.015)));
  CHECK(sweep_csv_header().rfind("preset,Q_X,Q_Z,p_Z,n,k,mode,", 0) == 0);
}

TEST_CASE("minimum qubits for a target length") {
  const SecurityBudget budget{};
  const QubitBudgetRow zero = min_qubits_for_length(0, 0.01, budget);
  CHECK(zero.feasible);
  CHECK(zero.qubits == doctest::Approx(4.0));

  double prev = 0.0;
  for (double q : {0.0, 0.01, 0.03, 0.06}) {
    const QubitBudgetRow r = min_qubits_for_length(1000, q, budget);
    REQUIRE(r.feasible);
    CHECK(r.qubits >= prev);
    CHECK(secret_len_gs(r.n, r.k, r.q_tol_z, approximate_leakage(r.n, q), budget) >= 1000);
    CHECK(r.qubits == doctest::Approx(expected_qubits(r.n, r.k)));
    prev = r.qubits;
  }
  CHECK(!min_qubits_for_length(1000, 0.2, budget).feasible);
  CHECK(qubit_csv_header() == "Q,l_target,M,n,k,Q_tol_Z,feasible");
}
