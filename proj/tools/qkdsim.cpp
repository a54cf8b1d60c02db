// qkdsim: command-line front end for sessions, sweeps, bounds and framing.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <iterator>
#include <memory>
#include <sstream>
#include <string>
#include <thread>

#include "fkqkd/byteio.hpp"
#include "fkqkd/config.hpp"
#include "fkqkd/framing.hpp"
#include "fkqkd/reconciliation.hpp"
#include "fkqkd/session.hpp"
#include "fkqkd/sweep.hpp"
#include "fkqkd/transport.hpp"

namespace {

using namespace fkqkd;

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kEstimationAbort = 2,
  kVerificationAbort = 3,
  kInfeasible = 4,
  kFraming = 5,
  kIo = 6,
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

ExperimentConfig read_config(const std::string& path) {
  if (path.empty()) return ExperimentConfig{};
  return load_config(path);
}

/// Output file, or stdout when the path is empty or "-".
class Output {
 public:
  explicit Output(const std::string& path) {
    if (path.empty() || path == "-") return;
    file_.open(path, std::ios::binary);
    if (!file_) throw IoError("cannot open '" + path + "' for writing");
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }
  void finish() {
    stream().flush();
    if (!stream()) throw IoError("write failed");
  }

 private:
  std::ofstream file_;
};

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

int exit_code(SessionStatus status) {
  switch (status) {
    case SessionStatus::Accepted: return kOk;
    case SessionStatus::EstimationAbort: return kEstimationAbort;
    case SessionStatus::VerificationAbort: return kVerificationAbort;
    case SessionStatus::ReconciliationInfeasible: return kInfeasible;
  }
  return kUsage;
}

SessionPlan plan_from_config(const ExperimentConfig& c) {
  const ChannelModel channel = primary_channel(c);
  const Qber q = effective_qber(channel);
  const std::int64_t k = quota_from_basis_probability(c.n, c.p_z);
  double q_tol = 0.0;
  double q_max = 0.0;
  if (c.q_tol_z && c.q_max_x) {
    q_tol = *c.q_tol_z;
    q_max = *c.q_max_x;
  } else {
    const OperatingPoint op = choose_operating_point(c.n, k, q.x, q.z, c.budget);
    q_tol = c.q_tol_z.value_or(op.q_tol_z);
    q_max = c.q_max_x.value_or(op.q_max_x);
  }
  const ProtocolParams params = ProtocolParams::from_basis_probability(c.n, c.p_z, q_tol, q_max);
  SessionPlan plan = make_plan(params, channel, c.budget, c.master_seed, c.session);
  plan.modes = c.modes;
  return plan;
}

void write_keys(const std::string& prefix, const std::vector<ExportedKey>& keys) {
  for (const auto& key : keys) {
    const std::string path = prefix + "." + to_string(key.mode) + ".key";
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    write_key(out, key);
  }
}

std::string session_csv_header() {
  return "status,n,k,Q_tol_Z,Q_max_X,sent,received,sift_X,sift_Z,errors_Z,L_EC,corrections,"
         "equal,l_GS,l_PS,r_GS,r_PS";
}

std::string session_csv_row(const SessionPlan& plan, const SessionResult& r) {
  std::ostringstream s;
  s << to_string(r.status) << ',' << plan.params.n << ',' << plan.params.k << ','
    << plan.params.q_tol_z << ',' << plan.params.q_max_x << ',' << r.sent_count << ','
    << r.received_count << ',' << r.x_match_count << ',' << r.z_match_count << ','
    << r.estimation_errors << ',' << r.leakage << ',' << r.corrections << ','
    << (r.reconciled_equal ? 1 : 0) << ',' << r.report.length_gs << ',' << r.report.length_ps
    << ',' << r.report.rate_gs << ',' << r.report.rate_ps;
  return s.str();
}

struct SessionOptions {
  std::string config;
  std::string out;
  std::string keys;
  std::string transcript;
  std::string role;  // empty: both endpoints in this process
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;
};

int run_session_verb(const SessionOptions& o) {
  const ExperimentConfig c = read_config(o.config);
  const SessionPlan plan = plan_from_config(c);

  if (!o.role.empty()) {
    // One endpoint over TCP; Bob listens, Alice connects.
    if (o.role == "bob") {
      TcpListener listener(o.port);
      std::cerr << "listening on 127.0.0.1:" << listener.port() << "\n";
      auto link = listener.accept();
      const BobOutcome bob = run_bob(plan, *link);
      std::cerr << "bob: " << to_string(bob.status) << "\n";
      if (!o.keys.empty()) write_keys(o.keys + ".bob", bob.keys);
      return exit_code(bob.status);
    }
    auto link = tcp_connect(o.host, o.port);
    const AliceOutcome alice = run_alice(plan, *link);
    std::cerr << "alice: " << to_string(alice.status) << "\n";
    if (!o.keys.empty()) write_keys(o.keys + ".alice", alice.keys);
    if (!o.transcript.empty()) {
      std::ofstream t(o.transcript, std::ios::binary);
      if (!t) throw IoError("cannot open '" + o.transcript + "' for writing");
      t.write(reinterpret_cast<const char*>(alice.transcript.data()),
              static_cast<std::streamsize>(alice.transcript.size()));
    }
    return exit_code(alice.status);
  }

  const TransportKind kind = c.transport == "socket" ? TransportKind::Socket : TransportKind::Memory;
  const SessionResult result = run_session(plan, kind);
  Output out(o.out);
  out.stream() << session_csv_header() << "\n" << session_csv_row(plan, result) << "\n";
  out.finish();
  if (!o.keys.empty()) {
    write_keys(o.keys + ".alice", result.alice_keys);
    write_keys(o.keys + ".bob", result.bob_keys);
  }
  if (!o.transcript.empty()) {
    std::ofstream t(o.transcript, std::ios::binary);
    if (!t) throw IoError("cannot open '" + o.transcript + "' for writing");
    t.write(reinterpret_cast<const char*>(result.transcript.data()),
            static_cast<std::streamsize>(result.transcript.size()));
  }
  std::cerr << "session: " << to_string(result.status) << "\n";
  return exit_code(result.status);
}

int run_sweep_verb(const std::string& config, const std::string& path) {
  const ExperimentConfig c = read_config(config);
  Output out(path);
  out.stream() << sweep_csv_header() << "\n";
  sweep_rates(c, [&](const SweepRow& row) { out.stream() << sweep_csv_row(row) << "\n" << std::flush; });
  out.finish();
  return kOk;
}

int run_budget_verb(const std::string& config, const std::string& path) {
  const ExperimentConfig c = read_config(config);
  QubitSearch search;
  search.eps_rob_cap = c.eps_rob_cap;
  Output out(path);
  out.stream() << qubit_csv_header() << "\n";
  for (double q : c.q_values) {
    out.stream() << qubit_csv_row(min_qubits_for_length(c.target_length, q, c.budget, search))
                 << "\n";
  }
  out.finish();
  return kOk;
}

int run_bounds_verb(const std::string& config, const std::string& path, bool optimize) {
  const ExperimentConfig c = read_config(config);
  const Qber q = c.qber_x ? Qber{*c.qber_x, *c.qber_z} : effective_qber(primary_channel(c));
  Output out(path);
  if (optimize) {
    out.stream() << "mode,rate,p_Z,k,Q_tol_Z,Q_max_X,r_asymptotic\n";
    for (SecrecyMode mode : c.modes) {
      const RateOptimum best = optimize_rate(c.n, q.x, q.z, c.budget, mode);
      char buf[256];
      std::snprintf(buf, sizeof buf, "%s,%.6f,%.6f,%lld,%.6f,%.6f,%.6f\n", to_string(mode).c_str(),
                    best.rate, best.p_z, static_cast<long long>(best.k), best.q_tol_z,
                    best.q_max_x, asymptotic_rate(q.x, q.z));
      out.stream() << buf;
    }
  } else {
    const std::int64_t k = quota_from_basis_probability(c.n, c.p_z);
    double q_tol = 0.0;
    double q_max = 0.0;
    if (c.q_tol_z) {
      q_tol = *c.q_tol_z;
      q_max = c.q_max_x.value_or(choose_qmax(q.x, c.n, c.budget.fail).value);
    } else {
      const OperatingPoint op = choose_operating_point(c.n, k, q.x, q.z, c.budget);
      q_tol = op.q_tol_z;
      q_max = c.q_max_x.value_or(op.q_max_x);
    }
    const BoundReport report = evaluate_bounds(
        {c.n, k, q_tol, q_max, approximate_leakage(c.n, q.x), q.z, c.budget, true});
    out.stream() << bound_csv_header() << "\n" << bound_csv_row(report) << "\n";
  }
  out.finish();
  return kOk;
}

int run_frame_verb(const std::string& direction, const std::string& in_path,
                   const std::string& out_path) {
  Output out(out_path);
  if (direction == "encode") {
    std::ifstream in(in_path);
    if (!in) throw IoError("cannot open '" + in_path + "'");
    const ExportedKey key = read_key(in);
    const auto bytes = to_bytes(encode_stream(key.bits));
    out.stream().write(reinterpret_cast<const char*>(bytes.data()),
                       static_cast<std::streamsize>(bytes.size()));
  } else {
    const auto bytes = read_file(in_path);
    const auto slots = slots_from_bytes(bytes);
    ExportedKey key;
    key.bits = decode_stream(slots);
    write_key(out.stream(), key);
  }
  out.finish();
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finite-key BB84 simulator and bound calculator"};
  app.require_subcommand(1);

  SessionOptions session;
  auto* s = app.add_subcommand("session", "Run one session between Alice and Bob");
  s->add_option("--config", session.config, "Config file");
  s->add_option("--out", session.out, "Summary CSV (default stdout)");
  s->add_option("--keys", session.keys, "Write final keys to <prefix>.<party>.<mode>.key");
  s->add_option("--transcript", session.transcript, "Write Alice's transcript bytes");
  s->add_option("--role", session.role, "Run a single endpoint over TCP")
      ->check(CLI::IsMember({"alice", "bob"}));
  s->add_option("--host", session.host, "Peer host for --role alice");
  s->add_option("--port", session.port, "TCP port (bob: 0 picks one)");

  std::string config;
  std::string out;
  auto* sw = app.add_subcommand("sweep", "Empirical and theoretical rates over a grid");
  sw->add_option("--config", config, "Config file");
  sw->add_option("--out", out, "CSV output (default stdout)");

  auto* b = app.add_subcommand("budget", "Minimum qubits for a target key length");
  b->add_option("--config", config, "Config file");
  b->add_option("--out", out, "CSV output (default stdout)");

  bool optimize = false;
  auto* bd = app.add_subcommand("bounds", "Secret-length bounds at one parameter point");
  bd->add_option("--config", config, "Config file");
  bd->add_option("--out", out, "CSV output (default stdout)");
  bd->add_flag("--optimize", optimize, "Optimize the rate over p_Z and Q_tol_Z");

  std::string direction;
  std::string in_path;
  auto* f = app.add_subcommand("frame", "Packet codec between key files and slot files");
  f->add_option("direction", direction, "encode or decode")
      ->required()
      ->check(CLI::IsMember({"encode", "decode"}));
  f->add_option("--in", in_path, "Key file (encode) or slot file (decode)")->required();
  f->add_option("--out", out, "Output path (default stdout)");
  f->add_option("--config", config, "Accepted for uniformity; unused");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*s) return run_session_verb(session);
    if (*sw) return run_sweep_verb(config, out);
    if (*b) return run_budget_verb(config, out);
    if (*bd) return run_bounds_verb(config, out, optimize);
    if (*f) return run_frame_verb(direction, in_path, out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const FramingError& e) {
    std::cerr << "framing error: " << e.what() << "\n";
    return kFraming;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kIo;
  } catch (const DecodeError& e) {
    std::cerr << "i/o error: malformed input: " << e.what() << "\n";
    return kIo;
  } catch (const TransportClosed& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kIo;
  } catch (const std::system_error& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kIo;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kUsage;
  } catch (const std::domain_error& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
