#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <vector>

#include "fkqkd/bounds.hpp"
#include "fkqkd/channel.hpp"
#include "fkqkd/privacy.hpp"
#include "fkqkd/reconciliation.hpp"
#include "fkqkd/sifting.hpp"
#include "fkqkd/transport.hpp"

namespace fkqkd {

/// Everything both endpoints agree on before the first photon.
struct SessionPlan {
  ProtocolParams params;
  ChannelModel channel;
  SecurityBudget budget;
  /// Empty when no Winnow schedule meets the residual target.
  std::optional<WinnowSchedule> schedule;
  std::vector<SecrecyMode> modes{SecrecyMode::General, SecrecyMode::Pragmatic};
  std::uint64_t master_seed = 1;
  std::uint64_t session = 0;
  std::size_t batch_slots = 4096;
  /// Optional shared cache for the pragmatic bound at (n, k, q_tol_z). Not
  /// thread-safe; share only between sessions run one after another.
  std::shared_ptr<PragmaticSolver> pragmatic;
};

/// Plan with the schedule from optimize_schedule(q_max_x, n, fail, Q_X of
/// the channel), or no schedule if that search is infeasible.
SessionPlan make_plan(const ProtocolParams& params, const ChannelModel& channel,
                      const SecurityBudget& budget, std::uint64_t master_seed,
                      std::uint64_t session);

enum class SessionStatus { Accepted, EstimationAbort, VerificationAbort, ReconciliationInfeasible };

std::string to_string(SessionStatus status);

/// The peer sent Abort, or a message arrived out of order.
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct AliceOutcome {
  SessionStatus status = SessionStatus::Accepted;
  BitVector key;  // sifted key X
  std::uint64_t sent_count = 0;
  std::uint64_t received_count = 0;
  std::uint64_t x_match_count = 0;
  std::uint64_t z_match_count = 0;
  std::size_t estimation_errors = 0;
  std::uint64_t leakage = 0;
  BoundReport report;
  std::vector<ExportedKey> keys;
  /// Alice's view of the classical channel: per message a direction byte
  /// (0 sent, 1 received) followed by the stream framing of the message.
  std::vector<std::uint8_t> transcript;
};

struct BobOutcome {
  SessionStatus status = SessionStatus::Accepted;
  BitVector reconciled;  // X-hat
  std::uint64_t corrections = 0;
  double residual_estimate = 0.0;
  std::vector<ExportedKey> keys;
};

/// The two endpoint state machines. Each runs to completion on its own
/// thread or process and talks only through the transport.
AliceOutcome run_alice(const SessionPlan& plan, Transport& link);
BobOutcome run_bob(const SessionPlan& plan, Transport& link);

struct SessionResult {
  SessionStatus status = SessionStatus::Accepted;
  std::uint64_t sent_count = 0;
  std::uint64_t received_count = 0;
  std::uint64_t x_match_count = 0;
  std::uint64_t z_match_count = 0;
  std::size_t estimation_errors = 0;
  double empirical_q_z = 0.0;
  std::uint64_t leakage = 0;
  std::uint64_t corrections = 0;
  double residual_estimate = 0.0;
  /// X == X-hat after reconciliation. Known only to the simulator.
  bool reconciled_equal = false;
  BoundReport report;
  std::vector<ExportedKey> alice_keys;
  std::vector<ExportedKey> bob_keys;
  std::vector<std::uint8_t> transcript;
};

enum class TransportKind { Memory, Socket };

/// Runs Alice on a worker thread and Bob on the calling thread.
SessionResult run_session(const SessionPlan& plan, TransportKind kind = TransportKind::Memory);

}  // namespace fkqkd
