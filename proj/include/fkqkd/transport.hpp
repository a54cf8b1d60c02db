#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace fkqkd {

/// Wire message tags. QuantumBatch stands in for the optical link and is not
/// part of the classical transcript.
enum class MessageType : std::uint8_t {
  QuantumBatch = 0x01,
  Detections = 0x02,
  Bases = 0x03,
  EstimationBits = 0x04,
  Verdict = 0x05,
  ParityRequest = 0x06,
  Parities = 0x07,
  SyndromeRequest = 0x08,
  Syndromes = 0x09,
  WinnowDone = 0x0A,
  VerifyTag = 0x0B,
  VerifyVerdict = 0x0C,
  AmplifySeed = 0x0D,
  Abort = 0x0E,
};

std::string to_string(MessageType type);

struct Message {
  MessageType type;
  std::vector<std::uint8_t> payload;
};

/// Raised by receive() once the peer has gone away and nothing is queued.
class TransportClosed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Ordered, reliable, blocking message pipe to one peer.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual void send(const Message& message) = 0;
  virtual Message receive() = 0;
};

/// Two connected in-process endpoints.
std::pair<std::unique_ptr<Transport>, std::unique_ptr<Transport>> make_memory_pair();

/// Byte-stream framing: 4-byte big-endian payload length, 1-byte type, payload.
std::vector<std::uint8_t> encode_frame(const Message& message);

inline constexpr std::uint32_t kMaxPayload = 1U << 28;

/// Message over a connected stream socket or pipe. Owns the descriptor.
class StreamTransport final : public Transport {
 public:
  explicit StreamTransport(int fd);
  ~StreamTransport() override;
  StreamTransport(const StreamTransport&) = delete;
  StreamTransport& operator=(const StreamTransport&) = delete;
  StreamTransport(StreamTransport&& other) noexcept;
  StreamTransport& operator=(StreamTransport&& other) noexcept;

  void send(const Message& message) override;
  Message receive() override;

 private:
  void read_exact(std::uint8_t* out, std::size_t count);
  int fd_ = -1;
};

/// Two StreamTransports over a local socketpair.
std::pair<std::unique_ptr<Transport>, std::unique_ptr<Transport>> make_socket_pair();

/// TCP helpers for running the endpoints as separate processes.
class TcpListener {
 public:
  /// Binds to 127.0.0.1:port (0 picks a free port).
  explicit TcpListener(std::uint16_t port);
  ~TcpListener();
  TcpListener(const TcpListener&) = delete;
  TcpListener& operator=(const TcpListener&) = delete;

  std::uint16_t port() const { return port_; }
  std::unique_ptr<Transport> accept();

 private:
  int fd_ = -1;
  std::uint16_t port_ = 0;
};

std::unique_ptr<Transport> tcp_connect(const std::string& host, std::uint16_t port);

}  // namespace fkqkd
