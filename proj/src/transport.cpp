#include "fkqkd/transport.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <mutex>

#include "fkqkd/byteio.hpp"

namespace fkqkd {

std::string to_string(MessageType type) {
  switch (type) {
    case MessageType::QuantumBatch: return "QuantumBatch";
    case MessageType::Detections: return "Detections";
    case MessageType::Bases: return "Bases";
    case MessageType::EstimationBits: return "EstimationBits";
    case MessageType::Verdict: return "Verdict";
    case MessageType::ParityRequest: return "ParityRequest";
    case MessageType::Parities: return "Parities";
    case MessageType::SyndromeRequest: return "SyndromeRequest";
    case MessageType::Syndromes: return "Syndromes";
    case MessageType::WinnowDone: return "WinnowDone";
    case MessageType::VerifyTag: return "VerifyTag";
    case MessageType::VerifyVerdict: return "VerifyVerdict";
    case MessageType::AmplifySeed: return "AmplifySeed";
    case MessageType::Abort: return "Abort";
  }
  return "Unknown(" + std::to_string(static_cast<int>(type)) + ")";
}

namespace {

/// One direction of an in-memory pipe.
struct Queue {
  std::mutex mutex;
  std::condition_variable ready;
  std::deque<Message> items;
  bool closed = false;
};

class MemoryTransport final : public Transport {
 public:
  MemoryTransport(std::shared_ptr<Queue> inbox, std::shared_ptr<Queue> outbox)
      : inbox_(std::move(inbox)), outbox_(std::move(outbox)) {}

  ~MemoryTransport() override {
    for (const auto& q : {inbox_, outbox_}) {
      std::lock_guard lock(q->mutex);
      q->closed = true;
      q->ready.notify_all();
    }
  }

  void send(const Message& message) override {
    std::lock_guard lock(outbox_->mutex);
    if (outbox_->closed) throw TransportClosed("memory transport: peer closed");
    outbox_->items.push_back(message);
    outbox_->ready.notify_one();
  }

  Message receive() override {
    std::unique_lock lock(inbox_->mutex);
    inbox_->ready.wait(lock, [&] { return !inbox_->items.empty() || inbox_->closed; });
    if (inbox_->items.empty()) throw TransportClosed("memory transport: peer closed");
    Message out = std::move(inbox_->items.front());
    inbox_->items.pop_front();
    return out;
  }

 private:
  std::shared_ptr<Queue> inbox_;
  std::shared_ptr<Queue> outbox_;
};

[[noreturn]] void throw_errno(const std::string& what) {
  throw std::runtime_error(what + ": " + std::strerror(errno));
}

}  // namespace

std::pair<std::unique_ptr<Transport>, std::unique_ptr<Transport>> make_memory_pair() {
  auto a_to_b = std::make_shared<Queue>();
  auto b_to_a = std::make_shared<Queue>();
  return {std::make_unique<MemoryTransport>(b_to_a, a_to_b),
          std::make_unique<MemoryTransport>(a_to_b, b_to_a)};
}

std::vector<std::uint8_t> encode_frame(const Message& message) {
  if (message.payload.size() > kMaxPayload) throw std::length_error("encode_frame: payload too large");
  ByteWriter w;
  w.u32(static_cast<std::uint32_t>(message.payload.size()));
  w.u8(static_cast<std::uint8_t>(message.type));
  w.bytes(message.payload);
  return w.take();
}

StreamTransport::StreamTransport(int fd) : fd_(fd) {
  if (fd < 0) throw std::invalid_argument("StreamTransport: invalid descriptor");
}

StreamTransport::~StreamTransport() {
  if (fd_ >= 0) ::close(fd_);
}

StreamTransport::StreamTransport(StreamTransport&& other) noexcept
    : fd_(std::exchange(other.fd_, -1)) {}

StreamTransport& StreamTransport::operator=(StreamTransport&& other) noexcept {
  if (this != &other) {
    if (fd_ >= 0) ::close(fd_);
    fd_ = std::exchange(other.fd_, -1);
  }
  return *this;
}

void StreamTransport::send(const Message& message) {
  const auto frame = encode_frame(message);
  std::size_t sent = 0;
  while (sent < frame.size()) {
    const ssize_t n = ::send(fd_, frame.data() + sent, frame.size() - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      if (errno == EPIPE || errno == ECONNRESET) throw TransportClosed("stream transport: peer closed");
      throw_errno("stream transport: send");
    }
    sent += static_cast<std::size_t>(n);
  }
}

void StreamTransport::read_exact(std::uint8_t* out, std::size_t count) {
  std::size_t got = 0;
  while (got < count) {
    const ssize_t n = ::read(fd_, out + got, count - got);
    if (n == 0) throw TransportClosed("stream transport: peer closed");
    if (n < 0) {
      if (errno == EINTR) continue;
      if (errno == ECONNRESET) throw TransportClosed("stream transport: connection reset");
      throw_errno("stream transport: read");
    }
    got += static_cast<std::size_t>(n);
  }
}

Message StreamTransport::receive() {
  std::uint8_t header[5];
  read_exact(header, sizeof header);
  ByteReader r(header);
  const std::uint32_t length = r.u32();
  const auto type = static_cast<MessageType>(r.u8());
  if (length > kMaxPayload) throw DecodeError("stream transport: payload length too large");
  Message message{type, std::vector<std::uint8_t>(length)};
  if (length > 0) read_exact(message.payload.data(), length);
  return message;
}

std::pair<std::unique_ptr<Transport>, std::unique_ptr<Transport>> make_socket_pair() {
  int fds[2];
  if (::socketpair(AF_UNIX, SOCK_STREAM, 0, fds) != 0) throw_errno("socketpair");
  return {std::make_unique<StreamTransport>(fds[0]), std::make_unique<StreamTransport>(fds[1])};
}

TcpListener::TcpListener(std::uint16_t port) {
  fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd_ < 0) throw_errno("socket");
  const int one = 1;
  ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(port);
  if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(fd_, 1) != 0) {
    const int saved = errno;
    ::close(fd_);
    errno = saved;
    throw_errno("tcp listen");
  }
  socklen_t len = sizeof addr;
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

TcpListener::~TcpListener() {
  if (fd_ >= 0) ::close(fd_);
}

std::unique_ptr<Transport> TcpListener::accept() {
  for (;;) {
    const int fd = ::accept(fd_, nullptr, nullptr);
    if (fd >= 0) return std::make_unique<StreamTransport>(fd);
    if (errno != EINTR) throw_errno("tcp accept");
  }
}

std::unique_ptr<Transport> tcp_connect(const std::string& host, std::uint16_t port) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* found = nullptr;
  const std::string service = std::to_string(port);
  if (const int rc = ::getaddrinfo(host.c_str(), service.c_str(), &hints, &found); rc != 0) {
    throw std::runtime_error("tcp connect: " + std::string(::gai_strerror(rc)));
  }
  std::unique_ptr<addrinfo, decltype(&::freeaddrinfo)> guard(found, &::freeaddrinfo);
  const int fd = ::socket(found->ai_family, found->ai_socktype, found->ai_protocol);
  if (fd < 0) throw_errno("socket");
  if (::connect(fd, found->ai_addr, found->ai_addrlen) != 0) {
    const int saved = errno;
    ::close(fd);
    errno = saved;
    throw_errno("tcp connect");
  }
  return std::make_unique<StreamTransport>(fd);
}

}  // namespace fkqkd
