#include "hypertune/net.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>

#include "hypertune/errors.hpp"

namespace hypertune {
namespace {

void recv_exact(int fd, std::uint8_t* buf, std::size_t size, long timeout_ms) {
  using Clock = std::chrono::steady_clock;
  const auto deadline = Clock::now() + std::chrono::milliseconds(timeout_ms);
  std::size_t got = 0;
  while (got < size) {
    if (timeout_ms >= 0) {
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
          deadline - Clock::now());
      if (left.count() <= 0) fail(Errc::Timeout, "receive deadline expired");
      pollfd pfd{fd, POLLIN, 0};
      const int pr = ::poll(&pfd, 1, static_cast<int>(left.count()));
      if (pr == 0) fail(Errc::Timeout, "receive deadline expired");
      if (pr < 0) {
        if (errno == EINTR) continue;
        fail(Errc::WorkerLost, std::string("poll: ") + std::strerror(errno));
      }
    }
    const ssize_t n = ::recv(fd, buf + got, size - got, 0);
    if (n == 0) fail(Errc::WorkerLost, "connection closed by peer");
    if (n < 0) {
      if (errno == EINTR) continue;
      fail(Errc::WorkerLost, std::string("recv: ") + std::strerror(errno));
    }
    got += static_cast<std::size_t>(n);
  }
}

void send_exact(int fd, const std::uint8_t* buf, std::size_t size) {
  std::size_t sent = 0;
  while (sent < size) {
    const ssize_t n = ::send(fd, buf + sent, size - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      fail(Errc::WorkerLost, std::string("send: ") + std::strerror(errno));
    }
    sent += static_cast<std::size_t>(n);
  }
}

}  // namespace

TcpStream::TcpStream(TcpStream&& other) noexcept : fd_(other.fd_) { other.fd_ = -1; }

TcpStream& TcpStream::operator=(TcpStream&& other) noexcept {
  if (this != &other) {
    close();
    fd_ = other.fd_;
    other.fd_ = -1;
  }
  return *this;
}

TcpStream::~TcpStream() { close(); }

void TcpStream::close() {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

void TcpStream::shutdown() {
  if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
}

TcpStream TcpStream::connect(const std::string& host, int port) {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) fail(Errc::ConnectFailure, std::string("socket: ") + std::strerror(errno));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    ::close(fd);
    fail(Errc::ConnectFailure, "bad address " + host);
  }
  if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    const int err = errno;
    ::close(fd);
    fail(Errc::ConnectFailure,
         "connect " + host + ":" + std::to_string(port) + ": " + std::strerror(err));
  }
  const int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  return TcpStream(fd);
}

void TcpStream::send_message(const Message& msg) {
  const std::vector<std::uint8_t> frame = encode_frame(msg);
  send_exact(fd_, frame.data(), frame.size());
}

Message TcpStream::recv_message(long timeout_ms) {
  std::uint8_t header[5];
  recv_exact(fd_, header, sizeof(header), timeout_ms);
  const std::uint32_t length = (static_cast<std::uint32_t>(header[0]) << 24) |
                               (static_cast<std::uint32_t>(header[1]) << 16) |
                               (static_cast<std::uint32_t>(header[2]) << 8) |
                               static_cast<std::uint32_t>(header[3]);
  if (length > kMaxFrameLength) {
    fail(Errc::ProtocolError, "frame length " + std::to_string(length) + " exceeds limit");
  }
  std::vector<std::uint8_t> payload(length);
  if (length > 0) recv_exact(fd_, payload.data(), length, timeout_ms);
  return decode_payload(static_cast<MsgType>(header[4]), payload.data(), payload.size());
}

void TcpStream::send_raw(const void* data, std::size_t size) {
  send_exact(fd_, static_cast<const std::uint8_t*>(data), size);
}

TcpListener::TcpListener(const std::string& host, int port) {
  fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd_ < 0) fail(Errc::ConnectFailure, std::string("socket: ") + std::strerror(errno));
  const int one = 1;
  ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    fail(Errc::ConnectFailure, "bad address " + host);
  }
  if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 ||
      ::listen(fd_, 64) != 0) {
    const int err = errno;
    ::close(fd_);
    fd_ = -1;
    fail(Errc::ConnectFailure,
         "bind/listen " + host + ":" + std::to_string(port) + ": " + std::strerror(err));
  }
  sockaddr_in bound{};
  socklen_t len = sizeof(bound);
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&bound), &len);
  port_ = ntohs(bound.sin_port);
}

TcpListener::TcpListener(TcpListener&& other) noexcept : fd_(other.fd_), port_(other.port_) {
  other.fd_ = -1;
}

TcpListener& TcpListener::operator=(TcpListener&& other) noexcept {
  if (this != &other) {
    close();
    fd_ = other.fd_;
    port_ = other.port_;
    other.fd_ = -1;
  }
  return *this;
}

TcpListener::~TcpListener() { close(); }

void TcpListener::close() {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

TcpStream TcpListener::accept() {
  while (true) {
    const int fd = ::accept(fd_, nullptr, nullptr);
    if (fd >= 0) {
      const int one = 1;
      ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
      return TcpStream(fd);
    }
    if (errno != EINTR) {
      fail(Errc::ConnectFailure, std::string("accept: ") + std::strerror(errno));
    }
  }
}

std::pair<std::string, int> parse_endpoint(const std::string& endpoint) {
  const auto colon = endpoint.find_last_of(':');
  if (colon == std::string::npos || colon + 1 >= endpoint.size()) {
    fail(Errc::ConnectFailure, "endpoint must be <host>:<port>, got '" + endpoint + "'");
  }
  try {
    return {endpoint.substr(0, colon), std::stoi(endpoint.substr(colon + 1))};
  } catch (const std::exception&) {
    fail(Errc::ConnectFailure, "bad port in endpoint '" + endpoint + "'");
  }
}

}  // namespace hypertune
