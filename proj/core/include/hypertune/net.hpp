#pragma once

#include <optional>
#include <string>

#include "hypertune/wire.hpp"

namespace hypertune {

// Thin RAII wrapper over a connected TCP socket carrying protocol frames.
class TcpStream {
 public:
  TcpStream() = default;
  explicit TcpStream(int fd) : fd_(fd) {}
  TcpStream(TcpStream&& other) noexcept;
  TcpStream& operator=(TcpStream&& other) noexcept;
  TcpStream(const TcpStream&) = delete;
  TcpStream& operator=(const TcpStream&) = delete;
  ~TcpStream();

  static TcpStream connect(const std::string& host, int port);

  bool valid() const { return fd_ >= 0; }
  void close();
  // Unblocks any thread sitting in recv on this stream.
  void shutdown();

  void send_message(const Message& msg);
  // Blocks until a full frame arrives. timeout_ms < 0 blocks forever.
  // Throws WorkerLost on orderly close, Timeout on deadline expiry,
  // ProtocolError on malformed framing.
  Message recv_message(long timeout_ms = -1);

  // Raw escape hatch used by tests to send malformed bytes.
  void send_raw(const void* data, std::size_t size);

 private:
  int fd_ = -1;
};

class TcpListener {
 public:
  TcpListener() = default;
  TcpListener(const std::string& host, int port);
  TcpListener(TcpListener&& other) noexcept;
  TcpListener& operator=(TcpListener&& other) noexcept;
  TcpListener(const TcpListener&) = delete;
  TcpListener& operator=(const TcpListener&) = delete;
  ~TcpListener();

  TcpStream accept();
  // Port actually bound (useful with port 0).
  int port() const { return port_; }
  void close();

 private:
  int fd_ = -1;
  int port_ = 0;
};

// "host:port" -> pair; throws ConnectFailure on malformed input.
std::pair<std::string, int> parse_endpoint(const std::string& endpoint);

}  // namespace hypertune
