#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>

#include "supertask/service.hpp"

namespace supertask {

struct EndpointConfig {
  std::string host = "127.0.0.1";
  std::uint16_t port = 7878;               // 0 picks a free port
  std::optional<std::uint16_t> http_port;  // POST /rpc mapping when set
  std::size_t sessions_per_connection = 1;
  std::size_t max_line_bytes = 1 << 20;
};

class BindError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Newline-delimited JSON over TCP: every request line gets its reply lines
/// in order. With http_port set, POST /rpc takes one or more request lines and
/// returns the replies as the response body.
class Server {
 public:
  /// Binds immediately; throws BindError when an endpoint is unavailable.
  Server(SessionService& service, EndpointConfig config);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  std::uint16_t port() const;
  std::optional<std::uint16_t> http_port() const;

  /// Serves until stop(). With handle_signals, SIGINT and SIGTERM also stop
  /// the server. Logs are flushed and closed before returning.
  void run(bool handle_signals = false);
  /// Safe from any thread.
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace supertask
