#include "supertask/server.hpp"

#include <boost/asio.hpp>
#include <csignal>
#include <deque>
#include <thread>

#include "httplib.h"

namespace supertask {

namespace asio = boost::asio;
using asio::ip::tcp;

namespace {

class Connection : public std::enable_shared_from_this<Connection> {
 public:
  Connection(tcp::socket socket, SessionService& service, const EndpointConfig& config)
      : socket_(std::move(socket)), service_(service), config_(config), buffer_(config.max_line_bytes) {}

  void start() { read(); }

 private:
  void read() {
    asio::async_read_until(socket_, buffer_, '\n', [self = shared_from_this()](boost::system::error_code ec, std::size_t n) {
      if (ec) return;  // disconnect or oversized line: drop the connection, sessions stay resumable
      std::string line(asio::buffers_begin(self->buffer_.data()), asio::buffers_begin(self->buffer_.data()) + n);
      self->buffer_.consume(n);
      while (!line.empty() && (line.back() == '\n' || line.back() == '\r')) line.pop_back();
      if (line.empty()) return self->read();
      self->respond(line);
    });
  }

  void respond(const std::string& line) {
    std::vector<std::string> replies;
    if (over_limit(line)) {
      replies = {encode(error_message(ErrorCode::kSessionLimit, "this connection already has an active session"))};
    } else {
      replies = service_.handle_line(line);
      remember_sessions(replies);
    }
    out_.clear();
    for (const auto& r : replies) {
      out_ += r;
      out_ += '\n';
    }
    asio::async_write(socket_, asio::buffer(out_), [self = shared_from_this()](boost::system::error_code ec, std::size_t) {
      if (!ec) self->read();
    });
  }

  bool over_limit(const std::string& line) {
    WireMessage msg;
    try {
      msg = decode(line);
    } catch (const CodecError&) {
      return false;  // the service answers with BAD_MESSAGE
    }
    if (msg.kind != WireKind::kSessionNew) return false;
    std::size_t active = 0;
    for (const auto& id : owned_) {
      if (service_.is_finished(id) == false) ++active;
    }
    return active >= config_.sessions_per_connection;
  }

  void remember_sessions(const std::vector<std::string>& replies) {
    if (replies.empty()) return;
    const auto first = decode(replies.front());
    if (first.kind == WireKind::kSessionNew) owned_.push_back(first.session_id);
  }

  tcp::socket socket_;
  SessionService& service_;
  const EndpointConfig& config_;
  asio::streambuf buffer_;
  std::string out_;
  std::vector<std::string> owned_;
};

}  // namespace

struct Server::Impl {
  Impl(SessionService& s, EndpointConfig c) : service(s), config(std::move(c)), acceptor(io) {}

  void accept() {
    acceptor.async_accept([this](boost::system::error_code ec, tcp::socket socket) {
      if (ec) {
        if (ec == asio::error::operation_aborted) return;
      } else {
        std::make_shared<Connection>(std::move(socket), service, config)->start();
      }
      accept();
    });
  }

  SessionService& service;
  EndpointConfig config;
  asio::io_context io;
  tcp::acceptor acceptor;
  std::unique_ptr<httplib::Server> http;
  std::optional<std::uint16_t> bound_http_port;
  std::thread http_thread;
};

Server::Server(SessionService& service, EndpointConfig config)
    : impl_(std::make_unique<Impl>(service, std::move(config))) {
  auto& cfg = impl_->config;
  try {
    const tcp::endpoint ep(asio::ip::make_address(cfg.host), cfg.port);
    impl_->acceptor.open(ep.protocol());
    impl_->acceptor.set_option(tcp::acceptor::reuse_address(true));
    impl_->acceptor.bind(ep);
    impl_->acceptor.listen();
  } catch (const boost::system::system_error& e) {
    throw BindError("cannot bind " + cfg.host + ":" + std::to_string(cfg.port) + ": " + e.what());
  }

  if (cfg.http_port) {
    impl_->http = std::make_unique<httplib::Server>();
    impl_->http->Post("/rpc", [this](const httplib::Request& req, httplib::Response& res) {
      std::string out;
      std::size_t start = 0;
      while (start < req.body.size()) {
        auto end = req.body.find('\n', start);
        if (end == std::string::npos) end = req.body.size();
        std::string line = req.body.substr(start, end - start);
        start = end + 1;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        for (const auto& r : impl_->service.handle_line(line)) out += r + '\n';
      }
      res.set_content(out, "application/x-ndjson");
    });
    int port = 0;
    if (*cfg.http_port == 0) {
      port = impl_->http->bind_to_any_port(cfg.host);
    } else if (impl_->http->bind_to_port(cfg.host, *cfg.http_port)) {
      port = *cfg.http_port;
    }
    if (port <= 0) throw BindError("cannot bind HTTP " + cfg.host + ":" + std::to_string(*cfg.http_port));
    impl_->bound_http_port = static_cast<std::uint16_t>(port);
  }
}

Server::~Server() {
  stop();
  if (impl_->http_thread.joinable()) impl_->http_thread.join();
}

std::uint16_t Server::port() const { return impl_->acceptor.local_endpoint().port(); }

std::optional<std::uint16_t> Server::http_port() const { return impl_->bound_http_port; }

void Server::run(bool handle_signals) {
  if (impl_->http) {
    impl_->http_thread = std::thread([this] { impl_->http->listen_after_bind(); });
    impl_->http->wait_until_ready();  // a stop() before this point would be lost
  }
  std::optional<asio::signal_set> signals;
  if (handle_signals) {
    signals.emplace(impl_->io, SIGINT, SIGTERM);
    signals->async_wait([this](boost::system::error_code ec, int) {
      if (!ec) stop();
    });
  }
  impl_->accept();
  impl_->io.run();
  if (impl_->http) impl_->http->stop();
  if (impl_->http_thread.joinable()) impl_->http_thread.join();
  impl_->service.close_logs();
}

void Server::stop() {
  asio::post(impl_->io, [this] {
    boost::system::error_code ignored;
    impl_->acceptor.close(ignored);
    impl_->io.stop();
  });
  if (impl_->http) impl_->http->stop();
}

}  // namespace supertask
