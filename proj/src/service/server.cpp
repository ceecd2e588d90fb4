#include <sys/socket.h>

#include <atomic>
#include <boost/asio.hpp>
#include <boost/beast.hpp>
#include <mutex>
#include <thread>
#include <vector>

#include <spdlog/spdlog.h>

#include "taptype/service.hpp"

namespace taptype::service {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

struct Server::Impl {
  const decoder::Decoder* decoder;
  ServerConfig config;
  asio::io_context io;
  tcp::acceptor acceptor{io};
  std::mutex mu;
  std::vector<std::thread> workers;
  std::vector<std::shared_ptr<tcp::socket>> live;
  std::uint64_t next_id = 0;
  unsigned short port = 0;
  std::atomic<bool> stopping{false};
  std::atomic<bool> stopped{false};

  void accept_next() {
    acceptor.async_accept([this](beast::error_code ec, tcp::socket sock) {
      if (stopping) return;
      if (ec) {
        spdlog::warn("accept failed: {}", ec.message());
        accept_next();
        return;
      }
      auto s = std::make_shared<tcp::socket>(std::move(sock));
      {
        std::lock_guard lock(mu);
        if (stopping) return;
        live.push_back(s);
        workers.emplace_back([this, s, id = next_id++] { serve(*s, id); });
      }
      accept_next();
    });
  }

  void serve(tcp::socket& sock, std::uint64_t id) {
    beast::error_code ec;
    beast::flat_buffer buf;
    for (;;) {
      http::request<http::string_body> req;
      http::read(sock, buf, req, ec);
      if (ec) return;
      if (websocket::is_upgrade(req) && req.target() == "/session") {
        session(sock, req, id);
        return;
      }
      http::response<http::string_body> res;
      res.version(req.version());
      res.keep_alive(req.keep_alive());
      res.set(http::field::content_type, "text/plain");
      if (req.method() == http::verb::get && req.target() == "/healthz") {
        res.result(http::status::ok);
        res.body() = "ok\n";
      } else {
        res.result(http::status::not_found);
        res.body() = "not found\n";
      }
      res.prepare_payload();
      http::write(sock, res, ec);
      if (ec || !res.keep_alive()) return;
    }
  }

  void session(tcp::socket& sock, const http::request<http::string_body>& req, std::uint64_t id) {
    websocket::stream<tcp::socket&> ws(sock);
    beast::error_code ec;
    ws.accept(req, ec);
    if (ec) return;
    ProtocolSession proto(*decoder, mix_seed(config.seed, id));
    spdlog::info("session {} opened", id);
    for (;;) {
      beast::flat_buffer in;
      ws.read(in, ec);
      if (ec) break;
      const std::string reply = proto.handle(beast::buffers_to_string(in.data()));
      ws.text(true);
      ws.write(asio::buffer(reply), ec);
      if (ec) break;
    }
    spdlog::info("session {} closed", id);
  }
};

Server::Server(const decoder::Decoder& decoder, ServerConfig config) : impl_(std::make_unique<Impl>()) {
  impl_->decoder = &decoder;
  impl_->config = std::move(config);
  const auto& c = impl_->config;
  try {
    const tcp::endpoint ep(asio::ip::make_address(c.host), c.port);
    impl_->acceptor.open(ep.protocol());
    impl_->acceptor.set_option(tcp::acceptor::reuse_address(true));
    impl_->acceptor.bind(ep);
    impl_->acceptor.listen();
    impl_->port = impl_->acceptor.local_endpoint().port();
  } catch (const boost::system::system_error& e) {
    throw std::runtime_error("cannot listen on " + c.host + ":" + std::to_string(c.port) + ": " + e.what());
  }
}

Server::~Server() { stop(); }

unsigned short Server::port() const { return impl_->port; }

void Server::run() {
  spdlog::info("listening on {}:{}", impl_->config.host, port());
  impl_->accept_next();
  impl_->io.run();
}

void Server::stop() {
  if (impl_->stopped.exchange(true)) return;
  {
    std::lock_guard lock(impl_->mu);
    impl_->stopping = true;
  }
  asio::post(impl_->io, [this] {
    beast::error_code ec;
    impl_->acceptor.close(ec);
  });
  impl_->io.stop();
  std::vector<std::thread> workers;
  {
    std::lock_guard lock(impl_->mu);
    // Unblocks workers waiting in read.
    for (const auto& s : impl_->live) ::shutdown(s->native_handle(), SHUT_RDWR);
    workers.swap(impl_->workers);
  }
  for (auto& t : workers) t.join();
}

}  // namespace taptype::service
