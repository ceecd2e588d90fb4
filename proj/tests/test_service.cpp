#include <boost/asio.hpp>
#include <boost/beast.hpp>
#include <thread>

#include "json.hpp"
#include "property.hpp"
#include "taptype/service.hpp"

using namespace taptype;
using namespace taptype::service;
using nlohmann::json;

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

namespace {

json send(ProtocolSession& s, const json& msg) { return json::parse(s.handle(msg.dump())); }
json tap(ProtocolSession& s, char k) { return send(s, {{"type", "tap_key"}, {"key", std::string(1, k)}}); }

class Client {
 public:
  explicit Client(unsigned short port) : ws_(io_) {
    tcp::resolver r(io_);
    asio::connect(ws_.next_layer(), r.resolve("127.0.0.1", std::to_string(port)));
    ws_.handshake("127.0.0.1", "/session");
  }
  ~Client() {
    beast::error_code ec;
    ws_.close(websocket::close_code::normal, ec);
  }
  json send(const json& msg) {
    ws_.write(asio::buffer(msg.dump()));
    beast::flat_buffer buf;
    ws_.read(buf);
    return json::parse(beast::buffers_to_string(buf.data()));
  }

 private:
  asio::io_context io_;
  websocket::stream<tcp::socket> ws_;
};

struct RunningServer {
  Server server;
  std::thread thread;
  explicit RunningServer(std::uint64_t seed) : server(tt_test::desk_decoder(), {"127.0.0.1", 0, seed}) {
    thread = std::thread([this] { server.run(); });
  }
  ~RunningServer() {
    server.stop();
    thread.join();
  }
};

std::pair<unsigned, std::string> http_get(unsigned short port, const std::string& target) {
  asio::io_context io;
  tcp::resolver r(io);
  beast::tcp_stream stream(io);
  stream.connect(r.resolve("127.0.0.1", std::to_string(port)));
  http::request<http::empty_body> req{http::verb::get, target, 11};
  req.set(http::field::host, "127.0.0.1");
  http::write(stream, req);
  beast::flat_buffer buf;
  http::response<http::string_body> res;
  http::read(stream, buf, res);
  beast::error_code ec;
  stream.socket().shutdown(tcp::socket::shutdown_both, ec);
  return {res.result_int(), res.body()};
}

}  // namespace

TEST_CASE("typing the over the protocol") {
  ProtocolSession s(tt_test::desk_decoder(), 1);
  tap(s, 't');
  tap(s, 'h');
  const json r = tap(s, 'e');
  CHECK(r["type"] == "render");
  CHECK(r["pending"] == "***");
  CHECK(r["cursor"] == 0);
  CHECK(r["mode"] == "normal");
  REQUIRE(!r["suggestions"].empty());
  CHECK(r["suggestions"][0]["word"] == "the");
  const json done = send(s, {{"type", "space"}});
  CHECK(done["committed"] == "the");
  CHECK(done["pending"] == "");
  CHECK(s.state().committed_text() == "the");
}

TEST_CASE("protocol errors") {
  ProtocolSession s(tt_test::desk_decoder(), 1);
  const json unmapped = tap(s, '3');
  CHECK(unmapped["type"] == "error");
  CHECK(unmapped["message"] == "unmapped key '3'");
  CHECK(json::parse(s.handle("{not json"))["message"] == "malformed JSON");
  CHECK(send(s, {{"kind", "space"}})["type"] == "error");
  CHECK(send(s, json::array({1, 2}))["type"] == "error");
  CHECK(send(s, {{"type", "jump"}})["message"] == "unknown message type 'jump'");
  CHECK(send(s, {{"type", "tap_key"}, {"key", "ab"}})["type"] == "error");
  CHECK(send(s, {{"type", "tap_key"}})["type"] == "error");
  CHECK(send(s, {{"type", "config"}, {"noise", {{"accuracy", 1.5}}}})["type"] == "error");
  CHECK(send(s, {{"type", "config"}, {"noise", {{"accuracy", "high"}}}})["type"] == "error");
  CHECK(send(s, {{"type", "config"}, {"noise", {{"mode", "humble"}}}})["type"] == "error");
  CHECK(send(s, {{"type", "config"}, {"noise", 3}})["type"] == "error");
  // Errors leave the session untouched.
  CHECK(s.state().pending.empty());
  CHECK(tap(s, 'T')["pending"] == "*");
}

TEST_CASE("every message gets exactly one well-formed reply") {
  tt_test::for_all(30, 51, [](tt_test::Gen& g) {
    ProtocolSession s(tt_test::desk_decoder(), g.integer(0, 1000));
    const std::vector<std::string> types{"tap_key",     "space",         "cycle", "delete",
                                         "accept_char", "submit_phrase", "bogus"};
    for (int i = 0; i < 40; ++i) {
      json msg{{"type", g.pick(types)}};
      if (msg["type"] == "tap_key") msg["key"] = g.word(1, 1, "abcdefghijklmnopqrstuvwxyz'3 ");
      const json r = json::parse(s.handle(msg.dump()));
      REQUIRE((r["type"] == "render" || r["type"] == "error"));
      if (r["type"] == "render") {
        CHECK(r["cursor"].get<std::size_t>() <= std::max<std::size_t>(r["suggestions"].size(), 1));
        CHECK(r["pending"].get<std::string>().size() == s.state().oov_prefix.size() + s.state().pending.size());
      }
    }
  });
}

TEST_CASE("fixed seed gives identical replies") {
  ProtocolSession a(tt_test::desk_decoder(), 9), b(tt_test::desk_decoder(), 9);
  const json cfg{{"type", "config"}, {"noise", {{"accuracy", 0.6}, {"mode", "overconfident"}}}};
  CHECK(a.handle(cfg.dump()) == b.handle(cfg.dump()));
  for (char c : std::string("please call me")) {
    const json m = c == ' ' ? json{{"type", "space"}} : json{{"type", "tap_key"}, {"key", std::string(1, c)}};
    const std::string msg = m.dump();
    CHECK(a.handle(msg) == b.handle(msg));
  }
}

TEST_CASE("parse_bind") {
  const auto c = parse_bind("0.0.0.0:9000");
  CHECK(c.host == "0.0.0.0");
  CHECK(c.port == 9000);
  CHECK(parse_bind("[::1]:0").port == 0);
  CHECK_THROWS_AS(parse_bind("localhost"), DomainError);
  CHECK_THROWS_AS(parse_bind(":80"), DomainError);
  CHECK_THROWS_AS(parse_bind("h:70000"), DomainError);
  CHECK_THROWS_AS(parse_bind("h:8o"), DomainError);
}

TEST_CASE("server health and sessions") {
  RunningServer rs(3);
  const unsigned short port = rs.server.port();
  REQUIRE(port != 0);
  const auto [status, body] = http_get(port, "/healthz");
  CHECK(status == 200);
  CHECK(body == "ok\n");
  CHECK(http_get(port, "/nothing").first == 404);

  {
    Client a(port), b(port);
    for (char c : std::string("the")) a.send({{"type", "tap_key"}, {"key", std::string(1, c)}});
    CHECK(a.send({{"type", "space"}})["committed"] == "the");
    const json rb = b.send({{"type", "tap_key"}, {"key", "a"}});
    CHECK(rb["committed"] == "");
    CHECK(rb["pending"] == "*");
    CHECK(a.send({{"type", "cycle"}})["pending"] == "");
    CHECK(b.send({{"type", "nope"}})["type"] == "error");
  }
  Client again(port);
  const json fresh = again.send({{"type", "space"}});
  CHECK(fresh["committed"] == "");
  CHECK(fresh["suggestions"].empty());
}

TEST_CASE("binding a busy port fails") {
  RunningServer rs(1);
  CHECK_THROWS_AS(Server(tt_test::desk_decoder(), {"127.0.0.1", rs.server.port(), 1}), std::runtime_error);
  CHECK_THROWS_AS(Server(tt_test::desk_decoder(), {"not-an-ip", 0, 1}), std::runtime_error);
}
