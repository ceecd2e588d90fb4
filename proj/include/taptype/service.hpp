#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>

#include "taptype/classifier.hpp"
#include "taptype/decoder.hpp"
#include "taptype/session.hpp"

namespace taptype::service {

// One client's protocol state: a session plus the server-side noise source
// that turns intended keys into classifier outputs.
class ProtocolSession {
 public:
  ProtocolSession(const decoder::Decoder& decoder, std::uint64_t seed);

  // Exactly one reply (render or error) per client message.
  std::string handle(std::string_view message);

  const session::SessionState& state() const { return session_.state(); }

 private:
  std::string tap_key(char key);
  std::string configure(double accuracy, classifier::ConfusionMode mode);

  const decoder::Decoder* decoder_;
  session::Session session_;
  std::uint64_t seed_;
  std::uint64_t reconfigurations_ = 0;
  classifier::ConfusionClassifier noise_;
};

std::string render_message(const session::Render& r);
std::string error_message(std::string_view what);

struct ServerConfig {
  std::string host = "127.0.0.1";
  unsigned short port = 8080;  // 0 picks a free port
  std::uint64_t seed = 7;      // connection i gets mix_seed(seed, i)
};

// "host:port" -> (host, port).
ServerConfig parse_bind(std::string_view bind);

// HTTP GET /healthz and the WebSocket endpoint /session. Each connection is
// served on its own thread; the decoder is shared read-only.
class Server {
 public:
  // Binds immediately; throws std::runtime_error when the address is unusable.
  Server(const decoder::Decoder& decoder, ServerConfig config);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  unsigned short port() const;
  // Blocks until stop().
  void run();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace taptype::service
