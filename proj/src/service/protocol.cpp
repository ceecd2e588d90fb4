#include <cctype>
#include <charconv>

#include "json.hpp"
#include "taptype/service.hpp"

namespace taptype::service {

using nlohmann::json;

std::string render_message(const session::Render& r) {
  json sugg = json::array();
  for (const auto& s : r.suggestions) sugg.push_back({{"word", s.word}, {"score", s.total_logp}});
  json j{{"type", "render"},
         {"committed", r.committed},
         {"pending", r.pending},
         {"suggestions", std::move(sugg)},
         {"cursor", r.cursor},
         {"feedback", std::string(session::to_string(r.feedback))},
         {"mode", r.mode == session::Mode::Oov ? "oov" : "normal"},
         {"no_match", r.no_match}};
  return j.dump();
}

std::string error_message(std::string_view what) {
  return json{{"type", "error"}, {"message", std::string(what)}}.dump();
}

ProtocolSession::ProtocolSession(const decoder::Decoder& decoder, std::uint64_t seed)
    : decoder_(&decoder),
      session_(decoder),
      seed_(seed),
      noise_(classifier::identity_confusion(), classifier::ConfusionMode::Calibrated, mix_seed(seed, 0)) {}

std::string ProtocolSession::tap_key(char key) {
  const char c = static_cast<char>(std::tolower(static_cast<unsigned char>(key)));
  const auto k = decoder_->map().lookup(c);
  if (!k) return error_message(std::string("unmapped key '") + key + "'");
  const TapObservation obs = noise_.classify(k->hand, k->finger);
  return render_message(session_.apply(session::classify_event(obs)));
}

std::string ProtocolSession::configure(double accuracy, classifier::ConfusionMode mode) {
  const auto matrix = accuracy >= 1.0 ? classifier::identity_confusion() : classifier::neighbour_confusion(accuracy);
  noise_ = classifier::ConfusionClassifier(matrix, mode, mix_seed(seed_, ++reconfigurations_));
  return render_message(session::render(session_.state(), session::Feedback::None));
}

std::string ProtocolSession::handle(std::string_view message) {
  json j;
  try {
    j = json::parse(message);
  } catch (const json::exception&) {
    return error_message("malformed JSON");
  }
  if (!j.is_object() || !j.contains("type") || !j["type"].is_string())
    return error_message("message needs a string field 'type'");
  const std::string type = j["type"].get<std::string>();
  try {
    using session::EventKind;
    if (type == "tap_key") {
      if (!j.contains("key") || !j["key"].is_string() || j["key"].get<std::string>().size() != 1)
        return error_message("tap_key needs a one-character 'key'");
      return tap_key(j["key"].get<std::string>()[0]);
    }
    if (type == "space") return render_message(session_.apply({EventKind::Space, std::nullopt}));
    if (type == "cycle") return render_message(session_.apply({EventKind::Cycle, std::nullopt}));
    if (type == "delete") return render_message(session_.apply({EventKind::DeleteWord, std::nullopt}));
    if (type == "accept_char") return render_message(session_.apply({EventKind::AcceptChar, std::nullopt}));
    if (type == "submit_phrase") return render_message(session_.submit());
    if (type == "config") {
      const json& noise = j.value("noise", json::object());
      if (!noise.is_object()) return error_message("config.noise must be an object");
      const json acc = noise.value("accuracy", json(1.0));
      if (!acc.is_number()) return error_message("noise.accuracy must be a number");
      const double a = acc.get<double>();
      if (!(a >= 0.0 && a <= 1.0)) return error_message("noise.accuracy must be in [0, 1]");
      const json mode = noise.value("mode", json("calibrated"));
      if (!mode.is_string()) return error_message("noise.mode must be a string");
      return configure(a, classifier::parse_confusion_mode(mode.get<std::string>()));
    }
  } catch (const DomainError& e) {
    return error_message(e.what());
  } catch (const json::exception& e) {
    return error_message(e.what());
  }
  return error_message("unknown message type '" + type + "'");
}

ServerConfig parse_bind(std::string_view bind) {
  const auto colon = bind.rfind(':');
  if (colon == std::string_view::npos || colon == 0) throw DomainError("bind address must be host:port");
  ServerConfig c;
  c.host = std::string(bind.substr(0, colon));
  const auto port = bind.substr(colon + 1);
  unsigned value = 0;
  const auto [ptr, ec] = std::from_chars(port.data(), port.data() + port.size(), value);
  if (ec != std::errc{} || ptr != port.data() + port.size() || value > 65535)
    throw DomainError("bad port '" + std::string(port) + "'");
  c.port = static_cast<unsigned short>(value);
  return c;
}

}  // namespace taptype::service
