#include "taptype/session.hpp"

#include <array>
#include <istream>
#include <ostream>

#include "json.hpp"

namespace taptype::session {

namespace {

constexpr std::array<std::pair<EventKind, std::string_view>, 6> kEventNames{{
    {EventKind::FingerTap, "finger_tap"},
    {EventKind::Space, "space"},
    {EventKind::Cycle, "cycle"},
    {EventKind::DeleteWord, "delete_word"},
    {EventKind::AcceptChar, "accept_char"},
    {EventKind::Rejected, "rejected"},
}};

}  // namespace

std::string_view to_string(EventKind k) {
  for (const auto& [kind, name] : kEventNames)
    if (kind == k) return name;
  return "?";
}

EventKind parse_event_kind(std::string_view s) {
  for (const auto& [kind, name] : kEventNames)
    if (name == s) return kind;
  throw DomainError("unknown event kind '" + std::string(s) + "'");
}

std::string_view to_string(Feedback f) {
  switch (f) {
    case Feedback::None: return "none";
    case Feedback::Click: return "click";
    case Feedback::Delete: return "delete";
    case Feedback::Submit: return "submit";
  }
  return "none";
}

SessionEvent classify_event(const std::optional<TapObservation>& tap) {
  if (!tap) return {EventKind::Rejected, std::nullopt};
  const FingerClass c = tap->argmax();
  EventKind kind = EventKind::FingerTap;
  if (c == FingerClass::Thumb) kind = tap->hand == Hand::Right ? EventKind::Space : EventKind::Cycle;
  if (c == FingerClass::Palm) kind = tap->hand == Hand::Right ? EventKind::AcceptChar : EventKind::DeleteWord;
  return {kind, tap};
}

std::string SessionState::committed_text() const {
  std::string out;
  for (const auto& w : committed) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

Render render(const SessionState& state, Feedback feedback) {
  Render r;
  r.committed = state.committed_text();
  r.pending = state.oov_prefix + std::string(state.pending.size(), '*');
  r.suggestions = state.suggestions;
  r.cursor = state.cursor;
  r.feedback = feedback;
  r.mode = state.mode;
  r.no_match = state.no_match;
  return r;
}

Render Session::apply(const SessionEvent& event) {
  Feedback fb = Feedback::None;
  switch (event.kind) {
    case EventKind::FingerTap:
      if (!event.obs) throw DomainError("finger tap without an observation");
      fb = tap(*event.obs);
      break;
    case EventKind::Space: fb = space(); break;
    case EventKind::Cycle: fb = cycle(); break;
    case EventKind::DeleteWord: fb = delete_word(); break;
    case EventKind::AcceptChar: fb = accept_char(); break;
    case EventKind::Rejected: break;
  }
  return render(state_, fb);
}

Render Session::submit() {
  auto& s = state_;
  if (!s.pending.empty() || s.mode == Mode::Oov) space();
  if (s.committed.empty()) return render(s, Feedback::None);
  s.submitted.push_back(s.committed_text());
  const auto submitted = std::move(s.submitted);
  s = SessionState{};
  s.submitted = submitted;
  return render(s, Feedback::Submit);
}

Feedback Session::tap(const TapObservation& obs) {
  state_.pending.push_back(obs);
  state_.just_committed = false;
  state_.last_deleted.reset();
  redecode();
  return Feedback::Click;
}

void Session::redecode() {
  auto& s = state_;
  s.cursor = 0;
  s.suggestions.clear();
  s.raw_best.clear();
  s.no_match = false;
  if (s.pending.empty()) return;
  const auto& cfg = decoder_->config();
  if (s.mode == Mode::Normal) {
    auto r = decoder_->decode_full(s.pending, s.committed);
    s.suggestions = std::move(r.suggestions);
    s.raw_best = std::move(r.raw_best.prefix);
    // A single tap may also be meant as a lone character for accept-char.
    if (s.pending.size() == 1) {
      for (const auto& c : decoder_->decode_single_char(s.pending.front())) {
        const std::string w(1, c.c);
        bool dup = false;
        for (const auto& sg : s.suggestions) dup = dup || sg.word == w;
        if (!dup) s.suggestions.push_back({w, c.logp, c.logp});
      }
    }
    s.no_match = s.suggestions.empty();
  } else if (s.pending.size() == 1) {
    for (const auto& c : decoder_->decode_single_char(s.pending.front(), s.oov_prefix))
      s.suggestions.push_back({s.oov_prefix + c.c, c.logp, c.logp});
    s.raw_best = s.suggestions.front().word;
  } else {
    std::vector<decoder::BeamNode> beam{{{s.oov_prefix, 0.0}, decoder::Lexicon::kNoChild}};
    for (const auto& o : s.pending) beam = decoder::expand_beam(beam, o, *decoder_, nullptr, cfg.beam_width);
    for (const auto& n : beam) s.suggestions.push_back({n.hyp.prefix, n.hyp.logp, n.hyp.logp});
    s.raw_best = s.suggestions.front().word;
  }
  if (s.suggestions.size() > cfg.max_suggestions) s.suggestions.resize(cfg.max_suggestions);
}

void Session::clear_word() {
  auto& s = state_;
  s.pending.clear();
  s.suggestions.clear();
  s.raw_best.clear();
  s.cursor = 0;
  s.no_match = false;
}

void Session::commit(const std::string& word) {
  auto& s = state_;
  s.committed.push_back(word);
  s.commits.push_back({word, s.suggestions, s.pending, s.cursor});
  clear_word();
  s.mode = Mode::Normal;
  s.oov_prefix.clear();
  s.just_committed = true;
  s.last_deleted.reset();
}

Feedback Session::space() {
  auto& s = state_;
  s.last_deleted.reset();
  if (s.mode == Mode::Oov) {
    const std::string word = s.pending.empty() || s.suggestions.empty() ? s.oov_prefix : s.suggestions[s.cursor].word;
    if (word.empty()) {
      clear_word();
      s.mode = Mode::Normal;
      s.just_committed = false;
      return Feedback::None;
    }
    commit(word);
    return Feedback::Click;
  }
  if (!s.pending.empty()) {
    if (s.suggestions.empty()) {
      s.no_match = true;
      s.just_committed = false;
      return Feedback::None;
    }
    commit(s.suggestions[s.cursor].word);
    return Feedback::Click;
  }
  if (s.just_committed && !s.committed.empty()) {
    s.submitted.push_back(s.committed_text());
    s.committed.clear();
    s.commits.clear();
    s.just_committed = false;
    return Feedback::Submit;
  }
  return Feedback::None;
}

Feedback Session::cycle() {
  auto& s = state_;
  s.just_committed = false;
  if (s.last_deleted && !s.last_deleted->suggestions.empty()) {
    CommitRecord rec = std::move(*s.last_deleted);
    s.last_deleted.reset();
    s.mode = Mode::Normal;
    s.oov_prefix.clear();
    s.pending = std::move(rec.taps);
    s.suggestions = std::move(rec.suggestions);
    s.raw_best.clear();
    s.no_match = false;
    s.cursor = (rec.index + 1) % s.suggestions.size();
    return Feedback::Click;
  }
  s.last_deleted.reset();
  if (s.suggestions.empty()) return Feedback::None;
  s.cursor = (s.cursor + 1) % s.suggestions.size();
  return Feedback::Click;
}

Feedback Session::delete_word() {
  auto& s = state_;
  s.just_committed = false;
  if (!s.pending.empty()) {
    clear_word();
    s.last_deleted.reset();
    return Feedback::Delete;
  }
  if (s.mode == Mode::Oov) {
    s.mode = Mode::Normal;
    s.oov_prefix.clear();
    s.last_deleted.reset();
    return Feedback::Delete;
  }
  if (s.committed.empty()) return Feedback::None;
  s.committed.pop_back();
  s.last_deleted = std::move(s.commits.back());
  s.commits.pop_back();
  return Feedback::Delete;
}

Feedback Session::accept_char() {
  auto& s = state_;
  s.just_committed = false;
  s.last_deleted.reset();
  if (s.pending.empty()) return Feedback::None;
  std::string text = s.suggestions.empty() ? s.raw_best : s.suggestions[s.cursor].word;
  clear_word();
  s.mode = Mode::Oov;
  s.oov_prefix = std::move(text);
  return Feedback::Click;
}

std::vector<SessionEvent> read_event_log(std::istream& in) {
  std::vector<SessionEvent> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      SessionEvent e;
      e.kind = parse_event_kind(j.at("event").get<std::string>());
      if (j.contains("probs")) {
        ClassProbs p{};
        const auto& arr = j.at("probs");
        if (!arr.is_array() || arr.size() != kNumClasses) throw DomainError("probs must have 6 entries");
        for (std::size_t i = 0; i < kNumClasses; ++i) p[i] = arr[i].get<double>();
        e.obs = TapObservation::make(parse_hand(j.at("hand").get<std::string>()), p, j.value("t", std::int64_t{0}));
      }
      if (e.kind == EventKind::FingerTap && !e.obs) throw DomainError("finger_tap needs hand and probs");
      out.push_back(std::move(e));
    } catch (const nlohmann::json::exception& ex) {
      throw ParseError(ex.what(), lineno);
    } catch (const DomainError& ex) {
      throw ParseError(ex.what(), lineno);
    }
  }
  return out;
}

void write_event_log(const std::vector<SessionEvent>& events, std::ostream& out) {
  for (const auto& e : events) {
    nlohmann::json j;
    j["event"] = to_string(e.kind);
    if (e.obs) {
      j["hand"] = to_string(e.obs->hand);
      j["probs"] = e.obs->probs;
      j["t"] = e.obs->timestamp;
    }
    out << j.dump(-1, ' ', false, nlohmann::json::error_handler_t::strict) << '\n';
  }
}

}  // namespace taptype::session
