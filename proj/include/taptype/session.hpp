#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "taptype/decoder.hpp"
#include "taptype/domain.hpp"

namespace taptype::session {

enum class EventKind { FingerTap, Space, Cycle, DeleteWord, AcceptChar, Rejected };

struct SessionEvent {
  EventKind kind = EventKind::Rejected;
  std::optional<TapObservation> obs;  // the tap behind the event, when there was one

  bool operator==(const SessionEvent&) const = default;
};

std::string_view to_string(EventKind k);
EventKind parse_event_kind(std::string_view s);

// Thumbs and palms are routed deterministically on the argmax class; typing
// fingers keep the full distribution. nullopt means the classifier rejected the tap.
SessionEvent classify_event(const std::optional<TapObservation>& tap);

enum class Mode { Normal, Oov };
enum class Feedback { None, Click, Delete, Submit };

std::string_view to_string(Feedback f);

// What a committed word was chosen from, so it can be re-cycled after a delete.
struct CommitRecord {
  std::string word;
  decoder::SuggestionList suggestions;
  decoder::ObservationSequence taps;
  std::size_t index = 0;  // position of `word` in `suggestions`

  bool operator==(const CommitRecord&) const = default;
};

struct SessionState {
  std::vector<std::string> committed;  // current phrase
  std::vector<std::string> submitted;  // finished phrases
  decoder::ObservationSequence pending;
  decoder::SuggestionList suggestions;
  std::string raw_best;  // best character sequence for the pending taps, ignoring the vocabulary
  std::size_t cursor = 0;
  Mode mode = Mode::Normal;
  std::string oov_prefix;
  std::vector<CommitRecord> commits;       // parallel to `committed`
  std::optional<CommitRecord> last_deleted;  // restorable by Cycle
  bool just_committed = false;
  bool no_match = false;

  std::string committed_text() const;
  bool operator==(const SessionState&) const = default;
};

struct Render {
  std::string committed;
  std::string pending;  // oov prefix followed by one asterisk per pending tap
  decoder::SuggestionList suggestions;
  std::size_t cursor = 0;
  Feedback feedback = Feedback::None;
  Mode mode = Mode::Normal;
  bool no_match = false;

  bool operator==(const Render&) const = default;
};

Render render(const SessionState& state, Feedback feedback);

class Session {
 public:
  explicit Session(const decoder::Decoder& decoder) : decoder_(&decoder) {}

  Render apply(const SessionEvent& event);
  // Explicit submit (the web client's Enter key); same effect as the double space.
  Render submit();
  const SessionState& state() const { return state_; }
  void reset() { state_ = SessionState{}; }

 private:
  Feedback tap(const TapObservation& obs);
  Feedback space();
  Feedback cycle();
  Feedback delete_word();
  Feedback accept_char();
  void redecode();
  void clear_word();
  void commit(const std::string& word);

  const decoder::Decoder* decoder_;
  SessionState state_;
};

// JSON lines, one event per line: {"event": "finger_tap", "hand": "L", "probs": [...]}.
std::vector<SessionEvent> read_event_log(std::istream& in);
void write_event_log(const std::vector<SessionEvent>& events, std::ostream& out);

}  // namespace taptype::session
