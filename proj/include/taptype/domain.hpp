#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "taptype/error.hpp"

namespace taptype {

enum class Hand : std::uint8_t { Left, Right };

// Per-hand classifier classes. Only the four typing fingers carry characters.
enum class FingerClass : std::uint8_t { Thumb, Index, Middle, Ring, Pinky, Palm };

inline constexpr std::size_t kNumClasses = 6;
inline constexpr std::array<Hand, 2> kHands{Hand::Left, Hand::Right};
inline constexpr std::array<FingerClass, kNumClasses> kAllClasses{
    FingerClass::Thumb, FingerClass::Index, FingerClass::Middle,
    FingerClass::Ring,  FingerClass::Pinky, FingerClass::Palm};
inline constexpr std::array<FingerClass, 4> kTypingFingers{
    FingerClass::Index, FingerClass::Middle, FingerClass::Ring, FingerClass::Pinky};

// Characters the decoder can produce. Space is a gesture, not a key.
inline constexpr std::string_view kAlphabet = "abcdefghijklmnopqrstuvwxyz'";

constexpr std::size_t index_of(FingerClass f) { return static_cast<std::size_t>(f); }
constexpr std::size_t index_of(Hand h) { return static_cast<std::size_t>(h); }

constexpr bool is_typing_finger(FingerClass f) {
  return f != FingerClass::Thumb && f != FingerClass::Palm;
}

constexpr bool in_alphabet(char c) {
  return (c >= 'a' && c <= 'z') || c == '\'';
}

std::string_view to_string(Hand h);
std::string_view to_string(FingerClass f);
Hand parse_hand(std::string_view s);          // "L", "R", "left", "right"
FingerClass parse_finger(std::string_view s);  // "thumb", "index", ...

using ClassProbs = std::array<double, kNumClasses>;

// One classified tap: which hand produced it and the class distribution.
struct TapObservation {
  Hand hand = Hand::Left;
  ClassProbs probs{};
  std::int64_t timestamp = 0;

  // Validates probs >= 0 and sum(probs) == 1 within 1e-9.
  static TapObservation make(Hand hand, const ClassProbs& probs, std::int64_t timestamp = 0);
  static TapObservation one_hot(Hand hand, FingerClass f, std::int64_t timestamp = 0);

  double prob(FingerClass f) const { return probs[index_of(f)]; }
  FingerClass argmax() const;

  bool operator==(const TapObservation&) const = default;
};

struct KeyAssignment {
  Hand hand = Hand::Left;
  FingerClass finger = FingerClass::Index;

  bool operator==(const KeyAssignment&) const = default;
};

// Deterministic character -> (hand, finger) assignment. Keeps the raw entry
// list so validate_map can report duplicates coming from a file.
class KeyFingerMap {
 public:
  KeyFingerMap() = default;
  explicit KeyFingerMap(std::vector<std::pair<char, KeyAssignment>> entries);

  // Standard QWERTY touch typing, apostrophe on the right pinky.
  static const KeyFingerMap& qwerty();

  std::optional<KeyAssignment> lookup(char c) const;

  // Sorted preimage of (hand, finger). Throws DomainError for thumb/palm.
  const std::string& characters_for(Hand hand, FingerClass finger) const;

  // All characters carried by the given hand, sorted.
  std::string characters_for(Hand hand) const;

  const std::vector<std::pair<char, KeyAssignment>>& entries() const { return entries_; }

 private:
  std::vector<std::pair<char, KeyAssignment>> entries_;
  std::array<std::optional<KeyAssignment>, 128> table_{};
  std::array<std::array<std::string, kNumClasses>, 2> groups_{};
};

// Human-readable invariant violations; empty means the map is usable.
std::vector<std::string> validate_map(const KeyFingerMap& map);

// `<char> <L|R> <index|middle|ring|pinky>` per line, `#` comments.
KeyFingerMap read_key_finger_map(std::istream& in);
KeyFingerMap load_key_finger_map(const std::string& path);
void write_key_finger_map(const KeyFingerMap& map, std::ostream& out);

// Lowercase and collapse whitespace; throws DomainError on characters
// outside the alphabet.
std::string normalize_phrase(std::string_view text);
std::vector<std::string> split_words(std::string_view phrase);

struct PhraseSet {
  std::vector<std::string> phrases;

  std::size_t word_count() const;
};

PhraseSet read_phrase_set(std::istream& in);
PhraseSet load_phrase_set(const std::string& path);

// Independent, reproducible seed for stream `i` derived from `seed` (splitmix64).
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t i) {
  auto mix = [](std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  };
  return mix(seed ^ mix(i + 1));
}

}  // namespace taptype
