#include "taptype/domain.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

namespace taptype {

std::string_view to_string(Hand h) { return h == Hand::Left ? "L" : "R"; }

std::string_view to_string(FingerClass f) {
  switch (f) {
    case FingerClass::Thumb: return "thumb";
    case FingerClass::Index: return "index";
    case FingerClass::Middle: return "middle";
    case FingerClass::Ring: return "ring";
    case FingerClass::Pinky: return "pinky";
    case FingerClass::Palm: return "palm";
  }
  return "?";
}

static std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

Hand parse_hand(std::string_view s) {
  const std::string v = lower(s);
  if (v == "l" || v == "left") return Hand::Left;
  if (v == "r" || v == "right") return Hand::Right;
  throw DomainError("unknown hand '" + std::string(s) + "'");
}

FingerClass parse_finger(std::string_view s) {
  const std::string v = lower(s);
  for (FingerClass f : kAllClasses)
    if (v == to_string(f)) return f;
  throw DomainError("unknown finger class '" + std::string(s) + "'");
}

TapObservation TapObservation::make(Hand hand, const ClassProbs& probs, std::int64_t timestamp) {
  double sum = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw DomainError("tap probabilities must be finite and >= 0");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw DomainError("tap probabilities must sum to 1");
  return TapObservation{hand, probs, timestamp};
}

TapObservation TapObservation::one_hot(Hand hand, FingerClass f, std::int64_t timestamp) {
  ClassProbs p{};
  p[index_of(f)] = 1.0;
  return TapObservation{hand, p, timestamp};
}

FingerClass TapObservation::argmax() const {
  return kAllClasses[static_cast<std::size_t>(
      std::max_element(probs.begin(), probs.end()) - probs.begin())];
}

KeyFingerMap::KeyFingerMap(std::vector<std::pair<char, KeyAssignment>> entries)
    : entries_(std::move(entries)) {
  for (const auto& [c, a] : entries_) {
    const auto uc = static_cast<unsigned char>(c);
    if (uc >= table_.size() || table_[uc]) continue;  // first entry wins
    table_[uc] = a;
    groups_[index_of(a.hand)][index_of(a.finger)].push_back(c);
  }
  for (auto& hand : groups_)
    for (auto& g : hand) std::sort(g.begin(), g.end());
}

const KeyFingerMap& KeyFingerMap::qwerty() {
  static const KeyFingerMap map = [] {
    std::vector<std::pair<char, KeyAssignment>> e;
    auto add = [&](std::string_view chars, Hand h, FingerClass f) {
      for (char c : chars) e.emplace_back(c, KeyAssignment{h, f});
    };
    add("qaz", Hand::Left, FingerClass::Pinky);
    add("wsx", Hand::Left, FingerClass::Ring);
    add("edc", Hand::Left, FingerClass::Middle);
    add("rtfgvb", Hand::Left, FingerClass::Index);
    add("yuhjnm", Hand::Right, FingerClass::Index);
    add("ik", Hand::Right, FingerClass::Middle);
    add("ol", Hand::Right, FingerClass::Ring);
    add("p'", Hand::Right, FingerClass::Pinky);
    return KeyFingerMap(std::move(e));
  }();
  return map;
}

std::optional<KeyAssignment> KeyFingerMap::lookup(char c) const {
  const auto uc = static_cast<unsigned char>(c);
  if (uc >= table_.size()) return std::nullopt;
  return table_[uc];
}

const std::string& KeyFingerMap::characters_for(Hand hand, FingerClass finger) const {
  if (!is_typing_finger(finger))
    throw DomainError("no characters on " + std::string(to_string(finger)));
  return groups_[index_of(hand)][index_of(finger)];
}

std::string KeyFingerMap::characters_for(Hand hand) const {
  std::string out;
  for (FingerClass f : kTypingFingers) out += characters_for(hand, f);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::string> validate_map(const KeyFingerMap& map) {
  std::vector<std::string> violations;
  std::set<char> seen;
  for (const auto& [c, a] : map.entries()) {
    if (!in_alphabet(c)) violations.push_back(std::string("character outside alphabet ") + c);
    if (!seen.insert(c).second) violations.push_back(std::string("duplicate character ") + c);
    if (!is_typing_finger(a.finger))
      violations.push_back(std::string("character on non-typing class ") + c + " (" +
                           std::string(to_string(a.hand)) + " " +
                           std::string(to_string(a.finger)) + ")");
  }
  for (char c : kAlphabet)
    if (!seen.count(c)) violations.push_back(std::string("uncovered character ") + c);
  return violations;
}

KeyFingerMap read_key_finger_map(std::istream& in) {
  std::vector<std::pair<char, KeyAssignment>> entries;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) {
      // '#' itself is never a key, so a comment can start anywhere.
      line.erase(hash);
    }
    std::istringstream fields(line);
    std::string ch, hand, finger, extra;
    if (!(fields >> ch)) continue;
    if (!(fields >> hand >> finger) || (fields >> extra) || ch.size() != 1)
      throw ParseError("expected '<char> <L|R> <finger>'", lineno);
    try {
      const char c = static_cast<char>(std::tolower(static_cast<unsigned char>(ch[0])));
      entries.emplace_back(c, KeyAssignment{parse_hand(hand), parse_finger(finger)});
    } catch (const DomainError& e) {
      throw ParseError(e.what(), lineno);
    }
  }
  return KeyFingerMap(std::move(entries));
}

KeyFingerMap load_key_finger_map(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open key-finger map " + path);
  return read_key_finger_map(in);
}

void write_key_finger_map(const KeyFingerMap& map, std::ostream& out) {
  for (const auto& [c, a] : map.entries())
    out << c << ' ' << to_string(a.hand) << ' ' << to_string(a.finger) << '\n';
}

std::string normalize_phrase(std::string_view text) {
  std::string out;
  bool pending_space = false;
  for (char raw : text) {
    const char c = static_cast<char>(std::tolower(static_cast<unsigned char>(raw)));
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
      continue;
    }
    if (!in_alphabet(c)) throw DomainError(std::string("character outside alphabet: '") + raw + "'");
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

std::vector<std::string> split_words(std::string_view phrase) {
  std::vector<std::string> words;
  std::size_t i = 0;
  while (i < phrase.size()) {
    while (i < phrase.size() && phrase[i] == ' ') ++i;
    std::size_t j = i;
    while (j < phrase.size() && phrase[j] != ' ') ++j;
    if (j > i) words.emplace_back(phrase.substr(i, j - i));
    i = j;
  }
  return words;
}

std::size_t PhraseSet::word_count() const {
  std::size_t n = 0;
  for (const auto& p : phrases) n += split_words(p).size();
  return n;
}

PhraseSet read_phrase_set(std::istream& in) {
  PhraseSet set;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    try {
      std::string p = normalize_phrase(line);
      if (!p.empty()) set.phrases.push_back(std::move(p));
    } catch (const DomainError& e) {
      throw ParseError(e.what(), lineno);
    }
  }
  return set;
}

PhraseSet load_phrase_set(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open phrase set " + path);
  return read_phrase_set(in);
}

}  // namespace taptype
