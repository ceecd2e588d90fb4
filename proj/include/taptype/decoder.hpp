#pragma once

#include <span>
#include <string>
#include <vector>

#include "taptype/domain.hpp"
#include "taptype/lm.hpp"

namespace taptype::decoder {

using ObservationSequence = std::vector<TapObservation>;

struct DecoderConfig {
  std::size_t beam_width = 64;
  double finger_prune = 0.1;
  std::size_t max_suggestions = 10;
  std::size_t max_context_words = 3;

  void validate() const;
};

struct Hypothesis {
  std::string prefix;
  double logp = 0.0;
};

struct Suggestion {
  std::string word;
  double total_logp = 0.0;  // char model + finger terms + word model
  double char_logp = 0.0;   // char model + finger terms only

  bool operator==(const Suggestion&) const = default;
};

using SuggestionList = std::vector<Suggestion>;

struct CharCandidate {
  char c = 0;
  double logp = 0.0;

  bool operator==(const CharCandidate&) const = default;
};

struct DecodeResult {
  SuggestionList suggestions;
  // Best full-length character sequence ignoring the vocabulary (the OOV path).
  Hypothesis raw_best;
};

// Prefix tree over the in-vocabulary words that can be spelled from the alphabet.
class Lexicon {
 public:
  static constexpr int kNoChild = -1;

  Lexicon() : nodes_(1) {}
  explicit Lexicon(const std::vector<std::string>& words);

  int root() const { return 0; }
  int child(int node, char c) const;
  bool is_word(int node) const { return nodes_[static_cast<std::size_t>(node)].word; }
  std::size_t size() const { return words_; }

 private:
  struct Node {
    std::array<int, 27> next;
    bool word = false;
    Node() { next.fill(kNoChild); }
  };
  static int slot(char c) { return c == '\'' ? 26 : c - 'a'; }

  std::vector<Node> nodes_;
  std::size_t words_ = 0;
};

// Holds the models and the lexicon so repeated decodes reuse them. Models
// are borrowed and must outlive the decoder.
class Decoder {
 public:
  Decoder(const KeyFingerMap& map, const lm::CharNGramModel& char_lm, const lm::WordNGramModel& word_lm,
          DecoderConfig config = {});

  const DecoderConfig& config() const { return config_; }
  const KeyFingerMap& map() const { return *map_; }
  const lm::CharNGramModel& char_lm() const { return *char_lm_; }
  const lm::WordNGramModel& word_lm() const { return *word_lm_; }
  const Lexicon& lexicon() const { return lexicon_; }

  SuggestionList decode(const ObservationSequence& obs, std::span<const std::string> context = {}) const;
  DecodeResult decode_full(const ObservationSequence& obs, std::span<const std::string> context = {}) const;

  // Every character of the observation's hand, best first.
  std::vector<CharCandidate> decode_single_char(const TapObservation& obs, std::string_view prefix = {}) const;

  // Fingers of the observation's hand whose probability passes the pruning
  // threshold; the single most likely typing finger when none does.
  std::vector<FingerClass> active_fingers(const TapObservation& obs) const;

 private:
  const KeyFingerMap* map_;
  const lm::CharNGramModel* char_lm_;
  const lm::WordNGramModel* word_lm_;
  DecoderConfig config_;
  Lexicon lexicon_;
};

SuggestionList decode(const ObservationSequence& obs, std::span<const std::string> context,
                      const KeyFingerMap& map, const lm::CharNGramModel& char_lm,
                      const lm::WordNGramModel& word_lm, const DecoderConfig& config = {});

// Descending score, then lexicographic.
bool ranks_before(const Hypothesis& a, const Hypothesis& b);

struct BeamNode {
  Hypothesis hyp;
  int trie = 0;  // Lexicon node, or Lexicon::kNoChild when unconstrained
};

// One beam step: expands every node with the characters allowed by `obs`
// and returns the best `beam_width` children (all of them when beam_width is 0).
std::vector<BeamNode> expand_beam(const std::vector<BeamNode>& beam, const TapObservation& obs,
                                  const Decoder& decoder, const Lexicon* lexicon, std::size_t beam_width);

namespace serial {
std::vector<BeamNode> expand_beam(const std::vector<BeamNode>& beam, const TapObservation& obs,
                                  const Decoder& decoder, const Lexicon* lexicon, std::size_t beam_width);
}

}  // namespace taptype::decoder
