#include "taptype/decoder.hpp"

#include <algorithm>
#include <cmath>

namespace taptype::decoder {

void DecoderConfig::validate() const {
  if (beam_width < 1) throw DomainError("beam width must be >= 1");
  if (!(finger_prune >= 0.0 && finger_prune < 1.0)) throw DomainError("finger prune must be in [0,1)");
  if (max_suggestions < 1) throw DomainError("max suggestions must be >= 1");
}

Lexicon::Lexicon(const std::vector<std::string>& words) : nodes_(1) {
  for (const auto& w : words) {
    if (w.empty() || !std::all_of(w.begin(), w.end(), in_alphabet)) continue;
    int node = 0;
    for (char c : w) {
      int& next = nodes_[static_cast<std::size_t>(node)].next[static_cast<std::size_t>(slot(c))];
      if (next == kNoChild) {
        next = static_cast<int>(nodes_.size());
        nodes_.emplace_back();
      }
      node = nodes_[static_cast<std::size_t>(node)].next[static_cast<std::size_t>(slot(c))];
    }
    if (!nodes_[static_cast<std::size_t>(node)].word) ++words_;
    nodes_[static_cast<std::size_t>(node)].word = true;
  }
}

int Lexicon::child(int node, char c) const {
  if (!in_alphabet(c)) return kNoChild;
  return nodes_[static_cast<std::size_t>(node)].next[static_cast<std::size_t>(slot(c))];
}

bool ranks_before(const Hypothesis& a, const Hypothesis& b) {
  if (a.logp != b.logp) return a.logp > b.logp;
  return a.prefix < b.prefix;
}

Decoder::Decoder(const KeyFingerMap& map, const lm::CharNGramModel& char_lm, const lm::WordNGramModel& word_lm,
                 DecoderConfig config)
    : map_(&map), char_lm_(&char_lm), word_lm_(&word_lm), config_(config), lexicon_(word_lm.words()) {
  config_.validate();
}

std::vector<FingerClass> Decoder::active_fingers(const TapObservation& obs) const {
  if (map_->characters_for(obs.hand).empty())
    throw DomainError("no characters mapped to the " + std::string(to_string(obs.hand)) + " hand");
  std::vector<FingerClass> out;
  FingerClass best = FingerClass::Index;
  double best_p = -1.0;
  for (FingerClass f : kTypingFingers) {
    if (map_->characters_for(obs.hand, f).empty()) continue;
    const double p = obs.prob(f);
    if (p >= config_.finger_prune && p > 0.0) out.push_back(f);
    if (p > best_p) {
      best_p = p;
      best = f;
    }
  }
  if (out.empty()) out.push_back(best);
  return out;
}

namespace {

void expand_node(const BeamNode& node, const TapObservation& obs, const std::vector<FingerClass>& fingers,
                 const Decoder& decoder, const Lexicon* lexicon, std::vector<BeamNode>& out) {
  for (FingerClass f : fingers) {
    const double finger_term = std::log(obs.prob(f));
    for (char c : decoder.map().characters_for(obs.hand, f)) {
      int next = Lexicon::kNoChild;
      if (lexicon) {
        next = lexicon->child(node.trie, c);
        if (next == Lexicon::kNoChild) continue;
      }
      BeamNode child;
      child.hyp.prefix = node.hyp.prefix + c;
      child.hyp.logp = node.hyp.logp + decoder.char_lm().log_prob(node.hyp.prefix, c) + finger_term;
      child.trie = next;
      out.push_back(std::move(child));
    }
  }
}

void keep_best(std::vector<BeamNode>& nodes, std::size_t beam_width) {
  auto cmp = [](const BeamNode& a, const BeamNode& b) { return ranks_before(a.hyp, b.hyp); };
  if (beam_width > 0 && nodes.size() > beam_width) {
    std::partial_sort(nodes.begin(), nodes.begin() + static_cast<std::ptrdiff_t>(beam_width), nodes.end(), cmp);
    nodes.resize(beam_width);
  } else {
    std::sort(nodes.begin(), nodes.end(), cmp);
  }
}

}  // namespace

std::vector<BeamNode> expand_beam(const std::vector<BeamNode>& beam, const TapObservation& obs,
                                  const Decoder& decoder, const Lexicon* lexicon, std::size_t beam_width) {
  const auto fingers = decoder.active_fingers(obs);
  std::vector<std::vector<BeamNode>> parts(beam.size());
  const auto n = static_cast<std::ptrdiff_t>(beam.size());
#pragma omp parallel for schedule(dynamic, 4) if (n > 8)
  for (std::ptrdiff_t i = 0; i < n; ++i)
    expand_node(beam[static_cast<std::size_t>(i)], obs, fingers, decoder, lexicon, parts[static_cast<std::size_t>(i)]);
  std::vector<BeamNode> out;
  for (auto& p : parts) std::move(p.begin(), p.end(), std::back_inserter(out));
  keep_best(out, beam_width);
  return out;
}

namespace serial {
std::vector<BeamNode> expand_beam(const std::vector<BeamNode>& beam, const TapObservation& obs,
                                  const Decoder& decoder, const Lexicon* lexicon, std::size_t beam_width) {
  const auto fingers = decoder.active_fingers(obs);
  std::vector<BeamNode> out;
  for (const auto& node : beam) expand_node(node, obs, fingers, decoder, lexicon, out);
  keep_best(out, beam_width);
  return out;
}
}  // namespace serial

DecodeResult Decoder::decode_full(const ObservationSequence& obs, std::span<const std::string> context) const {
  DecodeResult result;
  result.suggestions = decode(obs, context);
  std::vector<BeamNode> beam{BeamNode{{}, Lexicon::kNoChild}};
  for (const auto& o : obs) beam = expand_beam(beam, o, *this, nullptr, config_.beam_width);
  result.raw_best = beam.front().hyp;
  return result;
}

SuggestionList Decoder::decode(const ObservationSequence& obs, std::span<const std::string> context) const {
  if (obs.empty()) throw DomainError("decode needs at least one observation");
  if (context.size() > config_.max_context_words) context = context.last(config_.max_context_words);

  std::vector<BeamNode> beam{BeamNode{{}, lexicon_.root()}};
  for (std::size_t i = 0; i < obs.size(); ++i) {
    // The last step keeps every child so the word model sees all full-length words.
    const bool last = i + 1 == obs.size();
    beam = expand_beam(beam, obs[i], *this, &lexicon_, last ? 0 : config_.beam_width);
    if (beam.empty()) break;
  }

  SuggestionList out;
  for (const auto& node : beam) {
    if (node.hyp.prefix.size() != obs.size() || !lexicon_.is_word(node.trie)) continue;
    const double word_term = word_lm_->log_prob(context, node.hyp.prefix);
    out.push_back({node.hyp.prefix, node.hyp.logp + word_term, node.hyp.logp});
  }
  std::sort(out.begin(), out.end(), [](const Suggestion& a, const Suggestion& b) {
    if (a.total_logp != b.total_logp) return a.total_logp > b.total_logp;
    return a.word < b.word;
  });
  if (out.size() > config_.max_suggestions) out.resize(config_.max_suggestions);
  return out;
}

std::vector<CharCandidate> Decoder::decode_single_char(const TapObservation& obs, std::string_view prefix) const {
  const std::string chars = map_->characters_for(obs.hand);
  if (chars.empty()) throw DomainError("no characters mapped to the " + std::string(to_string(obs.hand)) + " hand");
  std::vector<CharCandidate> out;
  for (char c : chars) {
    const auto a = map_->lookup(c);
    out.push_back({c, char_lm_->log_prob(prefix, c) + std::log(obs.prob(a->finger))});
  }
  std::sort(out.begin(), out.end(), [](const CharCandidate& a, const CharCandidate& b) {
    if (a.logp != b.logp) return a.logp > b.logp;
    return a.c < b.c;
  });
  return out;
}

SuggestionList decode(const ObservationSequence& obs, std::span<const std::string> context,
                      const KeyFingerMap& map, const lm::CharNGramModel& char_lm,
                      const lm::WordNGramModel& word_lm, const DecoderConfig& config) {
  return Decoder(map, char_lm, word_lm, config).decode(obs, context);
}

}  // namespace taptype::decoder
