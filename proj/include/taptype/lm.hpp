#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "taptype/error.hpp"

namespace taptype::lm {

using Token = char32_t;
using TokenSeq = std::u32string;

// Token <-> string mapping. Ids 0..2 are always <unk>, <s>, </s>.
class Vocabulary {
 public:
  static constexpr Token kUnk = 0;
  static constexpr Token kBos = 1;
  static constexpr Token kEos = 2;

  Vocabulary();

  Token add(std::string_view word);
  std::optional<Token> find(std::string_view word) const;
  Token id_or_unk(std::string_view word) const;
  const std::string& word(Token t) const { return words_.at(t); }
  std::size_t size() const { return words_.size(); }

  // Tokens a model can predict: everything except <s>.
  std::size_t predicted_size() const { return words_.size() - 1; }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, Token> ids_;
};

// ARPA convention for impossible events (<s> as a prediction).
inline constexpr double kLog10Impossible = -99.0;

struct NGramEntry {
  double log_prob = 0.0;     // natural log
  double log_backoff = 0.0;  // natural log; 0 when the n-gram is never a context
};

// Back-off n-gram model in the representation ARPA files carry. Both the
// Witten-Bell and the modified Kneser-Ney trainers produce one of these, so
// querying, scoring and persistence are shared.
class NGramModel {
 public:
  NGramModel() = default;
  NGramModel(Vocabulary vocab, std::size_t order);

  std::size_t order() const { return order_; }
  const Vocabulary& vocab() const { return vocab_; }
  Vocabulary& vocab() { return vocab_; }

  // ln p(word | history); only the last order-1 history tokens matter.
  double log_prob(std::span<const Token> history, Token word) const;

  // Sum of ln p(t_i | <s> t_1..t_{i-1}) over the sequence. No </s> is added.
  double score(std::span<const Token> tokens) const;
  // Same, continuing from an explicit history instead of <s>.
  double score(std::span<const Token> tokens, std::span<const Token> history) const;

  const std::unordered_map<TokenSeq, NGramEntry>& ngrams(std::size_t n) const {
    return tables_.at(n - 1);
  }
  void set(const TokenSeq& ngram, NGramEntry entry);
  const NGramEntry* find(const TokenSeq& ngram) const;

  // Seen contexts of order n-1 for n-grams of order n (used for normalization tests).
  std::vector<TokenSeq> contexts(std::size_t n) const;

 private:
  Vocabulary vocab_;
  std::size_t order_ = 0;
  std::vector<std::unordered_map<TokenSeq, NGramEntry>> tables_;
};

// A corpus is a list of sentences, each a list of lowercase words over
// a-z and apostrophe.
struct Corpus {
  std::vector<std::vector<std::string>> sentences;

  std::size_t size() const { return sentences.size(); }
  bool empty() const { return sentences.empty(); }
  std::size_t token_count() const;
};

// Lowercases, maps punctuation other than the apostrophe to whitespace and
// drops sentences containing digits or non-ASCII characters.
std::optional<std::vector<std::string>> clean_sentence(std::string_view line);
Corpus read_corpus(std::istream& in);
Corpus load_corpus(const std::string& path);

// ---------------------------------------------------------------------------
// Character model: Witten-Bell, one training sequence per word.

class CharNGramModel {
 public:
  CharNGramModel() = default;
  explicit CharNGramModel(NGramModel model);

  std::size_t order() const { return model_.order(); }
  const NGramModel& ngrams() const { return model_; }

  Token token(char c) const;  // throws DomainError outside the alphabet
  TokenSeq tokens(std::string_view word) const;

  // ln p(c | <s> prefix).
  double log_prob(std::string_view prefix, char c) const;
  // ln p(</s> | <s> prefix).
  double log_prob_end(std::string_view prefix) const;
  // Sum of ln p(c_i | <s> c_1..c_{i-1}), no end symbol.
  double score(std::string_view word) const;

 private:
  NGramModel model_;
  std::array<Token, 128> char_tokens_{};
};

CharNGramModel train_char_lm(const Corpus& corpus, std::size_t order);
// Words with repetition counts, e.g. a frequency list.
CharNGramModel train_char_lm(const std::vector<std::pair<std::string, std::uint64_t>>& words,
                             std::size_t order);

// ---------------------------------------------------------------------------
// Word model: interpolated modified Kneser-Ney.

struct WordLmOptions {
  std::size_t order = 4;
  std::size_t vocab_cap = 100000;
  // Closed vocabulary; when empty the vocab_cap most frequent training words are used.
  std::vector<std::string> vocabulary;
  // Forces absolute discounting with this value for every order.
  std::optional<double> fixed_discount;
  double fallback_discount = 0.7;
};

struct Discounts {
  double d1 = 0.0, d2 = 0.0, d3plus = 0.0;
  bool fallback = false;
};

class WordNGramModel {
 public:
  WordNGramModel() = default;
  WordNGramModel(NGramModel model, std::vector<Discounts> discounts = {});

  std::size_t order() const { return model_.order(); }
  const NGramModel& ngrams() const { return model_; }
  const std::vector<Discounts>& discounts() const { return discounts_; }

  bool contains(std::string_view word) const;
  Token token(std::string_view word) const { return model_.vocab().id_or_unk(word); }

  // ln p(word | context) where context is the list of preceding words
  // (most recent last). `sentence_start` prepends <s>.
  double log_prob(std::span<const std::string> context, std::string_view word,
                  bool sentence_start = true) const;
  // Includes the final </s>; used for perplexity and cross-entropy.
  double score_sentence(std::span<const std::string> words) const;
  double score(std::span<const std::string> words) const;  // no </s>

  // In-vocabulary words (excluding specials), in token order.
  std::vector<std::string> words() const;

 private:
  NGramModel model_;
  std::vector<Discounts> discounts_;
};

WordNGramModel train_word_lm(const Corpus& corpus, const WordLmOptions& options = {});

// Per-order discounts from count-of-counts; nullopt when degenerate.
std::optional<Discounts> kn_discounts(const std::array<std::uint64_t, 5>& count_of_counts);

// ---------------------------------------------------------------------------
// ARPA persistence. Probabilities are written as log10.

void write_arpa(const NGramModel& model, std::ostream& out);
NGramModel read_arpa(std::istream& in);
void save_arpa(const NGramModel& model, const std::string& path);
NGramModel load_arpa(const std::string& path);

// ---------------------------------------------------------------------------
// Mixtures and corpus selection.

// Linear interpolation of word models that may have different vocabularies.
class MixtureModel {
 public:
  MixtureModel(std::vector<const WordNGramModel*> components, std::vector<double> weights);

  double log_prob(std::span<const std::string> context, std::string_view word) const;
  // Per-token cross-entropy (nats) including </s>.
  double cross_entropy(std::span<const std::string> sentence) const;
  const std::vector<double>& weights() const { return weights_; }

 private:
  std::vector<const WordNGramModel*> components_;
  std::vector<double> weights_;
};

double cross_entropy(const WordNGramModel& model, std::span<const std::string> sentence);
double perplexity(const WordNGramModel& model, const Corpus& corpus);
double perplexity(const MixtureModel& model, const Corpus& corpus);

// Grid search (step 0.05) over two-component interpolation weights
// minimizing held-out perplexity. Returns the weight of the first component.
double optimize_mixture_weight(const WordNGramModel& a, const WordNGramModel& b,
                               const Corpus& heldout, double step = 0.05);

struct SelectionOptions {
  std::size_t order = 4;
  double discount = 0.7;  // absolute discounting for the selection models
  std::size_t query_sample = 0;  // 0: as many sentences as the in-domain corpus
  std::uint64_t seed = 1;
};

struct SelectionResult {
  std::vector<double> scores;                 // one per query sentence, higher = more in-domain
  std::vector<double> thresholds;
  std::vector<std::vector<std::size_t>> selected;  // query sentence indices per threshold
  std::vector<double> heldout_perplexity;     // per threshold, when held-out data was given
};

// Cross-entropy difference selection. The in-domain side is either a single
// corpus or an interpolation of component corpora; `heldout` (optional) is
// used to fit mixture weights and to rank the selected subsets.
SelectionResult select_corpus(const Corpus& query, const std::vector<Corpus>& in_domain,
                              const std::vector<double>& thresholds,
                              const Corpus* heldout = nullptr,
                              const SelectionOptions& options = {});

// Scores query sentences against fixed models: H_query(s) - H_in(s).
std::vector<double> cross_entropy_difference(const Corpus& query, const MixtureModel& in_domain,
                                             const WordNGramModel& query_model);

}  // namespace taptype::lm
