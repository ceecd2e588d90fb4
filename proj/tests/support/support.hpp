#pragma once

// Shared test fixtures and independent reference implementations. Nothing
// here calls into the code it is used to check.

#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "taptype/classifier.hpp"
#include "taptype/decoder.hpp"
#include "taptype/domain.hpp"
#include "taptype/lm.hpp"
#include "taptype/session.hpp"
#include "taptype/signal.hpp"

namespace tt_test {

using namespace taptype;

// Seeded value source for hand-rolled property tests.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  std::int64_t integer(std::int64_t lo, std::int64_t hi) {  // inclusive
    return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng_);
  }
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(integer(0, static_cast<std::int64_t>(n) - 1)); }
  double real(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  double normal(double mean = 0.0, double sd = 1.0) { return std::normal_distribution<double>(mean, sd)(rng_); }
  bool coin(double p = 0.5) { return std::bernoulli_distribution(p)(rng_); }

  template <typename T>
  const T& pick(const std::vector<T>& v) { return v[index(v.size())]; }
  Hand hand() { return coin() ? Hand::Left : Hand::Right; }
  FingerClass finger() { return kAllClasses[index(kAllClasses.size())]; }
  FingerClass typing_finger() { return kTypingFingers[index(kTypingFingers.size())]; }

  std::string word(std::size_t min_len, std::size_t max_len, std::string_view alphabet = kAlphabet);
  // Random distribution; `concentration` < 1 gives spiky outputs.
  ClassProbs probs(double concentration = 1.0);
  // Most mass on `f`, the rest spread at random.
  ClassProbs peaked(FingerClass f, double mass);

  signal::ImuStream stream(std::size_t n, double scale = 50.0);

  std::mt19937_64& rng() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

// ---------------------------------------------------------------------------
// Oracles

// Direct loop over the recurrence, magnitudes computed inline.
std::vector<double> reference_rate_of_change(const signal::ImuStream& s, double decay);

// Full (n+1) x (m+1) edit-distance table.
std::size_t dp_levenshtein(const std::string& a, const std::string& b);

// Every character sequence the observations allow (after finger pruning),
// filtered by `vocabulary`, scored term by term and ranked.
decoder::SuggestionList exhaustive_decode(const decoder::ObservationSequence& obs,
                                          const std::vector<std::string>& context,
                                          const decoder::Decoder& decoder,
                                          const std::set<std::string>& vocabulary, double prune,
                                          std::size_t top = 10);

// Interpolated Witten-Bell straight from string counts: ln p(c | <s> prefix)
// for words fed as <s> w </s>.
class WittenBellOracle {
 public:
  WittenBellOracle(const std::vector<std::string>& words, std::size_t order);
  double prob(const std::string& history, const std::string& symbol) const;  // symbols: chars or "</s>"

 private:
  std::size_t order_;
  std::vector<std::map<std::vector<std::string>, double>> counts_;  // counts_[k-1][k-gram]
  double unigram_total_ = 0, unigram_types_ = 0, vocab_ = 0;
  double p(const std::vector<std::string>& h, const std::string& w) const;
};

// Interpolated modified Kneser-Ney bigram model, KenLM conventions.
class KneserNeyBigramOracle {
 public:
  explicit KneserNeyBigramOracle(const std::vector<std::vector<std::string>>& sentences);
  double unigram(const std::string& w) const;
  double prob(const std::string& h, const std::string& w) const;
  const std::set<std::pair<std::string, std::string>>& seen() const { return seen_; }
  std::array<double, 3> discounts(int order) const { return order == 1 ? d1_ : d2_; }

 private:
  std::map<std::pair<std::string, std::string>, double> bigram_;
  std::map<std::string, double> adjusted_;  // continuation counts of unigrams
  std::set<std::pair<std::string, std::string>> seen_;
  std::set<std::string> vocab_;  // includes <unk>, </s>, <s>
  std::array<double, 3> d1_{}, d2_{};
  double adjusted_total_ = 0;
};

// ---------------------------------------------------------------------------
// Fixtures

// Decoder stack trained from data/: order-5 character model and order-4
// word model on corpus.txt + general.txt. Built once per process.
struct DeskStack {
  KeyFingerMap map;
  lm::CharNGramModel char_lm;
  lm::WordNGramModel word_lm;
  PhraseSet phrases;
};
const DeskStack& desk_stack();
const decoder::Decoder& desk_decoder();

std::string data_path(const std::string& name);
std::string fixture_path(const std::string& name);

// Gravity-only stream with short impulses on sensor 0 at the given samples.
signal::ImuStream impulse_stream(std::size_t n, const std::vector<std::size_t>& at, double height = 60.0);

// Observation sequence that spells `word` exactly.
decoder::ObservationSequence one_hot_taps(const std::string& word, const KeyFingerMap& map);

// Small closed-vocabulary word model over short desk words.
struct SmallStack {
  std::vector<std::string> vocab;
  lm::WordNGramModel word_lm;
};
SmallStack small_stack(std::uint64_t seed, std::size_t size);

// Observations for `word` in one of three styles: confusion-classifier
// output, a peak on the true finger, or an arbitrary distribution.
decoder::ObservationSequence noisy_taps(Gen& g, const std::string& word, const KeyFingerMap& map,
                                        classifier::ConfusionClassifier& confusion);

// Random event script: mostly taps from a noisy classifier, some gestures.
std::vector<session::SessionEvent> random_script(Gen& g, std::size_t n);

}  // namespace tt_test
