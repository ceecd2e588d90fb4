#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <iosfwd>
#include <string>
#include <vector>

#include "taptype/classifier.hpp"
#include "taptype/decoder.hpp"
#include "taptype/domain.hpp"

namespace taptype::eval {

// Produces one observation for a tap of the given true (hand, finger).
using Sampler = std::function<TapObservation(Hand, FingerClass)>;
// Builds an independent sampler from a seed (one per phrase and repetition).
using SamplerFactory = std::function<Sampler(std::uint64_t seed)>;

SamplerFactory confusion_source(const classifier::ClassifierSpec& spec);

// Pre-computed predictive distributions of held-out windows, grouped by the
// true (hand, class); the sampler draws one uniformly. Rejected windows are left out.
struct PredictionPool {
  std::array<std::array<std::vector<ClassProbs>, kNumClasses>, 2> probs;
};
PredictionPool build_pool(const classifier::Model& model, const classifier::Dataset& heldout, std::uint64_t seed);
SamplerFactory pool_source(std::shared_ptr<const PredictionPool> pool);

struct SimulationConfig {
  PhraseSet phrases;
  std::vector<std::size_t> ks{1, 2, 3, 4, 5, 10, 20};
  std::uint64_t seed = 7;
  std::size_t repeats = 1;  // passes over the phrase set, each with its own seeds

  void validate() const;
};

struct WordOutcome {
  std::string word;
  std::size_t rank = 0;  // 1-based position in the suggestion list, 0 = absent
};

struct EvalReport {
  std::vector<std::size_t> ks;
  std::vector<double> recall;         // pooled over all simulated words
  std::vector<double> recall_stderr;  // across repeats
  std::size_t words = 0;
  std::size_t repeats = 0;
  std::vector<WordOutcome> outcomes;

  std::vector<double> wpm;  // per phrase
  std::vector<double> cer;  // per phrase
  double wpm_mean = 0.0, wpm_stderr = 0.0;
  double cer_mean = 0.0, cer_stderr = 0.0;
};

std::string to_json(const EvalReport& report);

// Words of the phrase set that the decoder cannot produce.
std::vector<std::string> missing_words(const PhraseSet& phrases, const decoder::Decoder& decoder);

EvalReport simulate_recall(const SimulationConfig& config, const decoder::Decoder& decoder,
                           const SamplerFactory& source);
namespace serial {
EvalReport simulate_recall(const SimulationConfig& config, const decoder::Decoder& decoder,
                           const SamplerFactory& source);
}

double cer(std::string_view predicted, std::string_view reference);
std::size_t levenshtein(std::string_view a, std::string_view b);
double wpm(std::size_t char_count, double seconds);

// Scripted user: taps each word, cycles to the target when it is among the
// suggestions, otherwise spells it in character mode; then double-space submits.
struct TypingTiming {
  double tap_s = 0.25;      // per finger tap
  double gesture_s = 0.35;  // per thumb/palm gesture
};

struct TypedPhrase {
  std::string reference;
  std::string typed;
  double seconds = 0.0;
  std::size_t taps = 0, gestures = 0;
  std::vector<std::size_t> first_ranks;  // rank of each target right after its taps (0 = absent)
};

TypedPhrase type_phrase(const std::string& phrase, const decoder::Decoder& decoder, const Sampler& sampler,
                        const TypingTiming& timing = {});

EvalReport simulate_typing(const SimulationConfig& config, const decoder::Decoder& decoder,
                           const SamplerFactory& source, const TypingTiming& timing = {});

struct ClassifierVariant {
  std::string name;
  classifier::ClassifierConfig config;
};

struct ComparisonRow {
  std::string name;
  classifier::Metrics metrics;
  double ood_rejection = 0.0;
  std::vector<double> recall;
};

std::vector<ComparisonRow> compare_classifiers(const std::vector<ClassifierVariant>& variants,
                                               const classifier::Dataset& train, const classifier::Dataset& test,
                                               const SimulationConfig& sim, const decoder::Decoder& decoder,
                                               std::uint64_t seed);

std::string to_json(const std::vector<ComparisonRow>& rows, const std::vector<std::size_t>& ks);

}  // namespace taptype::eval
