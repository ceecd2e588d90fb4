#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <set>

#include "taptype/lm.hpp"

namespace taptype::lm {

MixtureModel::MixtureModel(std::vector<const WordNGramModel*> components, std::vector<double> weights)
    : components_(std::move(components)), weights_(std::move(weights)) {
  if (components_.empty() || components_.size() != weights_.size())
    throw DomainError("mixture needs one weight per component");
  double sum = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0)) throw DomainError("mixture weights must be >= 0");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw DomainError("mixture weights must sum to 1");
  for (const auto* c : components_)
    if (!c) throw DomainError("null mixture component");
}

double MixtureModel::log_prob(std::span<const std::string> context, std::string_view word) const {
  double p = 0.0;
  for (std::size_t i = 0; i < components_.size(); ++i)
    if (weights_[i] > 0.0) p += weights_[i] * std::exp(components_[i]->log_prob(context, word));
  return std::log(p);
}

double MixtureModel::cross_entropy(std::span<const std::string> sentence) const {
  double total = 0.0;
  for (std::size_t i = 0; i <= sentence.size(); ++i) {
    const std::string_view w = i < sentence.size() ? std::string_view(sentence[i]) : "</s>";
    total -= log_prob(sentence.first(i), w);
  }
  return total / static_cast<double>(sentence.size() + 1);
}

double cross_entropy(const WordNGramModel& model, std::span<const std::string> sentence) {
  return -model.score_sentence(sentence) / static_cast<double>(sentence.size() + 1);
}

double perplexity(const WordNGramModel& model, const Corpus& corpus) {
  if (corpus.empty()) throw DomainError("perplexity of an empty corpus");
  double nll = 0.0;
  for (const auto& s : corpus.sentences) nll -= model.score_sentence(s);
  return std::exp(nll / static_cast<double>(corpus.token_count() + corpus.size()));
}

double perplexity(const MixtureModel& model, const Corpus& corpus) {
  if (corpus.empty()) throw DomainError("perplexity of an empty corpus");
  double nll = 0.0;
  for (const auto& s : corpus.sentences) nll += model.cross_entropy(s) * static_cast<double>(s.size() + 1);
  return std::exp(nll / static_cast<double>(corpus.token_count() + corpus.size()));
}

double optimize_mixture_weight(const WordNGramModel& a, const WordNGramModel& b, const Corpus& heldout,
                               double step) {
  if (!(step > 0.0) || step > 1.0) throw DomainError("grid step must be in (0,1]");
  if (heldout.empty()) throw DomainError("held-out corpus is empty");
  // Per-token component probabilities are fixed, so compute them once.
  std::vector<std::pair<double, double>> probs;
  for (const auto& s : heldout.sentences) {
    for (std::size_t i = 0; i <= s.size(); ++i) {
      const std::string_view w = i < s.size() ? std::string_view(s[i]) : "</s>";
      const std::span<const std::string> ctx(s.data(), i);
      probs.emplace_back(std::exp(a.log_prob(ctx, w)), std::exp(b.log_prob(ctx, w)));
    }
  }
  const auto steps = static_cast<int>(std::lround(1.0 / step));
  double best_w = 0.0, best_nll = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= steps; ++i) {
    const double w = std::min(1.0, i * step);
    double nll = 0.0;
    for (const auto& [pa, pb] : probs) nll -= std::log(w * pa + (1.0 - w) * pb);
    if (nll < best_nll) {
      best_nll = nll;
      best_w = w;
    }
  }
  return best_w;
}

std::vector<double> cross_entropy_difference(const Corpus& query, const MixtureModel& in_domain,
                                             const WordNGramModel& query_model) {
  std::vector<double> scores;
  scores.reserve(query.size());
  for (const auto& s : query.sentences)
    scores.push_back(cross_entropy(query_model, s) - in_domain.cross_entropy(s));
  return scores;
}

SelectionResult select_corpus(const Corpus& query, const std::vector<Corpus>& in_domain,
                              const std::vector<double>& thresholds, const Corpus* heldout,
                              const SelectionOptions& options) {
  if (thresholds.empty()) throw DomainError("threshold list is empty");
  if (query.empty()) throw DomainError("query corpus is empty");
  if (in_domain.empty()) throw DomainError("no in-domain corpus");
  for (const auto& c : in_domain)
    if (c.empty()) throw DomainError("in-domain corpus is empty");

  // Selection models share one closed vocabulary: the in-domain words.
  std::set<std::string> vocab_set;
  std::size_t in_sentences = 0;
  for (const auto& c : in_domain) {
    in_sentences += c.size();
    for (const auto& s : c.sentences) vocab_set.insert(s.begin(), s.end());
  }
  WordLmOptions lm_options;
  lm_options.order = options.order;
  lm_options.fixed_discount = options.discount;
  lm_options.vocabulary.assign(vocab_set.begin(), vocab_set.end());

  std::vector<WordNGramModel> components;
  for (const auto& c : in_domain) components.push_back(train_word_lm(c, lm_options));
  std::vector<const WordNGramModel*> ptrs;
  for (const auto& m : components) ptrs.push_back(&m);

  std::vector<double> weights(components.size(), 1.0 / static_cast<double>(components.size()));
  if (components.size() == 2 && heldout && !heldout->empty()) {
    const double w = optimize_mixture_weight(components[0], components[1], *heldout);
    weights = {w, 1.0 - w};
  }
  const MixtureModel in_model(ptrs, weights);

  const std::size_t sample_size =
      std::min(query.size(), options.query_sample ? options.query_sample : in_sentences);
  std::vector<std::size_t> order(query.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(options.seed);
  std::shuffle(order.begin(), order.end(), rng);
  Corpus sample;
  for (std::size_t i = 0; i < sample_size; ++i) sample.sentences.push_back(query.sentences[order[i]]);
  const WordNGramModel query_model = train_word_lm(sample, lm_options);

  SelectionResult result;
  result.scores = cross_entropy_difference(query, in_model, query_model);
  result.thresholds = thresholds;
  for (double t : thresholds) {
    std::vector<std::size_t> picked;
    for (std::size_t i = 0; i < result.scores.size(); ++i)
      if (result.scores[i] > t) picked.push_back(i);
    if (heldout && !heldout->empty()) {
      double ppl = std::numeric_limits<double>::quiet_NaN();
      if (!picked.empty()) {
        Corpus subset;
        for (std::size_t i : picked) subset.sentences.push_back(query.sentences[i]);
        WordLmOptions sub_options = lm_options;
        const WordNGramModel sub = train_word_lm(subset, sub_options);
        ppl = perplexity(sub, *heldout);
      }
      result.heldout_perplexity.push_back(ppl);
    }
    result.selected.push_back(std::move(picked));
  }
  return result;
}

}  // namespace taptype::lm
