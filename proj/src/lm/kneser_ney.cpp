#include <algorithm>
#include <cmath>
#include <map>

#include <spdlog/spdlog.h>

#include "counting.hpp"
#include "taptype/lm.hpp"

namespace taptype::lm {

std::optional<Discounts> kn_discounts(const std::array<std::uint64_t, 5>& n) {
  // n[j] = number of n-grams with adjusted count j (j = 1..4). n[4] may be 0.
  if (n[1] == 0 || n[2] == 0 || n[3] == 0) return std::nullopt;
  const double y = static_cast<double>(n[1]) / (static_cast<double>(n[1]) + 2.0 * static_cast<double>(n[2]));
  Discounts d;
  double* out[3] = {&d.d1, &d.d2, &d.d3plus};
  for (int j = 1; j <= 3; ++j) {
    const double dj = j - (j + 1) * y * static_cast<double>(n[j + 1]) / static_cast<double>(n[j]);
    if (!(dj > 0.0) || dj > j) return std::nullopt;
    *out[j - 1] = dj;
  }
  return d;
}

namespace {

double discount_for(const Discounts& d, std::uint64_t count) {
  if (count == 0) return 0.0;
  if (count == 1) return d.d1;
  if (count == 2) return d.d2;
  return d.d3plus;
}

Vocabulary build_vocabulary(const Corpus& corpus, const WordLmOptions& options) {
  Vocabulary vocab;
  if (!options.vocabulary.empty()) {
    for (const auto& w : options.vocabulary) vocab.add(w);
    return vocab;
  }
  std::map<std::string, std::uint64_t> freq;
  for (const auto& s : corpus.sentences)
    for (const auto& w : s) ++freq[w];
  std::vector<std::pair<std::string, std::uint64_t>> ranked(freq.begin(), freq.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (ranked.size() > options.vocab_cap) ranked.resize(options.vocab_cap);
  // Token ids follow first appearance in the corpus, which keeps ARPA output
  // in a familiar order.
  std::map<std::string, bool> keep;
  for (const auto& [w, c] : ranked) keep[w] = true;
  for (const auto& s : corpus.sentences)
    for (const auto& w : s)
      if (keep.count(w)) vocab.add(w);
  return vocab;
}

}  // namespace

WordNGramModel::WordNGramModel(NGramModel model, std::vector<Discounts> discounts)
    : model_(std::move(model)), discounts_(std::move(discounts)) {}

bool WordNGramModel::contains(std::string_view word) const {
  auto t = model_.vocab().find(word);
  return t && *t > Vocabulary::kEos;
}

double WordNGramModel::log_prob(std::span<const std::string> context, std::string_view word,
                                bool sentence_start) const {
  TokenSeq h;
  const std::size_t keep = std::min(context.size(), model_.order() - 1);
  if (sentence_start && keep < model_.order() - 1) h.push_back(Vocabulary::kBos);
  for (std::size_t i = context.size() - keep; i < context.size(); ++i) h.push_back(token(context[i]));
  return model_.log_prob(h, token(word));
}

double WordNGramModel::score(std::span<const std::string> words) const {
  TokenSeq t;
  for (const auto& w : words) t.push_back(token(w));
  return model_.score(t);
}

double WordNGramModel::score_sentence(std::span<const std::string> words) const {
  TokenSeq t;
  for (const auto& w : words) t.push_back(token(w));
  t.push_back(Vocabulary::kEos);
  return model_.score(t);
}

std::vector<std::string> WordNGramModel::words() const {
  std::vector<std::string> out;
  for (Token t = Vocabulary::kEos + 1; t < model_.vocab().size(); ++t) out.push_back(model_.vocab().word(t));
  return out;
}

// Interpolated modified Kneser-Ney with the adjusted-count conventions of
// common toolkits: the highest order uses raw counts, lower orders use the
// number of distinct left extensions except for n-grams starting with <s>,
// which keep raw counts. Unigrams interpolate with the uniform distribution
// over everything but <s>.
WordNGramModel train_word_lm(const Corpus& corpus, const WordLmOptions& options) {
  const std::size_t order = options.order;
  if (order < 1) throw DomainError("word model order must be >= 1");
  if (corpus.empty()) throw DomainError("word model needs a nonempty corpus");

  Vocabulary vocab = build_vocabulary(corpus, options);
  std::vector<std::pair<TokenSeq, std::uint64_t>> seqs;
  for (const auto& s : corpus.sentences) {
    TokenSeq t;
    for (const auto& w : s) t.push_back(vocab.id_or_unk(w));
    seqs.emplace_back(std::move(t), 1);
  }
  const auto raw = detail::count_ngrams(seqs, order);

  std::vector<detail::CountTable> adjusted(order);
  adjusted[order - 1] = raw[order - 1];
  for (std::size_t k = order - 1; k >= 1; --k) {
    auto& table = adjusted[k - 1];
    for (const auto& [g, c] : raw[k - 1])
      if (g.front() == Vocabulary::kBos) table[g] = c;
    for (const auto& [g, c] : raw[k]) {
      const TokenSeq suffix = g.substr(1);
      if (suffix.front() != Vocabulary::kBos) ++table[suffix];
    }
  }

  std::vector<Discounts> discounts(order);
  for (std::size_t k = 1; k <= order; ++k) {
    if (options.fixed_discount) {
      const double d = *options.fixed_discount;
      discounts[k - 1] = Discounts{d, d, d, false};
      continue;
    }
    std::array<std::uint64_t, 5> coc{};
    for (const auto& [g, c] : adjusted[k - 1])
      if (c >= 1 && c <= 4) ++coc[c];
    if (auto d = kn_discounts(coc)) {
      discounts[k - 1] = *d;
    } else {
      const double f = options.fallback_discount;
      discounts[k - 1] = Discounts{f, f, f, true};
      spdlog::warn("degenerate count-of-counts for {}-grams, using fixed discount {}", k, f);
    }
  }

  NGramModel model(vocab, order);
  const double uniform = 1.0 / static_cast<double>(vocab.predicted_size());

  auto context_sums = [&](std::size_t k) {
    // denominator and gamma numerator per context of length k-1
    std::map<TokenSeq, std::pair<double, double>> sums;
    for (const auto* kv : detail::sorted_entries(adjusted[k - 1])) {
      auto& s = sums[kv->first.substr(0, k - 1)];
      s.first += static_cast<double>(kv->second);
      s.second += discount_for(discounts[k - 1], kv->second);
    }
    return sums;
  };

  {
    const auto sums = context_sums(1);
    const auto [denom, gamma_num] = sums.empty() ? std::pair{1.0, 1.0} : sums.begin()->second;
    const double gamma = gamma_num / denom;
    for (Token t = 0; t < vocab.size(); ++t) {
      if (t == Vocabulary::kBos) {
        model.set(TokenSeq(1, t), {kLog10Impossible * std::log(10.0), 0.0});
        continue;
      }
      auto it = adjusted[0].find(TokenSeq(1, t));
      const std::uint64_t a = it == adjusted[0].end() ? 0 : it->second;
      const double p = (static_cast<double>(a) - discount_for(discounts[0], a)) / denom + gamma * uniform;
      model.set(TokenSeq(1, t), {std::log(p), 0.0});
    }
  }

  for (std::size_t k = 2; k <= order; ++k) {
    const auto sums = context_sums(k);
    for (const auto* kv : detail::sorted_entries(adjusted[k - 1])) {
      const TokenSeq& g = kv->first;
      const auto& [denom, gamma_num] = sums.at(g.substr(0, k - 1));
      const double lower = std::exp(model.log_prob(g.substr(1, k - 2), g.back()));
      const double p = (static_cast<double>(kv->second) - discount_for(discounts[k - 1], kv->second)) / denom +
                       gamma_num / denom * lower;
      model.set(g, {std::log(p), 0.0});
    }
    for (const auto& [h, s] : sums) {
      const NGramEntry* e = model.find(h);
      if (!e) throw NumericError("Kneser-Ney: context without an entry");
      NGramEntry updated = *e;
      updated.log_backoff = std::log(s.second / s.first);
      model.set(h, updated);
    }
  }
  return WordNGramModel(std::move(model), std::move(discounts));
}

}  // namespace taptype::lm
