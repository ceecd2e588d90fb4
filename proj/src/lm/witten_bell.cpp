#include <cmath>
#include <map>

#include "counting.hpp"
#include "taptype/domain.hpp"
#include "taptype/lm.hpp"

namespace taptype::lm {

namespace {

Vocabulary char_vocabulary() {
  Vocabulary v;
  for (char c : kAlphabet) v.add(std::string(1, c));
  return v;
}

struct ContextStats {
  std::uint64_t total = 0;  // c(h)
  std::uint64_t types = 0;  // T(h)
};

// Interpolated Witten-Bell:
//   p(w|h) = (c(h,w) + T(h) p(w|h')) / (c(h) + T(h)),  p(w) = (c(w) + T/|V|) / (N + T).
// In back-off form the seen entries hold p(w|h) and bow(h) = T(h) / (c(h) + T(h)).
NGramModel witten_bell(const Vocabulary& vocab, std::size_t order,
                       const std::vector<detail::CountTable>& counts) {
  NGramModel model(vocab, order);
  const auto& uni = counts[0];
  std::uint64_t n = 0;
  for (const auto& [g, c] : uni) n += c;
  const double types = static_cast<double>(uni.size());
  const double v = static_cast<double>(vocab.predicted_size());
  const double denom = static_cast<double>(n) + types;
  for (Token t = 0; t < vocab.size(); ++t) {
    if (t == Vocabulary::kBos) {
      model.set(TokenSeq(1, t), {kLog10Impossible * std::log(10.0), 0.0});
      continue;
    }
    auto it = uni.find(TokenSeq(1, t));
    const double c = it == uni.end() ? 0.0 : static_cast<double>(it->second);
    model.set(TokenSeq(1, t), {std::log((c + types / v) / denom), 0.0});
  }

  for (std::size_t k = 2; k <= order; ++k) {
    std::map<TokenSeq, ContextStats> stats;
    for (const auto& [g, c] : counts[k - 1]) {
      auto& s = stats[g.substr(0, k - 1)];
      s.total += c;
      s.types += 1;
    }
    for (const auto* kv : detail::sorted_entries(counts[k - 1])) {
      const TokenSeq& g = kv->first;
      const auto& s = stats.at(g.substr(0, k - 1));
      const TokenSeq lower_ctx = g.substr(1, k - 2);
      const double lower = std::exp(model.log_prob(lower_ctx, g.back()));
      const double p = (static_cast<double>(kv->second) + static_cast<double>(s.types) * lower) /
                       static_cast<double>(s.total + s.types);
      model.set(g, {std::log(p), 0.0});
    }
    for (const auto& [h, s] : stats) {
      const NGramEntry* e = model.find(h);
      if (!e) throw NumericError("Witten-Bell: context without an entry");
      NGramEntry updated = *e;
      updated.log_backoff =
          std::log(static_cast<double>(s.types) / static_cast<double>(s.total + s.types));
      model.set(h, updated);
    }
  }
  return model;
}

}  // namespace

CharNGramModel::CharNGramModel(NGramModel model) : model_(std::move(model)) {
  char_tokens_.fill(Vocabulary::kUnk);
  for (char c : kAlphabet)
    if (auto t = model_.vocab().find(std::string(1, c)))
      char_tokens_[static_cast<unsigned char>(c)] = *t;
}

Token CharNGramModel::token(char c) const {
  const auto u = static_cast<unsigned char>(c);
  if (u >= char_tokens_.size() || !in_alphabet(c)) throw DomainError(std::string("character outside alphabet: ") + c);
  return char_tokens_[u];
}

TokenSeq CharNGramModel::tokens(std::string_view word) const {
  TokenSeq out;
  out.reserve(word.size());
  for (char c : word) out.push_back(token(c));
  return out;
}

double CharNGramModel::log_prob(std::string_view prefix, char c) const {
  TokenSeq h(1, Vocabulary::kBos);
  h += tokens(prefix);
  return model_.log_prob(h, token(c));
}

double CharNGramModel::log_prob_end(std::string_view prefix) const {
  TokenSeq h(1, Vocabulary::kBos);
  h += tokens(prefix);
  return model_.log_prob(h, Vocabulary::kEos);
}

double CharNGramModel::score(std::string_view word) const {
  const TokenSeq t = tokens(word);
  return model_.score(t);
}

CharNGramModel train_char_lm(const std::vector<std::pair<std::string, std::uint64_t>>& words,
                             std::size_t order) {
  if (order < 1) throw DomainError("character model order must be >= 1");
  if (words.empty()) throw DomainError("character model needs a nonempty corpus");
  const Vocabulary vocab = char_vocabulary();
  std::vector<std::pair<TokenSeq, std::uint64_t>> seqs;
  seqs.reserve(words.size());
  for (const auto& [w, n] : words) {
    TokenSeq s;
    for (char c : w) {
      if (!in_alphabet(c)) throw DomainError("character outside alphabet in training word '" + w + "'");
      s.push_back(*vocab.find(std::string(1, c)));
    }
    if (!s.empty() && n > 0) seqs.emplace_back(std::move(s), n);
  }
  if (seqs.empty()) throw DomainError("character model needs a nonempty corpus");
  return CharNGramModel(witten_bell(vocab, order, detail::count_ngrams(seqs, order)));
}

CharNGramModel train_char_lm(const Corpus& corpus, std::size_t order) {
  std::map<std::string, std::uint64_t> freq;
  for (const auto& s : corpus.sentences)
    for (const auto& w : s) ++freq[w];
  return train_char_lm(std::vector<std::pair<std::string, std::uint64_t>>(freq.begin(), freq.end()),
                       order);
}

}  // namespace taptype::lm
