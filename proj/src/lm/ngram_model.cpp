#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>

#include "taptype/lm.hpp"

namespace taptype::lm {

Vocabulary::Vocabulary() {
  add("<unk>");
  add("<s>");
  add("</s>");
}

Token Vocabulary::add(std::string_view word) {
  if (auto it = ids_.find(std::string(word)); it != ids_.end()) return it->second;
  const auto id = static_cast<Token>(words_.size());
  words_.emplace_back(word);
  ids_.emplace(words_.back(), id);
  return id;
}

std::optional<Token> Vocabulary::find(std::string_view word) const {
  if (auto it = ids_.find(std::string(word)); it != ids_.end()) return it->second;
  return std::nullopt;
}

Token Vocabulary::id_or_unk(std::string_view word) const { return find(word).value_or(kUnk); }

NGramModel::NGramModel(Vocabulary vocab, std::size_t order)
    : vocab_(std::move(vocab)), order_(order), tables_(order) {
  if (order < 1) throw DomainError("n-gram order must be >= 1");
}

void NGramModel::set(const TokenSeq& ngram, NGramEntry entry) {
  if (ngram.empty() || ngram.size() > order_) throw DomainError("n-gram length outside model order");
  tables_[ngram.size() - 1][ngram] = entry;
}

const NGramEntry* NGramModel::find(const TokenSeq& ngram) const {
  if (ngram.empty() || ngram.size() > order_) return nullptr;
  const auto& table = tables_[ngram.size() - 1];
  auto it = table.find(ngram);
  return it == table.end() ? nullptr : &it->second;
}

double NGramModel::log_prob(std::span<const Token> history, Token word) const {
  const std::size_t max_ctx = std::min(history.size(), order_ - 1);
  TokenSeq key;
  key.reserve(max_ctx + 1);
  double backoff = 0.0;
  for (std::size_t k = max_ctx;; --k) {
    key.assign(history.end() - static_cast<std::ptrdiff_t>(k), history.end());
    key.push_back(word);
    if (const auto* e = find(key)) return backoff + e->log_prob;
    if (k == 0) break;
    key.pop_back();
    if (const auto* ctx = find(key)) backoff += ctx->log_backoff;
  }
  if (word != Vocabulary::kUnk)
    if (const auto* unk = find(TokenSeq(1, Vocabulary::kUnk))) return backoff + unk->log_prob;
  return -std::numeric_limits<double>::infinity();
}

double NGramModel::score(std::span<const Token> tokens, std::span<const Token> history) const {
  std::vector<Token> h(history.begin(), history.end());
  double total = 0.0;
  for (Token t : tokens) {
    total += log_prob(h, t);
    h.push_back(t);
  }
  return total;
}

double NGramModel::score(std::span<const Token> tokens) const {
  const Token bos = Vocabulary::kBos;
  return score(tokens, std::span<const Token>(&bos, 1));
}

std::vector<TokenSeq> NGramModel::contexts(std::size_t n) const {
  std::vector<TokenSeq> out;
  if (n < 2 || n > order_) return out;
  for (const auto& [g, e] : tables_[n - 1]) out.push_back(g.substr(0, n - 1));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::size_t Corpus::token_count() const {
  std::size_t n = 0;
  for (const auto& s : sentences) n += s.size();
  return n;
}

std::optional<std::vector<std::string>> clean_sentence(std::string_view line) {
  std::vector<std::string> words;
  std::string cur;
  auto flush = [&] {
    // Words made only of apostrophes carry nothing.
    if (!cur.empty() && cur.find_first_not_of('\'') != std::string::npos) words.push_back(cur);
    cur.clear();
  };
  for (char raw : line) {
    const auto u = static_cast<unsigned char>(raw);
    if (u >= 0x80) return std::nullopt;
    if (std::isdigit(u)) return std::nullopt;
    const char c = static_cast<char>(std::tolower(u));
    if ((c >= 'a' && c <= 'z') || c == '\'') {
      cur.push_back(c);
    } else {
      flush();
    }
  }
  flush();
  if (words.empty()) return std::nullopt;
  return words;
}

Corpus read_corpus(std::istream& in) {
  Corpus c;
  std::string line;
  while (std::getline(in, line))
    if (auto s = clean_sentence(line)) c.sentences.push_back(std::move(*s));
  return c;
}

Corpus load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open corpus " + path);
  return read_corpus(in);
}

}  // namespace taptype::lm
