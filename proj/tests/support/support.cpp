#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace tt_test {

std::string Gen::word(std::size_t min_len, std::size_t max_len, std::string_view alphabet) {
  const auto n = static_cast<std::size_t>(integer(static_cast<std::int64_t>(min_len), static_cast<std::int64_t>(max_len)));
  std::string w;
  for (std::size_t i = 0; i < n; ++i) w.push_back(alphabet[index(alphabet.size())]);
  return w;
}

ClassProbs Gen::probs(double concentration) {
  std::gamma_distribution<double> g(concentration, 1.0);
  ClassProbs p{};
  double sum = 0.0;
  while (sum <= 0.0) {
    sum = 0.0;
    for (auto& x : p) sum += (x = g(rng_));
  }
  for (auto& x : p) x /= sum;
  return p;
}

ClassProbs Gen::peaked(FingerClass f, double mass) {
  ClassProbs rest = probs(0.5);
  rest[index_of(f)] = 0.0;
  double sum = 0.0;
  for (double x : rest) sum += x;
  ClassProbs p{};
  for (std::size_t i = 0; i < kNumClasses; ++i) p[i] = sum > 0.0 ? (1.0 - mass) * rest[i] / sum : 0.0;
  p[index_of(f)] = sum > 0.0 ? mass : 1.0;
  return p;
}

signal::ImuStream Gen::stream(std::size_t n, double scale) {
  signal::ImuStream s;
  s.hand = hand();
  s.samples.resize(n);
  for (auto& x : s.samples)
    for (auto& v : x) v = normal(0.0, scale);
  return s;
}

std::vector<double> reference_rate_of_change(const signal::ImuStream& s, double decay) {
  std::vector<double> r(s.samples.size(), 0.0);
  for (std::size_t t = 1; t < s.samples.size(); ++t) {
    double sum = 0.0;
    for (std::size_t sensor = 0; sensor < 2; ++sensor) {
      double now = 0.0, before = 0.0;
      for (std::size_t a = 0; a < 3; ++a) {
        now += s.samples[t][sensor * 3 + a] * s.samples[t][sensor * 3 + a];
        before += s.samples[t - 1][sensor * 3 + a] * s.samples[t - 1][sensor * 3 + a];
      }
      sum += std::fabs(std::sqrt(now) - std::sqrt(before));
    }
    r[t] = r[t - 1] / decay + sum;
  }
  return r;
}

std::size_t dp_levenshtein(const std::string& a, const std::string& b) {
  std::vector<std::vector<std::size_t>> d(a.size() + 1, std::vector<std::size_t>(b.size() + 1));
  for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
  for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i)
    for (std::size_t j = 1; j <= b.size(); ++j)
      d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
  return d[a.size()][b.size()];
}

decoder::SuggestionList exhaustive_decode(const decoder::ObservationSequence& obs,
                                          const std::vector<std::string>& context,
                                          const decoder::Decoder& decoder,
                                          const std::set<std::string>& vocabulary, double prune,
                                          std::size_t top) {
  std::set<std::string> prefixes;
  for (const auto& w : vocabulary)
    for (std::size_t i = 0; i <= w.size(); ++i) prefixes.insert(w.substr(0, i));

  // Allowed (char, finger) pairs per position.
  std::vector<std::vector<std::pair<char, FingerClass>>> allowed;
  for (const auto& o : obs) {
    std::vector<FingerClass> keep;
    for (FingerClass f : kTypingFingers)
      if (o.prob(f) >= prune && o.prob(f) > 0.0) keep.push_back(f);
    if (keep.empty()) {
      FingerClass best = kTypingFingers[0];
      for (FingerClass f : kTypingFingers)
        if (o.prob(f) > o.prob(best)) best = f;
      keep.push_back(best);
    }
    std::vector<std::pair<char, FingerClass>> chars;
    for (FingerClass f : keep)
      for (char c : decoder.map().characters_for(o.hand, f)) chars.emplace_back(c, f);
    allowed.push_back(std::move(chars));
  }

  decoder::SuggestionList out;
  std::function<void(std::size_t, const std::string&, double)> walk = [&](std::size_t i, const std::string& prefix,
                                                                           double logp) {
    if (!prefixes.count(prefix)) return;
    if (i == obs.size()) {
      if (vocabulary.count(prefix))
        out.push_back({prefix, logp + decoder.word_lm().log_prob(context, prefix), logp});
      return;
    }
    for (const auto& [c, f] : allowed[i])
      walk(i + 1, prefix + c, logp + decoder.char_lm().log_prob(prefix, c) + std::log(obs[i].prob(f)));
  };
  walk(0, "", 0.0);
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.total_logp != b.total_logp) return a.total_logp > b.total_logp;
    return a.word < b.word;
  });
  if (out.size() > top) out.resize(top);
  return out;
}

// ---------------------------------------------------------------------------

WittenBellOracle::WittenBellOracle(const std::vector<std::string>& words, std::size_t order)
    : order_(order), counts_(order) {
  std::set<std::string> types;
  for (const auto& w : words) {
    std::vector<std::string> seq{"<s>"};
    for (char c : w) seq.emplace_back(1, c);
    seq.emplace_back("</s>");
    for (std::size_t end = 1; end < seq.size(); ++end) {
      for (std::size_t k = 1; k <= order && k <= end + 1; ++k)
        counts_[k - 1][std::vector<std::string>(seq.begin() + static_cast<long>(end + 1 - k),
                                                seq.begin() + static_cast<long>(end + 1))] += 1;
      unigram_total_ += 1;
      types.insert(seq[end]);
    }
  }
  unigram_types_ = static_cast<double>(types.size());
  vocab_ = 27 + 2;  // alphabet, </s>, <unk>
}

double WittenBellOracle::p(const std::vector<std::string>& h, const std::string& w) const {
  if (h.empty()) {
    auto it = counts_[0].find({w});
    const double c = it == counts_[0].end() ? 0.0 : it->second;
    return (c + unigram_types_ / vocab_) / (unigram_total_ + unigram_types_);
  }
  const std::vector<std::string> lower(h.begin() + 1, h.end());
  double total = 0, types = 0, c = 0;
  for (const auto& [g, n] : counts_[h.size()]) {
    if (!std::equal(h.begin(), h.end(), g.begin())) continue;
    total += n;
    types += 1;
    if (g.back() == w) c = n;
  }
  if (total == 0) return p(lower, w);
  return (c + types * p(lower, w)) / (total + types);
}

double WittenBellOracle::prob(const std::string& history, const std::string& symbol) const {
  std::vector<std::string> h{"<s>"};
  for (char c : history) h.emplace_back(1, c);
  while (h.size() > order_ - 1) h.erase(h.begin());
  return p(h, symbol);
}

namespace {

std::array<double, 3> kn_discount(const std::map<double, double>& count_of_counts) {
  auto n = [&](int j) {
    auto it = count_of_counts.find(j);
    return it == count_of_counts.end() ? 0.0 : it->second;
  };
  const std::array<double, 3> fallback{0.7, 0.7, 0.7};
  if (n(1) == 0 || n(2) == 0 || n(3) == 0) return fallback;
  const double y = n(1) / (n(1) + 2 * n(2));
  std::array<double, 3> d{};
  for (int j = 1; j <= 3; ++j) {
    d[j - 1] = j - (j + 1) * y * n(j + 1) / n(j);
    if (!(d[j - 1] > 0 && d[j - 1] <= j)) return fallback;
  }
  return d;
}

double discount_for(const std::array<double, 3>& d, double count) {
  return count >= 3 ? d[2] : d[static_cast<std::size_t>(count) - 1];
}

}  // namespace

KneserNeyBigramOracle::KneserNeyBigramOracle(const std::vector<std::vector<std::string>>& sentences) {
  vocab_ = {"<unk>", "<s>", "</s>"};
  for (const auto& s : sentences) {
    std::vector<std::string> seq{"<s>"};
    seq.insert(seq.end(), s.begin(), s.end());
    seq.emplace_back("</s>");
    for (std::size_t i = 1; i < seq.size(); ++i) {
      vocab_.insert(seq[i]);
      bigram_[{seq[i - 1], seq[i]}] += 1;
      seen_.insert({seq[i - 1], seq[i]});
    }
  }
  for (const auto& [hw, c] : bigram_) adjusted_[hw.second] += 1;
  std::map<double, double> coc1, coc2;
  for (const auto& [w, a] : adjusted_) {
    coc1[a] += 1;
    adjusted_total_ += a;
  }
  for (const auto& [hw, c] : bigram_) coc2[c] += 1;
  d1_ = kn_discount(coc1);
  d2_ = kn_discount(coc2);
}

double KneserNeyBigramOracle::unigram(const std::string& w) const {
  double gamma = 0;
  for (const auto& [v, a] : adjusted_) gamma += discount_for(d1_, a);
  gamma /= adjusted_total_;
  const double uniform = 1.0 / static_cast<double>(vocab_.size() - 1);
  auto it = adjusted_.find(w);
  const double a = it == adjusted_.end() ? 0.0 : it->second;
  const double own = a > 0 ? (a - discount_for(d1_, a)) / adjusted_total_ : 0.0;
  return own + gamma * uniform;
}

double KneserNeyBigramOracle::prob(const std::string& h, const std::string& w) const {
  double total = 0, gamma = 0, c = 0;
  for (const auto& [hw, n] : bigram_) {
    if (hw.first != h) continue;
    total += n;
    gamma += discount_for(d2_, n);
    if (hw.second == w) c = n;
  }
  if (total == 0) return unigram(w);
  const double own = c > 0 ? (c - discount_for(d2_, c)) / total : 0.0;
  return own + gamma / total * unigram(w);
}

// ---------------------------------------------------------------------------

std::string data_path(const std::string& name) { return std::string(TAPTYPE_DATA_DIR) + "/" + name; }
std::string fixture_path(const std::string& name) { return std::string(TAPTYPE_FIXTURE_DIR) + "/" + name; }

const DeskStack& desk_stack() {
  static const DeskStack stack = [] {
    lm::Corpus corpus = lm::load_corpus(data_path("corpus.txt"));
    lm::Corpus general = lm::load_corpus(data_path("general.txt"));
    corpus.sentences.insert(corpus.sentences.end(), general.sentences.begin(), general.sentences.end());
    lm::WordLmOptions options;
    options.order = 4;
    return DeskStack{KeyFingerMap::qwerty(), lm::train_char_lm(corpus, 5), lm::train_word_lm(corpus, options),
                     load_phrase_set(data_path("phrases.txt"))};
  }();
  return stack;
}

const decoder::Decoder& desk_decoder() {
  static const decoder::Decoder d(desk_stack().map, desk_stack().char_lm, desk_stack().word_lm);
  return d;
}

signal::ImuStream impulse_stream(std::size_t n, const std::vector<std::size_t>& at, double height) {
  signal::ImuStream s;
  s.samples.assign(n, signal::Sample{0, 0, 100, 0, 0, 100});
  for (std::size_t t : at) s.samples.at(t)[2] += height;
  return s;
}

decoder::ObservationSequence one_hot_taps(const std::string& word, const KeyFingerMap& map) {
  decoder::ObservationSequence out;
  for (char c : word) {
    const auto k = map.lookup(c);
    if (!k) throw DomainError(std::string("unmapped ") + c);
    out.push_back(TapObservation::one_hot(k->hand, k->finger));
  }
  return out;
}

SmallStack small_stack(std::uint64_t seed, std::size_t size) {
  const auto& desk = desk_stack();
  std::vector<std::string> pool;
  for (const auto& w : desk.word_lm.words())
    if (w.size() <= 5) pool.push_back(w);
  std::mt19937_64 rng(seed);
  std::shuffle(pool.begin(), pool.end(), rng);
  pool.resize(size);
  std::sort(pool.begin(), pool.end());
  lm::WordLmOptions o;
  o.order = 3;
  o.vocabulary = pool;
  return {pool, lm::train_word_lm(lm::load_corpus(data_path("corpus.txt")), o)};
}

decoder::ObservationSequence noisy_taps(Gen& g, const std::string& word, const KeyFingerMap& map,
                                        classifier::ConfusionClassifier& confusion) {
  decoder::ObservationSequence out;
  const int style = static_cast<int>(g.integer(0, 2));
  for (char c : word) {
    const auto k = *map.lookup(c);
    switch (style) {
      case 0: out.push_back(confusion.classify(k.hand, k.finger)); break;
      case 1: out.push_back(TapObservation::make(k.hand, g.peaked(k.finger, g.real(0.3, 1.0)))); break;
      default: out.push_back(TapObservation::make(k.hand, g.probs(0.7))); break;
    }
  }
  return out;
}

std::vector<session::SessionEvent> random_script(Gen& g, std::size_t n) {
  using session::EventKind;
  classifier::ConfusionClassifier noise(classifier::neighbour_confusion(0.85), classifier::ConfusionMode::Calibrated,
                                        g.integer(0, 1 << 30));
  auto gesture = [](EventKind k) { return session::SessionEvent{k, std::nullopt}; };
  std::vector<session::SessionEvent> out;
  for (std::size_t i = 0; i < n; ++i) {
    const double u = g.real(0, 1);
    if (u < 0.6) {
      out.push_back(session::classify_event(noise.classify(g.hand(), g.typing_finger())));
    } else if (u < 0.65) {
      out.push_back(session::classify_event(TapObservation::make(g.hand(), g.probs(0.4))));
    } else if (u < 0.75) {
      out.push_back(gesture(EventKind::Space));
    } else if (u < 0.83) {
      out.push_back(gesture(EventKind::Cycle));
    } else if (u < 0.9) {
      out.push_back(gesture(EventKind::DeleteWord));
    } else if (u < 0.96) {
      out.push_back(gesture(EventKind::AcceptChar));
    } else {
      out.push_back(session::classify_event(std::nullopt));
    }
  }
  return out;
}

}  // namespace tt_test
