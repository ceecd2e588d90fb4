#include "taptype/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "taptype/session.hpp"

namespace taptype::eval {

namespace {

using classifier::Rng;

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Seeds depend on the phrase text, not its position, so reordering the
// phrase set leaves every word's observations unchanged.
std::uint64_t word_seed(std::uint64_t seed, std::size_t repeat, std::string_view phrase, std::size_t word) {
  return mix_seed(mix_seed(mix_seed(seed, repeat), fnv1a(phrase)), word);
}

std::pair<double, double> mean_stderr(const std::vector<double>& xs) {
  if (xs.empty()) return {0.0, 0.0};
  const double n = static_cast<double>(xs.size());
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  if (xs.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / (n - 1.0)) / std::sqrt(n)};
}

KeyAssignment key_for(const KeyFingerMap& map, char c) {
  auto k = map.lookup(c);
  if (!k) throw DomainError(std::string("character '") + c + "' has no key assignment");
  return *k;
}

std::size_t rank_of(const decoder::SuggestionList& list, const std::string& word) {
  for (std::size_t i = 0; i < list.size(); ++i)
    if (list[i].word == word) return i + 1;
  return 0;
}

struct Task {
  std::size_t repeat = 0;
  std::size_t phrase = 0;
};

std::vector<Task> tasks_for(const SimulationConfig& config) {
  std::vector<Task> tasks;
  for (std::size_t r = 0; r < config.repeats; ++r)
    for (std::size_t p = 0; p < config.phrases.phrases.size(); ++p) tasks.push_back({r, p});
  return tasks;
}

std::vector<WordOutcome> run_phrase(const SimulationConfig& config, const Task& task, const decoder::Decoder& decoder,
                                    const SamplerFactory& source) {
  const std::string& phrase = config.phrases.phrases[task.phrase];
  const auto words = split_words(phrase);
  std::vector<WordOutcome> out;
  for (std::size_t w = 0; w < words.size(); ++w) {
    Sampler sample = source(word_seed(config.seed, task.repeat, phrase, w));
    decoder::ObservationSequence obs;
    for (char c : words[w]) {
      const auto k = key_for(decoder.map(), c);
      obs.push_back(sample(k.hand, k.finger));
    }
    const std::span<const std::string> context(words.data(), w);
    out.push_back({words[w], rank_of(decoder.decode(obs, context), words[w])});
  }
  return out;
}

EvalReport summarize(const SimulationConfig& config, const std::vector<Task>& tasks,
                     std::vector<std::vector<WordOutcome>> per_task) {
  EvalReport rep;
  rep.ks = config.ks;
  rep.repeats = config.repeats;
  std::vector<std::vector<std::size_t>> hits(config.repeats, std::vector<std::size_t>(config.ks.size(), 0));
  std::vector<std::size_t> words(config.repeats, 0);
  for (std::size_t t = 0; t < tasks.size(); ++t)
    for (auto& o : per_task[t]) {
      for (std::size_t i = 0; i < config.ks.size(); ++i)
        if (o.rank > 0 && o.rank <= config.ks[i]) ++hits[tasks[t].repeat][i];
      ++words[tasks[t].repeat];
      rep.outcomes.push_back(std::move(o));
    }
  rep.words = rep.outcomes.size();
  for (std::size_t i = 0; i < config.ks.size(); ++i) {
    std::size_t total = 0;
    std::vector<double> per_repeat;
    for (std::size_t r = 0; r < config.repeats; ++r) {
      total += hits[r][i];
      if (words[r] > 0) per_repeat.push_back(static_cast<double>(hits[r][i]) / static_cast<double>(words[r]));
    }
    rep.recall.push_back(rep.words ? static_cast<double>(total) / static_cast<double>(rep.words) : 0.0);
    rep.recall_stderr.push_back(mean_stderr(per_repeat).second);
  }
  return rep;
}

void check_simulation(const SimulationConfig& config, const decoder::Decoder& decoder) {
  config.validate();
  const auto missing = missing_words(config.phrases, decoder);
  if (!missing.empty()) {
    std::string msg = "phrase words not in the vocabulary:";
    for (const auto& w : missing) msg += " " + w;
    throw DomainError(msg);
  }
}

}  // namespace

void SimulationConfig::validate() const {
  if (phrases.phrases.empty()) throw DomainError("simulation needs at least one phrase");
  if (ks.empty()) throw DomainError("simulation needs at least one k");
  for (std::size_t i = 0; i < ks.size(); ++i) {
    if (ks[i] == 0) throw DomainError("k values must be >= 1");
    if (i > 0 && ks[i] <= ks[i - 1]) throw DomainError("k values must be strictly ascending");
  }
  if (repeats == 0) throw DomainError("repeats must be >= 1");
}

SamplerFactory confusion_source(const classifier::ClassifierSpec& spec) {
  return [spec](std::uint64_t seed) -> Sampler {
    auto clf = std::make_shared<classifier::ConfusionClassifier>(spec.confusion, spec.mode, seed);
    return [clf](Hand h, FingerClass f) { return clf->classify(h, f); };
  };
}

PredictionPool build_pool(const classifier::Model& model, const classifier::Dataset& heldout, std::uint64_t seed) {
  PredictionPool pool;
  const auto probs = classifier::predict_dataset(model, heldout, seed);
  const double zeta = model.net.config().reject_threshold;
  for (std::size_t i = 0; i < heldout.size(); ++i) {
    if (!heldout[i].label) continue;
    if (*std::max_element(probs[i].begin(), probs[i].end()) < zeta) continue;
    pool.probs[index_of(heldout[i].hand)][index_of(*heldout[i].label)].push_back(probs[i]);
  }
  return pool;
}

SamplerFactory pool_source(std::shared_ptr<const PredictionPool> pool) {
  return [pool](std::uint64_t seed) -> Sampler {
    auto rng = std::make_shared<Rng>(seed);
    return [pool, rng](Hand h, FingerClass f) {
      const auto& group = pool->probs[index_of(h)][index_of(f)];
      if (group.empty())
        throw DomainError("prediction pool has no accepted windows for " + std::string(to_string(h)) + " " +
                          std::string(to_string(f)));
      std::uniform_int_distribution<std::size_t> pick(0, group.size() - 1);
      return TapObservation::make(h, group[pick(*rng)]);
    };
  };
}

std::vector<std::string> missing_words(const PhraseSet& phrases, const decoder::Decoder& decoder) {
  std::vector<std::string> out;
  const auto& lex = decoder.lexicon();
  for (const auto& p : phrases.phrases)
    for (const auto& w : split_words(p)) {
      int node = lex.root();
      for (char c : w) {
        if (node == decoder::Lexicon::kNoChild) break;
        node = decoder.map().lookup(c) ? lex.child(node, c) : decoder::Lexicon::kNoChild;
      }
      if ((node == decoder::Lexicon::kNoChild || !lex.is_word(node)) &&
          std::find(out.begin(), out.end(), w) == out.end())
        out.push_back(w);
    }
  return out;
}

EvalReport simulate_recall(const SimulationConfig& config, const decoder::Decoder& decoder,
                           const SamplerFactory& source) {
  check_simulation(config, decoder);
  const auto tasks = tasks_for(config);
  std::vector<std::vector<WordOutcome>> per_task(tasks.size());
  const auto n = static_cast<std::ptrdiff_t>(tasks.size());
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t t = 0; t < n; ++t) {
    try {
      per_task[static_cast<std::size_t>(t)] = run_phrase(config, tasks[static_cast<std::size_t>(t)], decoder, source);
    } catch (...) {
#pragma omp critical
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return summarize(config, tasks, std::move(per_task));
}

namespace serial {
EvalReport simulate_recall(const SimulationConfig& config, const decoder::Decoder& decoder,
                           const SamplerFactory& source) {
  check_simulation(config, decoder);
  const auto tasks = tasks_for(config);
  std::vector<std::vector<WordOutcome>> per_task;
  for (const auto& t : tasks) per_task.push_back(run_phrase(config, t, decoder, source));
  return summarize(config, tasks, std::move(per_task));
}
}  // namespace serial

std::size_t levenshtein(std::string_view a, std::string_view b) {
  std::vector<std::size_t> row(b.size() + 1);
  std::iota(row.begin(), row.end(), 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

double cer(std::string_view predicted, std::string_view reference) {
  if (reference.empty()) throw DomainError("CER needs a nonempty reference");
  return static_cast<double>(levenshtein(predicted, reference)) / static_cast<double>(reference.size());
}

double wpm(std::size_t char_count, double seconds) {
  if (!(seconds > 0.0)) throw DomainError("WPM needs a positive duration");
  return (static_cast<double>(char_count) / 5.0) / (seconds / 60.0);
}

TypedPhrase type_phrase(const std::string& phrase, const decoder::Decoder& decoder, const Sampler& sampler,
                        const TypingTiming& timing) {
  TypedPhrase out;
  out.reference = normalize_phrase(phrase);
  session::Session s(decoder);
  // Gestures are issued as recognised events; only finger taps go through the sampler.
  auto gesture = [&](session::EventKind k) {
    ++out.gestures;
    return s.apply({k, std::nullopt});
  };
  auto tap = [&](char c) {
    const auto k = key_for(decoder.map(), c);
    ++out.taps;
    return s.apply({session::EventKind::FingerTap, sampler(k.hand, k.finger)});
  };
  auto cycle_to = [&](const session::Render& r, std::size_t index) {
    session::Render cur = r;
    while (cur.cursor != index) cur = gesture(session::EventKind::Cycle);
  };

  for (const auto& word : split_words(out.reference)) {
    session::Render r;
    for (char c : word) r = tap(c);
    const std::size_t rank = rank_of(r.suggestions, word);
    out.first_ranks.push_back(rank);
    if (rank > 0) {
      cycle_to(r, rank - 1);
      gesture(session::EventKind::Space);
      continue;
    }
    // Not offered: drop the taps and spell the word one character at a time.
    gesture(session::EventKind::DeleteWord);
    for (char c : word) {
      const std::string target = s.state().oov_prefix + c;
      std::size_t idx = 0;
      for (int attempt = 0; attempt < 3; ++attempt) {
        r = tap(c);
        idx = rank_of(r.suggestions, target);
        if (idx > 0) break;
        gesture(session::EventKind::DeleteWord);
      }
      if (idx == 0) break;  // give up on this character
      cycle_to(r, idx - 1);
      gesture(session::EventKind::AcceptChar);
    }
    gesture(session::EventKind::Space);
  }
  out.seconds = static_cast<double>(out.taps) * timing.tap_s + static_cast<double>(out.gestures) * timing.gesture_s;
  // The closing double space is not part of the timed interval.
  s.apply({session::EventKind::Space, std::nullopt});
  out.typed = s.state().submitted.empty() ? s.state().committed_text() : s.state().submitted.back();
  return out;
}

EvalReport simulate_typing(const SimulationConfig& config, const decoder::Decoder& decoder,
                           const SamplerFactory& source, const TypingTiming& timing) {
  check_simulation(config, decoder);
  const auto tasks = tasks_for(config);
  std::vector<TypedPhrase> typed(tasks.size());
  const auto n = static_cast<std::ptrdiff_t>(tasks.size());
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t t = 0; t < n; ++t) {
    try {
      const auto& task = tasks[static_cast<std::size_t>(t)];
      const auto& phrase = config.phrases.phrases[task.phrase];
      typed[static_cast<std::size_t>(t)] =
          type_phrase(phrase, decoder, source(word_seed(config.seed, task.repeat, phrase, 0xffff)), timing);
    } catch (...) {
#pragma omp critical
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);

  std::vector<std::vector<WordOutcome>> per_task;
  for (const auto& tp : typed) {
    const auto words = split_words(tp.reference);
    std::vector<WordOutcome> o;
    for (std::size_t i = 0; i < words.size(); ++i) o.push_back({words[i], tp.first_ranks[i]});
    per_task.push_back(std::move(o));
  }
  EvalReport rep = summarize(config, tasks, std::move(per_task));
  for (const auto& tp : typed) {
    rep.wpm.push_back(tp.seconds > 0 ? wpm(tp.typed.size(), tp.seconds) : 0.0);
    rep.cer.push_back(cer(tp.typed, tp.reference));
  }
  std::tie(rep.wpm_mean, rep.wpm_stderr) = mean_stderr(rep.wpm);
  std::tie(rep.cer_mean, rep.cer_stderr) = mean_stderr(rep.cer);
  return rep;
}

std::string to_json(const EvalReport& report) {
  nlohmann::json j;
  j["k"] = report.ks;
  j["recall"] = report.recall;
  j["recall_stderr"] = report.recall_stderr;
  j["words"] = report.words;
  j["repeats"] = report.repeats;
  j["stderr_over"] = "seeds";
  j["wpm"] = report.wpm;
  j["cer"] = report.cer;
  j["wpm_mean"] = report.wpm_mean;
  j["wpm_stderr"] = report.wpm_stderr;
  j["cer_mean"] = report.cer_mean;
  j["cer_stderr"] = report.cer_stderr;
  return j.dump(2);
}

std::vector<ComparisonRow> compare_classifiers(const std::vector<ClassifierVariant>& variants,
                                               const classifier::Dataset& train, const classifier::Dataset& test,
                                               const SimulationConfig& sim, const decoder::Decoder& decoder,
                                               std::uint64_t seed) {
  std::vector<ComparisonRow> rows;
  for (const auto& v : variants) {
    const auto result = classifier::train(train, v.config, seed);
    const auto probs = classifier::predict_dataset(result.model, test, mix_seed(seed, 1));
    std::vector<ClassProbs> finger_probs;
    std::vector<std::size_t> labels;
    std::size_t ood = 0, rejected = 0;
    auto pool = std::make_shared<PredictionPool>();
    for (std::size_t i = 0; i < test.size(); ++i) {
      const bool reject = *std::max_element(probs[i].begin(), probs[i].end()) < v.config.reject_threshold;
      if (!test[i].label) {
        ++ood;
        rejected += reject;
        continue;
      }
      finger_probs.push_back(probs[i]);
      labels.push_back(index_of(*test[i].label));
      if (!reject) pool->probs[index_of(test[i].hand)][index_of(*test[i].label)].push_back(probs[i]);
    }
    ComparisonRow row;
    row.name = v.name;
    row.metrics = classifier::compute_metrics(finger_probs, labels);
    row.ood_rejection = ood ? static_cast<double>(rejected) / static_cast<double>(ood) : 0.0;
    if (!sim.phrases.phrases.empty()) row.recall = simulate_recall(sim, decoder, pool_source(pool)).recall;
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string to_json(const std::vector<ComparisonRow>& rows, const std::vector<std::size_t>& ks) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json j;
    j["name"] = r.name;
    j["macro_f1"] = r.metrics.macro_f1;
    j["accuracy"] = r.metrics.accuracy;
    j["nll"] = r.metrics.nll;
    j["ece"] = r.metrics.ece;
    j["ood_rejection"] = r.ood_rejection;
    j["k"] = ks;
    j["recall"] = r.recall;
    arr.push_back(std::move(j));
  }
  return arr.dump(2);
}

}  // namespace taptype::eval
