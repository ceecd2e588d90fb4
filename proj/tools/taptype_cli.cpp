#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "taptype/classifier.hpp"
#include "taptype/decoder.hpp"
#include "taptype/eval.hpp"
#include "taptype/lm.hpp"
#include "taptype/service.hpp"
#include "taptype/signal.hpp"

using namespace taptype;
using nlohmann::json;

namespace {

// Models the decoder borrows; kept together so they outlive it.
struct DecoderStack {
  KeyFingerMap map;
  lm::CharNGramModel char_lm;
  lm::WordNGramModel word_lm;
  std::unique_ptr<decoder::Decoder> decoder;
};

struct StackPaths {
  std::string map, char_lm, word_lm;
  decoder::DecoderConfig config;
};

void add_stack_options(CLI::App* cmd, StackPaths& p) {
  cmd->add_option("--map", p.map, "key-finger map (default: built-in QWERTY)");
  cmd->add_option("--char-lm", p.char_lm, "character model ARPA")->required();
  cmd->add_option("--word-lm", p.word_lm, "word model ARPA")->required();
  cmd->add_option("--beam", p.config.beam_width, "beam width")->capture_default_str();
  cmd->add_option("--prune", p.config.finger_prune, "finger pruning threshold")->capture_default_str();
}

std::unique_ptr<DecoderStack> load_stack(const StackPaths& p) {
  auto s = std::make_unique<DecoderStack>();
  s->map = p.map.empty() ? KeyFingerMap::qwerty() : load_key_finger_map(p.map);
  if (auto problems = validate_map(s->map); !problems.empty()) throw DomainError("bad key map: " + problems.front());
  s->char_lm = lm::CharNGramModel(lm::load_arpa(p.char_lm));
  s->word_lm = lm::WordNGramModel(lm::load_arpa(p.word_lm));
  s->decoder = std::make_unique<decoder::Decoder>(s->map, s->char_lm, s->word_lm, p.config);
  return s;
}

std::vector<std::size_t> parse_ks(const std::string& text) {
  std::vector<std::size_t> ks;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) ks.push_back(std::stoul(item));
  return ks;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text << '\n';
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text << '\n';
}

lm::Corpus load_corpora(const std::vector<std::string>& paths) {
  lm::Corpus all;
  for (const auto& p : paths) {
    auto c = lm::load_corpus(p);
    for (auto& s : c.sentences) all.sentences.push_back(std::move(s));
  }
  return all;
}

classifier::DatasetSpec dataset_spec(std::size_t taps_per_class) {
  classifier::DatasetSpec spec;
  spec.taps_per_class = taps_per_class;
  return spec;
}

service::Server* g_server = nullptr;
extern "C" void on_signal(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"taptype: tap detection, finger classification and text decoding"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "debug logging");

  // train-lm
  auto* train_lm = app.add_subcommand("train-lm", "train a character or word n-gram model");
  std::string lm_kind = "word";
  std::size_t lm_order = 4, vocab_cap = 100000;
  std::vector<std::string> lm_in;
  std::string lm_out;
  train_lm->add_option("--kind", lm_kind, "char or word")->check(CLI::IsMember({"char", "word"}))->capture_default_str();
  train_lm->add_option("--order", lm_order, "n-gram order")->capture_default_str();
  train_lm->add_option("--in", lm_in, "corpus file(s), one sentence per line")->required();
  train_lm->add_option("--out", lm_out, "ARPA output")->required();
  train_lm->add_option("--vocab-cap", vocab_cap, "word model vocabulary size")->capture_default_str();

  // select-corpus
  auto* select = app.add_subcommand("select-corpus", "cross-entropy-difference corpus selection");
  std::vector<std::string> sel_in;
  std::string sel_query, sel_heldout, sel_out, sel_dir;
  std::vector<double> sel_thresholds;
  lm::SelectionOptions sel_opts;
  select->add_option("--in-domain", sel_in, "in-domain corpus (repeat for a mixture)")->required();
  select->add_option("--query", sel_query, "general corpus to select from")->required();
  select->add_option("--thresholds", sel_thresholds, "score thresholds")->required()->delimiter(',');
  select->add_option("--heldout", sel_heldout, "held-out in-domain text for weights and perplexity");
  select->add_option("--order", sel_opts.order, "selection model order")->capture_default_str();
  select->add_option("--seed", sel_opts.seed, "query sample seed")->capture_default_str();
  select->add_option("--out", sel_out, "JSON summary (default stdout)");
  select->add_option("--out-dir", sel_dir, "write selected_<i>.txt per threshold");

  // train-classifier
  auto* train_clf = app.add_subcommand("train-classifier", "train the finger classifier on synthetic taps");
  std::string arch = "2-bayes", ckpt_out, curve_out;
  std::size_t epochs = 30, taps_per_class = 500;
  std::uint64_t clf_seed = 7;
  std::optional<double> kl_weight;
  train_clf->add_option("--arch", arch, "2-bayes, no-bayes, all-bayes or deep")->capture_default_str();
  train_clf->add_option("--epochs", epochs)->capture_default_str();
  train_clf->add_option("--taps-per-class", taps_per_class)->capture_default_str();
  train_clf->add_option("--kl-weight", kl_weight, "default 1/batches");
  train_clf->add_option("--seed", clf_seed)->capture_default_str();
  train_clf->add_option("--out", ckpt_out, "checkpoint path")->required();
  train_clf->add_option("--curve", curve_out, "training curve CSV");

  // simulate
  auto* simulate = app.add_subcommand("simulate", "recall@k and typing simulation");
  StackPaths sim_paths;
  add_stack_options(simulate, sim_paths);
  std::string phrases_path, clf_spec = "identity", ks_text = "1,2,3,4,5,10,20", sim_out, sim_model;
  std::uint64_t sim_seed = 7;
  std::size_t repeats = 1;
  simulate->add_option("--phrases", phrases_path)->required();
  simulate->add_option("--classifier", clf_spec, "identity or confusion:<acc>:<calibrated|overconfident>")
      ->capture_default_str();
  simulate->add_option("--model", sim_model, "use a trained checkpoint instead of a confusion classifier");
  simulate->add_option("--k", ks_text)->capture_default_str();
  simulate->add_option("--seed", sim_seed)->capture_default_str();
  simulate->add_option("--repeats", repeats, "passes over the phrases, standard errors are across these")
      ->capture_default_str();
  simulate->add_option("--out", sim_out, "report JSON (default stdout)");

  // decode
  auto* decode = app.add_subcommand("decode", "decode one word from classifier outputs");
  StackPaths dec_paths;
  add_stack_options(decode, dec_paths);
  std::string obs_path, context_text;
  decode->add_option("--obs", obs_path, "JSON list of {hand, probs[6]}")->required();
  decode->add_option("--context", context_text, "preceding words");

  // eval
  auto* evalc = app.add_subcommand("eval", "compare classifier variants");
  StackPaths eval_paths;
  add_stack_options(evalc, eval_paths);
  std::vector<std::string> variants{"no-bayes", "2-bayes"};
  std::string eval_phrases, eval_out, eval_ks = "1,2,3,4,5,10,20";
  std::size_t eval_epochs = 30, eval_taps = 500;
  std::uint64_t eval_seed = 7;
  std::optional<double> eval_kl;
  evalc->add_option("--variants", variants)->delimiter(',')->capture_default_str();
  evalc->add_option("--epochs", eval_epochs)->capture_default_str();
  evalc->add_option("--taps-per-class", eval_taps)->capture_default_str();
  evalc->add_option("--kl-weight", eval_kl, "default 1/batches");
  evalc->add_option("--phrases", eval_phrases, "phrase set for recall (optional)");
  evalc->add_option("--k", eval_ks)->capture_default_str();
  evalc->add_option("--seed", eval_seed)->capture_default_str();
  evalc->add_option("--out", eval_out, "table JSON (default stdout)");

  // generate / detect
  auto* generate = app.add_subcommand("generate", "write a synthetic labeled IMU stream");
  std::string gen_out, gen_hand = "L";
  std::size_t gen_bursts = 20, gen_ood = 0;
  std::uint64_t gen_seed = 1;
  generate->add_option("--out", gen_out, "stream path; labels go to <out>.labels.csv")->required();
  generate->add_option("--hand", gen_hand)->capture_default_str();
  generate->add_option("--bursts", gen_bursts)->capture_default_str();
  generate->add_option("--ood", gen_ood, "out-of-distribution segments")->capture_default_str();
  generate->add_option("--seed", gen_seed)->capture_default_str();

  auto* detect = app.add_subcommand("detect", "list tap candidates in a stream");
  std::string det_in;
  signal::DetectorConfig det_cfg;
  detect->add_option("--in", det_in)->required();
  detect->add_option("--threshold", det_cfg.activation_threshold)->capture_default_str();

  // serve
  auto* serve = app.add_subcommand("serve", "WebSocket demo backend");
  StackPaths srv_paths;
  add_stack_options(serve, srv_paths);
  std::string bind = "127.0.0.1:8080";
  std::uint64_t srv_seed = 7;
  serve->add_option("--bind", bind, "host:port")->capture_default_str();
  serve->add_option("--seed", srv_seed, "noise seed; connection i uses a substream")->capture_default_str();

  CLI11_PARSE(app, argc, argv);
  spdlog::set_default_logger(spdlog::stderr_color_mt("taptype"));
  spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);

  try {
    if (*train_lm) {
      const lm::Corpus corpus = load_corpora(lm_in);
      if (lm_kind == "char") {
        lm::save_arpa(lm::train_char_lm(corpus, lm_order).ngrams(), lm_out);
      } else {
        lm::WordLmOptions opt;
        opt.order = lm_order;
        opt.vocab_cap = vocab_cap;
        const auto m = lm::train_word_lm(corpus, opt);
        spdlog::info("vocabulary {} words", m.words().size());
        lm::save_arpa(m.ngrams(), lm_out);
      }
      spdlog::info("wrote {}", lm_out);
    } else if (*select) {
      std::vector<lm::Corpus> in;
      for (const auto& p : sel_in) in.push_back(lm::load_corpus(p));
      const lm::Corpus query = lm::load_corpus(sel_query);
      std::optional<lm::Corpus> heldout;
      if (!sel_heldout.empty()) heldout = lm::load_corpus(sel_heldout);
      const auto r = lm::select_corpus(query, in, sel_thresholds, heldout ? &*heldout : nullptr, sel_opts);
      json j;
      j["thresholds"] = r.thresholds;
      json counts = json::array();
      for (const auto& s : r.selected) counts.push_back(s.size());
      j["selected"] = counts;
      j["heldout_perplexity"] = r.heldout_perplexity;
      if (!sel_dir.empty())
        for (std::size_t i = 0; i < r.selected.size(); ++i) {
          std::ofstream out(sel_dir + "/selected_" + std::to_string(i) + ".txt");
          if (!out) throw std::runtime_error("cannot write into " + sel_dir);
          for (std::size_t idx : r.selected[i]) {
            const auto& s = query.sentences[idx];
            for (std::size_t w = 0; w < s.size(); ++w) out << (w ? " " : "") << s[w];
            out << '\n';
          }
        }
      write_text(sel_out, j.dump(2));
    } else if (*train_clf) {
      auto cfg = classifier::ClassifierConfig::named(arch);
      cfg.epochs = epochs;
      cfg.kl_weight = kl_weight;
      spdlog::info("generating synthetic taps");
      const auto data = classifier::synth_dataset(dataset_spec(taps_per_class), clf_seed);
      spdlog::info("training {} on {} windows", arch, data.size());
      const auto r = classifier::train(data, cfg, clf_seed);
      classifier::save_checkpoint(r.model, ckpt_out);
      if (!curve_out.empty()) {
        std::ofstream out(curve_out);
        classifier::write_curve_csv(r.curve, out);
      }
      spdlog::info("wrote {}", ckpt_out);
    } else if (*simulate) {
      const auto stack = load_stack(sim_paths);
      eval::SimulationConfig sc;
      sc.phrases = load_phrase_set(phrases_path);
      sc.ks = parse_ks(ks_text);
      sc.seed = sim_seed;
      sc.repeats = repeats;
      eval::SamplerFactory source;
      if (!sim_model.empty()) {
        const auto model = classifier::load_checkpoint(sim_model);
        const auto heldout = classifier::synth_dataset(dataset_spec(200), mix_seed(sim_seed, 0xe7a1));
        source = eval::pool_source(
            std::make_shared<eval::PredictionPool>(eval::build_pool(model, heldout, sim_seed)));
      } else {
        source = eval::confusion_source(classifier::parse_classifier_spec(clf_spec));
      }
      eval::EvalReport rep = eval::simulate_recall(sc, *stack->decoder, source);
      const eval::EvalReport typing = eval::simulate_typing(sc, *stack->decoder, source);
      rep.wpm = typing.wpm;
      rep.cer = typing.cer;
      rep.wpm_mean = typing.wpm_mean;
      rep.wpm_stderr = typing.wpm_stderr;
      rep.cer_mean = typing.cer_mean;
      rep.cer_stderr = typing.cer_stderr;
      write_text(sim_out, eval::to_json(rep));
    } else if (*decode) {
      const auto stack = load_stack(dec_paths);
      std::ifstream in(obs_path);
      if (!in) throw std::runtime_error("cannot open " + obs_path);
      const json j = json::parse(in);
      decoder::ObservationSequence obs;
      for (const auto& o : j) {
        ClassProbs p{};
        const auto& arr = o.at("probs");
        if (arr.size() != kNumClasses) throw DomainError("probs must have 6 entries");
        for (std::size_t i = 0; i < kNumClasses; ++i) p[i] = arr[i].get<double>();
        obs.push_back(TapObservation::make(parse_hand(o.at("hand").get<std::string>()), p));
      }
      const auto context = split_words(normalize_phrase(context_text));
      json out = json::array();
      for (const auto& s : stack->decoder->decode(obs, context))
        out.push_back({{"word", s.word}, {"score", s.total_logp}, {"char_score", s.char_logp}});
      std::cout << out.dump(2) << '\n';
    } else if (*evalc) {
      const auto stack = load_stack(eval_paths);
      std::vector<eval::ClassifierVariant> vs;
      for (const auto& name : variants) {
        auto cfg = classifier::ClassifierConfig::named(name);
        cfg.epochs = eval_epochs;
        cfg.kl_weight = eval_kl;
        vs.push_back({name, cfg});
      }
      eval::SimulationConfig sc;
      sc.ks = parse_ks(eval_ks);
      sc.seed = eval_seed;
      if (!eval_phrases.empty()) sc.phrases = load_phrase_set(eval_phrases);
      const auto train = classifier::synth_dataset(dataset_spec(eval_taps), eval_seed);
      const auto test = classifier::synth_dataset(dataset_spec(200), mix_seed(eval_seed, 0xe7a1));
      const auto rows = eval::compare_classifiers(vs, train, test, sc, *stack->decoder, eval_seed);
      write_text(eval_out, eval::to_json(rows, sc.ks));
    } else if (*generate) {
      signal::GeneratorSpec spec;
      spec.bursts = gen_bursts;
      spec.ood_segments = gen_ood;
      const auto ls = signal::synth_tap_stream(spec, parse_hand(gen_hand), gen_seed);
      signal::save_stream(ls.stream, gen_out);
      std::ofstream labels(gen_out + ".labels.csv");
      signal::write_labels(ls, labels);
      spdlog::info("wrote {} samples to {}", ls.stream.size(), gen_out);
    } else if (*detect) {
      det_cfg.validate();
      const auto stream = signal::load_stream(det_in);
      std::cout << "t,peak_score\n";
      for (const auto& c : signal::detect_taps(stream, det_cfg)) std::cout << c.t_z << ',' << c.peak_score << '\n';
    } else if (*serve) {
      const auto stack = load_stack(srv_paths);
      auto cfg = service::parse_bind(bind);
      cfg.seed = srv_seed;
      service::Server server(*stack->decoder, cfg);
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      server.run();
      g_server = nullptr;
    }
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
