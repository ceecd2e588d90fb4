#include <algorithm>

#include "property.hpp"
#include "taptype/eval.hpp"

using namespace taptype;
using namespace taptype::eval;
using tt_test::Gen;
using tt_test::for_all;

namespace {

SimulationConfig desk_sim(std::size_t repeats = 1) {
  SimulationConfig c;
  c.phrases = tt_test::desk_stack().phrases;
  c.repeats = repeats;
  return c;
}

SamplerFactory source(std::string_view spec) { return confusion_source(classifier::parse_classifier_spec(spec)); }

}  // namespace

TEST_CASE("cer examples") {
  CHECK(cer("the quikc", "the quick") == doctest::Approx(2.0 / 9.0));
  CHECK(cer("", "abc") == 1.0);
  CHECK(cer("abc", "abc") == 0.0);
  CHECK(cer("abcdef", "abc") == 1.0);
  CHECK_THROWS_AS(cer("abc", ""), DomainError);
}

TEST_CASE("levenshtein matches the table oracle") {
  for_all(300, 41, [](Gen& g) {
    const std::string a = g.word(0, 12, "abc d");
    const std::string b = g.word(0, 12, "abc d");
    const std::size_t d = levenshtein(a, b);
    CHECK(d == tt_test::dp_levenshtein(a, b));
    CHECK(d == levenshtein(b, a));
    CHECK(d <= std::max(a.size(), b.size()));
    CHECK(d >= (a.size() > b.size() ? a.size() - b.size() : b.size() - a.size()));
  });
}

TEST_CASE("wpm examples") {
  CHECK(wpm(25, 60.0) == doctest::Approx(5.0));
  CHECK(wpm(50, 30.0) == doctest::Approx(20.0));
  CHECK(wpm(0, 10.0) == 0.0);
  CHECK_THROWS_AS(wpm(10, 0.0), DomainError);
}

TEST_CASE("simulation config validation") {
  SimulationConfig c = desk_sim();
  c.ks = {1, 5, 5};
  CHECK_THROWS_AS(c.validate(), DomainError);
  c.ks = {0, 1};
  CHECK_THROWS_AS(c.validate(), DomainError);
  c = desk_sim();
  c.repeats = 0;
  CHECK_THROWS_AS(c.validate(), DomainError);
  c = desk_sim();
  c.phrases.phrases = {"the zyzzyvaqq"};
  CHECK_THROWS_AS(simulate_recall(c, tt_test::desk_decoder(), source("identity")), DomainError);
  CHECK(missing_words(c.phrases, tt_test::desk_decoder()) == std::vector<std::string>{"zyzzyvaqq"});
  CHECK(missing_words(desk_sim().phrases, tt_test::desk_decoder()).empty());
}

TEST_CASE("recall is monotone in k") {
  for (const char* spec : {"identity", "confusion:0.9:calibrated", "confusion:0.7:overconfident"}) {
    CAPTURE(spec);
    const EvalReport r = simulate_recall(desk_sim(), tt_test::desk_decoder(), source(spec));
    REQUIRE(r.recall.size() == r.ks.size());
    CHECK(r.words == desk_sim().phrases.word_count());
    for (std::size_t i = 1; i < r.recall.size(); ++i) CHECK(r.recall[i] >= r.recall[i - 1]);
    for (double x : r.recall) CHECK((x >= 0.0 && x <= 1.0));
  }
}

TEST_CASE("recall ignores phrase order") {
  for_all(3, 42, [](Gen& g) {
    SimulationConfig a = desk_sim();
    a.seed = g.integer(0, 1000);
    SimulationConfig b = a;
    std::shuffle(b.phrases.phrases.begin(), b.phrases.phrases.end(), g.rng());
    const auto ra = simulate_recall(a, tt_test::desk_decoder(), source("confusion:0.85:calibrated"));
    const auto rb = simulate_recall(b, tt_test::desk_decoder(), source("confusion:0.85:calibrated"));
    CHECK(ra.recall == rb.recall);
  });
}

TEST_CASE("parallel recall equals serial") {
  const auto cfg = desk_sim(2);
  const auto a = simulate_recall(cfg, tt_test::desk_decoder(), source("confusion:0.8:calibrated"));
  const auto b = serial::simulate_recall(cfg, tt_test::desk_decoder(), source("confusion:0.8:calibrated"));
  CHECK(a.recall == b.recall);
  CHECK(a.recall_stderr == b.recall_stderr);
  REQUIRE(a.outcomes.size() == b.outcomes.size());
  for (std::size_t i = 0; i < a.outcomes.size(); ++i) {
    CHECK(a.outcomes[i].word == b.outcomes[i].word);
    CHECK(a.outcomes[i].rank == b.outcomes[i].rank);
  }
}

TEST_CASE("identity recall at 10") {
  const auto r = simulate_recall(desk_sim(), tt_test::desk_decoder(), source("identity"));
  const auto k10 = std::find(r.ks.begin(), r.ks.end(), 10) - r.ks.begin();
  CHECK(r.recall[static_cast<std::size_t>(k10)] >= 0.95);
}

TEST_CASE("calibrated beats overconfident") {
  const auto cfg = desk_sim(3);
  const auto cal = simulate_recall(cfg, tt_test::desk_decoder(), source("confusion:0.9:calibrated"));
  const auto over = simulate_recall(cfg, tt_test::desk_decoder(), source("confusion:0.9:overconfident"));
  const auto k10 = static_cast<std::size_t>(std::find(cfg.ks.begin(), cfg.ks.end(), 10) - cfg.ks.begin());
  MESSAGE("recall@10 calibrated " << cal.recall[k10] << " overconfident " << over.recall[k10]);
  CHECK(cal.recall[k10] > over.recall[k10]);
}

TEST_CASE("scripted typing with a perfect classifier") {
  const auto r = simulate_typing(desk_sim(), tt_test::desk_decoder(), source("identity"));
  CHECK(r.cer_mean == 0.0);
  CHECK(r.wpm.size() == desk_sim().phrases.phrases.size());
  for (double w : r.wpm) CHECK(w > 0.0);

  const auto typed = type_phrase("The Cat", tt_test::desk_decoder(), source("identity")(1));
  CHECK(typed.reference == "the cat");
  CHECK(typed.typed == "the cat");
  CHECK(typed.taps == 6);
  CHECK(typed.first_ranks.size() == 2);
}

TEST_CASE("noisy typing still terminates with bounded error") {
  const auto r = simulate_typing(desk_sim(), tt_test::desk_decoder(), source("confusion:0.7:overconfident"));
  for (double c : r.cer) CHECK((c >= 0.0 && c <= 1.0));
  CHECK(r.cer_mean < 0.5);
}

TEST_CASE("classifier comparison") {
  classifier::DatasetSpec spec;
  spec.taps_per_class = 30;
  const auto train = classifier::synth_dataset(spec, 1);
  const auto test = classifier::synth_dataset(spec, 2);
  classifier::ClassifierConfig c = classifier::ClassifierConfig::named("no-bayes");
  c.epochs = 2;
  c.reject_threshold = 0.1;  // below 1/6, so every window is pooled
  SimulationConfig sim = desk_sim();
  sim.phrases.phrases.resize(5);

  const std::vector<ClassifierVariant> one{{"plain", c}};
  const auto a = compare_classifiers(one, train, test, sim, tt_test::desk_decoder(), 3);
  const auto b = compare_classifiers(one, train, test, sim, tt_test::desk_decoder(), 3);
  REQUIRE(a.size() == 1);
  CHECK(a[0].name == "plain");
  CHECK(a[0].recall == b[0].recall);
  CHECK(a[0].metrics.macro_f1 == b[0].metrics.macro_f1);
  CHECK(a[0].ood_rejection == b[0].ood_rejection);
  CHECK(a[0].recall.size() == sim.ks.size());
  CHECK(!to_json(a, sim.ks).empty());
}
