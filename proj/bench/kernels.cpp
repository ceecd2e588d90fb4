// Serial reference vs OpenMP version of each parallel kernel.

#include <benchmark/benchmark.h>

#include "support.hpp"
#include "taptype/classifier.hpp"
#include "taptype/eval.hpp"

using namespace taptype;

namespace {

const signal::ImuStream& long_stream() {
  static const signal::ImuStream s = tt_test::Gen(1).stream(100000, 50.0);
  return s;
}

template <auto Fn>
void rate_of_change(benchmark::State& state) {
  const auto& s = long_stream();
  for (auto _ : state) benchmark::DoNotOptimize(Fn(s, signal::DetectorConfig{}));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(s.size()));
}

struct PredictiveInput {
  classifier::Network net;
  classifier::Matrix x;
};

const PredictiveInput& predictive_input() {
  static const PredictiveInput in = [] {
    classifier::ClassifierConfig c;
    tt_test::Gen g(2);
    classifier::Matrix x(static_cast<Eigen::Index>(signal::kChannels * c.window_len), 64);
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = g.normal();
    return PredictiveInput{classifier::Network(c, signal::kChannels, c.window_len, 3), x};
  }();
  return in;
}

template <auto Fn>
void predictive(benchmark::State& state) {
  const auto& in = predictive_input();
  const auto members = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(Fn(in.net, in.x, members, 4));
}

// A beam two taps deep, expanded by a third, flat-ish tap.
template <auto Fn>
void expand_beam(benchmark::State& state) {
  const auto& d = tt_test::desk_decoder();
  const bool constrained = state.range(0) != 0;
  const decoder::Lexicon* lex = constrained ? &d.lexicon() : nullptr;
  tt_test::Gen g(5);
  std::vector<decoder::BeamNode> beam{{{}, constrained ? d.lexicon().root() : decoder::Lexicon::kNoChild}};
  for (int i = 0; i < 2; ++i) beam = decoder::expand_beam(beam, TapObservation::make(Hand::Left, g.probs(2.0)), d, lex, 64);
  const auto obs = TapObservation::make(Hand::Right, g.probs(2.0));
  for (auto _ : state) benchmark::DoNotOptimize(Fn(beam, obs, d, lex, 64));
}

template <auto Fn>
void simulate_recall(benchmark::State& state) {
  eval::SimulationConfig c;
  c.phrases = tt_test::desk_stack().phrases;
  const auto source = eval::confusion_source(classifier::parse_classifier_spec("confusion:0.9:calibrated"));
  for (auto _ : state) benchmark::DoNotOptimize(Fn(c, tt_test::desk_decoder(), source));
}

}  // namespace

BENCHMARK(rate_of_change<signal::serial::rate_of_change>)->Name("rate_of_change/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(rate_of_change<signal::rate_of_change>)->Name("rate_of_change/omp")->Unit(benchmark::kMillisecond);
BENCHMARK(predictive<classifier::serial::predictive>)->Name("predictive/serial")->Arg(32)->Unit(benchmark::kMillisecond);
BENCHMARK(predictive<classifier::predictive>)->Name("predictive/omp")->Arg(32)->Unit(benchmark::kMillisecond);
BENCHMARK(expand_beam<decoder::serial::expand_beam>)->Name("expand_beam/serial")->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);
BENCHMARK(expand_beam<decoder::expand_beam>)->Name("expand_beam/omp")->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);
BENCHMARK(simulate_recall<eval::serial::simulate_recall>)->Name("simulate_recall/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(simulate_recall<eval::simulate_recall>)->Name("simulate_recall/omp")->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
