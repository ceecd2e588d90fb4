#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "layers.hpp"
#include "property.hpp"
#include "taptype/classifier.hpp"

using namespace taptype;
using namespace taptype::classifier;
using tt_test::Gen;
using tt_test::for_all;

namespace {

double log_normal(double x, double mu, double sigma) {
  const double z = (x - mu) / sigma;
  return -0.5 * z * z - std::log(sigma) - 0.5 * std::log(2.0 * std::numbers::pi);
}

void randomize(Param& p, Gen& g, double lo, double hi) {
  for (Eigen::Index i = 0; i < p.value.size(); ++i) p.value(i) = g.real(lo, hi);
}

Matrix random_batch(Gen& g, std::size_t features, std::size_t batch) {
  Matrix x(static_cast<Eigen::Index>(features), static_cast<Eigen::Index>(batch));
  for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = g.normal();
  return x;
}

signal::Window random_window(Gen& g, std::size_t len) {
  signal::Window w(len);
  for (std::size_t t = 0; t < len; ++t)
    for (std::size_t ch = 0; ch < signal::kChannels; ++ch) w.at(t, ch) = g.normal();
  return w;
}

ClassifierConfig tiny_config() {
  ClassifierConfig c;
  c.name = "tiny";
  c.layers = {{LayerKind::Conv, 3, true}, {LayerKind::BatchNorm},         {LayerKind::LeakyRelu},
              {LayerKind::MaxPool},       {LayerKind::Dense, 6, true}};
  c.window_len = 4;
  return c;
}

double elbo_at(Network& net, const Matrix& x, const std::vector<std::optional<FingerClass>>& y, double kl_w) {
  Rng noise(99);
  return elbo_loss(net, x, y, kl_w, &noise, false).total;
}

// One trained default model, shared by the cases that need it.
struct Trained {
  Model model;
  Dataset test;
};

const Trained& trained() {
  static const Trained t = [] {
    DatasetSpec train_spec;
    DatasetSpec test_spec;
    test_spec.taps_per_class = 200;
    const Dataset train_set = synth_dataset(train_spec, 1);
    Trained out{classifier::train(train_set, ClassifierConfig{}, 3).model, synth_dataset(test_spec, 2)};
    return out;
  }();
  return t;
}

}  // namespace

TEST_CASE("gaussian kl closed form against sampling") {
  for_all(20, 31, [](Gen& g) {
    Rng init(g.integer(0, 1 << 20));
    const auto in = static_cast<std::size_t>(g.integer(1, 6));
    const auto out = static_cast<std::size_t>(g.integer(1, 5));
    Dense layer(in, out, true, -3.0, init);
    auto ps = layer.params();
    REQUIRE(ps.size() == 4);
    randomize(*ps[0], g, -0.3, 0.3);
    randomize(*ps[1], g, -6.0, -1.0);
    randomize(*ps[2], g, -0.3, 0.3);
    randomize(*ps[3], g, -6.0, -1.0);
    const double prior = g.real(0.05, 0.5);

    std::normal_distribution<double> n01;
    auto& rng = g.rng();
    double sum = 0.0;
    const int samples = 100000;
    for (int s = 0; s < samples; ++s)
      for (const auto& [mu, rho] : {std::pair{ps[0], ps[1]}, std::pair{ps[2], ps[3]}})
        for (Eigen::Index i = 0; i < mu->value.size(); ++i) {
          const double sigma = softplus(rho->value(i));
          const double w = mu->value(i) + sigma * n01(rng);
          sum += log_normal(w, mu->value(i), sigma) - log_normal(w, 0.0, prior);
        }
    const double mc = sum / samples;
    CHECK(std::fabs(mc - layer.kl(prior)) <= 0.01 * layer.kl(prior));
  });
  CHECK(gaussian_kl(0.0, 0.1, 0.1) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(gaussian_kl(0.2, 0.1, 0.1) == doctest::Approx(2.0));
}

TEST_CASE("elbo gradient matches finite differences") {
  Gen g(32);
  Network net(tiny_config(), 2, 4, 5);
  REQUIRE(net.parameter_count() <= 200);
  for (Param* p : net.params())
    for (Eigen::Index i = 0; i < p->value.size(); ++i) p->value(i) += 0.3 * g.normal();
  const Matrix x = random_batch(g, 8, 8);
  const std::vector<std::optional<FingerClass>> y{FingerClass::Thumb, FingerClass::Index, std::nullopt,
                                                  FingerClass::Pinky, FingerClass::Palm,  FingerClass::Middle,
                                                  std::nullopt,       FingerClass::Ring};
  const double kl_w = 0.05;

  net.zero_grad();
  Rng noise(99);
  elbo_loss(net, x, y, kl_w, &noise, true);
  double worst = 0.0;
  std::size_t checked = 0;
  for (Param* p : net.params()) {
    const Matrix analytic = p->grad;
    for (Eigen::Index i = 0; i < p->value.size(); ++i) {
      const double keep = p->value(i);
      const double h = 1e-5;
      p->value(i) = keep + h;
      const double up = elbo_at(net, x, y, kl_w);
      p->value(i) = keep - h;
      const double down = elbo_at(net, x, y, kl_w);
      p->value(i) = keep;
      const double numeric = (up - down) / (2 * h);
      worst = std::max(worst, std::fabs(numeric - analytic(i)) / std::max(1.0, std::fabs(numeric)));
      ++checked;
    }
  }
  CHECK(checked == net.parameter_count());
  CHECK(worst < 1e-4);
}

TEST_CASE("open-set loss values") {
  Matrix uniform = Matrix::Constant(6, 1, 1.0 / 6.0);
  CHECK(open_set_loss(uniform, {std::nullopt}).mean == doctest::Approx(std::log(6.0)).epsilon(1e-14));
  CHECK(open_set_loss(uniform, {std::nullopt}).grad_logits.cwiseAbs().maxCoeff() < 1e-15);
  Matrix p(6, 1);
  p << 0.5, 0.1, 0.1, 0.1, 0.1, 0.1;
  CHECK(open_set_loss(p, {FingerClass::Thumb}).mean == doctest::Approx(std::log(2.0)));
  CHECK_THROWS_AS(open_set_loss(p, {}), DomainError);
}

TEST_CASE("softmax columns are distributions") {
  for_all(50, 33, [](Gen& g) {
    const Matrix logits = random_batch(g, 6, 5) * g.real(0.1, 500.0);
    const Matrix p = softmax(logits);
    for (Eigen::Index j = 0; j < p.cols(); ++j) {
      CHECK(p.col(j).sum() == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(p.col(j).minCoeff() >= 0.0);
    }
  });
}

TEST_CASE("predictive parallel equals serial") {
  Gen g(34);
  ClassifierConfig c;
  c.window_len = 32;
  Network net(c, signal::kChannels, 32, 8);
  const Matrix x = random_batch(g, signal::kChannels * 32, 40);
  const Matrix a = predictive(net, x, 16, 4);
  const Matrix b = serial::predictive(net, x, 16, 4);
  CHECK((a - b).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((a - predictive(net, x, 16, 4)).cwiseAbs().maxCoeff() == 0.0);
  for (Eigen::Index j = 0; j < a.cols(); ++j) CHECK(a.col(j).sum() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(predictive(net, x, 0, 4), DomainError);

  Network plain(ClassifierConfig::named("no-bayes"), signal::kChannels, 32, 8);
  CHECK((predictive(plain, x, 1, 1) - predictive(plain, x, 50, 2)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("raising the reject threshold never accepts more") {
  Gen g(35);
  std::vector<signal::Window> ws;
  for (int i = 0; i < 40; ++i) ws.push_back(random_window(g, 32));
  std::vector<bool> previous(ws.size(), true);
  for (double zeta : {0.05, 0.2, 0.3, 0.4, 0.5, 0.7, 0.9, 0.99}) {
    ClassifierConfig c;
    c.window_len = 32;
    c.reject_threshold = zeta;
    const Model m{Network(c, signal::kChannels, 32, 8), {}};
    for (std::size_t i = 0; i < ws.size(); ++i) {
      const bool accepted = predict(m, ws[i], Hand::Left, 6, 8).has_value();
      CHECK((!accepted || previous[i]));
      previous[i] = accepted;
    }
  }
}

TEST_CASE("confusion classifier accuracy") {
  for (ConfusionMode mode : {ConfusionMode::Calibrated, ConfusionMode::Overconfident}) {
    CAPTURE(to_string(mode));
    ConfusionClassifier cc(neighbour_confusion(0.9), mode, 11);
    std::vector<ClassProbs> probs;
    std::vector<std::size_t> labels;
    Rng r(12);
    for (int i = 0; i < 100000; ++i) {
      const std::size_t y = r() % kNumClasses;
      probs.push_back(cc.classify(kHands[i % 2], kAllClasses[y]).probs);
      labels.push_back(y);
    }
    const Metrics m = compute_metrics(probs, labels);
    CHECK(std::fabs(m.accuracy - 0.9) <= 0.01);
    if (mode == ConfusionMode::Calibrated)
      CHECK(m.ece <= 0.02);
    else
      CHECK(std::fabs(m.ece - (1.0 - m.accuracy)) <= 0.01);
  }
}

TEST_CASE("confusion matrices are stochastic") {
  for_all(30, 36, [](Gen& g) {
    const double acc = g.real(0.2, 1.0);
    const auto c = neighbour_confusion(acc);
    double diag = 0;
    for (std::size_t i = 0; i < kNumClasses; ++i) {
      double row = 0;
      for (double v : c[i]) {
        CHECK(v >= 0.0);
        row += v;
      }
      CHECK(row == doctest::Approx(1.0).epsilon(1e-12));
      diag += c[i][i];
    }
    CHECK(diag / kNumClasses == doctest::Approx(acc).epsilon(1e-9));
  });
  const auto spec = parse_classifier_spec("confusion:0.8:overconfident");
  CHECK(spec.mode == ConfusionMode::Overconfident);
  CHECK(spec.accuracy == 0.8);
  CHECK(parse_classifier_spec("identity").confusion == identity_confusion());
  CHECK_THROWS(parse_classifier_spec("confusion:1.5:calibrated"));
  CHECK_THROWS(parse_classifier_spec("oracle"));
}

TEST_CASE("metric examples") {
  const ClassProbs p75{0.75, 0.05, 0.05, 0.05, 0.05, 0.05};
  CHECK(expected_calibration_error({p75, p75, p75, p75}, {0, 0, 0, 1}) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(expected_calibration_error({p75, p75}, {1, 1}) == doctest::Approx(0.75));
  CHECK(macro_f1({0, 0, 1, 1}, {0, 1, 1, 1}) == doctest::Approx(11.0 / 15.0));
  const Metrics m = compute_metrics({p75, p75}, {0, 2});
  CHECK(m.nll == doctest::Approx(-(std::log(0.75) + std::log(0.05)) / 2));
  CHECK(m.accuracy == 0.5);
  CHECK_THROWS_AS(compute_metrics({}, {}), DomainError);
  CHECK_THROWS_AS(compute_metrics({p75}, {6}), DomainError);
}

TEST_CASE("config json round trip") {
  ClassifierConfig c = ClassifierConfig::named("all-bayes");
  c.reject_threshold = 0.45;
  c.kl_weight = 0.002;
  c.epochs = 7;
  const ClassifierConfig back = config_from_json(to_json(c));
  CHECK(back.name == c.name);
  CHECK(back.layers == c.layers);
  CHECK(back.reject_threshold == c.reject_threshold);
  CHECK(back.kl_weight == c.kl_weight);
  CHECK(back.epochs == 7);
  CHECK_THROWS_AS(config_from_json("{"), ParseError);
  CHECK_THROWS_AS(ClassifierConfig::named("resnet"), DomainError);
  ClassifierConfig bad;
  bad.reject_threshold = 1.0;
  CHECK_THROWS_AS(bad.validate(), DomainError);
  bad = {};
  bad.ensemble_infer = 0;
  CHECK_THROWS_AS(bad.validate(), DomainError);
}

TEST_CASE("checkpoint round trip") {
  Gen g(37);
  ClassifierConfig c;
  c.window_len = 32;
  Model m{Network(c, signal::kChannels, 32, 9), {}};
  for (std::size_t ch = 0; ch < signal::kChannels; ++ch) {
    m.stats.mean[ch] = static_cast<float>(g.normal());
    m.stats.std[ch] = static_cast<float>(g.real(0.5, 2.0));
  }
  std::stringstream io;
  write_checkpoint(m, io);
  const Model back = read_checkpoint(io);
  CHECK(back.net.config().layers == c.layers);
  CHECK(back.stats == m.stats);
  const Matrix x = random_batch(g, signal::kChannels * 32, 10);
  CHECK((predictive(m.net, x, 8, 1) - predictive(back.net, x, 8, 1)).cwiseAbs().maxCoeff() < 1e-4);
  std::stringstream junk("not a checkpoint");
  CHECK_THROWS(read_checkpoint(junk));
}

TEST_CASE("mirror and preprocessing") {
  Gen g(38);
  const signal::Window w = random_window(g, 16);
  CHECK(mirror(w, Hand::Left) == w);
  const signal::Window r = mirror(w, Hand::Right);
  for (std::size_t ch = 0; ch < signal::kChannels; ++ch) {
    const bool flipped = std::find(signal::kMirrorChannels.begin(), signal::kMirrorChannels.end(), ch) !=
                         signal::kMirrorChannels.end();
    for (std::size_t t = 0; t < 16; ++t) CHECK(r.at(t, ch) == (flipped ? -w.at(t, ch) : w.at(t, ch)));
  }
  CHECK(mirror(r, Hand::Right) == w);

  Dataset d;
  for (int i = 0; i < 20; ++i) d.push_back({random_window(g, 16), FingerClass::Index, kHands[i % 2]});
  for (auto& item : d) std::ranges::fill(item.window.channel(5), 2.0);
  const ChannelStats s = fit_stats(d);
  CHECK(s.std[5] == 1.0);
  CHECK(s.mean[5] == doctest::Approx(2.0));
  CHECK_THROWS_AS(fit_stats({}), DomainError);
}

TEST_CASE("undersampling balances the classes") {
  for_all(20, 39, [](Gen& g) {
    Dataset d;
    std::array<std::size_t, kNumClasses + 1> counts{};
    for (std::size_t c = 0; c <= kNumClasses; ++c) {
      counts[c] = static_cast<std::size_t>(g.integer(1, 30));
      for (std::size_t i = 0; i < counts[c]; ++i)
        d.push_back({signal::Window(4), c < kNumClasses ? std::optional(kAllClasses[c]) : std::nullopt, Hand::Left});
    }
    const std::size_t low = *std::min_element(counts.begin(), counts.end());
    const Dataset u = undersample(d, g.integer(0, 1000));
    CHECK(u.size() == low * (kNumClasses + 1));
    CHECK(!missing_class(u));
    std::array<std::size_t, kNumClasses + 1> got{};
    for (const auto& item : u) ++got[item.label ? index_of(*item.label) : kNumClasses];
    for (std::size_t c : got) CHECK(c == low);
  });
}

TEST_CASE("default training reaches F1 and rejection targets") {
  const Trained& t = trained();
  const auto probs = predict_dataset(t.model, t.test, 4);
  std::vector<ClassProbs> known;
  std::vector<std::size_t> labels;
  std::size_t ood = 0, rejected = 0;
  const double zeta = t.model.net.config().reject_threshold;
  for (std::size_t i = 0; i < t.test.size(); ++i) {
    if (t.test[i].label) {
      known.push_back(probs[i]);
      labels.push_back(index_of(*t.test[i].label));
    } else {
      ++ood;
      rejected += *std::max_element(probs[i].begin(), probs[i].end()) < zeta;
    }
  }
  REQUIRE(ood > 0);
  const Metrics m = compute_metrics(known, labels);
  MESSAGE("macro F1 " << m.macro_f1 << ", OOD rejection " << double(rejected) / double(ood));
  CHECK(m.macro_f1 >= 0.85);
  CHECK(double(rejected) / double(ood) >= 0.8);
}
