#include <charconv>
#include <cmath>

#include "taptype/classifier.hpp"

namespace taptype::classifier {

std::string_view to_string(ConfusionMode m) {
  return m == ConfusionMode::Calibrated ? "calibrated" : "overconfident";
}

ConfusionMode parse_confusion_mode(std::string_view s) {
  if (s == "calibrated") return ConfusionMode::Calibrated;
  if (s == "overconfident") return ConfusionMode::Overconfident;
  throw DomainError("unknown confusion mode '" + std::string(s) + "'");
}

ConfusionMatrix identity_confusion() {
  ConfusionMatrix m{};
  for (std::size_t i = 0; i < kNumClasses; ++i) m[i][i] = 1.0;
  return m;
}

ConfusionMatrix neighbour_confusion(double accuracy) {
  // Error weights average to 1 so the mean diagonal equals `accuracy`.
  // Typing fingers swap with their neighbour (index/middle, ring/pinky),
  // thumb and palm with each other.
  constexpr std::array<double, kNumClasses> weight{0.8, 1.1, 1.1, 1.1, 1.1, 0.8};
  constexpr std::array<std::size_t, kNumClasses> partner{5, 2, 1, 4, 3, 0};
  const double err = 1.0 - accuracy;
  if (!(accuracy >= 0.0 && accuracy <= 1.0) || err * 1.1 > 1.0)
    throw DomainError("accuracy must be in [" + std::to_string(1.0 - 1.0 / 1.1) + ", 1]");
  ConfusionMatrix m{};
  for (std::size_t i = 0; i < kNumClasses; ++i) {
    m[i][partner[i]] = err * weight[i];
    m[i][i] = 1.0 - err * weight[i];
  }
  return m;
}

ConfusionClassifier::ConfusionClassifier(const ConfusionMatrix& confusion, ConfusionMode mode, std::uint64_t seed)
    : confusion_(confusion), mode_(mode), rng_(seed) {
  for (std::size_t i = 0; i < kNumClasses; ++i) {
    double s = 0.0;
    for (double v : confusion[i]) {
      if (!(v >= 0.0)) throw DomainError("confusion matrix has a negative entry");
      s += v;
    }
    if (std::abs(s - 1.0) > 1e-9) throw DomainError("confusion matrix row " + std::to_string(i) + " is not stochastic");
  }
  for (std::size_t pred = 0; pred < kNumClasses; ++pred) {
    double col = 0.0;
    for (std::size_t t = 0; t < kNumClasses; ++t) col += confusion[t][pred];
    for (std::size_t t = 0; t < kNumClasses; ++t)
      posterior_[pred][t] = col > 0.0 ? confusion[t][pred] / col : 1.0 / static_cast<double>(kNumClasses);
  }
}

FingerClass ConfusionClassifier::sample(FingerClass true_class) {
  const auto& row = confusion_[index_of(true_class)];
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng_);
  double acc = 0.0;
  std::size_t last = 0;
  for (std::size_t i = 0; i < kNumClasses; ++i) {
    if (row[i] <= 0.0) continue;
    last = i;
    acc += row[i];
    if (u < acc) return kAllClasses[i];
  }
  return kAllClasses[last];
}

ClassProbs ConfusionClassifier::output_for(FingerClass predicted) const {
  ClassProbs p{};
  if (mode_ == ConfusionMode::Overconfident) {
    p[index_of(predicted)] = 1.0;
    return p;
  }
  double s = 0.0;
  for (std::size_t i = 0; i < kNumClasses; ++i) s += posterior_[index_of(predicted)][i];
  for (std::size_t i = 0; i < kNumClasses; ++i) p[i] = posterior_[index_of(predicted)][i] / s;
  return p;
}

TapObservation ConfusionClassifier::classify(Hand hand, FingerClass true_class) {
  return TapObservation::make(hand, output_for(sample(true_class)));
}

ClassifierSpec parse_classifier_spec(std::string_view spec) {
  if (spec == "identity" || spec == "perfect") return {};
  const auto bad = [&] {
    return DomainError("classifier spec '" + std::string(spec) +
                       "' should be identity or confusion:<accuracy>:<calibrated|overconfident>");
  };
  if (spec.rfind("confusion:", 0) != 0) throw bad();
  const auto rest = spec.substr(10);
  const auto colon = rest.find(':');
  if (colon == std::string_view::npos) throw bad();
  double acc = 0.0;
  const auto num = rest.substr(0, colon);
  if (std::from_chars(num.data(), num.data() + num.size(), acc).ec != std::errc{}) throw bad();
  ClassifierSpec out;
  out.accuracy = acc;
  out.confusion = neighbour_confusion(acc);
  out.mode = parse_confusion_mode(rest.substr(colon + 1));
  return out;
}

}  // namespace taptype::classifier
