#include <algorithm>
#include <cmath>

#include "taptype/classifier.hpp"

namespace taptype::classifier {

namespace {

std::size_t argmax(const ClassProbs& p) {
  return static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
}

void check(const std::vector<ClassProbs>& probs, const std::vector<std::size_t>& labels) {
  if (probs.empty()) throw DomainError("metrics need at least one prediction");
  if (probs.size() != labels.size()) throw DomainError("prediction and label counts differ");
  for (std::size_t y : labels)
    if (y >= kNumClasses) throw DomainError("label outside the 6 classes");
}

}  // namespace

double macro_f1(const std::vector<std::size_t>& predicted, const std::vector<std::size_t>& labels,
                std::size_t classes) {
  if (predicted.size() != labels.size() || labels.empty()) throw DomainError("macro F1 needs matching, nonempty inputs");
  double sum = 0.0;
  std::size_t counted = 0;
  for (std::size_t c = 0; c < classes; ++c) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const bool p = predicted[i] == c, y = labels[i] == c;
      tp += p && y;
      fp += p && !y;
      fn += !p && y;
    }
    if (tp + fp + fn == 0) continue;  // class absent on both sides
    sum += 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
    ++counted;
  }
  return counted ? sum / static_cast<double>(counted) : 0.0;
}

double expected_calibration_error(const std::vector<ClassProbs>& probs, const std::vector<std::size_t>& labels,
                                  std::size_t bins) {
  check(probs, labels);
  if (bins == 0) throw DomainError("ECE needs at least one bin");
  std::vector<double> conf(bins, 0.0), correct(bins, 0.0), count(bins, 0.0);
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const std::size_t k = argmax(probs[i]);
    const double c = probs[i][k];
    const auto b = std::min(bins - 1, static_cast<std::size_t>(c * static_cast<double>(bins)));
    conf[b] += c;
    correct[b] += k == labels[i] ? 1.0 : 0.0;
    count[b] += 1.0;
  }
  double ece = 0.0;
  for (std::size_t b = 0; b < bins; ++b)
    if (count[b] > 0) ece += std::abs(correct[b] - conf[b]) / static_cast<double>(probs.size());
  return ece;
}

Metrics compute_metrics(const std::vector<ClassProbs>& probs, const std::vector<std::size_t>& labels,
                        std::size_t bins) {
  check(probs, labels);
  Metrics m;
  std::vector<std::size_t> predicted;
  double nll = 0.0, hits = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    predicted.push_back(argmax(probs[i]));
    hits += predicted.back() == labels[i];
    nll -= std::log(std::max(probs[i][labels[i]], 1e-15));
  }
  const double n = static_cast<double>(probs.size());
  m.nll = nll / n;
  m.accuracy = hits / n;
  m.macro_f1 = macro_f1(predicted, labels);
  m.ece = expected_calibration_error(probs, labels, bins);
  return m;
}

}  // namespace taptype::classifier
