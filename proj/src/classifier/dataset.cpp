#include <algorithm>
#include <cmath>

#include "taptype/classifier.hpp"

namespace taptype::classifier {

Dataset synth_dataset(const DatasetSpec& spec, std::uint64_t seed) {
  spec.detector.validate();
  signal::GeneratorSpec gen = spec.generator;
  gen.bursts = spec.bursts_per_stream;
  gen.ood_segments = spec.ood_per_stream;
  gen.validate();
  if (spec.taps_per_class == 0) throw DomainError("taps per class must be > 0");

  std::array<std::size_t, kNumClasses + 1> counts{};  // last slot counts OOD
  auto done = [&] {
    return std::all_of(counts.begin(), counts.end(), [&](std::size_t c) { return c >= spec.taps_per_class; });
  };
  Dataset out;
  // Generous cap: a stream yields about bursts_per_stream / 6 taps per class.
  const std::size_t max_streams = 20 + 40 * spec.taps_per_class * kNumClasses / std::max<std::size_t>(1, gen.bursts);
  for (std::size_t i = 0; i < max_streams && !done(); ++i) {
    const Hand hand = i % 2 == 0 ? Hand::Left : Hand::Right;
    const auto labeled = signal::synth_tap_stream(gen, hand, seed * 1000003ULL + i);
    auto candidates = signal::detect_taps(labeled.stream, spec.detector);
    std::vector<bool> used(labeled.labels.size(), false);
    for (auto& cand : candidates) {
      std::optional<std::size_t> match;
      std::int64_t best = spec.match_tolerance + 1;
      for (std::size_t k = 0; k < labeled.labels.size(); ++k) {
        const std::int64_t d = std::abs(labeled.labels[k].t - cand.t_z);
        if (!used[k] && d < best) {
          best = d;
          match = k;
        }
      }
      std::optional<FingerClass> label;
      if (match) {
        used[*match] = true;
        label = labeled.labels[*match].finger;
      } else {
        const bool in_ood = std::any_of(labeled.ood.begin(), labeled.ood.end(), [&](const signal::OodSegment& o) {
          return cand.t_z >= o.begin - spec.match_tolerance && cand.t_z <= o.end + spec.match_tolerance;
        });
        if (!in_ood) continue;
      }
      std::size_t& n = counts[label ? index_of(*label) : kNumClasses];
      if (n >= spec.taps_per_class) continue;
      ++n;
      out.push_back({std::move(cand.window), label, hand});
    }
  }
  return out;
}

std::optional<std::size_t> missing_class(const Dataset& data) {
  std::array<bool, kNumClasses + 1> seen{};
  for (const auto& w : data) seen[w.label ? index_of(*w.label) : kNumClasses] = true;
  for (std::size_t i = 0; i < seen.size(); ++i)
    if (!seen[i]) return i;
  return std::nullopt;
}

signal::Window mirror(const signal::Window& w, Hand hand) {
  signal::Window out = w;
  if (hand == Hand::Right)
    for (std::size_t ch : signal::kMirrorChannels)
      for (double& v : out.channel(ch)) v = -v;
  return out;
}

ChannelStats fit_stats(const Dataset& data) {
  if (data.empty()) throw DomainError("cannot fit statistics on an empty dataset");
  ChannelStats s;
  std::array<double, signal::kChannels> sum{}, sq{};
  double n = 0.0;
  for (const auto& item : data) {
    const signal::Window m = mirror(item.window, item.hand);
    for (std::size_t ch = 0; ch < signal::kChannels; ++ch)
      for (double v : m.channel(ch)) {
        sum[ch] += v;
        sq[ch] += v * v;
      }
    n += static_cast<double>(item.window.length());
  }
  for (std::size_t ch = 0; ch < signal::kChannels; ++ch) {
    s.mean[ch] = sum[ch] / n;
    const double var = std::max(0.0, sq[ch] / n - s.mean[ch] * s.mean[ch]);
    s.std[ch] = var > 1e-12 ? std::sqrt(var) : 1.0;
  }
  return s;
}

signal::Window preprocess(const signal::Window& w, Hand hand, const ChannelStats& stats) {
  signal::Window out = mirror(w, hand);
  for (std::size_t ch = 0; ch < signal::kChannels; ++ch) {
    const double sd = stats.std[ch] > 0.0 ? stats.std[ch] : 1.0;
    for (double& v : out.channel(ch)) v = (v - stats.mean[ch]) / sd;
  }
  return out;
}

Matrix to_batch(const std::vector<const signal::Window*>& windows) {
  if (windows.empty()) return {};
  const auto rows = static_cast<Eigen::Index>(windows.front()->data().size());
  Matrix x(rows, static_cast<Eigen::Index>(windows.size()));
  for (std::size_t j = 0; j < windows.size(); ++j) {
    if (static_cast<Eigen::Index>(windows[j]->data().size()) != rows) throw DomainError("window length mismatch");
    x.col(static_cast<Eigen::Index>(j)) = Eigen::Map<const Eigen::VectorXd>(windows[j]->data().data(), rows);
  }
  return x;
}

}  // namespace taptype::classifier
