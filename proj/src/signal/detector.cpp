#include <algorithm>
#include <cmath>

#include "taptype/signal.hpp"

namespace taptype::signal {

void DetectorConfig::validate() const {
  if (!(decay > 1.0)) throw DomainError("detector decay D must be > 1");
  if (backoff < 1) throw DomainError("detector backoff must be >= 1");
  if (window_len == 0 || window_len % 2 != 0) throw DomainError("window length must be even and > 0");
  if (!std::isfinite(activation_threshold)) throw DomainError("activation threshold must be finite");
}

namespace {

double sensor_magnitude(const Sample& x, std::size_t sensor) {
  const double a = x[sensor * kAxes], b = x[sensor * kAxes + 1], c = x[sensor * kAxes + 2];
  return std::sqrt(a * a + b * b + c * c);
}

void check_stream(const ImuStream& stream) {
  if (stream.samples.empty()) throw DomainError("rate_of_change: empty stream");
  if (stream.sample_rate == 0) throw DomainError("sample rate must be > 0");
}

}  // namespace

std::vector<double> rate_of_change(const ImuStream& stream, const DetectorConfig& config) {
  check_stream(stream);
  config.validate();
  const auto n = static_cast<std::ptrdiff_t>(stream.size());
  std::vector<double> change(static_cast<std::size_t>(n), 0.0);

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t t = 1; t < n; ++t) {
    const Sample& cur = stream.samples[static_cast<std::size_t>(t)];
    const Sample& prev = stream.samples[static_cast<std::size_t>(t - 1)];
    double sum = 0.0;
    for (std::size_t s = 0; s < kSensors; ++s)
      sum += std::abs(sensor_magnitude(cur, s) - sensor_magnitude(prev, s));
    change[static_cast<std::size_t>(t)] = sum;
  }

  const double inv_decay = 1.0 / config.decay;
  std::vector<double> score(change.size(), 0.0);
  for (std::size_t t = 1; t < score.size(); ++t) score[t] = score[t - 1] * inv_decay + change[t];
  return score;
}

namespace serial {

std::vector<double> rate_of_change(const ImuStream& stream, const DetectorConfig& config) {
  check_stream(stream);
  config.validate();
  std::vector<double> score(stream.size(), 0.0);
  for (std::size_t t = 1; t < stream.size(); ++t) {
    double sum = 0.0;
    for (std::size_t s = 0; s < kSensors; ++s)
      sum += std::abs(sensor_magnitude(stream.samples[t], s) -
                      sensor_magnitude(stream.samples[t - 1], s));
    score[t] = score[t - 1] / config.decay + sum;
  }
  return score;
}

}  // namespace serial

Window extract_window(const ImuStream& stream, std::int64_t center, std::size_t length) {
  Window w(length);
  const std::int64_t begin = center - static_cast<std::int64_t>(length / 2);
  const auto n = static_cast<std::int64_t>(stream.size());
  for (std::size_t i = 0; i < length; ++i) {
    const std::int64_t t = begin + static_cast<std::int64_t>(i);
    if (t < 0 || t >= n) continue;
    const Sample& x = stream.samples[static_cast<std::size_t>(t)];
    for (std::size_t ch = 0; ch < kChannels; ++ch) w.at(i, ch) = x[ch];
  }
  return w;
}

std::vector<TapCandidate> detect_taps(const ImuStream& stream, const std::vector<double>& score,
                                      const DetectorConfig& config) {
  config.validate();
  std::vector<TapCandidate> out;
  const std::size_t n = score.size();
  std::size_t t = 0;
  while (t < n) {
    if (score[t] <= config.activation_threshold) {
      ++t;
      continue;
    }
    const std::size_t last = std::min(n - 1, t + config.backoff);
    std::size_t t_z = t;
    for (std::size_t u = t + 1; u <= last; ++u)
      if (score[u] > score[t_z]) t_z = u;
    TapCandidate c;
    c.t_z = static_cast<std::int64_t>(t_z);
    c.hand = stream.hand;
    c.peak_score = score[t_z];
    c.window = extract_window(stream, c.t_z, config.window_len);
    out.push_back(std::move(c));
    t = t_z + config.backoff;
  }
  return out;
}

std::vector<TapCandidate> detect_taps(const ImuStream& stream, const DetectorConfig& config) {
  if (stream.samples.empty()) return {};
  return detect_taps(stream, rate_of_change(stream, config), config);
}

}  // namespace taptype::signal
