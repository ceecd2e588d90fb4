#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "taptype/signal.hpp"

namespace taptype::signal {

namespace {

using Vec3 = std::array<double, 3>;

Vec3 normalized(Vec3 v) {
  const double n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
  return {v[0] / n, v[1] / n, v[2] / n};
}

BurstTemplate make_template(double f, double decay, double amp, double ratio, Vec3 d0, Vec3 d1) {
  return BurstTemplate{f, decay, amp, ratio, normalized(d0), normalized(d1)};
}

}  // namespace

std::array<BurstTemplate, kNumClasses> GeneratorSpec::default_templates() {
  // Thumb and palm are distinct by construction; middle and ring differ only
  // slightly in frequency, decay and inter-sensor ratio.
  return {
      make_template(150.0, 6.0, 46.0, 0.55, {0.75, 0.25, 0.60}, {0.60, 0.10, 0.80}),  // thumb
      make_template(250.0, 4.0, 40.0, 0.95, {0.20, 0.70, 0.70}, {0.15, 0.55, 0.82}),  // index
      make_template(330.0, 3.4, 36.0, 1.30, {0.05, 0.35, 0.94}, {0.00, 0.30, 0.95}),  // middle
      make_template(350.0, 3.0, 33.0, 1.55, {-0.05, 0.25, 0.97}, {-0.08, 0.22, 0.97}),  // ring
      make_template(430.0, 2.4, 28.0, 2.10, {-0.35, 0.10, 0.93}, {-0.45, 0.05, 0.89}),  // pinky
      make_template(90.0, 10.0, 70.0, 0.85, {0.00, -0.30, 0.95}, {0.05, -0.40, 0.92}),  // palm
  };
}

void GeneratorSpec::validate() const {
  if (sample_rate == 0) throw DomainError("generator: sample rate must be > 0");
  if (!(noise_sigma > 0.0)) throw DomainError("generator: noise sigma must be > 0");
  if (!(gravity >= 0.0)) throw DomainError("generator: gravity must be >= 0");
  if (amplitude_jitter < 0.0 || frequency_jitter < 0.0 || decay_jitter < 0.0 ||
      direction_jitter < 0.0)
    throw DomainError("generator: jitter must be >= 0");
  if (soft_tap_fraction < 0.0 || soft_tap_fraction > 1.0)
    throw DomainError("generator: soft tap fraction outside [0,1]");
  if (min_gap == 0 || max_gap < min_gap) throw DomainError("generator: invalid gap range");
  if (bursts > 0 && classes.empty()) throw DomainError("generator: no classes to draw from");
  for (const auto& t : templates) {
    if (!(t.amplitude >= 0.0)) throw DomainError("generator: negative amplitude");
    if (!(t.sensor_ratio >= 0.0)) throw DomainError("generator: negative sensor ratio");
    if (!(t.frequency_hz > 0.0) || !(t.decay_ms > 0.0))
      throw DomainError("generator: frequency and decay must be > 0");
  }
}

namespace {

struct Burst {
  double freq = 0.0;
  double tau = 0.0;  // samples
  double amp0 = 0.0;
  double amp1 = 0.0;
  double phase = 0.0;
  Vec3 dir0{}, dir1{};
  std::size_t length = 0;

  double envelope(std::size_t i) const { return std::exp(-static_cast<double>(i) / tau); }

  void add_to(std::vector<Sample>& samples, std::size_t onset, double rate) const {
    for (std::size_t i = 0; i < length && onset + i < samples.size(); ++i) {
      const double w = envelope(i) * std::sin(2.0 * std::numbers::pi * freq * static_cast<double>(i) / rate + phase);
      Sample& x = samples[onset + i];
      for (std::size_t a = 0; a < kAxes; ++a) {
        x[a] += amp0 * w * dir0[a];
        x[kAxes + a] += amp1 * w * dir1[a];
      }
    }
  }
};

class Synth {
 public:
  Synth(const GeneratorSpec& spec, Hand hand, std::uint64_t seed)
      : spec_(spec), hand_(hand), rng_(seed) {
    g0_ = scaled(normalized({0.15, 0.10, 1.0}), spec.gravity);
    g1_ = scaled(normalized({-0.10, 0.20, 1.0}), spec.gravity);
    if (hand == Hand::Right) {
      g0_[0] = -g0_[0];
      g1_[0] = -g1_[0];
    }
  }

  LabeledStream run() {
    const std::size_t total_events = spec_.bursts + spec_.ood_segments;
    std::vector<bool> is_tap(total_events, false);
    std::fill(is_tap.begin(), is_tap.begin() + static_cast<std::ptrdiff_t>(spec_.bursts), true);
    std::shuffle(is_tap.begin(), is_tap.end(), rng_);

    struct Planned {
      std::size_t onset;
      bool tap;
      FingerClass finger;
      Burst burst;
      OodKind kind;
      std::size_t length;
      std::vector<Sample> ood_signal;
    };
    std::vector<Planned> plan;
    std::size_t t = spec_.lead_in;
    std::uniform_int_distribution<std::size_t> gap(spec_.min_gap, spec_.max_gap);
    std::uniform_int_distribution<std::size_t> pick(0, spec_.classes.empty() ? 0 : spec_.classes.size() - 1);
    for (bool tap : is_tap) {
      Planned p{};
      p.onset = t;
      p.tap = tap;
      if (tap) {
        p.finger = spec_.classes[pick(rng_)];
        p.burst = draw_burst(p.finger);
        p.length = p.burst.length;
      } else {
        p.kind = std::bernoulli_distribution(spec_.ood_midair_fraction)(rng_) ? OodKind::MidAir
                                                                             : OodKind::Swell;
        p.ood_signal = draw_ood(p.kind);
        p.length = p.ood_signal.size();
      }
      t += p.length + gap(rng_);
      plan.push_back(std::move(p));
    }
    const std::size_t n = t + spec_.lead_in;

    LabeledStream out;
    out.stream.hand = hand_;
    out.stream.sample_rate = spec_.sample_rate;
    out.stream.samples.assign(n, Sample{});
    std::normal_distribution<double> noise(0.0, spec_.noise_sigma);
    for (auto& x : out.stream.samples) {
      for (std::size_t a = 0; a < kAxes; ++a) {
        x[a] = g0_[a] + noise(rng_);
        x[kAxes + a] = g1_[a] + noise(rng_);
      }
    }
    for (const auto& p : plan) {
      if (p.tap) {
        p.burst.add_to(out.stream.samples, p.onset, spec_.sample_rate);
        out.labels.push_back(
            {static_cast<std::int64_t>(p.onset + peak_offset(p.burst)), p.finger, hand_});
      } else {
        for (std::size_t i = 0; i < p.ood_signal.size(); ++i)
          for (std::size_t ch = 0; ch < kChannels; ++ch)
            out.stream.samples[p.onset + i][ch] += p.ood_signal[i][ch];
        out.ood.push_back({static_cast<std::int64_t>(p.onset),
                           static_cast<std::int64_t>(p.onset + p.length), p.kind});
      }
    }
    return out;
  }

 private:
  static Vec3 scaled(Vec3 v, double s) { return {v[0] * s, v[1] * s, v[2] * s}; }

  Vec3 jitter_direction(Vec3 d) {
    std::normal_distribution<double> n(0.0, spec_.direction_jitter);
    Vec3 out = normalized({d[0] + n(rng_), d[1] + n(rng_), d[2] + n(rng_)});
    if (hand_ == Hand::Right) out[0] = -out[0];
    return out;
  }

  Burst draw_burst(FingerClass finger) {
    const BurstTemplate& tpl = spec_.templates[index_of(finger)];
    std::normal_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    Burst b;
    b.freq = tpl.frequency_hz * std::max(0.2, 1.0 + spec_.frequency_jitter * unit(rng_));
    const double decay_ms = tpl.decay_ms * std::max(0.2, 1.0 + spec_.decay_jitter * unit(rng_));
    b.tau = decay_ms * 1e-3 * spec_.sample_rate;
    double amp = tpl.amplitude * std::exp(spec_.amplitude_jitter * unit(rng_));
    if (std::bernoulli_distribution(spec_.soft_tap_fraction)(rng_)) amp *= 0.25;
    b.amp0 = amp;
    b.amp1 = amp * tpl.sensor_ratio;
    b.phase = phase(rng_);
    b.dir0 = jitter_direction(tpl.direction0);
    b.dir1 = jitter_direction(tpl.direction1);
    b.length = static_cast<std::size_t>(std::ceil(8.0 * b.tau)) + 1;
    return b;
  }

  // Offset of the burst's own rate-of-change peak, computed noise-free.
  std::size_t peak_offset(const Burst& b) const {
    std::vector<Sample> local(b.length + 1);
    for (auto& x : local)
      for (std::size_t a = 0; a < kAxes; ++a) {
        x[a] = g0_[a];
        x[kAxes + a] = g1_[a];
      }
    b.add_to(local, 1, spec_.sample_rate);
    ImuStream s;
    s.samples = std::move(local);
    const auto score = serial::rate_of_change(s, DetectorConfig{});
    const auto best = std::max_element(score.begin(), score.end()) - score.begin();
    return static_cast<std::size_t>(std::max<std::ptrdiff_t>(best - 1, 0));
  }

  std::vector<Sample> draw_ood(OodKind kind) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double rate = spec_.sample_rate;
    std::size_t length;
    int components;
    double f_lo, f_hi, a_lo, a_hi;
    if (kind == OodKind::MidAir) {
      length = static_cast<std::size_t>((0.15 + 0.25 * u(rng_)) * rate);
      components = 3;
      f_lo = 8.0, f_hi = 40.0, a_lo = 60.0, a_hi = 220.0;
    } else {
      length = static_cast<std::size_t>((0.5 + 1.0 * u(rng_)) * rate);
      components = 2;
      f_lo = 1.0, f_hi = 4.0, a_lo = 150.0, a_hi = 450.0;
    }
    std::vector<Sample> sig(length, Sample{});
    for (int c = 0; c < components; ++c) {
      const double f = f_lo + (f_hi - f_lo) * u(rng_);
      const double a = a_lo + (a_hi - a_lo) * u(rng_);
      const double ph = 2.0 * std::numbers::pi * u(rng_);
      const Vec3 d0 = jitter_direction(normalized({u(rng_) - 0.5, u(rng_) - 0.5, u(rng_) - 0.5}));
      const Vec3 d1 = jitter_direction(d0);
      const double r = 0.5 + u(rng_);
      for (std::size_t i = 0; i < length; ++i) {
        const double x = static_cast<double>(i) / static_cast<double>(length);
        const double hann = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * x);
        const double v = a * hann * std::sin(2.0 * std::numbers::pi * f * static_cast<double>(i) / rate + ph);
        for (std::size_t ax = 0; ax < kAxes; ++ax) {
          sig[i][ax] += v * d0[ax];
          sig[i][kAxes + ax] += r * v * d1[ax];
        }
      }
    }
    return sig;
  }

  const GeneratorSpec& spec_;
  Hand hand_;
  std::mt19937_64 rng_;
  Vec3 g0_{}, g1_{};
};

}  // namespace

LabeledStream synth_tap_stream(const GeneratorSpec& spec, Hand hand, std::uint64_t seed) {
  spec.validate();
  return Synth(spec, hand, seed).run();
}

}  // namespace taptype::signal
