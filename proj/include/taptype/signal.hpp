#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "taptype/domain.hpp"

namespace taptype::signal {

inline constexpr std::size_t kSensors = 2;
inline constexpr std::size_t kAxes = 3;
inline constexpr std::size_t kChannels = kSensors * kAxes;

// One time step: sensor0.{x,y,z}, sensor1.{x,y,z}.
using Sample = std::array<double, kChannels>;

struct ImuStream {
  Hand hand = Hand::Left;
  std::uint32_t sample_rate = 1600;
  std::vector<Sample> samples;

  std::size_t size() const { return samples.size(); }
};

struct DetectorConfig {
  double decay = 1.6;                  // D, > 1
  double activation_threshold = 17.0;  // score units
  std::size_t backoff = 64;            // T_b, samples
  std::size_t window_len = 128;        // samples, even

  void validate() const;
};

// Fixed-length multichannel window, stored channel-major so each channel is a
// contiguous time series.
class Window {
 public:
  Window() = default;
  explicit Window(std::size_t length) : length_(length), data_(length * kChannels, 0.0) {}

  std::size_t length() const { return length_; }
  double& at(std::size_t t, std::size_t ch) { return data_[ch * length_ + t]; }
  double at(std::size_t t, std::size_t ch) const { return data_[ch * length_ + t]; }
  std::span<double> channel(std::size_t ch) { return {data_.data() + ch * length_, length_}; }
  std::span<const double> channel(std::size_t ch) const {
    return {data_.data() + ch * length_, length_};
  }
  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool operator==(const Window&) const = default;

 private:
  std::size_t length_ = 0;
  std::vector<double> data_;
};

struct TapCandidate {
  std::int64_t t_z = 0;
  Hand hand = Hand::Left;
  Window window;
  double peak_score = 0.0;
};

// Running rate-of-change score, one value per sample, R_0 = 0. The per-sample
// magnitude differences are computed in an OpenMP loop; the decayed
// accumulation is inherently sequential.
std::vector<double> rate_of_change(const ImuStream& stream, const DetectorConfig& config);

// Threshold crossing at t_d -> candidate at argmax R over [t_d, t_d + T_b];
// scanning resumes at t_z + T_b.
std::vector<TapCandidate> detect_taps(const ImuStream& stream, const DetectorConfig& config);
std::vector<TapCandidate> detect_taps(const ImuStream& stream, const std::vector<double>& score,
                                      const DetectorConfig& config);

// Window of `length` samples covering [center - length/2, center + length/2 - 1],
// zero outside the stream.
Window extract_window(const ImuStream& stream, std::int64_t center, std::size_t length);

namespace serial {
// Single-threaded reference kept for kernel tests and benchmarks.
std::vector<double> rate_of_change(const ImuStream& stream, const DetectorConfig& config);
}  // namespace serial

// ---------------------------------------------------------------------------
// Synthetic wristband signals

// Damped sinusoid burst shape for one tap class.
struct BurstTemplate {
  double frequency_hz = 200.0;
  double decay_ms = 4.0;
  double amplitude = 40.0;     // sensor-0 peak amplitude
  double sensor_ratio = 1.0;   // sensor-1 amplitude / sensor-0 amplitude
  std::array<double, 3> direction0{0.0, 0.0, 1.0};
  std::array<double, 3> direction1{0.0, 0.0, 1.0};
};

enum class OodKind : std::uint8_t { Swell, MidAir };

struct GeneratorSpec {
  std::uint32_t sample_rate = 1600;
  double gravity = 100.0;       // baseline acceleration magnitude
  double noise_sigma = 0.3;     // white noise per axis
  std::array<BurstTemplate, kNumClasses> templates = default_templates();

  double amplitude_jitter = 0.25;   // log-normal sigma on burst amplitude
  double frequency_jitter = 0.08;   // relative
  double decay_jitter = 0.15;       // relative
  double direction_jitter = 0.20;   // per-component gaussian, then renormalized
  double soft_tap_fraction = 0.02;  // taps at 1/4 strength
  std::size_t min_gap = 240;        // samples between bursts
  std::size_t max_gap = 560;
  std::size_t lead_in = 256;

  std::size_t bursts = 10;
  std::vector<FingerClass> classes{kAllClasses.begin(), kAllClasses.end()};
  std::size_t ood_segments = 0;
  double ood_midair_fraction = 0.7;  // remainder are slow swells

  static std::array<BurstTemplate, kNumClasses> default_templates();
  void validate() const;
};

struct TapLabel {
  std::int64_t t = 0;
  FingerClass finger = FingerClass::Index;
  Hand hand = Hand::Left;
};

struct OodSegment {
  std::int64_t begin = 0;
  std::int64_t end = 0;  // exclusive
  OodKind kind = OodKind::MidAir;
};

struct LabeledStream {
  ImuStream stream;
  std::vector<TapLabel> labels;
  std::vector<OodSegment> ood;
};

// Deterministic for a fixed seed. Right-hand streams carry the templates
// mirrored across the sagittal plane (x axes negated).
LabeledStream synth_tap_stream(const GeneratorSpec& spec, Hand hand, std::uint64_t seed);

// Axes negated to map right-hand signals onto the left-hand frame.
inline constexpr std::array<std::size_t, 2> kMirrorChannels{0, 3};

// Stream file: "TTIM", u32 sample_rate, u8 channels, float32 samples, all LE.
void write_stream(const ImuStream& stream, std::ostream& out);
ImuStream read_stream(std::istream& in, Hand hand = Hand::Left);
void save_stream(const ImuStream& stream, const std::string& path);
ImuStream load_stream(const std::string& path, Hand hand = Hand::Left);

// Sidecar labels: header `t,class,hand`; OOD segments use class `ood`.
void write_labels(const LabeledStream& labeled, std::ostream& out);

}  // namespace taptype::signal
