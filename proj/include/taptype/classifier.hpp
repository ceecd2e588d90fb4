#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "taptype/domain.hpp"
#include "taptype/signal.hpp"

namespace taptype::classifier {

using Matrix = Eigen::MatrixXd;
using Rng = std::mt19937_64;

// ---------------------------------------------------------------------------
// Configuration

enum class LayerKind : std::uint8_t { Conv, Dense, BatchNorm, LeakyRelu, MaxPool };

struct LayerSpec {
  LayerKind kind = LayerKind::Dense;
  std::size_t out = 0;  // output channels (conv) or units (dense)
  bool bayesian = false;

  bool operator==(const LayerSpec&) const = default;
};

// Named architectures: "2-bayes" (default), "no-bayes", "all-bayes" and
// "deep" (five conv blocks, for larger data).
std::vector<LayerSpec> architecture(std::string_view name);

struct ClassifierConfig {
  std::string name = "2-bayes";
  std::vector<LayerSpec> layers = architecture("2-bayes");
  double prior_sigma = 0.1;
  std::size_t ensemble_train = 10;
  std::size_t ensemble_infer = 128;
  double reject_threshold = 0.3;
  std::size_t epochs = 30;
  std::size_t batch_size = 64;
  std::optional<double> kl_weight;  // default 1 / batches per epoch
  double learning_rate = 1e-3;
  double init_rho = -5.0;
  double leaky_slope = 0.01;
  std::size_t window_len = 128;
  std::size_t max_iterations = 0;  // when > 0, replaces the epoch budget (fine-tuning)

  static ClassifierConfig named(std::string_view arch);
  void validate() const;
};

std::string to_json(const ClassifierConfig& c);
ClassifierConfig config_from_json(const std::string& text);

// ---------------------------------------------------------------------------
// Data

struct LabeledWindow {
  signal::Window window;
  std::optional<FingerClass> label;  // nullopt = out-of-distribution
  Hand hand = Hand::Left;
};

using Dataset = std::vector<LabeledWindow>;

struct DatasetSpec {
  signal::GeneratorSpec generator{};
  signal::DetectorConfig detector{};
  std::size_t taps_per_class = 500;  // per class, both hands together
  std::size_t bursts_per_stream = 60;
  std::size_t ood_per_stream = 12;
  std::int64_t match_tolerance = 80;  // samples, 50 ms at 1600 Hz
};

// Runs generator + detector and labels candidates against the ground truth.
// Candidates matching a burst get its class, candidates inside an OOD segment
// are OOD, anything else is dropped.
Dataset synth_dataset(const DatasetSpec& spec, std::uint64_t seed);

std::optional<std::size_t> missing_class(const Dataset& data);

struct ChannelStats {
  std::array<double, signal::kChannels> mean{};
  std::array<double, signal::kChannels> std{};

  bool operator==(const ChannelStats&) const = default;
};

// Right-hand windows get the mirror channels negated.
signal::Window mirror(const signal::Window& w, Hand hand);
// Statistics over mirrored training windows. Zero-variance channels get std 1.
ChannelStats fit_stats(const Dataset& data);
signal::Window preprocess(const signal::Window& w, Hand hand, const ChannelStats& stats);

// ---------------------------------------------------------------------------
// Network

// Closed-form KL[N(mu, sigma^2) || N(0, prior^2)] for one weight.
double gaussian_kl(double mu, double sigma, double prior_sigma);
double softplus(double x);

struct Param {
  Matrix value, grad, m, v;

  explicit Param(Matrix init = {}) : value(std::move(init)) {
    grad = Matrix::Zero(value.rows(), value.cols());
    m = grad;
    v = grad;
  }
};

enum class Phase { Train, Eval };

class Layer {
 public:
  virtual ~Layer() = default;
  // Input and output are (features x batch), features stored time-major per channel.
  virtual Matrix forward(const Matrix& x, Phase phase, Rng* noise) = 0;
  virtual Matrix backward(const Matrix& grad_out) = 0;
  virtual std::vector<Param*> params() { return {}; }
  virtual double kl(double /*prior_sigma*/) const { return 0.0; }
  virtual void add_kl_grad(double /*weight*/, double /*prior_sigma*/) {}
  virtual bool bayesian() const { return false; }
  // Running statistics and other non-trained state, for checkpoints.
  virtual std::vector<Matrix*> buffers() { return {}; }
  std::size_t in_channels = 0, in_len = 0, out_channels = 0, out_len = 0;
};

class Network {
 public:
  Network() = default;
  Network(const ClassifierConfig& config, std::size_t in_channels, std::size_t in_len, std::uint64_t seed);
  Network(const Network&);
  Network& operator=(const Network&);
  Network(Network&&) noexcept = default;
  Network& operator=(Network&&) noexcept = default;

  // Logits (6 x batch). `noise` drives the Bayesian layers; nullptr uses their means.
  Matrix forward(const Matrix& x, Phase phase, Rng* noise);
  void backward(const Matrix& grad_logits);
  double kl() const;
  void add_kl_grad(double weight);
  void zero_grad();
  std::vector<Param*> params();
  std::vector<Matrix*> buffers();
  std::size_t parameter_count();
  const ClassifierConfig& config() const { return config_; }
  std::size_t in_channels() const { return in_channels_; }
  std::size_t in_len() const { return in_len_; }
  const std::vector<std::unique_ptr<Layer>>& layers() const { return layers_; }

 private:
  void build(std::uint64_t seed);

  ClassifierConfig config_;
  std::size_t in_channels_ = 0, in_len_ = 0;
  std::vector<std::unique_ptr<Layer>> layers_;
};

Matrix softmax(const Matrix& logits);

// Per-sample entropic open-set loss on probabilities `p` (6 x batch) and the
// gradient of the batch mean with respect to the logits.
struct DataLoss {
  double mean = 0.0;
  Matrix grad_logits;
};
DataLoss open_set_loss(const Matrix& probs, const std::vector<std::optional<FingerClass>>& labels);

struct ElboTerms {
  double total = 0.0, kl = 0.0, data = 0.0;
};

// total = kl_weight * KL + mean data loss. Fills gradients when `backprop`.
ElboTerms elbo_loss(Network& net, const Matrix& x, const std::vector<std::optional<FingerClass>>& labels,
                    double kl_weight, Rng* noise, bool backprop = false);

// ---------------------------------------------------------------------------
// Training and inference

struct EpochStats {
  std::size_t epoch = 0;
  double total = 0.0, kl = 0.0, data = 0.0;
};

struct Model {
  Network net;
  ChannelStats stats;
};

struct TrainResult {
  Model model;
  std::vector<EpochStats> curve;
};

// Undersamples every class (OOD counts as a class) to the smallest count.
Dataset undersample(const Dataset& data, std::uint64_t seed);

TrainResult train(const Dataset& data, const ClassifierConfig& config, std::uint64_t seed);
// Continues from an existing model for config.max_iterations steps (or epochs).
TrainResult fine_tune(Model model, const Dataset& data, const ClassifierConfig& config, std::uint64_t seed);

void write_curve_csv(const std::vector<EpochStats>& curve, std::ostream& out);

// Stacks preprocessed windows into a (channels*len x batch) matrix.
Matrix to_batch(const std::vector<const signal::Window*>& windows);

// Monte Carlo predictive distribution, one column per input: the mean of
// `members` stochastic passes. Member i draws its noise from a substream seeded by (seed, i).
Matrix predictive(const Network& net, const Matrix& x, std::size_t members, std::uint64_t seed);
namespace serial {
Matrix predictive(const Network& net, const Matrix& x, std::size_t members, std::uint64_t seed);
}

// nullopt when the top probability is below the rejection threshold.
std::optional<TapObservation> predict(const Model& model, const signal::Window& preprocessed, Hand hand,
                                      std::uint64_t seed, std::optional<std::size_t> members = std::nullopt);
std::vector<ClassProbs> predict_dataset(const Model& model, const Dataset& data, std::uint64_t seed,
                                        std::optional<std::size_t> members = std::nullopt);

void save_checkpoint(const Model& model, const std::string& path);
Model load_checkpoint(const std::string& path);
void write_checkpoint(const Model& model, std::ostream& out);
Model read_checkpoint(std::istream& in);

// ---------------------------------------------------------------------------
// Confusion-matrix stand-in classifier

using ConfusionMatrix = std::array<std::array<double, kNumClasses>, kNumClasses>;

enum class ConfusionMode : std::uint8_t { Calibrated, Overconfident };

std::string_view to_string(ConfusionMode m);
ConfusionMode parse_confusion_mode(std::string_view s);

ConfusionMatrix identity_confusion();
// Mean diagonal = accuracy; errors go to anatomical neighbours, mostly
// between middle and ring.
ConfusionMatrix neighbour_confusion(double accuracy);

class ConfusionClassifier {
 public:
  ConfusionClassifier(const ConfusionMatrix& confusion, ConfusionMode mode, std::uint64_t seed);

  TapObservation classify(Hand hand, FingerClass true_class);
  // Output for a given predicted class, without sampling.
  ClassProbs output_for(FingerClass predicted) const;
  FingerClass sample(FingerClass true_class);
  const ConfusionMatrix& confusion() const { return confusion_; }
  ConfusionMode mode() const { return mode_; }
  void reseed(std::uint64_t seed) { rng_.seed(seed); }

 private:
  ConfusionMatrix confusion_;
  ConfusionMatrix posterior_;  // posterior_[predicted][true]
  ConfusionMode mode_;
  Rng rng_;
};

// "identity", "confusion:<accuracy>:<calibrated|overconfident>".
struct ClassifierSpec {
  ConfusionMatrix confusion = identity_confusion();
  ConfusionMode mode = ConfusionMode::Calibrated;
  double accuracy = 1.0;
};
ClassifierSpec parse_classifier_spec(std::string_view spec);

// ---------------------------------------------------------------------------
// Metrics

struct Metrics {
  double macro_f1 = 0.0;
  double nll = 0.0;
  double ece = 0.0;
  double accuracy = 0.0;
};

// Labels are class indices 0..5. ECE uses equal-width confidence bins.
Metrics compute_metrics(const std::vector<ClassProbs>& probs, const std::vector<std::size_t>& labels,
                        std::size_t bins = 15);
double macro_f1(const std::vector<std::size_t>& predicted, const std::vector<std::size_t>& labels,
                std::size_t classes = kNumClasses);
double expected_calibration_error(const std::vector<ClassProbs>& probs, const std::vector<std::size_t>& labels,
                                  std::size_t bins = 15);

}  // namespace taptype::classifier
