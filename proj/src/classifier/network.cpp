#include <cmath>
#include <random>

#include "layers.hpp"
#include "taptype/classifier.hpp"

namespace taptype::classifier {

double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }

double gaussian_kl(double mu, double sigma, double prior_sigma) {
  return std::log(prior_sigma / sigma) + (sigma * sigma + mu * mu) / (2.0 * prior_sigma * prior_sigma) - 0.5;
}

Network::Network(const ClassifierConfig& config, std::size_t in_channels, std::size_t in_len, std::uint64_t seed)
    : config_(config), in_channels_(in_channels), in_len_(in_len) {
  config_.validate();
  build(seed);
}

Network::Network(const Network& o) : config_(o.config_), in_channels_(o.in_channels_), in_len_(o.in_len_) {
  for (const auto& l : o.layers_) layers_.push_back(clone_layer(*l));
}

Network& Network::operator=(const Network& o) {
  if (this != &o) {
    Network tmp(o);
    *this = std::move(tmp);
  }
  return *this;
}

void Network::build(std::uint64_t seed) {
  Rng rng(seed);
  std::size_t ch = in_channels_, len = in_len_;
  bool flat = false;
  for (std::size_t i = 0; i < config_.layers.size(); ++i) {
    const LayerSpec& s = config_.layers[i];
    std::unique_ptr<Layer> layer;
    switch (s.kind) {
      case LayerKind::Conv:
        if (flat) throw DomainError("convolution after a dense layer (layer " + std::to_string(i) + ")");
        layer = std::make_unique<Conv1d>(ch, len, s.out, s.bayesian, config_.init_rho, rng);
        break;
      case LayerKind::Dense:
        layer = std::make_unique<Dense>(ch * len, s.out, s.bayesian, config_.init_rho, rng);
        flat = true;
        break;
      case LayerKind::BatchNorm:
        layer = std::make_unique<BatchNorm>(ch, len);
        break;
      case LayerKind::LeakyRelu:
        layer = std::make_unique<LeakyRelu>(ch, len, config_.leaky_slope);
        break;
      case LayerKind::MaxPool:
        if (flat || len < 2) throw DomainError("max-pool needs a time axis (layer " + std::to_string(i) + ")");
        layer = std::make_unique<MaxPool>(ch, len);
        break;
    }
    ch = layer->out_channels;
    len = layer->out_len;
    layers_.push_back(std::move(layer));
  }
  if (ch * len != kNumClasses) throw DomainError("architecture must end in 6 outputs");
}

Matrix Network::forward(const Matrix& x, Phase phase, Rng* noise) {
  if (static_cast<std::size_t>(x.rows()) != in_channels_ * in_len_)
    throw DomainError("input has " + std::to_string(x.rows()) + " features, expected " +
                      std::to_string(in_channels_ * in_len_));
  Matrix h = x;
  for (auto& l : layers_) h = l->forward(h, phase, noise);
  return h;
}

void Network::backward(const Matrix& grad_logits) {
  Matrix g = grad_logits;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
}

double Network::kl() const {
  double total = 0.0;
  for (const auto& l : layers_) total += l->kl(config_.prior_sigma);
  return total;
}

void Network::add_kl_grad(double weight) {
  for (auto& l : layers_) l->add_kl_grad(weight, config_.prior_sigma);
}

void Network::zero_grad() {
  for (Param* p : params()) p->grad.setZero();
}

std::vector<Param*> Network::params() {
  std::vector<Param*> out;
  for (auto& l : layers_)
    for (Param* p : l->params()) out.push_back(p);
  return out;
}

std::vector<Matrix*> Network::buffers() {
  std::vector<Matrix*> out;
  for (auto& l : layers_)
    for (Matrix* b : l->buffers()) out.push_back(b);
  return out;
}

std::size_t Network::parameter_count() {
  std::size_t n = 0;
  for (Param* p : params()) n += static_cast<std::size_t>(p->value.size());
  return n;
}

Matrix softmax(const Matrix& logits) {
  Matrix p(logits.rows(), logits.cols());
  for (Eigen::Index j = 0; j < logits.cols(); ++j) {
    const double m = logits.col(j).maxCoeff();
    p.col(j) = (logits.col(j).array() - m).exp();
    p.col(j) /= p.col(j).sum();
  }
  return p;
}

DataLoss open_set_loss(const Matrix& probs, const std::vector<std::optional<FingerClass>>& labels) {
  if (static_cast<std::size_t>(probs.cols()) != labels.size()) throw DomainError("label count mismatch");
  if (labels.empty()) throw DomainError("empty batch");
  const double n = static_cast<double>(labels.size());
  const double k = static_cast<double>(kNumClasses);
  DataLoss out;
  out.grad_logits.resize(probs.rows(), probs.cols());
  double sum = 0.0;
  for (std::size_t j = 0; j < labels.size(); ++j) {
    const auto col = probs.col(static_cast<Eigen::Index>(j));
    auto g = out.grad_logits.col(static_cast<Eigen::Index>(j));
    if (labels[j]) {
      const auto y = static_cast<Eigen::Index>(index_of(*labels[j]));
      sum -= std::log(col(y));
      g = col;
      g(y) -= 1.0;
    } else {
      sum -= col.array().log().sum() / k;
      g = col.array() - 1.0 / k;
    }
    g /= n;
  }
  out.mean = sum / n;
  return out;
}

ElboTerms elbo_loss(Network& net, const Matrix& x, const std::vector<std::optional<FingerClass>>& labels,
                    double kl_weight, Rng* noise, bool backprop) {
  const Matrix logits = net.forward(x, Phase::Train, noise);
  const Matrix p = softmax(logits);
  const DataLoss data = open_set_loss(p, labels);
  ElboTerms t;
  t.kl = net.kl();
  t.data = data.mean;
  t.total = kl_weight * t.kl + t.data;
  if (!std::isfinite(t.total)) {
    std::size_t i = 0;
    for (const auto& l : net.layers()) {
      if (!std::isfinite(l->kl(net.config().prior_sigma)))
        throw NumericError("non-finite loss (KL of layer " + std::to_string(i) + ")");
      ++i;
    }
    throw NumericError("non-finite loss (data term at layer " + std::to_string(net.layers().size() - 1) + ")");
  }
  if (backprop) {
    net.backward(data.grad_logits);
    net.add_kl_grad(kl_weight);
  }
  return t;
}

}  // namespace taptype::classifier
