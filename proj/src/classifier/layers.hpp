#pragma once

#include <memory>
#include <vector>

#include "taptype/classifier.hpp"

namespace taptype::classifier {

// Weights of a dense or convolutional layer, optionally mean-field Gaussian
// (sigma = softplus(rho)) sampled through the local reparameterization.
struct Affine {
  bool bayesian = false;
  Param w, b;            // means when bayesian
  Param w_rho, b_rho;    // only used when bayesian

  Affine(std::size_t out, std::size_t fan_in, bool bayes, double init_rho, Rng& rng);

  // x: (n x fan_in) rows of inputs. Returns (n x out) activations.
  Matrix forward(const Matrix& x, Rng* noise);
  // Returns the gradient wrt x.
  Matrix backward(const Matrix& grad);
  std::vector<Param*> params();
  double kl(double prior_sigma) const;
  void add_kl_grad(double weight, double prior_sigma);

 private:
  Matrix x_, eps_, std_;
  bool sampled_ = false;
};

class Conv1d final : public Layer {
 public:
  Conv1d(std::size_t in_ch, std::size_t len, std::size_t out_ch, bool bayes, double init_rho, Rng& rng);
  Matrix forward(const Matrix& x, Phase phase, Rng* noise) override;
  Matrix backward(const Matrix& grad_out) override;
  std::vector<Param*> params() override { return affine_.params(); }
  double kl(double prior_sigma) const override { return affine_.kl(prior_sigma); }
  void add_kl_grad(double weight, double prior_sigma) override { affine_.add_kl_grad(weight, prior_sigma); }
  bool bayesian() const override { return affine_.bayesian; }

 private:
  Affine affine_;
  Eigen::Index batch_ = 0;
};

class Dense final : public Layer {
 public:
  Dense(std::size_t in, std::size_t out, bool bayes, double init_rho, Rng& rng);
  Matrix forward(const Matrix& x, Phase phase, Rng* noise) override;
  Matrix backward(const Matrix& grad_out) override;
  std::vector<Param*> params() override { return affine_.params(); }
  double kl(double prior_sigma) const override { return affine_.kl(prior_sigma); }
  void add_kl_grad(double weight, double prior_sigma) override { affine_.add_kl_grad(weight, prior_sigma); }
  bool bayesian() const override { return affine_.bayesian; }

 private:
  Affine affine_;
};

class BatchNorm final : public Layer {
 public:
  BatchNorm(std::size_t ch, std::size_t len);
  Matrix forward(const Matrix& x, Phase phase, Rng* noise) override;
  Matrix backward(const Matrix& grad_out) override;
  std::vector<Param*> params() override { return {&gamma_, &beta_}; }
  std::vector<Matrix*> buffers() override { return {&running_mean_, &running_var_}; }

 private:
  Param gamma_, beta_;
  Matrix running_mean_, running_var_;
  Matrix xhat_;
  Eigen::VectorXd inv_std_;
  Phase phase_ = Phase::Train;
};

class LeakyRelu final : public Layer {
 public:
  LeakyRelu(std::size_t ch, std::size_t len, double slope);
  Matrix forward(const Matrix& x, Phase phase, Rng* noise) override;
  Matrix backward(const Matrix& grad_out) override;

 private:
  double slope_;
  Matrix x_;
};

class MaxPool final : public Layer {
 public:
  MaxPool(std::size_t ch, std::size_t len);
  Matrix forward(const Matrix& x, Phase phase, Rng* noise) override;
  Matrix backward(const Matrix& grad_out) override;

 private:
  std::vector<Eigen::Index> argmax_;
  Eigen::Index rows_ = 0, cols_ = 0;
};

std::unique_ptr<Layer> clone_layer(const Layer& l);

}  // namespace taptype::classifier
