#include "layers.hpp"

#include <cmath>

namespace taptype::classifier {

namespace {

Matrix softplus_of(const Matrix& rho) {
  return rho.unaryExpr([](double r) { return softplus(r); });
}

Matrix sigmoid_of(const Matrix& rho) {
  return rho.unaryExpr([](double r) { return 1.0 / (1.0 + std::exp(-r)); });
}

Matrix gaussian(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = n(rng);
  return m;
}

double kl_sum(const Param& mu, const Param& rho, double prior_sigma) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < mu.value.size(); ++i)
    total += gaussian_kl(mu.value(i), softplus(rho.value(i)), prior_sigma);
  return total;
}

void kl_grad(Param& mu, Param& rho, double weight, double prior_sigma) {
  const double p2 = prior_sigma * prior_sigma;
  for (Eigen::Index i = 0; i < mu.value.size(); ++i) {
    const double s = softplus(rho.value(i));
    const double sig = 1.0 / (1.0 + std::exp(-rho.value(i)));
    mu.grad(i) += weight * mu.value(i) / p2;
    rho.grad(i) += weight * (-1.0 / s + s / p2) * sig;
  }
}

}  // namespace

Affine::Affine(std::size_t out, std::size_t fan_in, bool bayes, double init_rho, Rng& rng) : bayesian(bayes) {
  const auto o = static_cast<Eigen::Index>(out), f = static_cast<Eigen::Index>(fan_in);
  w = Param(gaussian(o, f, rng) * std::sqrt(2.0 / static_cast<double>(fan_in)));
  b = Param(Matrix::Zero(o, 1));
  if (bayes) {
    w_rho = Param(Matrix::Constant(o, f, init_rho));
    b_rho = Param(Matrix::Constant(o, 1, init_rho));
  }
}

Matrix Affine::forward(const Matrix& x, Rng* noise) {
  x_ = x;
  Matrix out = x * w.value.transpose();
  out.rowwise() += b.value.col(0).transpose();
  sampled_ = bayesian && noise != nullptr;
  if (sampled_) {
    const Matrix sw = softplus_of(w_rho.value), sb = softplus_of(b_rho.value);
    Matrix var = x.array().square().matrix() * sw.array().square().matrix().transpose();
    var.rowwise() += sb.array().square().matrix().col(0).transpose();
    std_ = var.array().sqrt();
    eps_ = gaussian(out.rows(), out.cols(), *noise);
    out.array() += std_.array() * eps_.array();
  }
  return out;
}

Matrix Affine::backward(const Matrix& grad) {
  w.grad += grad.transpose() * x_;
  b.grad.col(0) += grad.colwise().sum().transpose();
  Matrix dx = grad * w.value;
  if (sampled_) {
    const Matrix sw = softplus_of(w_rho.value), sb = softplus_of(b_rho.value);
    const Matrix dvar = (grad.array() * eps_.array() / (2.0 * std_.array())).matrix();
    const Matrix dvar_w = dvar.transpose() * x_.array().square().matrix();
    w_rho.grad.array() += dvar_w.array() * 2.0 * sw.array() * sigmoid_of(w_rho.value).array();
    const Eigen::VectorXd dvar_b = dvar.colwise().sum().transpose();
    b_rho.grad.col(0).array() += dvar_b.array() * 2.0 * sb.col(0).array() * sigmoid_of(b_rho.value).col(0).array();
    dx.array() += 2.0 * x_.array() * (dvar * sw.array().square().matrix()).array();
  }
  return dx;
}

std::vector<Param*> Affine::params() {
  if (bayesian) return {&w, &w_rho, &b, &b_rho};
  return {&w, &b};
}

double Affine::kl(double prior_sigma) const {
  if (!bayesian) return 0.0;
  return kl_sum(w, w_rho, prior_sigma) + kl_sum(b, b_rho, prior_sigma);
}

void Affine::add_kl_grad(double weight, double prior_sigma) {
  if (!bayesian) return;
  kl_grad(w, w_rho, weight, prior_sigma);
  kl_grad(b, b_rho, weight, prior_sigma);
}

// ---------------------------------------------------------------------------

Conv1d::Conv1d(std::size_t in_ch, std::size_t len, std::size_t out_ch, bool bayes, double init_rho, Rng& rng)
    : affine_(out_ch, 3 * in_ch, bayes, init_rho, rng) {
  in_channels = in_ch;
  in_len = len;
  out_channels = out_ch;
  out_len = len;
}

Matrix Conv1d::forward(const Matrix& x, Phase, Rng* noise) {
  const auto C = static_cast<Eigen::Index>(in_channels), T = static_cast<Eigen::Index>(in_len);
  const auto O = static_cast<Eigen::Index>(out_channels);
  batch_ = x.cols();
  Matrix cols = Matrix::Zero(batch_ * T, 3 * C);
  for (Eigen::Index s = 0; s < batch_; ++s)
    for (Eigen::Index k = 0; k < 3; ++k)
      for (Eigen::Index c = 0; c < C; ++c)
        for (Eigen::Index t = 0; t < T; ++t) {
          const Eigen::Index src = t + k - 1;
          if (src >= 0 && src < T) cols(s * T + t, k * C + c) = x(c * T + src, s);
        }
  const Matrix a = affine_.forward(cols, noise);
  Matrix out(O * T, batch_);
  for (Eigen::Index s = 0; s < batch_; ++s)
    for (Eigen::Index c = 0; c < O; ++c) out.block(c * T, s, T, 1) = a.block(s * T, c, T, 1);
  return out;
}

Matrix Conv1d::backward(const Matrix& grad_out) {
  const auto C = static_cast<Eigen::Index>(in_channels), T = static_cast<Eigen::Index>(in_len);
  const auto O = static_cast<Eigen::Index>(out_channels);
  Matrix ga(batch_ * T, O);
  for (Eigen::Index s = 0; s < batch_; ++s)
    for (Eigen::Index c = 0; c < O; ++c) ga.block(s * T, c, T, 1) = grad_out.block(c * T, s, T, 1);
  const Matrix dcols = affine_.backward(ga);
  Matrix dx = Matrix::Zero(C * T, batch_);
  for (Eigen::Index s = 0; s < batch_; ++s)
    for (Eigen::Index k = 0; k < 3; ++k)
      for (Eigen::Index c = 0; c < C; ++c)
        for (Eigen::Index t = 0; t < T; ++t) {
          const Eigen::Index src = t + k - 1;
          if (src >= 0 && src < T) dx(c * T + src, s) += dcols(s * T + t, k * C + c);
        }
  return dx;
}

// ---------------------------------------------------------------------------

Dense::Dense(std::size_t in, std::size_t out, bool bayes, double init_rho, Rng& rng)
    : affine_(out, in, bayes, init_rho, rng) {
  in_channels = in;
  in_len = 1;
  out_channels = out;
  out_len = 1;
}

Matrix Dense::forward(const Matrix& x, Phase, Rng* noise) { return affine_.forward(x.transpose(), noise).transpose(); }

Matrix Dense::backward(const Matrix& grad_out) { return affine_.backward(grad_out.transpose()).transpose(); }

// ---------------------------------------------------------------------------

namespace {
constexpr double kBnEps = 1e-5;
constexpr double kBnMomentum = 0.1;
}  // namespace

BatchNorm::BatchNorm(std::size_t ch, std::size_t len)
    : gamma_(Matrix::Ones(static_cast<Eigen::Index>(ch), 1)),
      beta_(Matrix::Zero(static_cast<Eigen::Index>(ch), 1)),
      running_mean_(Matrix::Zero(static_cast<Eigen::Index>(ch), 1)),
      running_var_(Matrix::Ones(static_cast<Eigen::Index>(ch), 1)) {
  in_channels = out_channels = ch;
  in_len = out_len = len;
}

Matrix BatchNorm::forward(const Matrix& x, Phase phase, Rng*) {
  const auto C = static_cast<Eigen::Index>(in_channels), T = static_cast<Eigen::Index>(in_len);
  phase_ = phase;
  xhat_.resize(x.rows(), x.cols());
  inv_std_.resize(C);
  Matrix out(x.rows(), x.cols());
  for (Eigen::Index c = 0; c < C; ++c) {
    const auto block = x.middleRows(c * T, T);
    double mean, var;
    if (phase == Phase::Train) {
      const double n = static_cast<double>(block.size());
      mean = block.mean();
      var = (block.array() - mean).square().sum() / n;
      running_mean_(c) = (1.0 - kBnMomentum) * running_mean_(c) + kBnMomentum * mean;
      running_var_(c) = (1.0 - kBnMomentum) * running_var_(c) + kBnMomentum * var;
    } else {
      mean = running_mean_(c);
      var = running_var_(c);
    }
    inv_std_(c) = 1.0 / std::sqrt(var + kBnEps);
    xhat_.middleRows(c * T, T) = (block.array() - mean) * inv_std_(c);
    out.middleRows(c * T, T) = (xhat_.middleRows(c * T, T).array() * gamma_.value(c) + beta_.value(c)).matrix();
  }
  return out;
}

Matrix BatchNorm::backward(const Matrix& grad_out) {
  const auto C = static_cast<Eigen::Index>(in_channels), T = static_cast<Eigen::Index>(in_len);
  Matrix dx(grad_out.rows(), grad_out.cols());
  for (Eigen::Index c = 0; c < C; ++c) {
    const auto dy = grad_out.middleRows(c * T, T);
    const auto xh = xhat_.middleRows(c * T, T);
    const double sum_dy = dy.sum();
    const double sum_dy_xh = (dy.array() * xh.array()).sum();
    gamma_.grad(c) += sum_dy_xh;
    beta_.grad(c) += sum_dy;
    const double g = gamma_.value(c) * inv_std_(c);
    if (phase_ == Phase::Train) {
      const double n = static_cast<double>(dy.size());
      dx.middleRows(c * T, T) = (g / n) * (n * dy.array() - sum_dy - xh.array() * sum_dy_xh);
    } else {
      dx.middleRows(c * T, T) = g * dy;
    }
  }
  return dx;
}

// ---------------------------------------------------------------------------

LeakyRelu::LeakyRelu(std::size_t ch, std::size_t len, double slope) : slope_(slope) {
  in_channels = out_channels = ch;
  in_len = out_len = len;
}

Matrix LeakyRelu::forward(const Matrix& x, Phase, Rng*) {
  x_ = x;
  const double a = slope_;
  return x.unaryExpr([a](double v) { return v > 0.0 ? v : a * v; });
}

Matrix LeakyRelu::backward(const Matrix& grad_out) {
  const double a = slope_;
  return grad_out.binaryExpr(x_, [a](double g, double v) { return v > 0.0 ? g : a * g; });
}

// ---------------------------------------------------------------------------

MaxPool::MaxPool(std::size_t ch, std::size_t len) {
  in_channels = out_channels = ch;
  in_len = len;
  out_len = len / 2;
}

Matrix MaxPool::forward(const Matrix& x, Phase, Rng*) {
  const auto C = static_cast<Eigen::Index>(in_channels), T = static_cast<Eigen::Index>(in_len);
  const auto T2 = static_cast<Eigen::Index>(out_len);
  rows_ = x.rows();
  cols_ = x.cols();
  Matrix out(C * T2, x.cols());
  argmax_.resize(static_cast<std::size_t>(out.size()));
  for (Eigen::Index s = 0; s < x.cols(); ++s)
    for (Eigen::Index c = 0; c < C; ++c)
      for (Eigen::Index t = 0; t < T2; ++t) {
        const Eigen::Index a = c * T + 2 * t, b = a + 1;
        const Eigen::Index pick = x(b, s) > x(a, s) ? b : a;
        out(c * T2 + t, s) = x(pick, s);
        argmax_[static_cast<std::size_t>(s * out.rows() + c * T2 + t)] = pick;
      }
  return out;
}

Matrix MaxPool::backward(const Matrix& grad_out) {
  Matrix dx = Matrix::Zero(rows_, cols_);
  for (Eigen::Index s = 0; s < grad_out.cols(); ++s)
    for (Eigen::Index i = 0; i < grad_out.rows(); ++i)
      dx(argmax_[static_cast<std::size_t>(s * grad_out.rows() + i)], s) += grad_out(i, s);
  return dx;
}

std::unique_ptr<Layer> clone_layer(const Layer& l) {
  if (auto p = dynamic_cast<const Conv1d*>(&l)) return std::make_unique<Conv1d>(*p);
  if (auto p = dynamic_cast<const Dense*>(&l)) return std::make_unique<Dense>(*p);
  if (auto p = dynamic_cast<const BatchNorm*>(&l)) return std::make_unique<BatchNorm>(*p);
  if (auto p = dynamic_cast<const LeakyRelu*>(&l)) return std::make_unique<LeakyRelu>(*p);
  if (auto p = dynamic_cast<const MaxPool*>(&l)) return std::make_unique<MaxPool>(*p);
  throw DomainError("unknown layer type");
}

}  // namespace taptype::classifier
