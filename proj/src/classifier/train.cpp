#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "taptype/classifier.hpp"

namespace taptype::classifier {

namespace {

std::uint64_t substream(std::uint64_t seed, std::uint64_t i) { return mix_seed(seed, i); }

bool has_bayesian(const Network& net) {
  return std::any_of(net.layers().begin(), net.layers().end(), [](const auto& l) { return l->bayesian(); });
}

struct Adam {
  double lr, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  std::size_t t = 0;

  void step(const std::vector<Param*>& params) {
    ++t;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t));
    for (Param* p : params) {
      p->m = b1 * p->m + (1.0 - b1) * p->grad;
      p->v = b2 * p->v + (1.0 - b2) * p->grad.cwiseProduct(p->grad);
      p->value.array() -= lr * (p->m.array() / c1) / ((p->v.array() / c2).sqrt() + eps);
    }
  }
};

const char* class_name(std::size_t i) {
  return i < kNumClasses ? to_string(kAllClasses[i]).data() : "ood";
}

TrainResult run_training(Model model, const Dataset& data, const ClassifierConfig& config, std::uint64_t seed,
                         std::size_t iteration_budget) {
  if (data.empty()) throw DomainError("empty training set");
  std::vector<signal::Window> prepared;
  prepared.reserve(data.size());
  for (const auto& item : data) {
    if (item.window.length() != config.window_len)
      throw DomainError("window length " + std::to_string(item.window.length()) + " does not match config " +
                        std::to_string(config.window_len));
    prepared.push_back(preprocess(item.window, item.hand, model.stats));
  }
  const std::size_t n = data.size();
  const std::size_t batches = (n + config.batch_size - 1) / config.batch_size;
  const double kl_weight = config.kl_weight.value_or(1.0 / static_cast<double>(batches));
  const std::size_t members = has_bayesian(model.net) ? config.ensemble_train : 1;

  Rng rng(substream(seed, 0x7a11));
  Adam adam{config.learning_rate};
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<EpochStats> curve;
  std::size_t iterations = 0;
  const std::size_t epochs = iteration_budget > 0 ? std::numeric_limits<std::size_t>::max() : config.epochs;
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    if (iteration_budget > 0 && iterations >= iteration_budget) break;
    std::shuffle(order.begin(), order.end(), rng);
    EpochStats st;
    st.epoch = epoch + 1;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      if (iteration_budget > 0 && iterations >= iteration_budget) break;
      const std::size_t end = std::min(n, start + config.batch_size);
      std::vector<const signal::Window*> ws;
      std::vector<std::optional<FingerClass>> labels;
      for (std::size_t m = 0; m < members; ++m)
        for (std::size_t i = start; i < end; ++i) {
          ws.push_back(&prepared[order[i]]);
          labels.push_back(data[order[i]].label);
        }
      model.net.zero_grad();
      const ElboTerms t = elbo_loss(model.net, to_batch(ws), labels, kl_weight, &rng, true);
      adam.step(model.net.params());
      ++iterations;
      const double w = static_cast<double>(end - start);
      st.total += t.total * w;
      st.kl += t.kl * w;
      st.data += t.data * w;
      seen += end - start;
    }
    if (seen == 0) break;
    st.total /= static_cast<double>(seen);
    st.kl /= static_cast<double>(seen);
    st.data /= static_cast<double>(seen);
    curve.push_back(st);
  }
  return {std::move(model), std::move(curve)};
}

}  // namespace

Dataset undersample(const Dataset& data, std::uint64_t seed) {
  std::array<std::vector<std::size_t>, kNumClasses + 1> groups;
  for (std::size_t i = 0; i < data.size(); ++i)
    groups[data[i].label ? index_of(*data[i].label) : kNumClasses].push_back(i);
  std::size_t target = std::numeric_limits<std::size_t>::max();
  for (const auto& g : groups)
    if (!g.empty()) target = std::min(target, g.size());
  Rng rng(substream(seed, 0x5a3b));
  Dataset out;
  for (auto& g : groups) {
    std::shuffle(g.begin(), g.end(), rng);
    for (std::size_t i = 0; i < std::min(target, g.size()); ++i) out.push_back(data[g[i]]);
  }
  return out;
}

TrainResult train(const Dataset& data, const ClassifierConfig& config, std::uint64_t seed) {
  config.validate();
  if (auto missing = missing_class(data))
    throw DomainError(std::string("training data has no samples of class ") + class_name(*missing));
  const Dataset balanced = undersample(data, seed);
  Model model{Network(config, signal::kChannels, config.window_len, substream(seed, 0x1417)), fit_stats(balanced)};
  return run_training(std::move(model), balanced, config, seed, config.max_iterations);
}

TrainResult fine_tune(Model model, const Dataset& data, const ClassifierConfig& config, std::uint64_t seed) {
  config.validate();
  return run_training(std::move(model), undersample(data, seed), config, seed, config.max_iterations);
}

void write_curve_csv(const std::vector<EpochStats>& curve, std::ostream& out) {
  out << "epoch,total,kl,data\n";
  for (const auto& e : curve) out << e.epoch << ',' << e.total << ',' << e.kl << ',' << e.data << '\n';
}

namespace {

constexpr Eigen::Index kChunk = 256;

Matrix member_probs(Network& net, const Matrix& x, std::uint64_t seed, std::size_t member, bool stochastic) {
  Rng r(substream(seed, member));
  Matrix out(static_cast<Eigen::Index>(kNumClasses), x.cols());
  for (Eigen::Index c = 0; c < x.cols(); c += kChunk) {
    const Eigen::Index w = std::min(kChunk, x.cols() - c);
    out.middleCols(c, w) = softmax(net.forward(x.middleCols(c, w), Phase::Eval, stochastic ? &r : nullptr));
  }
  return out;
}

}  // namespace

Matrix predictive(const Network& net, const Matrix& x, std::size_t members, std::uint64_t seed) {
  if (members < 1) throw DomainError("ensemble size must be >= 1");
  const bool stochastic = has_bayesian(net);
  if (!stochastic) members = 1;
  std::vector<Matrix> parts(members);
  const auto m = static_cast<std::ptrdiff_t>(members);
#pragma omp parallel if (members > 1)
  {
    Network local(net);
#pragma omp for schedule(static)
    for (std::ptrdiff_t i = 0; i < m; ++i)
      parts[static_cast<std::size_t>(i)] = member_probs(local, x, seed, static_cast<std::size_t>(i), stochastic);
  }
  // Ordered reduction keeps the result independent of the thread count.
  Matrix sum = Matrix::Zero(static_cast<Eigen::Index>(kNumClasses), x.cols());
  for (const auto& p : parts) sum += p;
  return sum / static_cast<double>(members);
}

namespace serial {
Matrix predictive(const Network& net, const Matrix& x, std::size_t members, std::uint64_t seed) {
  if (members < 1) throw DomainError("ensemble size must be >= 1");
  const bool stochastic = has_bayesian(net);
  if (!stochastic) members = 1;
  Network local(net);
  Matrix sum = Matrix::Zero(static_cast<Eigen::Index>(kNumClasses), x.cols());
  for (std::size_t i = 0; i < members; ++i) sum += member_probs(local, x, seed, i, stochastic);
  return sum / static_cast<double>(members);
}
}  // namespace serial

namespace {

ClassProbs to_probs(const Eigen::VectorXd& col) {
  ClassProbs p{};
  double s = 0.0;
  for (std::size_t i = 0; i < kNumClasses; ++i) s += col(static_cast<Eigen::Index>(i));
  for (std::size_t i = 0; i < kNumClasses; ++i) p[i] = col(static_cast<Eigen::Index>(i)) / s;
  return p;
}

}  // namespace

std::optional<TapObservation> predict(const Model& model, const signal::Window& preprocessed, Hand hand,
                                      std::uint64_t seed, std::optional<std::size_t> members) {
  const Matrix x = to_batch({&preprocessed});
  const Matrix p = predictive(model.net, x, members.value_or(model.net.config().ensemble_infer), seed);
  const ClassProbs probs = to_probs(p.col(0));
  if (*std::max_element(probs.begin(), probs.end()) < model.net.config().reject_threshold) return std::nullopt;
  return TapObservation::make(hand, probs);
}

std::vector<ClassProbs> predict_dataset(const Model& model, const Dataset& data, std::uint64_t seed,
                                        std::optional<std::size_t> members) {
  std::vector<signal::Window> prepared;
  prepared.reserve(data.size());
  for (const auto& item : data) prepared.push_back(preprocess(item.window, item.hand, model.stats));
  std::vector<const signal::Window*> ptrs;
  for (const auto& w : prepared) ptrs.push_back(&w);
  const Matrix p = predictive(model.net, to_batch(ptrs), members.value_or(model.net.config().ensemble_infer), seed);
  std::vector<ClassProbs> out;
  for (Eigen::Index j = 0; j < p.cols(); ++j) out.push_back(to_probs(p.col(j)));
  return out;
}

}  // namespace taptype::classifier
