#include "json.hpp"
#include "taptype/classifier.hpp"

namespace taptype::classifier {

namespace {

void block(std::vector<LayerSpec>& out, std::size_t ch, bool first_bayes) {
  out.push_back({LayerKind::Conv, ch, first_bayes});
  out.push_back({LayerKind::BatchNorm});
  out.push_back({LayerKind::LeakyRelu});
  out.push_back({LayerKind::Conv, ch, false});
  out.push_back({LayerKind::BatchNorm});
  out.push_back({LayerKind::LeakyRelu});
  out.push_back({LayerKind::MaxPool});
}

std::string_view kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::Conv: return "conv";
    case LayerKind::Dense: return "dense";
    case LayerKind::BatchNorm: return "batchnorm";
    case LayerKind::LeakyRelu: return "leaky_relu";
    case LayerKind::MaxPool: return "maxpool";
  }
  return "?";
}

LayerKind parse_kind(const std::string& s) {
  for (auto k : {LayerKind::Conv, LayerKind::Dense, LayerKind::BatchNorm, LayerKind::LeakyRelu, LayerKind::MaxPool})
    if (kind_name(k) == s) return k;
  throw ParseError("unknown layer kind '" + s + "'");
}

}  // namespace

std::vector<LayerSpec> architecture(std::string_view name) {
  std::vector<LayerSpec> out;
  if (name == "deep") {
    const std::size_t widths[] = {8, 16, 16, 32, 32};
    for (std::size_t i = 0; i < 5; ++i) block(out, widths[i], i == 0);
    out.push_back({LayerKind::Dense, 32, false});
    out.push_back({LayerKind::LeakyRelu});
    out.push_back({LayerKind::Dense, kNumClasses, true});
    return out;
  }
  bool first, last, all;
  if (name == "2-bayes") {
    first = last = true;
    all = false;
  } else if (name == "no-bayes") {
    first = last = all = false;
  } else if (name == "all-bayes") {
    first = last = all = true;
  } else {
    throw DomainError("unknown architecture '" + std::string(name) + "'");
  }
  block(out, 4, first);
  block(out, 8, all);
  out.push_back({LayerKind::Dense, 16, all});
  out.push_back({LayerKind::LeakyRelu});
  out.push_back({LayerKind::Dense, kNumClasses, last});
  if (all)
    for (auto& l : out)
      if (l.kind == LayerKind::Conv) l.bayesian = true;
  return out;
}

ClassifierConfig ClassifierConfig::named(std::string_view arch) {
  ClassifierConfig c;
  c.name = std::string(arch);
  c.layers = architecture(arch);
  return c;
}

void ClassifierConfig::validate() const {
  if (!(reject_threshold > 0.0 && reject_threshold < 1.0)) throw DomainError("reject threshold must be in (0,1)");
  if (ensemble_train < 1 || ensemble_infer < 1) throw DomainError("ensemble size must be >= 1");
  if (!(prior_sigma > 0.0)) throw DomainError("prior sigma must be > 0");
  if (batch_size < 1) throw DomainError("batch size must be >= 1");
  if (!(learning_rate > 0.0)) throw DomainError("learning rate must be > 0");
  if (kl_weight && !(*kl_weight >= 0.0)) throw DomainError("kl weight must be >= 0");
  if (layers.empty()) throw DomainError("empty architecture");
  for (const auto& l : layers)
    if ((l.kind == LayerKind::Conv || l.kind == LayerKind::Dense) && l.out == 0)
      throw DomainError("layer with zero outputs");
}

std::string to_json(const ClassifierConfig& c) {
  nlohmann::json j;
  j["name"] = c.name;
  j["prior_sigma"] = c.prior_sigma;
  j["ensemble_train"] = c.ensemble_train;
  j["ensemble_infer"] = c.ensemble_infer;
  j["reject_threshold"] = c.reject_threshold;
  j["epochs"] = c.epochs;
  j["batch_size"] = c.batch_size;
  j["kl_weight"] = c.kl_weight ? nlohmann::json(*c.kl_weight) : nlohmann::json(nullptr);
  j["learning_rate"] = c.learning_rate;
  j["init_rho"] = c.init_rho;
  j["leaky_slope"] = c.leaky_slope;
  j["window_len"] = c.window_len;
  j["max_iterations"] = c.max_iterations;
  auto& layers = j["layers"] = nlohmann::json::array();
  for (const auto& l : c.layers) layers.push_back({{"kind", kind_name(l.kind)}, {"out", l.out}, {"bayesian", l.bayesian}});
  return j.dump();
}

ClassifierConfig config_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    ClassifierConfig c;
    c.name = j.at("name").get<std::string>();
    c.prior_sigma = j.at("prior_sigma").get<double>();
    c.ensemble_train = j.at("ensemble_train").get<std::size_t>();
    c.ensemble_infer = j.at("ensemble_infer").get<std::size_t>();
    c.reject_threshold = j.at("reject_threshold").get<double>();
    c.epochs = j.at("epochs").get<std::size_t>();
    c.batch_size = j.at("batch_size").get<std::size_t>();
    if (!j.at("kl_weight").is_null()) c.kl_weight = j.at("kl_weight").get<double>();
    c.learning_rate = j.at("learning_rate").get<double>();
    c.init_rho = j.at("init_rho").get<double>();
    c.leaky_slope = j.at("leaky_slope").get<double>();
    c.window_len = j.at("window_len").get<std::size_t>();
    c.max_iterations = j.value("max_iterations", std::size_t{0});
    c.layers.clear();
    for (const auto& l : j.at("layers"))
      c.layers.push_back({parse_kind(l.at("kind").get<std::string>()), l.at("out").get<std::size_t>(),
                          l.at("bayesian").get<bool>()});
    c.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad classifier config: ") + e.what());
  }
}

}  // namespace taptype::classifier
