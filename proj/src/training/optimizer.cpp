#include "loadfc/training/optimizer.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "loadfc/error.hpp"

namespace loadfc::training {

OptimizerKind parse_optimizer_kind(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (lower == "adam") return OptimizerKind::Adam;
  if (lower == "sgd") return OptimizerKind::Sgd;
  throw ConfigError("unknown optimizer '" + std::string(text) + "'");
}

std::string_view optimizer_key(OptimizerKind kind) {
  return kind == OptimizerKind::Adam ? "adam" : "sgd";
}

void adam_update(std::span<double> param, std::span<const double> grad,
                 AdamMoments& moments, std::uint64_t step,
                 const AdamConfig& config) {
  if (grad.size() != param.size())
    throw DimensionError("adam: gradient and parameter sizes differ");
  if (step == 0) throw DomainError("adam: steps are counted from 1");
  if (moments.m.size() != param.size()) {
    moments.m.assign(param.size(), 0.0);
    moments.v.assign(param.size(), 0.0);
  }
  const double t = static_cast<double>(step);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double g = grad[i];
    double& m = moments.m[i];
    double& v = moments.v[i];
    m = config.beta1 * m + (1.0 - config.beta1) * g;
    v = config.beta2 * v + (1.0 - config.beta2) * g * g;
    const double m_hat = m / c1;
    const double v_hat = v / c2;
    param[i] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.eps);
  }
}

Optimizer::Optimizer(OptimizerKind kind, AdamConfig config)
    : kind_(kind), config_(config) {}

void Optimizer::step(models::ModelParams& params) {
  ++steps_;
  if (moments_.size() != params.size()) moments_.resize(params.size());
  std::size_t idx = 0;
  for (auto& entry : params) {
    Tensor& p = entry.tensor;
    AdamMoments& mom = moments_[idx++];
    if (!p.has_grad()) continue;
    if (kind_ == OptimizerKind::Adam) {
      adam_update(p.data(), p.grad(), mom, steps_, config_);
    } else {
      auto g = p.grad();
      auto d = p.data();
      for (std::size_t i = 0; i < d.size(); ++i)
        d[i] -= config_.learning_rate * g[i];
    }
  }
}

}  // namespace loadfc::training
