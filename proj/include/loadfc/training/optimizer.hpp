#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "loadfc/models/params.hpp"

namespace loadfc::training {

enum class OptimizerKind { Adam, Sgd };

OptimizerKind parse_optimizer_kind(std::string_view text);
std::string_view optimizer_key(OptimizerKind kind);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamMoments {
  std::vector<double> m;
  std::vector<double> v;
};

// Bias-corrected Adam update of one tensor at 1-based step `step`:
//   m ← β1·m + (1−β1)·g,  v ← β2·v + (1−β2)·g²
//   p ← p − lr · m̂ / (√v̂ + eps),  m̂ = m/(1−β1^t), v̂ = v/(1−β2^t)
// Moments are allocated on first use.
void adam_update(std::span<double> param, std::span<const double> grad,
                 AdamMoments& moments, std::uint64_t step,
                 const AdamConfig& config);

// Applies Adam or plain SGD to every parameter that carries a gradient.
class Optimizer {
 public:
  Optimizer(OptimizerKind kind, AdamConfig config);

  void step(models::ModelParams& params);
  std::uint64_t steps() const { return steps_; }

 private:
  OptimizerKind kind_;
  AdamConfig config_;
  std::uint64_t steps_ = 0;
  std::vector<AdamMoments> moments_;
};

}  // namespace loadfc::training
