#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "loadfc/autodiff.hpp"
#include "loadfc/models/forecaster.hpp"
#include "loadfc/tensor.hpp"

// Central finite-difference checks of recorded gradients.
namespace loadfc::gradcheck {

struct Options {
  double step = 1e-4;
  // Denominator floor: rel = |a − n| / max(|a|, |n|, floor). Keeps entries
  // whose true gradient is (near) zero from dividing round-off by round-off.
  double floor = 1e-6;
};

struct Report {
  std::size_t checked = 0;
  // Coordinates where the ± perturbation flips the sign of some ReLU input.
  // The loss is not differentiable across the flip, so these are counted here
  // and left out of max_rel_error.
  std::size_t kinks = 0;
  double max_rel_error = 0.0;
  std::string worst;  // "<name>[<index>]"
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

double relative_error(double analytic, double numeric, double floor);

// `fn` maps graph leaves to a scalar loss. Every entry of every input is
// perturbed in turn.
using ScalarFn = std::function<ad::Var(ad::Graph&, std::span<const ad::Var>)>;
Report check_function(const ScalarFn& fn, std::vector<Tensor> inputs,
                      const Options& options = {});

// d(MSE(model(windows), targets))/d(param) for every model parameter, with
// dropout off.
Report check_model(models::Forecaster& model, const Tensor& windows,
                   const Tensor& targets, const Options& options = {});

}  // namespace loadfc::gradcheck
