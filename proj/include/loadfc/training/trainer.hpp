#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "loadfc/autodiff.hpp"
#include "loadfc/data/windows.hpp"
#include "loadfc/eval/metrics.hpp"
#include "loadfc/models/forecaster.hpp"
#include "loadfc/training/optimizer.hpp"

namespace loadfc::training {

struct TrainSpec {
  std::size_t epochs = 50;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  OptimizerKind optimizer = OptimizerKind::Adam;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;
  std::optional<std::size_t> early_stop_patience;

  void validate() const;
  AdamConfig adam() const {
    return {learning_rate, adam_beta1, adam_beta2, adam_eps};
  }
};

// Optional chronological holdout carved from the end of the training pairs.
// Early stopping needs one.
struct ValidationPolicy {
  double holdout_fraction = 0.0;
};

struct TrainResult {
  models::Forecaster model;
  double train_seconds = 0.0;
  std::vector<double> loss_curve;        // mean training loss per epoch
  double final_train_loss = 0.0;         // trained model, dropout off
  std::vector<double> validation_curve;  // empty without a holdout
};

// Mean of squared differences over equal-shaped tensors.
ad::Var mse_loss(ad::Var pred, ad::Var target);

// Mini-batch training on scaled pairs. The run is a pure function of
// (spec, pairs, train.seed): initial weights, the per-epoch shuffle and the
// dropout masks each come from their own stream derived from the seed.
// train_seconds covers the optimisation loop only. Throws DivergenceError when
// the loss stops being finite.
TrainResult train_model(const models::ModelSpec& spec,
                        const data::TrainingSet& train,
                        const ValidationPolicy& validation,
                        const TrainSpec& train_spec);

// Forecasts for every pair, in batches, in the scale the pairs are stored in.
std::vector<double> predict_all(const models::Forecaster& model,
                                const data::WindowedDataset& pairs);

struct Evaluation {
  std::vector<double> truth_kwh;
  std::vector<double> forecast_kwh;
  eval::MapeResult mape;
};

// `raw_test` holds unscaled kWh pairs; inputs are scaled with `scaler`,
// forecasts mapped back to kWh and compared against the raw targets.
Evaluation evaluate(const models::Forecaster& model, const data::TestSet& raw_test,
                    const data::MinMaxScaler& scaler);

}  // namespace loadfc::training
