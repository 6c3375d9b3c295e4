#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "loadfc/data/meter.hpp"
#include "loadfc/data/windows.hpp"
#include "loadfc/models/forecaster.hpp"
#include "loadfc/training/trainer.hpp"

namespace loadfc::training {

// One row of the results CSV.
struct ExperimentResult {
  models::ModelKind model = models::ModelKind::Transformer;
  std::size_t n = 0;
  std::string house_id;
  std::uint64_t seed = 0;
  double test_mape_percent = 0.0;
  double train_seconds = 0.0;

  friend bool operator==(const ExperimentResult&,
                         const ExperimentResult&) = default;
};

// Everything about a run except its coordinates.
struct ExperimentSettings {
  models::TransformerSpec transformer;
  models::RecurrentSpec recurrent;
  TrainSpec train;
  ValidationPolicy validation;
  double split_ratio = 0.8;
  std::size_t max_readings = 0;  // 0 keeps the whole series
  data::WindowOptions windows;
  // When false train_seconds is reported as 0 so outputs are reproducible
  // byte for byte.
  bool record_timing = true;

  models::ModelSpec model_spec(models::ModelKind kind) const;
};

struct RunOutput {
  ExperimentResult result;
  models::Forecaster model;
  data::MinMaxScaler scaler;
  std::vector<double> loss_curve;
  double final_train_loss = 0.0;
  std::size_t mape_excluded = 0;
};

// Truncate → window → chronological split → scale on train → train →
// MAPE on the unscaled test targets.
RunOutput run_experiment(const data::MeterSeries& series,
                         models::ModelKind kind, std::size_t n,
                         std::uint64_t run_seed,
                         const ExperimentSettings& settings);

// `model,n,house,seed,mape_percent,train_seconds`
void write_results_csv(std::ostream& out,
                       const std::vector<ExperimentResult>& results);
std::vector<ExperimentResult> read_results_csv(std::istream& in);

}  // namespace loadfc::training
