#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "loadfc/models/forecaster.hpp"
#include "loadfc/training/experiment.hpp"

// Experiment config: one `key = value` per line, `#` starts a comment, lists
// are comma separated. Unknown keys are errors. Recognised keys:
//
//   houses, models, windows, seeds_per_cell, base_seed
//   transformer.layers, transformer.d_model, transformer.heads,
//   transformer.d_ff, transformer.dropout
//   recurrent.hidden
//   train.epochs, train.batch_size, train.learning_rate, train.optimizer,
//   train.beta1, train.beta2, train.eps, train.patience, train.holdout
//   data.split_ratio, data.max_readings, data.strict_grid
namespace loadfc::training {

struct ExperimentConfig {
  std::vector<std::string> houses;
  std::vector<models::ModelKind> models;
  std::vector<std::size_t> windows;
  std::size_t seeds_per_cell = 5;
  std::uint64_t base_seed = 42;
  ExperimentSettings settings;

  std::size_t run_count() const {
    return houses.size() * models.size() * windows.size() * seeds_per_cell;
  }
  void validate() const;
};

// The eight-household, three-model, n ∈ {2, 3, 6, 12}, five-seed grid.
ExperimentConfig default_grid_config();

const std::vector<std::string>& default_houses();

ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::filesystem::path& path);
// Applies one `key = value` assignment; used by the parser and CLI overrides.
void apply_setting(ExperimentConfig& config, const std::string& key,
                   const std::string& value);
void write_config(std::ostream& out, const ExperimentConfig& config);

}  // namespace loadfc::training
