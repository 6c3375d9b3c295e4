#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "loadfc/data/meter.hpp"
#include "loadfc/training/config.hpp"
#include "loadfc/training/experiment.hpp"

namespace loadfc::training {

struct RunCoordinates {
  std::string house;
  models::ModelKind model = models::ModelKind::Transformer;
  std::size_t n = 0;
  std::size_t replicate = 0;
};

// Hash of (base seed, house, model, n, replicate); independent of the order
// in which runs execute.
std::uint64_t derive_run_seed(std::uint64_t base_seed, const RunCoordinates& c);

// Cartesian product houses × models × windows × replicates, in that nesting
// order. This is also the row order of the results CSV.
std::vector<RunCoordinates> enumerate_runs(const ExperimentConfig& config);

struct RunFailure {
  RunCoordinates coords;
  std::string message;
};

struct GridOutcome {
  std::vector<ExperimentResult> results;  // enumeration order, successes only
  std::vector<RunFailure> failures;
};

// Runs every grid cell on a pool of `workers` OpenMP threads. Each run is
// single-threaded and deterministic, and results land in enumeration order, so
// the outcome does not depend on `workers`. A house missing from `series`
// or a failing run is recorded and the grid carries on.
// `progress`, when set, is called once per finished run (serialised).
using GridProgress = std::function<void(const RunCoordinates&, std::size_t done,
                                        std::size_t total, const std::string& error)>;
GridOutcome run_grid(const std::map<std::string, data::MeterSeries>& series,
                     const ExperimentConfig& config, std::size_t workers,
                     const GridProgress& progress = {});

}  // namespace loadfc::training
