#include "loadfc/training/grid.hpp"

#include <omp.h>

#include <exception>
#include <optional>

#include "loadfc/error.hpp"
#include "loadfc/rng.hpp"

namespace loadfc::training {

std::uint64_t derive_run_seed(std::uint64_t base_seed, const RunCoordinates& c) {
  std::uint64_t s = combine_seed(base_seed, hash_string(c.house));
  s = combine_seed(s, hash_string(models::model_key(c.model)));
  s = combine_seed(s, c.n);
  return combine_seed(s, c.replicate);
}

std::vector<RunCoordinates> enumerate_runs(const ExperimentConfig& config) {
  std::vector<RunCoordinates> runs;
  runs.reserve(config.run_count());
  for (const auto& house : config.houses)
    for (models::ModelKind kind : config.models)
      for (std::size_t n : config.windows)
        for (std::size_t r = 0; r < config.seeds_per_cell; ++r)
          runs.push_back(RunCoordinates{house, kind, n, r});
  return runs;
}

GridOutcome run_grid(const std::map<std::string, data::MeterSeries>& series,
                     const ExperimentConfig& config, std::size_t workers,
                     const GridProgress& progress) {
  config.validate();
  const auto runs = enumerate_runs(config);
  std::vector<std::optional<ExperimentResult>> slots(runs.size());
  std::vector<std::string> errors(runs.size());
  const int threads = static_cast<int>(workers == 0 ? 1 : workers);
  std::size_t done = 0;

#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(runs.size()); ++i) {
    const RunCoordinates& c = runs[i];
    try {
      const auto it = series.find(c.house);
      if (it == series.end())
        throw DataError("no readings loaded for household " + c.house);
      slots[i] = run_experiment(it->second, c.model, c.n,
                                derive_run_seed(config.base_seed, c),
                                config.settings)
                     .result;
    } catch (const std::exception& e) {
      errors[i] = e.what();
      if (errors[i].empty()) errors[i] = "run failed";
    }
    if (progress) {
#pragma omp critical(loadfc_grid_progress)
      progress(c, ++done, runs.size(), errors[i]);
    }
  }

  GridOutcome out;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    if (slots[i])
      out.results.push_back(std::move(*slots[i]));
    else
      out.failures.push_back(RunFailure{runs[i], errors[i]});
  }
  return out;
}

}  // namespace loadfc::training
