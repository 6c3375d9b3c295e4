// Compares the naive reference gemm against the OpenMP gemm at model-sized
// and larger shapes, then times a small experiment grid at 1..P workers.
//
//   kernel_bench [--quick]

#include <omp.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <map>
#include <vector>

#include "loadfc/kernels.hpp"
#include "loadfc/rng.hpp"
#include "loadfc/training/grid.hpp"

using namespace loadfc;
using Clock = std::chrono::steady_clock;

namespace {

template <class F>
double best_of(int reps, F&& f) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = Clock::now();
    f();
    best = std::min(best, std::chrono::duration<double>(Clock::now() - t0).count());
  }
  return best;
}

void bench_gemm(bool quick) {
  struct Case { std::size_t m, n, k; };
  std::vector<Case> cases = {{192, 64, 64}, {192, 128, 64}, {256, 256, 256}};
  if (!quick) cases.push_back({512, 512, 512});

  std::printf("%-16s %12s %12s %9s %s\n", "m x n x k", "reference", "openmp", "speedup",
              "max|diff|");
  Rng rng(1);
  for (const auto& c : cases) {
    std::vector<double> a(c.m * c.k), b(c.k * c.n), c0(c.m * c.n), c1(c.m * c.n);
    for (double& x : a) x = rng.uniform(-1, 1);
    for (double& x : b) x = rng.uniform(-1, 1);
    const int reps = quick ? 2 : 5;
    const double t_ref = best_of(reps, [&] {
      kernels::reference::gemm(kernels::Trans::No, kernels::Trans::No, c.m, c.n, c.k, a, b, c0);
    });
    kernels::set_parallel_threshold(0);
    const double t_omp = best_of(reps, [&] {
      kernels::gemm(kernels::Trans::No, kernels::Trans::No, c.m, c.n, c.k, a, b, c1);
    });
    double diff = 0;
    for (std::size_t i = 0; i < c0.size(); ++i) diff = std::max(diff, std::fabs(c0[i] - c1[i]));
    char shape[48];
    std::snprintf(shape, sizeof shape, "%zux%zux%zu", c.m, c.n, c.k);
    std::printf("%-16s %10.3fms %10.3fms %8.2fx %.2e\n", shape, t_ref * 1e3, t_omp * 1e3,
                t_ref / t_omp, diff);
  }
  kernels::set_parallel_threshold(std::size_t{1} << 18);
}

void bench_grid(bool quick) {
  std::map<std::string, data::MeterSeries> series;
  for (const char* id : {"H1", "H2"}) {
    auto& s = series[id];
    s.household_id = id;
    for (int i = 0; i < 480; ++i)
      s.readings.push_back({1800LL * i, 1.0 + 0.5 * std::sin(2 * M_PI * i / 48.0 + id[1])});
  }
  training::ExperimentConfig config = training::default_grid_config();
  config.houses = {"H1", "H2"};
  config.windows = {3, 6};
  config.seeds_per_cell = 2;
  config.settings.transformer = {2, 16, 2, 32, 0.1};
  config.settings.recurrent.hidden_size = 16;
  config.settings.train.epochs = quick ? 1 : 3;

  const int max_workers = omp_get_num_procs();
  std::printf("\ngrid: %zu runs, %d processor(s)\n", config.run_count(), max_workers);
  std::vector<training::ExperimentResult> first;
  for (int w = 1; w <= max_workers; w *= 2) {
    training::GridOutcome outcome;
    const double t = best_of(1, [&] { outcome = training::run_grid(series, config, w); });
    for (auto& r : outcome.results) r.train_seconds = 0;
    if (first.empty()) first = outcome.results;
    std::printf("workers %2d: %8.2fs  results %s\n", w, t,
                outcome.results == first ? "identical" : "DIFFER");
  }
}

}  // namespace

int main(int argc, char** argv) {
  const bool quick = argc > 1 && std::strcmp(argv[1], "--quick") == 0;
  std::printf("threads available: %d\n\n", omp_get_max_threads());
  bench_gemm(quick);
  bench_grid(quick);
}
