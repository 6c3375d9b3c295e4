#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "loadfc/data/meter.hpp"
#include "loadfc/tensor.hpp"

namespace loadfc::data {

// Min-max scaler onto [0, 1]. A degenerate fit (min == max) maps every value
// to 0 and inverts to min.
struct MinMaxScaler {
  double min = 0.0;
  double max = 1.0;

  bool degenerate() const { return !(max > min); }
  double scale(double x) const {
    return degenerate() ? 0.0 : (x - min) / (max - min);
  }
  double inverse(double y) const {
    return degenerate() ? min : y * (max - min) + min;
  }
};

// Supervised pairs (n consecutive readings -> next reading).
struct WindowedDataset {
  std::size_t n = 0;
  std::vector<double> inputs;          // size() × n, row-major
  std::vector<double> targets;
  std::vector<Timestamp> target_times;
  std::optional<MinMaxScaler> scaler;  // set once values are scaled

  std::size_t size() const { return targets.size(); }
  std::span<const double> input(std::size_t i) const {
    return std::span<const double>(inputs).subspan(i * n, n);
  }
  // Rows [begin, end) as a [rows × n] matrix plus a [rows × 1] target column.
  Tensor input_matrix(std::size_t begin, std::size_t end) const;
  Tensor target_matrix(std::size_t begin, std::size_t end) const;
  WindowedDataset slice(std::size_t begin, std::size_t end) const;
};

struct WindowOptions {
  // When set, a window may not straddle a gap in the half-hourly grid.
  bool strict_grid = false;
  Timestamp interval = kHalfHour;
};

// Stride-1 windows: pair i is (readings[i..i+n), readings[i+n]). Without
// strict_grid the pair count is size − n. Throws DataError when the series is
// not longer than n.
WindowedDataset make_windows(const MeterSeries& series, std::size_t n,
                             const WindowOptions& options = {});
// Same over bare values; target_times are the indices.
WindowedDataset make_windows(std::span<const double> values, std::size_t n);

// Distinct types for the two sides of a split, so training code can only be
// handed training pairs.
struct TrainingSet {
  WindowedDataset pairs;
};
struct TestSet {
  WindowedDataset pairs;
};

struct Split {
  TrainingSet train;
  TestSet test;
};

// Chronological split at floor(ratio · count). Throws DataError when either
// side would be empty and DomainError for a ratio outside (0, 1).
Split split_train_test(const WindowedDataset& ds, double ratio);

struct ScaledSplit {
  TrainingSet train;
  TestSet test;
  MinMaxScaler scaler;
};

// Fits on the training inputs and targets only, applies to both sides.
MinMaxScaler fit_scaler(const TrainingSet& train);
ScaledSplit fit_apply_scaler(const TrainingSet& train, const TestSet& test);
WindowedDataset apply_scaler(const WindowedDataset& ds, const MinMaxScaler& s);

}  // namespace loadfc::data
