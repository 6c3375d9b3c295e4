#pragma once

#include <cstddef>
#include <span>

namespace loadfc::eval {

inline constexpr double kMapeFloorKwh = 1e-6;

struct MapeResult {
  double percent = 0.0;
  std::size_t used = 0;
  std::size_t excluded = 0;  // entries with |truth| below the floor
};

// 100 · mean(|truth − pred| / |truth|) over entries with |truth| >= floor.
// Throws DimensionError for unequal or empty inputs and MetricError when every
// entry falls below the floor.
MapeResult mape(std::span<const double> truth, std::span<const double> pred,
                double floor = kMapeFloorKwh);

}  // namespace loadfc::eval
