#include "loadfc/eval/metrics.hpp"

#include <cmath>
#include <string>

#include "loadfc/error.hpp"

namespace loadfc::eval {

MapeResult mape(std::span<const double> truth, std::span<const double> pred,
                double floor) {
  if (truth.size() != pred.size())
    throw DimensionError("mape: " + std::to_string(truth.size()) +
                         " truth values vs " + std::to_string(pred.size()) +
                         " forecasts");
  if (truth.empty()) throw DimensionError("mape: empty input");
  MapeResult r;
  double total = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double t = std::abs(truth[i]);
    if (t < floor) {
      ++r.excluded;
      continue;
    }
    total += std::abs(truth[i] - pred[i]) / t;
    ++r.used;
  }
  if (r.used == 0)
    throw MetricError("mape undefined: all " + std::to_string(r.excluded) +
                      " truth values are below the floor");
  r.percent = 100.0 * total / static_cast<double>(r.used);
  return r;
}

}  // namespace loadfc::eval
