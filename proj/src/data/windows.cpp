#include "loadfc/data/windows.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "loadfc/error.hpp"

namespace loadfc::data {

Tensor WindowedDataset::input_matrix(std::size_t begin, std::size_t end) const {
  std::vector<double> v(inputs.begin() + static_cast<std::ptrdiff_t>(begin * n),
                        inputs.begin() + static_cast<std::ptrdiff_t>(end * n));
  return Tensor({end - begin, n}, std::move(v));
}

Tensor WindowedDataset::target_matrix(std::size_t begin, std::size_t end) const {
  std::vector<double> v(targets.begin() + static_cast<std::ptrdiff_t>(begin),
                        targets.begin() + static_cast<std::ptrdiff_t>(end));
  return Tensor({end - begin, 1}, std::move(v));
}

WindowedDataset WindowedDataset::slice(std::size_t begin,
                                       std::size_t end) const {
  WindowedDataset out;
  out.n = n;
  out.scaler = scaler;
  out.inputs.assign(inputs.begin() + static_cast<std::ptrdiff_t>(begin * n),
                    inputs.begin() + static_cast<std::ptrdiff_t>(end * n));
  out.targets.assign(targets.begin() + static_cast<std::ptrdiff_t>(begin),
                     targets.begin() + static_cast<std::ptrdiff_t>(end));
  out.target_times.assign(
      target_times.begin() + static_cast<std::ptrdiff_t>(begin),
      target_times.begin() + static_cast<std::ptrdiff_t>(end));
  return out;
}

namespace {

void require_length(std::size_t len, std::size_t n) {
  if (n < 1) throw DataError("window length n must be at least 1");
  if (len <= n)
    throw DataError("series too short: " + std::to_string(len) +
                    " readings, need at least " + std::to_string(n + 1) +
                    " for n = " + std::to_string(n));
}

}  // namespace

WindowedDataset make_windows(const MeterSeries& series, std::size_t n,
                             const WindowOptions& options) {
  const auto& r = series.readings;
  require_length(r.size(), n);
  WindowedDataset ds;
  ds.n = n;
  ds.inputs.reserve((r.size() - n) * n);
  // Start of the current gap-free run, used only in strict mode.
  std::size_t run_start = 0;
  for (std::size_t end = 1; end <= r.size(); ++end) {
    // Considering target index t = end - 1 with inputs [t-n, t).
    const std::size_t t = end - 1;
    if (options.strict_grid && t > 0 &&
        r[t].timestamp - r[t - 1].timestamp != options.interval)
      run_start = t;
    if (t < n) continue;
    if (options.strict_grid && t - run_start < n) continue;
    for (std::size_t j = t - n; j < t; ++j) ds.inputs.push_back(r[j].kwh);
    ds.targets.push_back(r[t].kwh);
    ds.target_times.push_back(r[t].timestamp);
  }
  if (ds.targets.empty())
    throw DataError("no gap-free window of length " + std::to_string(n + 1) +
                    " in series " + series.household_id);
  return ds;
}

WindowedDataset make_windows(std::span<const double> values, std::size_t n) {
  require_length(values.size(), n);
  WindowedDataset ds;
  ds.n = n;
  for (std::size_t i = 0; i + n < values.size(); ++i) {
    ds.inputs.insert(ds.inputs.end(), values.begin() + static_cast<std::ptrdiff_t>(i),
                     values.begin() + static_cast<std::ptrdiff_t>(i + n));
    ds.targets.push_back(values[i + n]);
    ds.target_times.push_back(static_cast<Timestamp>(i + n));
  }
  return ds;
}

Split split_train_test(const WindowedDataset& ds, double ratio) {
  if (!(ratio > 0.0 && ratio < 1.0))
    throw DomainError("split ratio must lie strictly between 0 and 1");
  const auto cut = static_cast<std::size_t>(
      std::floor(ratio * static_cast<double>(ds.size())));
  if (cut == 0 || cut >= ds.size())
    throw DataError("split of " + std::to_string(ds.size()) +
                    " pairs at ratio " + std::to_string(ratio) +
                    " leaves one side empty");
  return Split{TrainingSet{ds.slice(0, cut)}, TestSet{ds.slice(cut, ds.size())}};
}

MinMaxScaler fit_scaler(const TrainingSet& train) {
  const auto& p = train.pairs;
  if (p.size() == 0) throw DataError("cannot fit a scaler on an empty set");
  double lo = p.targets.front(), hi = lo;
  for (double v : p.inputs) lo = std::min(lo, v), hi = std::max(hi, v);
  for (double v : p.targets) lo = std::min(lo, v), hi = std::max(hi, v);
  return MinMaxScaler{lo, hi};
}

WindowedDataset apply_scaler(const WindowedDataset& ds, const MinMaxScaler& s) {
  WindowedDataset out = ds;
  for (double& v : out.inputs) v = s.scale(v);
  for (double& v : out.targets) v = s.scale(v);
  out.scaler = s;
  return out;
}

ScaledSplit fit_apply_scaler(const TrainingSet& train, const TestSet& test) {
  const MinMaxScaler s = fit_scaler(train);
  return ScaledSplit{TrainingSet{apply_scaler(train.pairs, s)},
                     TestSet{apply_scaler(test.pairs, s)}, s};
}

}  // namespace loadfc::data
