#include "loadfc/training/experiment.hpp"

#include <istream>
#include <ostream>

#include "loadfc/error.hpp"
#include "loadfc/text.hpp"

namespace loadfc::training {

models::ModelSpec ExperimentSettings::model_spec(models::ModelKind kind) const {
  models::ModelSpec spec;
  spec.kind = kind;
  spec.transformer = transformer;
  spec.recurrent = recurrent;
  spec.recurrent = spec.recurrent_spec();
  return spec;
}

RunOutput run_experiment(const data::MeterSeries& series,
                         models::ModelKind kind, std::size_t n,
                         std::uint64_t run_seed,
                         const ExperimentSettings& settings) {
  const data::MeterSeries used = data::truncate(series, settings.max_readings);
  const data::WindowedDataset pairs =
      data::make_windows(used, n, settings.windows);
  const data::Split split = data::split_train_test(pairs, settings.split_ratio);
  const data::ScaledSplit scaled = data::fit_apply_scaler(split.train, split.test);

  TrainSpec train = settings.train;
  train.seed = run_seed;
  TrainResult trained = train_model(settings.model_spec(kind), scaled.train,
                                    settings.validation, train);
  const Evaluation ev = evaluate(trained.model, split.test, scaled.scaler);

  ExperimentResult r;
  r.model = kind;
  r.n = n;
  r.house_id = series.household_id;
  r.seed = run_seed;
  r.test_mape_percent = ev.mape.percent;
  r.train_seconds = settings.record_timing ? trained.train_seconds : 0.0;
  return RunOutput{std::move(r), std::move(trained.model), scaled.scaler,
                   std::move(trained.loss_curve), trained.final_train_loss,
                   ev.mape.excluded};
}

void write_results_csv(std::ostream& out,
                       const std::vector<ExperimentResult>& results) {
  out << "model,n,house,seed,mape_percent,train_seconds\n";
  for (const auto& r : results)
    out << models::model_label(r.model) << ',' << r.n << ',' << r.house_id
        << ',' << r.seed << ',' << text::format_double(r.test_mape_percent)
        << ',' << text::format_double(r.train_seconds) << '\n';
}

std::vector<ExperimentResult> read_results_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || text::trim(line).empty())
    throw EmptyInputError("empty input: results file has no header");
  if (text::trim(line) != "model,n,house,seed,mape_percent,train_seconds")
    throw SchemaError(
        "results header must be 'model,n,house,seed,mape_percent,train_seconds'");
  std::vector<ExperimentResult> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    const auto c = text::split(line, ',');
    if (c.size() != 6)
      throw FormatError("results line " + std::to_string(lineno) +
                        " needs 6 fields");
    ExperimentResult r;
    r.model = models::parse_model_kind(text::trim(c[0]));
    r.n = text::parse_u64(c[1], "n");
    r.house_id = std::string(text::trim(c[2]));
    r.seed = text::parse_u64(c[3], "seed");
    r.test_mape_percent = text::parse_double(c[4], "mape_percent");
    r.train_seconds = text::parse_double(c[5], "train_seconds");
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace loadfc::training
