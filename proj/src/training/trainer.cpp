#include "loadfc/training/trainer.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <string>

#include "loadfc/error.hpp"
#include "loadfc/rng.hpp"

namespace loadfc::training {

void TrainSpec::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be positive");
  if (batch_size < 1) throw ConfigError("batch_size must be positive");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (!(adam_beta1 > 0.0 && adam_beta1 < 1.0) ||
      !(adam_beta2 > 0.0 && adam_beta2 < 1.0))
    throw ConfigError("adam betas must lie strictly between 0 and 1");
  if (!(adam_eps > 0.0)) throw ConfigError("adam eps must be > 0");
  if (early_stop_patience && *early_stop_patience == 0)
    throw ConfigError("early_stop_patience must be positive when set");
}

ad::Var mse_loss(ad::Var pred, ad::Var target) {
  if (pred.shape() != target.shape())
    throw DimensionError("mse_loss: prediction " + shape_string(pred.shape()) +
                         " vs target " + shape_string(target.shape()));
  ad::Var diff = ad::sub(pred, target);
  return ad::mean(ad::mul(diff, diff));
}

namespace {

constexpr std::size_t kPredictBatch = 256;

double dataset_loss(const models::Forecaster& model,
                    const data::WindowedDataset& pairs) {
  const auto pred = predict_all(model, pairs);
  double total = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - pairs.targets[i];
    total += d * d;
  }
  return total / static_cast<double>(pred.size());
}

}  // namespace

TrainResult train_model(const models::ModelSpec& spec,
                        const data::TrainingSet& train,
                        const ValidationPolicy& validation,
                        const TrainSpec& train_spec) {
  train_spec.validate();
  const data::WindowedDataset* fit_pairs = &train.pairs;
  data::WindowedDataset fit_storage, holdout;
  if (validation.holdout_fraction > 0.0) {
    if (validation.holdout_fraction >= 1.0)
      throw ConfigError("holdout fraction must be below 1");
    const auto cut = static_cast<std::size_t>(std::floor(
        (1.0 - validation.holdout_fraction) *
        static_cast<double>(train.pairs.size())));
    if (cut == 0 || cut >= train.pairs.size())
      throw DataError("validation holdout leaves an empty side");
    fit_storage = train.pairs.slice(0, cut);
    holdout = train.pairs.slice(cut, train.pairs.size());
    fit_pairs = &fit_storage;
  } else if (train_spec.early_stop_patience) {
    throw ConfigError("early stopping needs a validation holdout");
  }
  const data::WindowedDataset& pairs = *fit_pairs;
  if (pairs.size() == 0) throw DataError("training set is empty");

  TrainResult result{
      models::Forecaster::initialize(spec, combine_seed(train_spec.seed, 1)),
      0.0, {}, 0.0, {}};
  models::Forecaster& model = result.model;
  Rng shuffle_rng(combine_seed(train_spec.seed, 2));
  Rng dropout_rng(combine_seed(train_spec.seed, 3));
  Optimizer optimizer(train_spec.optimizer, train_spec.adam());

  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t n = pairs.n;
  std::optional<models::ModelParams> best;
  double best_val = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;

  const auto start = std::chrono::steady_clock::now();
  for (std::size_t epoch = 0; epoch < train_spec.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[shuffle_rng.below(i)]);

    double epoch_loss = 0.0;
    for (std::size_t begin = 0; begin < order.size();
         begin += train_spec.batch_size) {
      const std::size_t end =
          std::min(order.size(), begin + train_spec.batch_size);
      const std::size_t rows = end - begin;
      Tensor x({rows, n}), y({rows, 1});
      for (std::size_t r = 0; r < rows; ++r) {
        const auto src = pairs.input(order[begin + r]);
        std::copy(src.begin(), src.end(), x.raw() + r * n);
        y[r] = pairs.targets[order[begin + r]];
      }
      model.params().zero_grad();
      ad::Graph graph;
      ad::Var pred = model.forward(graph, x, &dropout_rng);
      ad::Var loss = mse_loss(pred, graph.constant(std::move(y)));
      const double lv = loss.value()[0];
      if (!std::isfinite(lv))
        throw DivergenceError("training diverged: loss " + std::to_string(lv) +
                              " at epoch " + std::to_string(epoch + 1) +
                              ", batch starting at " + std::to_string(begin));
      graph.backward(loss);
      optimizer.step(model.params());
      epoch_loss += lv * static_cast<double>(rows);
    }
    result.loss_curve.push_back(epoch_loss / static_cast<double>(order.size()));

    if (holdout.size() > 0) {
      const double val = dataset_loss(model, holdout);
      result.validation_curve.push_back(val);
      if (train_spec.early_stop_patience) {
        if (val < best_val) {
          best_val = val;
          best = model.params();
          since_best = 0;
        } else if (++since_best >= *train_spec.early_stop_patience) {
          break;
        }
      }
    }
  }
  result.train_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  if (best) {
    for (auto& e : *best) e.tensor.drop_grad();
    result.model = models::Forecaster(spec, std::move(*best));
  }
  for (auto& e : result.model.params()) e.tensor.drop_grad();
  result.final_train_loss = dataset_loss(result.model, pairs);
  return result;
}

std::vector<double> predict_all(const models::Forecaster& model,
                                const data::WindowedDataset& pairs) {
  std::vector<double> out;
  out.reserve(pairs.size());
  for (std::size_t begin = 0; begin < pairs.size(); begin += kPredictBatch) {
    const std::size_t end = std::min(pairs.size(), begin + kPredictBatch);
    const Tensor pred = model.predict(pairs.input_matrix(begin, end));
    out.insert(out.end(), pred.data().begin(), pred.data().end());
  }
  return out;
}

Evaluation evaluate(const models::Forecaster& model, const data::TestSet& raw_test,
                    const data::MinMaxScaler& scaler) {
  if (raw_test.pairs.size() == 0) throw DataError("test set is empty");
  const data::WindowedDataset scaled = data::apply_scaler(raw_test.pairs, scaler);
  Evaluation ev;
  ev.truth_kwh = raw_test.pairs.targets;
  ev.forecast_kwh = predict_all(model, scaled);
  for (double& v : ev.forecast_kwh) v = scaler.inverse(v);
  ev.mape = eval::mape(ev.truth_kwh, ev.forecast_kwh);
  return ev;
}

}  // namespace loadfc::training
