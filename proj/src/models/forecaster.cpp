#include "loadfc/models/forecaster.hpp"

#include <algorithm>
#include <cctype>
#include <string>

#include "loadfc/error.hpp"

namespace loadfc::models {

std::string_view model_label(ModelKind kind) {
  switch (kind) {
    case ModelKind::Transformer: return "Transformer";
    case ModelKind::Lstm: return "LSTM";
    case ModelKind::Rnn: return "RNN";
  }
  return "?";
}

std::string_view model_key(ModelKind kind) {
  switch (kind) {
    case ModelKind::Transformer: return "transformer";
    case ModelKind::Lstm: return "lstm";
    case ModelKind::Rnn: return "rnn";
  }
  return "?";
}

ModelKind parse_model_kind(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  for (ModelKind k : kAllModelKinds)
    if (lower == model_key(k)) return k;
  if (lower == "vanillarnn" || lower == "vanilla-rnn") return ModelKind::Rnn;
  throw ConfigError("unknown model '" + std::string(text) +
                    "' (expected transformer, lstm or rnn)");
}

RecurrentSpec ModelSpec::recurrent_spec() const {
  RecurrentSpec r = recurrent;
  r.cell = kind == ModelKind::Lstm ? RecurrentCell::Lstm
                                   : RecurrentCell::VanillaRnn;
  return r;
}

double ModelSpec::dropout_rate() const {
  return kind == ModelKind::Transformer ? transformer.dropout_rate : 0.0;
}

void ModelSpec::validate() const {
  if (kind == ModelKind::Transformer)
    transformer.validate();
  else
    recurrent.validate();
}

std::size_t parameter_count(const ModelSpec& spec) {
  return spec.kind == ModelKind::Transformer
             ? transformer_parameter_count(spec.transformer)
             : recurrent_parameter_count(spec.recurrent_spec());
}

Forecaster::Forecaster(ModelSpec spec, ModelParams params)
    : spec_(std::move(spec)), params_(std::move(params)) {
  spec_.validate();
  if (params_.scalar_count() != parameter_count(spec_))
    throw DimensionError("parameter set holds " +
                         std::to_string(params_.scalar_count()) +
                         " values, spec needs " +
                         std::to_string(parameter_count(spec_)));
}

Forecaster Forecaster::initialize(const ModelSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);
  ModelParams params = spec.kind == ModelKind::Transformer
                           ? build_transformer_params(spec.transformer, rng)
                           : build_recurrent_params(spec.recurrent_spec(), rng);
  return Forecaster(spec, std::move(params));
}

ad::Var Forecaster::run(const ForwardContext& ctx, const Tensor& windows) const {
  if (windows.rank() != 2 || windows.cols() == 0)
    throw DomainError("forecast windows must be a non-empty [batch x n] matrix");
  if (spec_.kind == ModelKind::Transformer)
    return transformer_forward(ctx, windows, spec_.transformer);
  return recurrent_forward(ctx, windows, spec_.recurrent_spec());
}

ad::Var Forecaster::forward(ad::Graph& graph, const Tensor& windows,
                            Rng* dropout_rng) {
  ForwardContext ctx(graph, params_, dropout_rng, spec_.dropout_rate());
  return run(ctx, windows);
}

Tensor Forecaster::predict(const Tensor& windows) const {
  ad::Graph g(false);
  ForwardContext ctx(g, params_);
  return run(ctx, windows).value();
}

double Forecaster::forecast(std::span<const double> window) const {
  if (window.empty()) throw DomainError("forecast window is empty");
  const Tensor input({1, window.size()},
                     std::vector<double>(window.begin(), window.end()));
  return predict(input)[0];
}

}  // namespace loadfc::models
