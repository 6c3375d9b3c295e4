#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>

#include "loadfc/models/recurrent.hpp"
#include "loadfc/models/transformer.hpp"

namespace loadfc::models {

enum class ModelKind { Transformer, Lstm, Rnn };

inline constexpr std::array<ModelKind, 3> kAllModelKinds = {
    ModelKind::Transformer, ModelKind::Lstm, ModelKind::Rnn};

// "Transformer", "LSTM", "RNN"; used for report labels.
std::string_view model_label(ModelKind kind);
// "transformer", "lstm", "rnn"; used in configs, CSVs and checkpoints.
std::string_view model_key(ModelKind kind);
// Accepts either spelling, case-insensitively.
ModelKind parse_model_kind(std::string_view text);

struct ModelSpec {
  ModelKind kind = ModelKind::Transformer;
  TransformerSpec transformer;
  RecurrentSpec recurrent;

  // recurrent with the cell matching `kind`.
  RecurrentSpec recurrent_spec() const;
  double dropout_rate() const;
  void validate() const;
};

std::size_t parameter_count(const ModelSpec& spec);

// One of the three forecasters together with its parameters. Pure function of
// (window, parameters, spec) whenever dropout is off.
class Forecaster {
 public:
  Forecaster(ModelSpec spec, ModelParams params);

  // Fresh weights drawn from a generator seeded with `seed`.
  static Forecaster initialize(const ModelSpec& spec, std::uint64_t seed);

  // Training forward over windows [batch × n]; parameters become
  // differentiable leaves. Dropout draws from dropout_rng when non-null.
  ad::Var forward(ad::Graph& graph, const Tensor& windows, Rng* dropout_rng);

  // Inference over windows [batch × n]; returns [batch × 1].
  Tensor predict(const Tensor& windows) const;
  double forecast(std::span<const double> window) const;

  const ModelSpec& spec() const { return spec_; }
  ModelParams& params() { return params_; }
  const ModelParams& params() const { return params_; }

 private:
  ad::Var run(const ForwardContext& ctx, const Tensor& windows) const;

  ModelSpec spec_;
  ModelParams params_;
};

}  // namespace loadfc::models
