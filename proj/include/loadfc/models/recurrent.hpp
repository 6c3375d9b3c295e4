#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "loadfc/models/layers.hpp"

namespace loadfc::models {

enum class RecurrentCell { Lstm, VanillaRnn };

struct RecurrentSpec {
  std::size_t hidden_size = 64;
  RecurrentCell cell = RecurrentCell::Lstm;

  void validate() const;
};

// LSTM: lstm.w_x [1×4h], lstm.w_h [h×4h], lstm.b [4h], gate blocks ordered
//       input, forget, candidate, output.
// RNN:  rnn.w_x [1×h], rnn.w_h [h×h], rnn.b [h].
// Both: head.w [h×1], head.b [1].
ModelParams build_recurrent_params(const RecurrentSpec& spec, Rng& rng);

// LSTM 4h² + 9h + 1, RNN h² + 3h + 1.
std::size_t recurrent_parameter_count(const RecurrentSpec& spec);

// Unrolls the cell over the n columns of windows [batch × n] from a zero
// state and applies the linear head to the final hidden state. When
// `hidden_states` is given, the hidden state after every step is appended.
ad::Var recurrent_forward(const ForwardContext& ctx, const Tensor& windows,
                          const RecurrentSpec& spec,
                          std::vector<Tensor>* hidden_states = nullptr);

double lstm_forecast(std::span<const double> window, const RecurrentSpec& spec,
                     const ModelParams& params);
double rnn_forecast(std::span<const double> window, const RecurrentSpec& spec,
                    const ModelParams& params);

}  // namespace loadfc::models
