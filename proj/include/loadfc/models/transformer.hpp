#pragma once

#include <cstddef>
#include <span>

#include "loadfc/models/layers.hpp"

namespace loadfc::models {

struct TransformerSpec {
  std::size_t n_layers = 6;
  std::size_t d_model = 64;
  std::size_t n_heads = 4;
  std::size_t d_ff = 128;
  double dropout_rate = 0.1;

  // n_layers >= 1, even d_model divisible by n_heads, dropout in [0, 1).
  void validate() const;
};

// Parameter layout:
//   embed.{w,b}                       scalar reading -> d_model
//   encoder.<i>.attn.*, .norm1, .ff, .norm2
//   decoder.<i>.self_attn.*, .norm1, .cross_attn.*, .norm2, .ff, .norm3
//   head.{w,b}                        d_model -> 1
ModelParams build_transformer_params(const TransformerSpec& spec, Rng& rng);

// 3d + 1 + N(12d² + 4d·f + 24d + 2f) for d = d_model, f = d_ff, N = n_layers.
std::size_t transformer_parameter_count(const TransformerSpec& spec);

// Post-norm encoder stack over a batch of `batch` sequences of length `len`
// (x is [batch·len × d_model]). Each layer is
//   x = LN(x + SelfAttn(x)); x = LN(x + FF(x)).
// Iterates spec.n_layers times; zero layers returns x unchanged.
ad::Var encoder_forward(const ForwardContext& ctx, ad::Var x,
                        const TransformerSpec& spec, std::size_t batch,
                        std::size_t len);

// Post-norm decoder stack. Each layer runs causally masked self-attention over
// tgt, cross-attention into memory, then the feed-forward sublayer.
ad::Var decoder_forward(const ForwardContext& ctx, ad::Var tgt, ad::Var memory,
                        const TransformerSpec& spec, std::size_t batch,
                        std::size_t tgt_len, std::size_t src_len);

// windows is [batch × n]; returns the one-step forecasts as [batch × 1].
// The encoder sees every reading, the decoder a single token built from the
// last reading.
ad::Var transformer_forward(const ForwardContext& ctx, const Tensor& windows,
                            const TransformerSpec& spec);

double transformer_forecast(std::span<const double> window,
                            const TransformerSpec& spec,
                            const ModelParams& params);

// Adds the sinusoidal table to every sequence of a batch.
Tensor tile_positional_encoding(std::size_t batch, std::size_t len,
                                std::size_t d_model);

}  // namespace loadfc::models
