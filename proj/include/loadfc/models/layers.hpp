#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

#include "loadfc/autodiff.hpp"
#include "loadfc/models/params.hpp"
#include "loadfc/rng.hpp"

namespace loadfc::models {

// Everything a forward pass needs besides its input: where to record, which
// parameters to read, and whether dropout is live.
class ForwardContext {
 public:
  // Inference: parameters enter the graph as constants.
  ForwardContext(ad::Graph& graph, const ModelParams& params)
      : graph_(graph), params_(params) {}
  // Training: parameters are differentiable leaves. Dropout is active when
  // rng is non-null and rate > 0.
  ForwardContext(ad::Graph& graph, ModelParams& params, Rng* dropout_rng,
                 double dropout_rate)
      : graph_(graph),
        params_(params),
        trainable_(&params),
        dropout_rng_(dropout_rng),
        dropout_rate_(dropout_rate) {}

  ad::Graph& graph() const { return graph_; }
  const ModelParams& params() const { return params_; }
  ad::Var bind(std::string_view path) const;
  ad::Var dropout(ad::Var x) const;
  ad::Var constant(Tensor t) const { return graph_.constant(std::move(t)); }

 private:
  ad::Graph& graph_;
  const ModelParams& params_;
  ModelParams* trainable_ = nullptr;
  Rng* dropout_rng_ = nullptr;
  double dropout_rate_ = 0.0;
};

// Sinusoidal table: PE(pos, 2i) = sin(pos / 10000^(2i/d)), PE(pos, 2i+1) the
// matching cosine. d_model must be even.
Tensor positional_encoding(std::size_t seq_len, std::size_t d_model);

struct AttentionResult {
  Tensor out;      // [Lq × dv]
  Tensor weights;  // [Lq × Lk]
};

// Single-head softmax(q·kᵀ/√dk)·v on plain tensors.
AttentionResult scaled_dot_attention(const Tensor& q, const Tensor& k,
                                     const Tensor& v,
                                     const ad::AttentionMask* mask = nullptr);

// Rows of a batched sequence tensor are (batch, position) pairs.
struct SequenceLayout {
  std::size_t batch = 1;
  std::size_t q_len = 1;
  std::size_t kv_len = 1;
};

void add_attention_params(ModelParams& params, const std::string& prefix,
                          std::size_t d_model, Rng& rng);
void add_feed_forward_params(ModelParams& params, const std::string& prefix,
                             std::size_t d_model, std::size_t d_ff, Rng& rng);
void add_norm_params(ModelParams& params, const std::string& prefix,
                     std::size_t d_model);

// Projects x_q / x_kv with <prefix>.w_q, w_k, w_v (+ biases), runs attention
// independently in each of n_heads subspaces, concatenates and applies
// <prefix>.w_o.
ad::Var multi_head_attention(const ForwardContext& ctx, ad::Var x_q,
                             ad::Var x_kv, const std::string& prefix,
                             std::size_t n_heads, const SequenceLayout& layout,
                             const ad::AttentionMask* mask = nullptr);

// relu(x·w1 + b1)·w2 + b2
ad::Var feed_forward(const ForwardContext& ctx, ad::Var x,
                     const std::string& prefix);

// x·w + b
ad::Var dense(const ForwardContext& ctx, ad::Var x, const std::string& prefix);

// layer_norm with <prefix>.gamma / <prefix>.beta
ad::Var norm(const ForwardContext& ctx, ad::Var x, const std::string& prefix);

inline constexpr double kLayerNormEps = 1e-5;

}  // namespace loadfc::models
