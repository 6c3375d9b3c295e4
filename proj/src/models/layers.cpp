#include "loadfc/models/layers.hpp"

#include <cmath>

#include "loadfc/error.hpp"

namespace loadfc::models {

ad::Var ForwardContext::bind(std::string_view path) const {
  if (trainable_) return graph_.param(trainable_->at(path));
  return graph_.constant(params_.at(path));
}

ad::Var ForwardContext::dropout(ad::Var x) const {
  if (!dropout_rng_ || dropout_rate_ <= 0.0) return x;
  return ad::dropout(x, dropout_rate_, *dropout_rng_);
}

Tensor positional_encoding(std::size_t seq_len, std::size_t d_model) {
  if (d_model == 0 || d_model % 2 != 0)
    throw DomainError("positional encoding needs an even d_model, got " +
                      std::to_string(d_model));
  Tensor pe({seq_len, d_model});
  for (std::size_t pos = 0; pos < seq_len; ++pos) {
    for (std::size_t i = 0; i < d_model; i += 2) {
      const double freq =
          std::pow(10000.0, static_cast<double>(i) / static_cast<double>(d_model));
      const double angle = static_cast<double>(pos) / freq;
      pe.at(pos, i) = std::sin(angle);
      pe.at(pos, i + 1) = std::cos(angle);
    }
  }
  return pe;
}

AttentionResult scaled_dot_attention(const Tensor& q, const Tensor& k,
                                     const Tensor& v,
                                     const ad::AttentionMask* mask) {
  if (q.rank() != 2 || k.rank() != 2 || v.rank() != 2)
    throw DimensionError("scaled_dot_attention expects matrices");
  ad::Graph g(false);
  const ad::AttentionLayout layout{1, q.rows(), k.rows(), 1};
  auto res = ad::attention(g.constant(q), g.constant(k), g.constant(v), layout,
                           mask);
  const std::size_t lq = q.rows(), lk = k.rows();
  return AttentionResult{g.value(res.out), res.weights.reshaped({lq, lk})};
}

void add_attention_params(ModelParams& params, const std::string& prefix,
                          std::size_t d_model, Rng& rng) {
  for (const char* name : {"q", "k", "v", "o"}) {
    params.add_weight(prefix + ".w_" + name, d_model, d_model, rng);
    params.add_constant(prefix + ".b_" + name, d_model, 0.0);
  }
}

void add_feed_forward_params(ModelParams& params, const std::string& prefix,
                             std::size_t d_model, std::size_t d_ff, Rng& rng) {
  params.add_weight(prefix + ".w1", d_model, d_ff, rng);
  params.add_constant(prefix + ".b1", d_ff, 0.0);
  params.add_weight(prefix + ".w2", d_ff, d_model, rng);
  params.add_constant(prefix + ".b2", d_model, 0.0);
}

void add_norm_params(ModelParams& params, const std::string& prefix,
                     std::size_t d_model) {
  params.add_constant(prefix + ".gamma", d_model, 1.0);
  params.add_constant(prefix + ".beta", d_model, 0.0);
}

namespace {

ad::Var affine(const ForwardContext& ctx, ad::Var x, const std::string& w,
               const std::string& b) {
  return ad::add_bias(ad::matmul(x, ctx.bind(w)), ctx.bind(b));
}

}  // namespace

ad::Var multi_head_attention(const ForwardContext& ctx, ad::Var x_q,
                             ad::Var x_kv, const std::string& prefix,
                             std::size_t n_heads, const SequenceLayout& layout,
                             const ad::AttentionMask* mask) {
  const std::size_t d_model = x_q.value().cols();
  if (n_heads == 0 || d_model % n_heads != 0)
    throw DomainError("d_model " + std::to_string(d_model) +
                      " is not divisible by " + std::to_string(n_heads) +
                      " heads");
  ad::Var q = affine(ctx, x_q, prefix + ".w_q", prefix + ".b_q");
  ad::Var k = affine(ctx, x_kv, prefix + ".w_k", prefix + ".b_k");
  ad::Var v = affine(ctx, x_kv, prefix + ".w_v", prefix + ".b_v");
  const ad::AttentionLayout al{layout.batch, layout.q_len, layout.kv_len,
                               n_heads};
  ad::Var heads = ad::attention(q, k, v, al, mask).out;
  return affine(ctx, heads, prefix + ".w_o", prefix + ".b_o");
}

ad::Var feed_forward(const ForwardContext& ctx, ad::Var x,
                     const std::string& prefix) {
  ad::Var hidden = ad::relu(affine(ctx, x, prefix + ".w1", prefix + ".b1"));
  return affine(ctx, hidden, prefix + ".w2", prefix + ".b2");
}

ad::Var dense(const ForwardContext& ctx, ad::Var x, const std::string& prefix) {
  return affine(ctx, x, prefix + ".w", prefix + ".b");
}

ad::Var norm(const ForwardContext& ctx, ad::Var x, const std::string& prefix) {
  return ad::layer_norm(x, ctx.bind(prefix + ".gamma"),
                        ctx.bind(prefix + ".beta"), kLayerNormEps);
}

}  // namespace loadfc::models
