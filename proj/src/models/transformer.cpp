#include "loadfc/models/transformer.hpp"

#include <algorithm>
#include <string>

#include "loadfc/error.hpp"

namespace loadfc::models {

void TransformerSpec::validate() const {
  if (n_layers < 1) throw ConfigError("transformer needs at least one layer");
  if (d_model == 0 || d_model % 2 != 0)
    throw ConfigError("transformer d_model must be even and positive");
  if (n_heads == 0 || d_model % n_heads != 0)
    throw ConfigError("transformer d_model " + std::to_string(d_model) +
                      " is not divisible by n_heads " +
                      std::to_string(n_heads));
  if (d_ff == 0) throw ConfigError("transformer d_ff must be positive");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0))
    throw ConfigError("transformer dropout must lie in [0, 1)");
}

ModelParams build_transformer_params(const TransformerSpec& spec, Rng& rng) {
  spec.validate();
  const std::size_t d = spec.d_model;
  ModelParams p;
  p.add_weight("embed.w", 1, d, rng);
  p.add_constant("embed.b", d, 0.0);
  for (std::size_t i = 0; i < spec.n_layers; ++i) {
    const std::string l = "encoder." + std::to_string(i);
    add_attention_params(p, l + ".attn", d, rng);
    add_norm_params(p, l + ".norm1", d);
    add_feed_forward_params(p, l + ".ff", d, spec.d_ff, rng);
    add_norm_params(p, l + ".norm2", d);
  }
  for (std::size_t i = 0; i < spec.n_layers; ++i) {
    const std::string l = "decoder." + std::to_string(i);
    add_attention_params(p, l + ".self_attn", d, rng);
    add_norm_params(p, l + ".norm1", d);
    add_attention_params(p, l + ".cross_attn", d, rng);
    add_norm_params(p, l + ".norm2", d);
    add_feed_forward_params(p, l + ".ff", d, spec.d_ff, rng);
    add_norm_params(p, l + ".norm3", d);
  }
  p.add_weight("head.w", d, 1, rng);
  p.add_constant("head.b", 1, 0.0);
  return p;
}

std::size_t transformer_parameter_count(const TransformerSpec& spec) {
  const std::size_t d = spec.d_model, f = spec.d_ff, n = spec.n_layers;
  return 3 * d + 1 + n * (12 * d * d + 4 * d * f + 24 * d + 2 * f);
}

Tensor tile_positional_encoding(std::size_t batch, std::size_t len,
                                std::size_t d_model) {
  const Tensor pe = positional_encoding(len, d_model);
  Tensor tiled({batch * len, d_model});
  for (std::size_t b = 0; b < batch; ++b)
    std::copy(pe.data().begin(), pe.data().end(),
              tiled.data().begin() + static_cast<std::ptrdiff_t>(b * pe.size()));
  return tiled;
}

ad::Var encoder_forward(const ForwardContext& ctx, ad::Var x,
                        const TransformerSpec& spec, std::size_t batch,
                        std::size_t len) {
  const SequenceLayout self{batch, len, len};
  for (std::size_t i = 0; i < spec.n_layers; ++i) {
    const std::string l = "encoder." + std::to_string(i);
    ad::Var attn = multi_head_attention(ctx, x, x, l + ".attn", spec.n_heads, self);
    x = norm(ctx, ad::add(x, ctx.dropout(attn)), l + ".norm1");
    ad::Var ff = feed_forward(ctx, x, l + ".ff");
    x = norm(ctx, ad::add(x, ctx.dropout(ff)), l + ".norm2");
  }
  return x;
}

ad::Var decoder_forward(const ForwardContext& ctx, ad::Var tgt, ad::Var memory,
                        const TransformerSpec& spec, std::size_t batch,
                        std::size_t tgt_len, std::size_t src_len) {
  const ad::AttentionMask causal = ad::AttentionMask::causal(tgt_len);
  const SequenceLayout self{batch, tgt_len, tgt_len};
  const SequenceLayout cross{batch, tgt_len, src_len};
  ad::Var x = tgt;
  for (std::size_t i = 0; i < spec.n_layers; ++i) {
    const std::string l = "decoder." + std::to_string(i);
    ad::Var sa = multi_head_attention(ctx, x, x, l + ".self_attn", spec.n_heads,
                                      self, &causal);
    x = norm(ctx, ad::add(x, ctx.dropout(sa)), l + ".norm1");
    ad::Var ca = multi_head_attention(ctx, x, memory, l + ".cross_attn",
                                      spec.n_heads, cross);
    x = norm(ctx, ad::add(x, ctx.dropout(ca)), l + ".norm2");
    ad::Var ff = feed_forward(ctx, x, l + ".ff");
    x = norm(ctx, ad::add(x, ctx.dropout(ff)), l + ".norm3");
  }
  return x;
}

ad::Var transformer_forward(const ForwardContext& ctx, const Tensor& windows,
                            const TransformerSpec& spec) {
  if (windows.rank() != 2)
    throw DimensionError("transformer input must be [batch x n], got " +
                         shape_string(windows.shape()));
  const std::size_t batch = windows.rows(), n = windows.cols();
  const std::size_t d = spec.d_model;

  // Every reading becomes one token: [batch·n × 1] · [1 × d].
  ad::Var tokens = ctx.constant(windows.reshaped({batch * n, 1}));
  ad::Var src = dense(ctx, tokens, "embed");
  src = ad::add(src, ctx.constant(tile_positional_encoding(batch, n, d)));
  src = ctx.dropout(src);
  ad::Var memory = encoder_forward(ctx, src, spec, batch, n);

  Tensor last({batch, 1});
  for (std::size_t b = 0; b < batch; ++b) last[b] = windows.at(b, n - 1);
  ad::Var tgt = dense(ctx, ctx.constant(std::move(last)), "embed");
  tgt = ad::add(tgt, ctx.constant(tile_positional_encoding(batch, 1, d)));
  tgt = ctx.dropout(tgt);
  ad::Var decoded = decoder_forward(ctx, tgt, memory, spec, batch, 1, n);
  return dense(ctx, decoded, "head");
}

double transformer_forecast(std::span<const double> window,
                            const TransformerSpec& spec,
                            const ModelParams& params) {
  if (window.empty()) throw DomainError("forecast window is empty");
  ad::Graph g(false);
  ForwardContext ctx(g, params);
  const Tensor input({1, window.size()},
                     std::vector<double>(window.begin(), window.end()));
  return transformer_forward(ctx, input, spec).value()[0];
}

}  // namespace loadfc::models
