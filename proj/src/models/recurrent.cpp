#include "loadfc/models/recurrent.hpp"

#include "loadfc/error.hpp"

namespace loadfc::models {

void RecurrentSpec::validate() const {
  if (hidden_size < 1) throw ConfigError("hidden_size must be at least 1");
}

ModelParams build_recurrent_params(const RecurrentSpec& spec, Rng& rng) {
  spec.validate();
  const std::size_t h = spec.hidden_size;
  ModelParams p;
  if (spec.cell == RecurrentCell::Lstm) {
    p.add_weight("lstm.w_x", 1, 4 * h, rng);
    p.add_weight("lstm.w_h", h, 4 * h, rng);
    p.add_constant("lstm.b", 4 * h, 0.0);
  } else {
    p.add_weight("rnn.w_x", 1, h, rng);
    p.add_weight("rnn.w_h", h, h, rng);
    p.add_constant("rnn.b", h, 0.0);
  }
  p.add_weight("head.w", h, 1, rng);
  p.add_constant("head.b", 1, 0.0);
  return p;
}

std::size_t recurrent_parameter_count(const RecurrentSpec& spec) {
  const std::size_t h = spec.hidden_size;
  return spec.cell == RecurrentCell::Lstm ? 4 * h * h + 9 * h + 1
                                          : h * h + 3 * h + 1;
}

namespace {

Tensor column(const Tensor& windows, std::size_t t) {
  const std::size_t batch = windows.rows();
  Tensor x({batch, 1});
  for (std::size_t b = 0; b < batch; ++b) x[b] = windows.at(b, t);
  return x;
}

}  // namespace

ad::Var recurrent_forward(const ForwardContext& ctx, const Tensor& windows,
                          const RecurrentSpec& spec,
                          std::vector<Tensor>* hidden_states) {
  if (windows.rank() != 2)
    throw DimensionError("recurrent input must be [batch x n], got " +
                         shape_string(windows.shape()));
  const std::size_t batch = windows.rows(), n = windows.cols();
  const std::size_t h = spec.hidden_size;
  const bool lstm = spec.cell == RecurrentCell::Lstm;
  const std::string prefix = lstm ? "lstm" : "rnn";

  ad::Var w_x = ctx.bind(prefix + ".w_x");
  ad::Var w_h = ctx.bind(prefix + ".w_h");
  ad::Var bias = ctx.bind(prefix + ".b");
  ad::Var hidden = ctx.constant(Tensor::zeros({batch, h}));
  ad::Var cell = ctx.constant(Tensor::zeros({batch, h}));

  for (std::size_t t = 0; t < n; ++t) {
    ad::Var x_t = ctx.constant(column(windows, t));
    ad::Var pre = ad::add_bias(
        ad::add(ad::matmul(x_t, w_x), ad::matmul(hidden, w_h)), bias);
    if (lstm) {
      ad::Var in_gate = ad::sigmoid(ad::slice_cols(pre, 0, h));
      ad::Var forget = ad::sigmoid(ad::slice_cols(pre, h, 2 * h));
      ad::Var candidate = ad::tanh(ad::slice_cols(pre, 2 * h, 3 * h));
      ad::Var out_gate = ad::sigmoid(ad::slice_cols(pre, 3 * h, 4 * h));
      cell = ad::add(ad::mul(forget, cell), ad::mul(in_gate, candidate));
      hidden = ad::mul(out_gate, ad::tanh(cell));
    } else {
      hidden = ad::tanh(pre);
    }
    if (hidden_states) hidden_states->push_back(hidden.value());
  }
  return dense(ctx, hidden, "head");
}

namespace {

double forecast_one(std::span<const double> window, const RecurrentSpec& spec,
                    const ModelParams& params) {
  if (window.empty()) throw DomainError("forecast window is empty");
  ad::Graph g(false);
  ForwardContext ctx(g, params);
  const Tensor input({1, window.size()},
                     std::vector<double>(window.begin(), window.end()));
  return recurrent_forward(ctx, input, spec).value()[0];
}

}  // namespace

double lstm_forecast(std::span<const double> window, const RecurrentSpec& spec,
                     const ModelParams& params) {
  RecurrentSpec s = spec;
  s.cell = RecurrentCell::Lstm;
  return forecast_one(window, s, params);
}

double rnn_forecast(std::span<const double> window, const RecurrentSpec& spec,
                    const ModelParams& params) {
  RecurrentSpec s = spec;
  s.cell = RecurrentCell::VanillaRnn;
  return forecast_one(window, s, params);
}

}  // namespace loadfc::models
