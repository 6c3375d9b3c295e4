#include "loadfc/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "loadfc/error.hpp"

namespace loadfc::gradcheck {

double relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::fabs(analytic), std::fabs(numeric), floor});
  return std::fabs(analytic - numeric) / denom;
}

namespace {

void note(Report& r, const std::string& name, std::size_t index, double a,
          double n, double floor) {
  ++r.checked;
  const double e = relative_error(a, n, floor);
  if (e > r.max_rel_error || !std::isfinite(e)) {
    r.max_rel_error = std::isfinite(e) ? e : HUGE_VAL;
    r.worst = name + "[" + std::to_string(index) + "]";
    r.worst_analytic = a;
    r.worst_numeric = n;
  }
}

// Sign pattern of every ReLU input on the tape.
std::vector<bool> relu_pattern(const ad::Graph& g) {
  std::vector<bool> bits;
  for (std::size_t id = 0; id < g.size(); ++id) {
    const ad::Var v{const_cast<ad::Graph*>(&g), id};
    if (g.op(v) != "relu") continue;
    const Tensor& x = g.value(ad::Var{v.graph, g.inputs(v)[0]});
    for (double e : x.data()) bits.push_back(e > 0.0);
  }
  return bits;
}

struct Probe {
  double loss;
  std::vector<bool> pattern;
};

double mse(const Tensor& pred, const Tensor& targets) {
  double total = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - targets[i];
    total += d * d;
  }
  return total / static_cast<double>(pred.size());
}

}  // namespace

Report check_function(const ScalarFn& fn, std::vector<Tensor> inputs,
                      const Options& options) {
  auto evaluate = [&](bool record, std::vector<Tensor>* grads) -> Probe {
    ad::Graph g(record);
    std::vector<ad::Var> leaves;
    for (auto& t : inputs) leaves.push_back(record ? g.param(t) : g.constant(t));
    ad::Var loss = fn(g, leaves);
    if (loss.value().size() != 1)
      throw DimensionError("gradient check needs a scalar loss, got " +
                           shape_string(loss.shape()));
    if (grads) {
      g.backward(loss);
      for (auto& t : inputs) {
        grads->emplace_back(t.shape(), std::vector<double>(t.grad().begin(), t.grad().end()));
        t.drop_grad();
      }
    }
    return Probe{loss.value()[0], relu_pattern(g)};
  };

  std::vector<Tensor> analytic;
  evaluate(true, &analytic);
  Report r;
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    for (std::size_t i = 0; i < inputs[t].size(); ++i) {
      const double orig = inputs[t][i];
      inputs[t][i] = orig + options.step;
      const Probe up = evaluate(false, nullptr);
      inputs[t][i] = orig - options.step;
      const Probe down = evaluate(false, nullptr);
      inputs[t][i] = orig;
      if (up.pattern != down.pattern) {
        ++r.kinks;
        continue;
      }
      note(r, "input" + std::to_string(t), i, analytic[t][i],
           (up.loss - down.loss) / (2.0 * options.step), options.floor);
    }
  }
  return r;
}

Report check_model(models::Forecaster& model, const Tensor& windows,
                   const Tensor& targets, const Options& options) {
  auto& params = model.params();
  params.zero_grad();
  {
    ad::Graph g;
    ad::Var pred = model.forward(g, windows, nullptr);
    ad::Var loss = ad::mean(ad::mul(ad::sub(pred, g.constant(targets)),
                                    ad::sub(pred, g.constant(targets))));
    g.backward(loss);
  }
  auto probe = [&] {
    ad::Graph g(false);
    const Tensor pred = model.forward(g, windows, nullptr).value();
    return Probe{mse(pred, targets), relu_pattern(g)};
  };
  Report r;
  for (auto& entry : params) {
    Tensor& p = entry.tensor;
    const std::vector<double> grad(p.grad().begin(), p.grad().end());
    p.drop_grad();
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double orig = p[i];
      p[i] = orig + options.step;
      const Probe up = probe();
      p[i] = orig - options.step;
      const Probe down = probe();
      p[i] = orig;
      if (up.pattern != down.pattern) {
        ++r.kinks;
        continue;
      }
      note(r, entry.path, i, grad[i], (up.loss - down.loss) / (2.0 * options.step),
           options.floor);
    }
  }
  return r;
}

}  // namespace loadfc::gradcheck
