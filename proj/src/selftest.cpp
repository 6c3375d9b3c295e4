#include "loadfc/selftest.hpp"

#include <cmath>
#include <cstdio>
#include <functional>

#include "loadfc/error.hpp"
#include "loadfc/gradcheck.hpp"
#include "loadfc/models/forecaster.hpp"
#include "loadfc/models/transformer.hpp"

namespace loadfc::selftest {

namespace {

constexpr double kGradTolerance = 1e-4;

Tensor random_tensor(Rng& rng, Shape shape, double lo = -2.0, double hi = 2.0) {
  Tensor t(std::move(shape));
  for (double& x : t.data()) x = rng.uniform(lo, hi);
  return t;
}

std::string sci(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

Check from_report(std::string name, const gradcheck::Report& r) {
  Check c{std::move(name), r.max_rel_error < kGradTolerance, {}};
  c.detail = "max rel err " + sci(r.max_rel_error) + " over " +
             std::to_string(r.checked) + " entries";
  if (!c.passed) c.detail += " (worst " + r.worst + ")";
  return c;
}

// Weighted sum so every output entry gets a distinct upstream gradient.
ad::Var weighted(ad::Graph& g, ad::Var y, Rng& rng) {
  Tensor w = random_tensor(rng, y.shape());
  return ad::sum(ad::mul(y, g.constant(std::move(w))));
}

std::vector<Check> op_checks(Rng& rng) {
  using Fn = std::function<ad::Var(ad::Graph&, std::span<const ad::Var>, Rng&)>;
  struct Case {
    const char* name;
    std::vector<Shape> shapes;
    Fn fn;
  };
  const std::vector<Case> cases = {
      {"matmul", {{3, 4}, {4, 2}}, [](auto& g, auto v, Rng& r) { return weighted(g, ad::matmul(v[0], v[1]), r); }},
      {"transpose", {{3, 2}}, [](auto& g, auto v, Rng& r) { return weighted(g, ad::transpose(v[0]), r); }},
      {"add", {{2, 3}, {2, 3}}, [](auto& g, auto v, Rng& r) { return weighted(g, ad::add(v[0], v[1]), r); }},
      {"sub", {{2, 3}, {2, 3}}, [](auto& g, auto v, Rng& r) { return weighted(g, ad::sub(v[0], v[1]), r); }},
      {"mul", {{2, 3}, {2, 3}}, [](auto& g, auto v, Rng& r) { return weighted(g, ad::mul(v[0], v[1]), r); }},
      {"scale", {{2, 3}}, [](auto& g, auto v, Rng& r) { return weighted(g, ad::scale(v[0], -1.7), r); }},
      {"add_bias", {{4, 3}, {3}}, [](auto& g, auto v, Rng& r) { return weighted(g, ad::add_bias(v[0], v[1]), r); }},
      {"relu", {{3, 4}}, [](auto& g, auto v, Rng& r) { return weighted(g, ad::relu(v[0]), r); }},
      {"tanh", {{3, 4}}, [](auto& g, auto v, Rng& r) { return weighted(g, ad::tanh(v[0]), r); }},
      {"sigmoid", {{3, 4}}, [](auto& g, auto v, Rng& r) { return weighted(g, ad::sigmoid(v[0]), r); }},
      {"softmax", {{3, 4}}, [](auto& g, auto v, Rng& r) { return weighted(g, ad::softmax(v[0], -1), r); }},
      {"softmax axis 0", {{3, 4}}, [](auto& g, auto v, Rng& r) { return weighted(g, ad::softmax(v[0], 0), r); }},
      {"layer_norm", {{3, 4}, {4}, {4}}, [](auto& g, auto v, Rng& r) { return weighted(g, ad::layer_norm(v[0], v[1], v[2], 1e-5), r); }},
      {"slice/concat", {{3, 5}}, [](auto& g, auto v, Rng& r) {
         const ad::Var parts[] = {ad::slice_cols(v[0], 3, 5), ad::slice_cols(v[0], 0, 2)};
         return weighted(g, ad::concat_cols(parts), r);
       }},
      {"reshape", {{2, 6}}, [](auto& g, auto v, Rng& r) { return weighted(g, ad::reshape(v[0], {3, 4}), r); }},
      {"mean", {{2, 3}}, [](auto&, auto v, Rng&) { return ad::mean(ad::mul(v[0], v[0])); }},
      {"attention", {{6, 4}, {8, 4}, {8, 4}}, [](auto& g, auto v, Rng& r) {
         return weighted(g, ad::attention(v[0], v[1], v[2], {2, 3, 4, 2}).out, r);
       }},
      {"attention causal", {{8, 4}, {8, 4}, {8, 4}}, [](auto& g, auto v, Rng& r) {
         const auto mask = ad::AttentionMask::causal(4);
         return weighted(g, ad::attention(v[0], v[1], v[2], {2, 4, 4, 2}, &mask).out, r);
       }},
  };

  std::vector<Check> out;
  for (const auto& c : cases) {
    std::vector<Tensor> inputs;
    for (const auto& s : c.shapes) inputs.push_back(random_tensor(rng, s));
    // The loss weights must be identical on every evaluation.
    const std::uint64_t weight_seed = rng.next_u64();
    auto fn = [&](ad::Graph& g, std::span<const ad::Var> v) {
      Rng r(weight_seed);
      return c.fn(g, v, r);
    };
    out.push_back(from_report(std::string("grad ") + c.name,
                              gradcheck::check_function(fn, std::move(inputs))));
  }
  return out;
}

std::vector<Check> model_checks(Rng& rng) {
  std::vector<Check> out;
  for (models::ModelKind kind : models::kAllModelKinds) {
    models::ModelSpec spec;
    spec.kind = kind;
    spec.transformer = {2, 8, 2, 16, 0.0};
    spec.recurrent.hidden_size = 8;
    auto model = models::Forecaster::initialize(spec, rng.next_u64());
    const Tensor windows = random_tensor(rng, {4, 3});
    const Tensor targets = random_tensor(rng, {4, 1});
    out.push_back(from_report("grad " + std::string(models::model_key(kind)),
                              gradcheck::check_model(model, windows, targets)));
  }
  return out;
}

Check attention_invariants(Rng& rng, std::size_t instances) {
  Check c{"attention weights", true, {}};
  double worst_sum = 0.0;
  std::size_t masked_nonzero = 0;
  for (std::size_t it = 0; it < instances; ++it) {
    const std::size_t lq = 1 + rng.below(6), lk = 1 + rng.below(6);
    const std::size_t dk = 1 + rng.below(5), dv = 1 + rng.below(5);
    ad::AttentionMask mask(lq, lk);
    for (std::size_t i = 0; i < lq; ++i) {
      const std::size_t keep = rng.below(lk);
      for (std::size_t j = 0; j < lk; ++j)
        if (j != keep && rng.uniform() < 0.4) mask.block(i, j);
    }
    const double spread = rng.uniform(0.1, 20.0);
    auto res = models::scaled_dot_attention(random_tensor(rng, {lq, dk}, -spread, spread),
                                            random_tensor(rng, {lk, dk}, -spread, spread),
                                            random_tensor(rng, {lk, dv}), &mask);
    for (std::size_t i = 0; i < lq; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < lk; ++j) {
        s += res.weights.at(i, j);
        if (mask.blocked(i, j) && res.weights.at(i, j) != 0.0) ++masked_nonzero;
      }
      worst_sum = std::max(worst_sum, std::fabs(s - 1.0));
    }
  }
  c.passed = worst_sum <= 1e-12 && masked_nonzero == 0;
  c.detail = std::to_string(instances) + " instances, max |row sum - 1| " +
             sci(worst_sum) + ", masked non-zero " + std::to_string(masked_nonzero);
  return c;
}

Check decoder_causality(Rng& rng) {
  Check c{"decoder causality", true, {}};
  double worst = 0.0;
  for (std::size_t layers = 1; layers <= 3; ++layers) {
    models::TransformerSpec spec{layers, 8, 2, 16, 0.0};
    Rng init(rng.next_u64());
    const auto params = models::build_transformer_params(spec, init);
    const std::size_t lt = 5, ls = 4;
    const Tensor memory = random_tensor(rng, {ls, 8});
    Tensor tgt = random_tensor(rng, {lt, 8});
    auto run = [&](const Tensor& t) {
      ad::Graph g(false);
      models::ForwardContext ctx(g, params);
      return models::decoder_forward(ctx, g.constant(t), g.constant(memory), spec, 1, lt, ls).value();
    };
    const Tensor base = run(tgt);
    for (std::size_t t = 0; t + 1 < lt; ++t) {
      Tensor bumped = tgt;
      for (std::size_t r = t + 1; r < lt; ++r)
        for (std::size_t j = 0; j < 8; ++j) bumped.at(r, j) += rng.uniform(-1.0, 1.0);
      const Tensor out = run(bumped);
      for (std::size_t r = 0; r <= t; ++r)
        for (std::size_t j = 0; j < 8; ++j)
          worst = std::max(worst, std::fabs(out.at(r, j) - base.at(r, j)));
    }
  }
  c.passed = worst <= 1e-12;
  c.detail = "max change in earlier rows " + sci(worst);
  return c;
}

Check softmax_shift(Rng& rng) {
  double worst = 0.0;
  for (int it = 0; it < 100; ++it) {
    const Tensor x = random_tensor(rng, {3, 7}, -5.0, 5.0);
    Tensor shifted = x;
    const double shift = rng.uniform(-100.0, 100.0);
    for (double& v : shifted.data()) v += shift;
    const Tensor a = softmax(x, -1), b = softmax(shifted, -1);
    for (std::size_t i = 0; i < a.size(); ++i)
      worst = std::max(worst, std::fabs(a[i] - b[i]));
  }
  return Check{"softmax shift invariance", worst <= 1e-12, "max diff " + sci(worst)};
}

Check matmul_associativity(Rng& rng) {
  double worst = 0.0;
  for (int it = 0; it < 100; ++it) {
    const Tensor a = random_tensor(rng, {4, 4}), b = random_tensor(rng, {4, 4}),
                 c = random_tensor(rng, {4, 4});
    const Tensor l = matmul(matmul(a, b), c), r = matmul(a, matmul(b, c));
    for (std::size_t i = 0; i < l.size(); ++i) worst = std::max(worst, std::fabs(l[i] - r[i]));
  }
  return Check{"matmul associativity", worst <= 1e-9, "max diff " + sci(worst)};
}

}  // namespace

std::vector<Check> run(std::uint64_t seed, std::size_t attention_instances) {
  Rng rng(seed);
  std::vector<Check> checks = op_checks(rng);
  for (auto& c : model_checks(rng)) checks.push_back(std::move(c));
  checks.push_back(attention_invariants(rng, attention_instances));
  checks.push_back(decoder_causality(rng));
  checks.push_back(softmax_shift(rng));
  checks.push_back(matmul_associativity(rng));
  return checks;
}

}  // namespace loadfc::selftest
