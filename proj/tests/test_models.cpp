#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "loadfc/error.hpp"
#include "loadfc/models/checkpoint.hpp"
#include "loadfc/models/forecaster.hpp"

using namespace loadfc;
using namespace loadfc::models;

namespace {

Tensor random_tensor(Rng& rng, Shape shape, double lo = -2.0, double hi = 2.0) {
  Tensor t(std::move(shape));
  for (double& x : t.data()) x = rng.uniform(lo, hi);
  return t;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  REQUIRE(a.shape() == b.shape());
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

Tensor encode(const TransformerSpec& spec, const ModelParams& p, const Tensor& x) {
  ad::Graph g(false);
  ForwardContext ctx(g, p);
  return encoder_forward(ctx, g.constant(x), spec, 1, x.rows()).value();
}

}  // namespace

TEST_CASE("positional encoding examples") {
  const Tensor pe = positional_encoding(4, 6);
  for (std::size_t i = 0; i < 6; ++i) CHECK(pe.at(0, i) == (i % 2 == 0 ? 0.0 : 1.0));
  CHECK(positional_encoding(2, 4).at(1, 0) == doctest::Approx(0.8414709848078965).epsilon(1e-15));
  CHECK(positional_encoding(2, 4).at(1, 3) == doctest::Approx(std::cos(0.01)).epsilon(1e-15));
  const Tensor wide = positional_encoding(16, 8);
  for (double v : wide.data()) {
    CHECK(v >= -1.0);
    CHECK(v <= 1.0);
  }
  CHECK_THROWS_AS(positional_encoding(4, 5), DomainError);
}

TEST_CASE("scaled dot attention examples") {
  Rng rng(1);
  SUBCASE("single key gets all the weight") {
    const Tensor v = Tensor::matrix({{3, -1, 2}});
    const auto r = scaled_dot_attention(random_tensor(rng, {4, 2}), random_tensor(rng, {1, 2}), v);
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK(r.weights.at(i, 0) == 1.0);
      for (std::size_t j = 0; j < 3; ++j) CHECK(r.out.at(i, j) == doctest::Approx(v.at(0, j)).epsilon(1e-15));
    }
  }
  SUBCASE("zero queries give uniform weights") {
    const auto r = scaled_dot_attention(Tensor::zeros({3, 2}), random_tensor(rng, {5, 2}),
                                        random_tensor(rng, {5, 2}));
    for (double w : r.weights.data()) CHECK(w == doctest::Approx(0.2).epsilon(1e-15));
  }
  SUBCASE("identity queries and keys") {
    const Tensor i2 = Tensor::identity(2);
    // dk = 2 here, so scores are [1, 0] / sqrt(2).
    const auto r = scaled_dot_attention(i2, i2, i2);
    const double e = std::exp(1.0 / std::sqrt(2.0));
    CHECK(r.weights.at(0, 0) == doctest::Approx(e / (e + 1)).epsilon(1e-14));
    CHECK(r.weights.at(0, 1) == doctest::Approx(1 / (e + 1)).epsilon(1e-14));
    // dk = 1: the closed form e / (e + 1).
    const auto r1 = scaled_dot_attention(Tensor::matrix({{1}, {0}}), Tensor::matrix({{1}, {0}}), i2);
    CHECK(r1.weights.at(0, 0) == doctest::Approx(0.7310585786300049).epsilon(1e-15));
    CHECK(r1.weights.at(0, 1) == doctest::Approx(0.2689414213699951).epsilon(1e-15));
  }
  SUBCASE("dimension mismatch") {
    CHECK_THROWS_AS(scaled_dot_attention(Tensor::zeros({2, 3}), Tensor::zeros({2, 2}),
                                         Tensor::zeros({2, 2})),
                    DimensionError);
  }
}

TEST_CASE("attention rows sum to one and masked weights are exactly zero") {
  Rng rng(9);
  for (int it = 0; it < 300; ++it) {
    const std::size_t lq = 1 + rng.below(7), lk = 1 + rng.below(7);
    ad::AttentionMask mask(lq, lk);
    for (std::size_t i = 0; i < lq; ++i) {
      const auto keep = rng.below(lk);
      for (std::size_t j = 0; j < lk; ++j)
        if (j != keep && rng.uniform() < 0.5) mask.block(i, j);
    }
    const auto r = scaled_dot_attention(random_tensor(rng, {lq, 3}, -9, 9),
                                        random_tensor(rng, {lk, 3}, -9, 9),
                                        random_tensor(rng, {lk, 2}), &mask);
    for (std::size_t i = 0; i < lq; ++i) {
      double s = 0;
      for (std::size_t j = 0; j < lk; ++j) {
        s += r.weights.at(i, j);
        if (mask.blocked(i, j)) REQUIRE(r.weights.at(i, j) == 0.0);
      }
      REQUIRE(std::fabs(s - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("one head with identity projections reduces to scaled dot attention") {
  Rng rng(2);
  ModelParams p;
  add_attention_params(p, "a", 4, rng);
  for (const char* w : {"a.w_q", "a.w_k", "a.w_v", "a.w_o"}) p.at(w) = Tensor::identity(4);
  const Tensor xq = random_tensor(rng, {3, 4}), xkv = random_tensor(rng, {5, 4});
  ad::Graph g(false);
  ForwardContext ctx(g, p);
  const Tensor mha =
      multi_head_attention(ctx, g.constant(xq), g.constant(xkv), "a", 1, {1, 3, 5}).value();
  const auto ref = scaled_dot_attention(xq, xkv, xkv);
  CHECK(max_abs_diff(mha, ref.out) <= 1e-12);
}

TEST_CASE("multi head attention output shape and head count check") {
  Rng rng(3);
  for (int it = 0; it < 20; ++it) {
    const std::size_t heads = 1 + rng.below(3);
    const std::size_t d = heads * 2 * (1 + rng.below(3));
    const std::size_t lq = 1 + rng.below(5), lk = 1 + rng.below(5);
    ModelParams p;
    add_attention_params(p, "a", d, rng);
    ad::Graph g(false);
    ForwardContext ctx(g, p);
    const auto out = multi_head_attention(ctx, g.constant(random_tensor(rng, {lq, d})),
                                          g.constant(random_tensor(rng, {lk, d})), "a", heads,
                                          {1, lq, lk});
    CHECK(out.shape() == Shape{lq, d});
  }
  ModelParams p;
  add_attention_params(p, "a", 6, rng);
  ad::Graph g(false);
  ForwardContext ctx(g, p);
  const auto x = g.constant(Tensor::zeros({2, 6}));
  CHECK_THROWS_AS(multi_head_attention(ctx, x, x, "a", 4, {1, 2, 2}), DomainError);
}

TEST_CASE("causal self attention ignores later positions") {
  Rng rng(4);
  ModelParams p;
  add_attention_params(p, "a", 6, rng);
  const auto mask = ad::AttentionMask::causal(5);
  auto run = [&](const Tensor& x) {
    ad::Graph g(false);
    ForwardContext ctx(g, p);
    const auto v = g.constant(x);
    return multi_head_attention(ctx, v, v, "a", 2, {1, 5, 5}, &mask).value();
  };
  const Tensor x = random_tensor(rng, {5, 6});
  const Tensor base = run(x);
  for (std::size_t t = 0; t < 4; ++t) {
    Tensor y = x;
    for (std::size_t r = t + 1; r < 5; ++r)
      for (std::size_t c = 0; c < 6; ++c) y.at(r, c) += rng.uniform(-3, 3);
    const Tensor out = run(y);
    for (std::size_t r = 0; r <= t; ++r)
      for (std::size_t c = 0; c < 6; ++c) REQUIRE(std::fabs(out.at(r, c) - base.at(r, c)) <= 1e-12);
  }
}

TEST_CASE("encoder shape, empty stack and permutation equivariance") {
  Rng rng(5);
  TransformerSpec spec{2, 8, 2, 16, 0.0};
  const auto p = build_transformer_params(spec, rng);
  const Tensor x = random_tensor(rng, {6, 8});
  const Tensor y = encode(spec, p, x);
  CHECK(y.shape() == x.shape());

  TransformerSpec empty = spec;
  empty.n_layers = 0;
  CHECK(encode(empty, p, x) == x);

  std::vector<std::size_t> perm(6);
  std::iota(perm.begin(), perm.end(), 0);
  std::reverse(perm.begin(), perm.end());
  std::swap(perm[1], perm[4]);
  auto permute = [&](const Tensor& t) {
    Tensor out(t.shape());
    for (std::size_t r = 0; r < t.rows(); ++r)
      for (std::size_t c = 0; c < t.cols(); ++c) out.at(r, c) = t.at(perm[r], c);
    return out;
  };
  CHECK(max_abs_diff(encode(spec, p, permute(x)), permute(y)) <= 1e-12);

  // With positions added the symmetry is gone.
  const Tensor pe = positional_encoding(6, 8);
  auto plus_pe = [&](Tensor t) {
    for (std::size_t i = 0; i < t.size(); ++i) t[i] += pe[i];
    return t;
  };
  CHECK(max_abs_diff(encode(spec, p, plus_pe(permute(x))), permute(encode(spec, p, plus_pe(x)))) >
        1e-6);
}

TEST_CASE("decoder causality for one to three layers") {
  Rng rng(6);
  for (std::size_t layers = 1; layers <= 3; ++layers) {
    TransformerSpec spec{layers, 8, 2, 16, 0.0};
    const auto p = build_transformer_params(spec, rng);
    const Tensor memory = random_tensor(rng, {3, 8});
    auto run = [&](const Tensor& tgt) {
      ad::Graph g(false);
      ForwardContext ctx(g, p);
      return decoder_forward(ctx, g.constant(tgt), g.constant(memory), spec, 1, tgt.rows(), 3)
          .value();
    };
    const Tensor tgt = random_tensor(rng, {4, 8});
    const Tensor base = run(tgt);
    CHECK(base.shape() == Shape{4, 8});
    for (std::size_t t = 0; t < 3; ++t) {
      Tensor bumped = tgt;
      for (std::size_t c = 0; c < 8; ++c) bumped.at(t + 1, c) += 1.5;
      const Tensor out = run(bumped);
      for (std::size_t r = 0; r <= t; ++r)
        for (std::size_t c = 0; c < 8; ++c) REQUIRE(std::fabs(out.at(r, c) - base.at(r, c)) <= 1e-12);
    }
  }
}

TEST_CASE("single-position decoder equals the unmasked computation") {
  Rng rng(7);
  TransformerSpec spec{2, 8, 2, 16, 0.0};
  const auto p = build_transformer_params(spec, rng);
  const Tensor tgt = random_tensor(rng, {1, 8}), memory = random_tensor(rng, {4, 8});
  ad::Graph g(false);
  ForwardContext ctx(g, p);
  const Tensor masked =
      decoder_forward(ctx, g.constant(tgt), g.constant(memory), spec, 1, 1, 4).value();
  ad::Var x = g.constant(tgt);
  const ad::Var mem = g.constant(memory);
  for (std::size_t i = 0; i < 2; ++i) {
    const std::string l = "decoder." + std::to_string(i);
    x = norm(ctx, ad::add(x, multi_head_attention(ctx, x, x, l + ".self_attn", 2, {1, 1, 1})),
             l + ".norm1");
    x = norm(ctx, ad::add(x, multi_head_attention(ctx, x, mem, l + ".cross_attn", 2, {1, 1, 4})),
             l + ".norm2");
    x = norm(ctx, ad::add(x, feed_forward(ctx, x, l + ".ff")), l + ".norm3");
  }
  CHECK(max_abs_diff(masked, x.value()) <= 1e-12);
}

TEST_CASE("parameter counts follow the closed forms") {
  for (std::size_t n : {1, 2, 6})
    for (std::size_t d : {4, 8, 64})
      for (std::size_t f : {8, 128}) {
        TransformerSpec spec{n, d, 2, f, 0.1};
        Rng rng(1);
        const auto p = build_transformer_params(spec, rng);
        CHECK(p.scalar_count() == 3 * d + 1 + n * (12 * d * d + 4 * d * f + 24 * d + 2 * f));
        CHECK(p.scalar_count() == transformer_parameter_count(spec));
      }
  CHECK(transformer_parameter_count(TransformerSpec{}) == 502465);
  for (std::size_t h : {1, 5, 64}) {
    Rng rng(1);
    CHECK(build_recurrent_params({h, RecurrentCell::Lstm}, rng).scalar_count() == 4 * h * h + 9 * h + 1);
    CHECK(build_recurrent_params({h, RecurrentCell::VanillaRnn}, rng).scalar_count() == h * h + 3 * h + 1);
  }
  CHECK(recurrent_parameter_count({64, RecurrentCell::Lstm}) == 16961);
  CHECK(recurrent_parameter_count({64, RecurrentCell::VanillaRnn}) == 4289);
}

TEST_CASE("parameter iteration order is deterministic") {
  ModelSpec spec;
  spec.transformer = {2, 8, 2, 16, 0.1};
  const auto a = Forecaster::initialize(spec, 3), b = Forecaster::initialize(spec, 3);
  std::vector<std::string> names;
  for (const auto& e : a.params()) names.push_back(e.path);
  std::size_t i = 0;
  for (const auto& e : b.params()) {
    CHECK(e.path == names[i++]);
    CHECK(e.tensor == a.params().at(e.path));
  }
  CHECK(names.front() == "embed.w");
  CHECK(names.back() == "head.b");
  CHECK(a.params().contains("encoder.0.attn.w_q"));
  CHECK(a.params().contains("decoder.1.cross_attn.w_o"));
}

TEST_CASE("initialisation bounds") {
  Rng rng(12);
  ModelParams p;
  p.add_weight("w", 16, 4, rng);
  p.add_constant("b", 4, 0.0);
  for (double v : p.at("w").data()) CHECK(std::fabs(v) <= 0.25);
  for (double v : p.at("b").data()) CHECK(v == 0.0);
  CHECK_THROWS_AS(p.add_constant("b", 2, 1.0), DomainError);
}

TEST_CASE("forecasts are pure and zero heads give zero") {
  for (ModelKind kind : kAllModelKinds) {
    ModelSpec spec;
    spec.kind = kind;
    spec.transformer = {2, 8, 2, 16, 0.1};
    spec.recurrent.hidden_size = 6;
    auto m = Forecaster::initialize(spec, 17);
    const std::vector<double> w = {0.2, 0.7, 0.1};
    CHECK(m.forecast(w) == m.forecast(w));
    CHECK_THROWS_AS(m.forecast(std::span<const double>{}), DomainError);
    for (double& v : m.params().at("head.w").data()) v = 0.0;
    CHECK(m.forecast(w) == 0.0);
  }
}

TEST_CASE("recurrent examples") {
  RecurrentSpec lstm{5, RecurrentCell::Lstm};
  Rng rng(1);
  ModelParams zero = build_recurrent_params(lstm, rng);
  for (auto& e : zero) std::fill(e.tensor.data().begin(), e.tensor.data().end(), 0.0);
  const std::vector<double> zeros(4, 0.0);
  CHECK(lstm_forecast(zeros, lstm, zero) == 0.0);

  RecurrentSpec rnn{4, RecurrentCell::VanillaRnn};
  ModelParams p = build_recurrent_params(rnn, rng);
  for (double& b : p.at("rnn.b").data()) b = rng.uniform(-1, 1);
  const double x = 0.6;
  double expect = p.at("head.b")[0];
  for (std::size_t j = 0; j < 4; ++j)
    expect += std::tanh(p.at("rnn.w_x")[j] * x + p.at("rnn.b")[j]) * p.at("head.w")[j];
  CHECK(rnn_forecast(std::vector<double>{x}, rnn, p) == doctest::Approx(expect).epsilon(1e-14));
  CHECK_THROWS_AS(rnn_forecast(std::span<const double>{}, rnn, p), DomainError);

  // Hidden states stay inside (-1, 1).
  for (RecurrentCell cell : {RecurrentCell::Lstm, RecurrentCell::VanillaRnn}) {
    RecurrentSpec s{6, cell};
    ModelParams q = build_recurrent_params(s, rng);
    std::vector<Tensor> hidden;
    ad::Graph g(false);
    ForwardContext ctx(g, q);
    recurrent_forward(ctx, random_tensor(rng, {3, 8}, -3, 3), s, &hidden);
    CHECK(hidden.size() == 8);
    for (const auto& h : hidden)
      for (double v : h.data()) {
        CHECK(v > -1.0);
        CHECK(v < 1.0);
      }
  }
}

TEST_CASE("forecasts agree with an independent NumPy implementation") {
  // Values from tests/oracles/model_forward.py on the checkpoints in tests/data.
  struct Case {
    const char* file;
    double expect[3];
  };
  const Case cases[] = {
      {"transformer_small.ckpt", {-0.5370524180566174, -0.6915811183067908, -0.7760149975346131}},
      {"lstm_small.ckpt", {-0.010371432096964705, -0.015202128262160173, -0.028235275473666246}},
      {"rnn_small.ckpt", {0.2569504229016251, 0.09671095947818766, 0.1875807982273729}},
  };
  const std::vector<double> windows[3] = {
      {0.1, 0.5, 0.9, 0.3}, {0.0, 0.0, 0.0, 0.0}, {1.2, -0.4, 0.7, 0.05}};
  for (const auto& c : cases) {
    const auto ck = load_checkpoint(std::string(LOADFC_TEST_DATA) + "/" + c.file);
    for (int i = 0; i < 3; ++i) {
      INFO(c.file << " window " << i);
      CHECK(ck.model.forecast(windows[i]) == doctest::Approx(c.expect[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("batched prediction equals one-at-a-time forecasts") {
  Rng rng(8);
  for (ModelKind kind : kAllModelKinds) {
    ModelSpec spec;
    spec.kind = kind;
    spec.transformer = {2, 8, 2, 16, 0.1};
    spec.recurrent.hidden_size = 6;
    const auto m = Forecaster::initialize(spec, 5);
    const Tensor windows = random_tensor(rng, {7, 3}, 0, 1);
    const Tensor batch = m.predict(windows);
    for (std::size_t r = 0; r < 7; ++r) {
      const std::vector<double> w(windows.data().begin() + r * 3, windows.data().begin() + r * 3 + 3);
      CHECK(batch[r] == doctest::Approx(m.forecast(w)).epsilon(1e-13));
    }
  }
}

TEST_CASE("checkpoints round-trip bit for bit") {
  for (ModelKind kind : kAllModelKinds) {
    ModelSpec spec;
    spec.kind = kind;
    spec.transformer = {1, 4, 2, 8, 0.25};
    spec.recurrent.hidden_size = 3;
    const auto m = Forecaster::initialize(spec, 99);
    std::stringstream ss;
    write_checkpoint(ss, m, {{"n", "3"}, {"note", "x"}});
    const auto back = read_checkpoint(ss);
    CHECK(back.metadata.at("n") == "3");
    CHECK(back.model.spec().kind == kind);
    CHECK(back.model.spec().transformer.dropout_rate == 0.25);
    for (const auto& e : m.params()) CHECK(back.model.params().at(e.path) == e.tensor);
    std::stringstream again;
    write_checkpoint(again, back.model, back.metadata);
    CHECK(again.str() == ss.str());
  }
}

TEST_CASE("malformed checkpoints are rejected") {
  std::stringstream bad("loadfc-checkpoint 2\nend\n");
  CHECK_THROWS_AS(read_checkpoint(bad), FormatError);
  ModelSpec spec;
  spec.kind = ModelKind::Rnn;
  spec.recurrent.hidden_size = 2;
  std::stringstream ss;
  write_checkpoint(ss, Forecaster::initialize(spec, 1));
  std::string text = ss.str();
  text.replace(text.find("rnn.w_h 2 2 2"), 13, "rnn.w_h 2 2 3");
  std::stringstream broken(text);
  CHECK_THROWS(read_checkpoint(broken));
}

TEST_CASE("spec validation") {
  CHECK_THROWS_AS((TransformerSpec{0, 8, 2, 16, 0.1}.validate()), ConfigError);
  CHECK_THROWS_AS((TransformerSpec{1, 8, 3, 16, 0.1}.validate()), ConfigError);
  CHECK_THROWS_AS((TransformerSpec{1, 8, 2, 16, 1.0}.validate()), ConfigError);
  CHECK_THROWS_AS((RecurrentSpec{0, RecurrentCell::Lstm}.validate()), ConfigError);
  CHECK(parse_model_kind("LSTM") == ModelKind::Lstm);
  CHECK(parse_model_kind("Transformer") == ModelKind::Transformer);
  CHECK(parse_model_kind("vanillarnn") == ModelKind::Rnn);
  CHECK_THROWS_AS(parse_model_kind("gru"), ConfigError);
}
