#include <doctest.h>

#include <cmath>
#include <thread>

#include "loadfc/autodiff.hpp"
#include "loadfc/error.hpp"
#include "loadfc/gradcheck.hpp"
#include "loadfc/selftest.hpp"

using namespace loadfc;

namespace {

Tensor random_tensor(Rng& rng, Shape shape) {
  Tensor t(std::move(shape));
  for (double& x : t.data()) x = rng.uniform(-2.0, 2.0);
  return t;
}

}  // namespace

TEST_CASE("gradient of sum is ones") {
  Tensor w({2, 3}, 0.7);
  ad::Graph g;
  g.backward(ad::sum(g.param(w)));
  REQUIRE(w.has_grad());
  for (double v : w.grad()) CHECK(v == 1.0);
}

TEST_CASE("gradient of sum of squares is 2w") {
  Tensor w = Tensor::vector({1, -2});
  ad::Graph g;
  const ad::Var x = g.param(w);
  g.backward(ad::sum(ad::mul(x, x)));
  CHECK(w.grad()[0] == 2.0);
  CHECK(w.grad()[1] == -4.0);
}

TEST_CASE("unreachable nodes and unused parameters get zero gradients") {
  Tensor used = Tensor::vector({1, 2}), unused = Tensor::vector({3, 4});
  ad::Graph g;
  const ad::Var a = g.param(used);
  const ad::Var b = g.param(unused);
  const ad::Var side = ad::scale(b, 2.0);
  g.backward(ad::sum(a));
  REQUIRE(unused.has_grad());
  CHECK(unused.grad()[0] == 0.0);
  CHECK(unused.grad()[1] == 0.0);
  const Tensor gs = g.grad(side);
  CHECK(gs == Tensor::zeros({2}));
}

TEST_CASE("parameters used twice accumulate") {
  Tensor w = Tensor::vector({3});
  ad::Graph g;
  const ad::Var a = g.param(w);
  const ad::Var b = g.param(w);
  g.backward(ad::sum(ad::mul(a, b)));
  CHECK(w.grad()[0] == 6.0);
}

TEST_CASE("backward runs once per graph") {
  Tensor w = Tensor::vector({1, 2});
  ad::Graph g;
  const ad::Var loss = ad::sum(ad::mul(g.param(w), g.param(w)));
  g.backward(loss);
  const std::vector<double> first(w.grad().begin(), w.grad().end());
  CHECK(g.differentiated());
  CHECK_THROWS_AS(g.backward(loss), GraphError);
  CHECK(std::vector<double>(w.grad().begin(), w.grad().end()) == first);
}

TEST_CASE("backward rejects non-scalar losses and inference graphs") {
  Tensor w = Tensor::vector({1, 2});
  ad::Graph g;
  CHECK_THROWS_AS(g.backward(g.param(w)), GraphError);
  ad::Graph inference(false);
  CHECK_THROWS_AS(inference.backward(ad::sum(inference.constant(w))), GraphError);
}

TEST_CASE("tape is topological") {
  Tensor w({2, 2}, 1.0);
  ad::Graph g;
  const ad::Var x = g.param(w);
  ad::sum(ad::tanh(ad::matmul(x, ad::transpose(x))));
  for (std::size_t id = 0; id < g.size(); ++id)
    for (std::size_t in : g.inputs(ad::Var{&g, id})) CHECK(in < id);
}

TEST_CASE("operands from different graphs are rejected") {
  ad::Graph a, b;
  CHECK_THROWS_AS(ad::add(a.constant(Tensor::vector({1})), b.constant(Tensor::vector({1}))),
                  GraphError);
}

TEST_CASE("elementwise shape mismatches throw") {
  ad::Graph g;
  CHECK_THROWS_AS(ad::add(g.constant(Tensor::zeros({2, 2})), g.constant(Tensor::zeros({2, 3}))),
                  DimensionError);
  CHECK_THROWS_AS(ad::add_bias(g.constant(Tensor::zeros({2, 2})), g.constant(Tensor::zeros({3}))),
                  DimensionError);
}

TEST_CASE("dropout keeps or scales every entry") {
  Rng rng(1);
  ad::Graph g;
  const Tensor x({50, 20}, 1.0);
  const ad::Var y = ad::dropout(g.constant(x), 0.25, rng);
  std::size_t zeros = 0;
  for (double v : y.value().data()) {
    CHECK((v == 0.0 || std::fabs(v - 1.0 / 0.75) < 1e-15));
    zeros += v == 0.0;
  }
  CHECK(zeros > 150);
  CHECK(zeros < 350);
}

TEST_CASE("every differentiable operation matches central differences") {
  for (const auto& c : selftest::run(20240611, 50)) {
    INFO(c.name << ": " << c.detail);
    CHECK(c.passed);
  }
}

TEST_CASE("gradient checker flags a wrong gradient") {
  // A hand-made op whose backward is deliberately off by a factor of two.
  auto broken = [](ad::Graph& g, std::span<const ad::Var> v) {
    const ad::Var x = v[0];
    Tensor out = x.value();
    for (double& e : out.data()) e = e * e;
    const ad::Var sq = g.record("broken_square", std::move(out), {x.id},
                                [x](ad::Graph& gr, std::span<const double> dy) {
                                  auto dx = gr.grad_buffer(x.id);
                                  for (std::size_t i = 0; i < dy.size(); ++i)
                                    dx[i] += 4.0 * gr.value(x)[i] * dy[i];
                                });
    return ad::sum(sq);
  };
  Rng rng(3);
  const auto r = gradcheck::check_function(broken, {random_tensor(rng, {3})});
  CHECK(r.max_rel_error > 0.3);
}

TEST_CASE("relu kinks are detected rather than scored") {
  auto fn = [](ad::Graph&, std::span<const ad::Var> v) { return ad::sum(ad::relu(v[0])); };
  const auto r = gradcheck::check_function(fn, {Tensor::vector({1.0, -1.0, 5e-5})});
  CHECK(r.kinks == 1);
  CHECK(r.checked == 2);
  CHECK(r.max_rel_error < 1e-9);
}

TEST_CASE("independent graphs run concurrently") {
  auto work = [](std::uint64_t seed, double* out) {
    Rng rng(seed);
    Tensor w = random_tensor(rng, {8, 8});
    ad::Graph g;
    const ad::Var x = g.param(w);
    g.backward(ad::sum(ad::tanh(ad::matmul(x, x))));
    *out = w.grad()[5];
  };
  double serial[4], parallel[4];
  for (int i = 0; i < 4; ++i) work(100 + i, &serial[i]);
  std::vector<std::thread> threads;
  for (int i = 0; i < 4; ++i) threads.emplace_back(work, 100 + i, &parallel[i]);
  for (auto& t : threads) t.join();
  for (int i = 0; i < 4; ++i) CHECK(serial[i] == parallel[i]);
}

TEST_CASE("attention rejects a fully masked row") {
  ad::Graph g;
  const Tensor q({2, 2}, 0.1);
  ad::AttentionMask mask(2, 2);
  mask.block(1, 0);
  mask.block(1, 1);
  try {
    ad::attention(g.constant(q), g.constant(q), g.constant(q), {1, 2, 2, 1}, &mask);
    FAIL("expected AttentionError");
  } catch (const AttentionError& e) {
    CHECK(e.kind() == "degenerate-attention");
  }
}
